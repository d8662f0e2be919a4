#include "mhp/events.hpp"

#include <algorithm>
#include <string>

#include "mhp/error.hpp"

namespace mhp {

void EventSequence::validate() const {
  if (times.size() != types.size()) {
    throw DataError("sequence has " + std::to_string(times.size()) + " timestamps but " +
                    std::to_string(types.size()) + " types");
  }
  if (num_types < 1) throw DataError("sequence needs at least one event type");
  for (std::size_t i = 0; i < size(); ++i) {
    if (types[i] < 1 || types[i] > num_types) {
      throw DataError("event type " + std::to_string(types[i]) + " at index " +
                      std::to_string(i) + " outside 1.." + std::to_string(num_types));
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      throw DataError("timestamps not strictly increasing at index " + std::to_string(i));
    }
  }
}

EventSequence EventSequence::prefix(std::size_t n) const {
  n = std::min(n, size());
  EventSequence out;
  out.num_types = num_types;
  out.times.assign(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(n));
  out.types.assign(types.begin(), types.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

std::size_t Batch::num_predictions() const {
  std::size_t n = 0;
  for (auto len : lengths) n += len > 0 ? len - 1 : 0;
  return n;
}

Batch make_batch(std::span<const EventSequence> sequences) {
  if (sequences.empty()) throw DataError("cannot batch zero sequences");
  Batch batch;
  batch.batch_size = sequences.size();
  batch.num_types = sequences.front().num_types;
  for (const auto& seq : sequences) {
    if (seq.empty()) throw DataError("cannot batch an empty sequence");
    if (seq.num_types != batch.num_types) throw DataError("sequences in a batch differ in K");
    batch.max_len = std::max(batch.max_len, seq.size());
    batch.lengths.push_back(seq.size());
  }
  const std::size_t n = batch.batch_size * batch.max_len;
  batch.times.resize(n);
  batch.types.resize(n);
  batch.mask.resize(n);
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    const auto& seq = sequences[b];
    for (std::size_t i = 0; i < batch.max_len; ++i) {
      const std::size_t at = b * batch.max_len + i;
      if (i < seq.size()) {
        batch.times[at] = seq.times[i];
        batch.types[at] = seq.types[i] - 1;
        batch.mask[at] = 1;
      } else {
        batch.times[at] = batch.times[at - 1] + 1.0;
        batch.types[at] = Batch::kPadType;
        batch.mask[at] = 0;
      }
    }
  }
  return batch;
}

Batch make_batch(const EventSequence& sequence) {
  return make_batch(std::span<const EventSequence>(&sequence, 1));
}

}  // namespace mhp
