#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mhp {

// Ordered marked events. Types are 1-based: k in {1..num_types}.
struct EventSequence {
  std::vector<double> times;
  std::vector<int> types;
  int num_types = 0;

  std::size_t size() const { return times.size(); }
  bool empty() const { return times.empty(); }

  // Throws DataError on unequal lengths, non-increasing times, or
  // out-of-range types.
  void validate() const;
  // First n events.
  EventSequence prefix(std::size_t n) const;
};

// Sequences padded to a common length. Padding follows the last real event,
// so causal encoders never let it influence real positions.
struct Batch {
  static constexpr long kPadType = -1;

  std::size_t batch_size = 0;
  std::size_t max_len = 0;
  int num_types = 0;
  std::vector<std::size_t> lengths;
  std::vector<double> times;        // [batch_size, max_len]; pads step by +1
  std::vector<long> types;          // [batch_size, max_len]; 0-based, kPadType for pads
  std::vector<std::uint8_t> mask;   // [batch_size, max_len]; 1 for real events

  double time(std::size_t b, std::size_t i) const { return times[b * max_len + i]; }
  long type(std::size_t b, std::size_t i) const { return types[b * max_len + i]; }
  std::size_t num_predictions() const;  // sum over sequences of (length - 1)
};

// Sequences must share num_types and be non-empty. A single sequence yields
// an unpadded batch.
Batch make_batch(std::span<const EventSequence> sequences);
Batch make_batch(const EventSequence& sequence);

}  // namespace mhp
