#pragma once

#include <string>
#include <vector>

#include "mhp/events.hpp"

namespace mhp {

struct Dataset {
  std::vector<EventSequence> sequences;
  int num_types = 0;
  std::string split;  // "train", "dev", "test", or empty

  std::size_t size() const { return sequences.size(); }
  std::size_t num_events() const;
  // Throws DataError on mixed K, empty sequences, or invalid sequences.
  void validate() const;
};

// JSON Lines, one sequence per line:
//   {"K": <int>, "events": [{"t": <float>, "k": <int 1-based>}, ...]}
// Timestamps are written in shortest round-trip form.
std::string to_jsonl_line(const EventSequence& seq);
void save_jsonl(const std::string& path, const Dataset& dataset);

// Parses JSONL. Equal consecutive timestamps are nudged by +1e-9 per
// duplicate and reported through `warnings`; decreasing timestamps, bad JSON
// and schema violations raise DataError citing the line number.
Dataset load_jsonl(const std::string& path, std::vector<std::string>* warnings = nullptr);
Dataset parse_jsonl(const std::string& text, std::vector<std::string>* warnings = nullptr);

// Consecutive groups of `batch_size` sequences (the last may be smaller).
std::vector<Batch> make_batches(const Dataset& dataset, std::size_t batch_size);
// Same, over the given sequence order.
std::vector<Batch> make_batches(const Dataset& dataset, const std::vector<std::size_t>& order,
                                std::size_t batch_size);

// Divides every timestamp by `scale`.
Dataset scale_time(const Dataset& dataset, double scale);
// Mean inter-event gap over all sequences (used for optional normalization).
double mean_gap(const Dataset& dataset);

}  // namespace mhp
