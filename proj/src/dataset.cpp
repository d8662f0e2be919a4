#include "mhp/dataset.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mhp/error.hpp"

namespace mhp {

namespace {

constexpr double kDuplicateNudge = 1e-9;

[[noreturn]] void schema_error(std::size_t line, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ": " + what);
}

EventSequence parse_line(const std::string& text, std::size_t line,
                         std::vector<std::string>* warnings) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    schema_error(line, std::string("parse error: ") + e.what());
  }
  if (!doc.is_object()) schema_error(line, "expected a JSON object");
  if (!doc.contains("K") || !doc["K"].is_number_integer() || doc["K"].get<long>() < 1) {
    schema_error(line, "field 'K' must be a positive integer");
  }
  if (!doc.contains("events") || !doc["events"].is_array()) {
    schema_error(line, "field 'events' must be an array");
  }
  EventSequence seq;
  seq.num_types = doc["K"].get<int>();
  const auto& events = doc["events"];
  if (events.empty()) schema_error(line, "field 'events' is empty");
  double raw_prev = 0.0;
  int duplicates = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (!e.is_object()) schema_error(line, "events[" + std::to_string(i) + "] is not an object");
    if (!e.contains("t") || !e["t"].is_number() || !std::isfinite(e["t"].get<double>())) {
      schema_error(line, "field 't' of events[" + std::to_string(i) + "] must be a finite number");
    }
    if (!e.contains("k") || !e["k"].is_number_integer()) {
      schema_error(line, "field 'k' of events[" + std::to_string(i) + "] must be an integer");
    }
    const double raw = e["t"].get<double>();
    const long k = e["k"].get<long>();
    if (k < 1 || k > seq.num_types) {
      schema_error(line, "field 'k' of events[" + std::to_string(i) + "] = " +
                             std::to_string(k) + " outside 1.." + std::to_string(seq.num_types));
    }
    double t = raw;
    if (i > 0) {
      if (raw < raw_prev) {
        schema_error(line, "decreasing timestamp at events[" + std::to_string(i) + "]");
      }
      if (raw == raw_prev) {
        ++duplicates;
        t = raw + kDuplicateNudge * duplicates;
        if (warnings) {
          warnings->push_back("line " + std::to_string(line) + ": duplicate timestamp at events[" +
                              std::to_string(i) + "] shifted by " +
                              std::to_string(duplicates) + "e-9");
        }
      } else {
        duplicates = 0;
      }
      if (!(t > seq.times.back())) {
        schema_error(line, "timestamps not strictly increasing after duplicate adjustment at events[" +
                               std::to_string(i) + "]");
      }
    }
    raw_prev = raw;
    seq.times.push_back(t);
    seq.types.push_back(static_cast<int>(k));
  }
  return seq;
}

}  // namespace

std::size_t Dataset::num_events() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.size();
  return n;
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& s = sequences[i];
    if (s.empty()) throw DataError("sequence " + std::to_string(i) + " is empty");
    if (s.num_types != num_types) {
      throw DataError("sequence " + std::to_string(i) + " has K=" + std::to_string(s.num_types) +
                      ", dataset has K=" + std::to_string(num_types));
    }
    s.validate();
  }
}

std::string to_jsonl_line(const EventSequence& seq) {
  nlohmann::json events = nlohmann::json::array();
  for (std::size_t i = 0; i < seq.size(); ++i) {
    events.push_back({{"t", seq.times[i]}, {"k", seq.types[i]}});
  }
  nlohmann::json doc{{"K", seq.num_types}, {"events", std::move(events)}};
  return doc.dump();
}

void save_jsonl(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (const auto& seq : dataset.sequences) out << to_jsonl_line(seq) << '\n';
  if (!out) throw DataError("write failed for " + path);
}

Dataset parse_jsonl(const std::string& text, std::vector<std::string>* warnings) {
  Dataset ds;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto seq = parse_line(line, line_no, warnings);
    if (ds.sequences.empty()) {
      ds.num_types = seq.num_types;
    } else if (seq.num_types != ds.num_types) {
      schema_error(line_no, "field 'K' = " + std::to_string(seq.num_types) +
                                " differs from earlier lines (" + std::to_string(ds.num_types) + ")");
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

Dataset load_jsonl(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open data file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_jsonl(buf.str(), warnings);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<Batch> make_batches(const Dataset& dataset, std::size_t batch_size) {
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  return make_batches(dataset, order, batch_size);
}

std::vector<Batch> make_batches(const Dataset& dataset, const std::vector<std::size_t>& order,
                                std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be at least 1");
  std::vector<Batch> out;
  std::vector<EventSequence> group;
  for (std::size_t i = 0; i < order.size(); ++i) {
    group.push_back(dataset.sequences.at(order[i]));
    if (group.size() == batch_size || i + 1 == order.size()) {
      out.push_back(make_batch(group));
      group.clear();
    }
  }
  return out;
}

Dataset scale_time(const Dataset& dataset, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("time scale must be positive");
  Dataset out = dataset;
  for (auto& s : out.sequences) {
    for (auto& t : s.times) t /= scale;
  }
  return out;
}

double mean_gap(const Dataset& dataset) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : dataset.sequences) {
    if (s.size() < 2) continue;
    total += s.times.back() - s.times.front();
    n += s.size() - 1;
  }
  if (n == 0) throw DataError("mean gap needs at least one sequence with two events");
  return total / static_cast<double>(n);
}

}  // namespace mhp
