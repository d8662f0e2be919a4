#include "mhp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "mhp/checkpoint.hpp"
#include "mhp/error.hpp"
#include "mhp/hawkes.hpp"
#include "mhp/train.hpp"

namespace mhp {

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs;
  std::optional<std::string> arch;
  std::optional<std::string> data;
  std::optional<std::string> out;
  std::optional<std::string> checkpoint;
  BenchmarkSizes sizes;
  std::size_t points = 1024;
  std::size_t line = 1;
  std::size_t prefix = 0;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "JSON file with TrainConfig fields");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--data", o.data, "data directory (or JSONL file for eval/predict)");
  cmd->add_option("--out", o.out, "output directory");
}

nlohmann::json read_config_file(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config file " + path + " is not valid JSON: " + e.what());
  }
}

TrainConfig resolve_config(const Options& o) {
  auto j = read_config_file(o.config_path);
  if (!j.is_object()) throw std::invalid_argument("config file must hold a JSON object");
  if (o.seed) j["seed"] = *o.seed;
  if (o.epochs) j["epochs"] = *o.epochs;
  if (o.arch) j["arch"] = *o.arch;
  if (o.data) j["data"] = *o.data;
  if (o.out) j["out"] = *o.out;
  if (o.checkpoint) j["checkpoint"] = *o.checkpoint;
  TrainConfig config;
  from_json(j, config);
  return config;
}

std::string format_double(double v) { return nlohmann::json(v).dump(); }

int cmd_generate(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o);
  if (config.out.empty()) throw std::invalid_argument("--out is required for generate");
  const std::filesystem::path dir(config.out);
  std::filesystem::create_directories(dir);
  const auto bench = make_synthetic_benchmark(config.seed, o.sizes);
  for (const Dataset* ds : {&bench.train, &bench.dev, &bench.test}) {
    const auto path = dir / (ds->split + ".jsonl");
    save_jsonl(path.string(), *ds);
    out << "wrote " << ds->size() << " sequences (" << ds->num_events() << " events) to "
        << path.string() << '\n';
  }
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o);
  if (config.data.empty()) throw std::invalid_argument("--data is required for train");
  const auto run = run_training(config);
  out << run.summary.dump(2) << '\n';
  return kExitOk;
}

Dataset load_eval_data(const std::string& data) {
  const std::filesystem::path p(data);
  if (std::filesystem::is_directory(p)) return load_jsonl((p / "test.jsonl").string());
  return load_jsonl(data);
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o);
  if (config.data.empty()) throw std::invalid_argument("--data is required for eval");
  const auto loaded = load_checkpoint(config.checkpoint_path());
  const auto data = load_eval_data(config.data);
  EvalOptions options;
  options.points = o.points;
  options.time_scale = loaded.info.time_scale;
  const auto m = evaluate(loaded.model, scale_time(data, loaded.info.time_scale), options);
  nlohmann::json report{{"arch", to_string(loaded.model.config().arch)},
                        {"checkpoint", config.checkpoint_path()},
                        {"ll_per_event", m.ll_per_event},
                        {"accuracy", m.accuracy},
                        {"rmse", m.rmse},
                        {"num_predictions", m.num_predictions}};
  if (!config.out.empty()) {
    const std::filesystem::path dir(config.out);
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "eval_metrics.csv", std::ios::binary);
    if (!csv) throw DataError("cannot write " + (dir / "eval_metrics.csv").string());
    csv << metrics_csv_header() << '\n'
        << metrics_csv_row({loaded.info.epoch, "eval", m.ll_per_event, m.accuracy, m.rmse, 0.0})
        << '\n';
    std::ofstream js(dir / "eval.json", std::ios::binary);
    js << report.dump(2) << '\n';
  }
  out << report.dump(2) << '\n';
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o);
  if (config.data.empty()) throw std::invalid_argument("--data is required for predict");
  const auto loaded = load_checkpoint(config.checkpoint_path());
  const auto data = load_eval_data(config.data);
  if (o.line == 0 || o.line > data.size()) {
    throw std::invalid_argument("--line " + std::to_string(o.line) + " is outside 1.." +
                                std::to_string(data.size()));
  }
  const auto& seq = data.sequences[o.line - 1];
  const std::size_t n = o.prefix == 0 ? seq.size() : o.prefix;
  if (n > seq.size()) {
    throw std::invalid_argument("--prefix " + std::to_string(n) + " exceeds the sequence length " +
                                std::to_string(seq.size()));
  }
  const double scale = loaded.info.time_scale;
  EventSequence prefix = seq.prefix(n);
  for (auto& t : prefix.times) t /= scale;
  const auto p = loaded.model.predict_next(prefix);
  nlohmann::json probs = nlohmann::json::array();
  for (double v : p.type_probs) probs.push_back(v);
  out << "{\n  \"prefix_length\": " << n << ",\n  \"last_time\": " << format_double(seq.times[n - 1])
      << ",\n  \"type_probs\": " << probs.dump() << ",\n  \"type\": " << p.type
      << ",\n  \"time\": " << format_double(p.time * scale)
      << ",\n  \"gap\": " << format_double(p.gap * scale) << "\n}\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mamba Hawkes Process toolkit"};
  app.name(args.empty() ? "mhp" : std::filesystem::path(args[0]).filename().string());
  app.require_subcommand(1);
  Options o;

  auto* generate = app.add_subcommand("generate", "write the synthetic benchmark as JSONL");
  add_common(generate, o);
  generate->add_option("--train-size", o.sizes.train, "training sequences");
  generate->add_option("--dev-size", o.sizes.dev, "dev sequences");
  generate->add_option("--test-size", o.sizes.test, "test sequences");

  auto* train_cmd = app.add_subcommand("train", "train a model and write checkpoint + metrics");
  add_common(train_cmd, o);
  train_cmd->add_option("--epochs", o.epochs, "maximum epochs");
  train_cmd->add_option("--arch", o.arch, "mhp or mhp-e");
  train_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint output path");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval_cmd, o);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint path");
  eval_cmd->add_option("--points", o.points, "trapezoid nodes per interval")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20));

  auto* predict_cmd = app.add_subcommand("predict", "predict the next event after a prefix");
  add_common(predict_cmd, o);
  predict_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint path");
  predict_cmd->add_option("--line", o.line, "1-based sequence index in the JSONL file");
  predict_cmd->add_option("--prefix", o.prefix, "number of observed events (0: all)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (generate->parsed()) return cmd_generate(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (eval_cmd->parsed()) return cmd_eval(o, out);
    return cmd_predict(o, out);
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int run_cli(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace mhp
