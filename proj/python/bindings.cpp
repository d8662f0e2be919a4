#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mhp/checkpoint.hpp"
#include "mhp/error.hpp"
#include "mhp/hawkes.hpp"
#include "mhp/ssm.hpp"
#include "mhp/train.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

mhp::Tensor to_tensor(const Array& a) {
  mhp::Shape shape(a.shape(), a.shape() + a.ndim());
  return mhp::Tensor::from(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const mhp::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  const auto v = t.data();
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("invalid JSON: ") + e.what());
  }
}

mhp::ModelConfig model_config(const std::string& config_json) {
  mhp::ModelConfig c;
  from_json(parse_json(config_json), c);
  return c;
}

mhp::EvalMetrics evaluate_model(const mhp::Model& model, const mhp::Dataset& data,
                                std::size_t points) {
  mhp::EvalOptions options;
  options.points = points;
  return mhp::evaluate(model, data, options);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mamba Hawkes Process core bindings";

  py::register_exception<mhp::DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<mhp::NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<mhp::UnstableConfigError>(m, "UnstableConfigError", PyExc_ValueError);
  py::register_exception<mhp::RetryExhaustedError>(m, "RetryExhaustedError", PyExc_RuntimeError);

  py::class_<mhp::EventSequence>(m, "EventSequence")
      .def(py::init([](std::vector<double> times, std::vector<int> types, int num_types) {
             mhp::EventSequence s{std::move(times), std::move(types), num_types};
             s.validate();
             return s;
           }),
           py::arg("times"), py::arg("types"), py::arg("num_types"))
      .def_readonly("times", &mhp::EventSequence::times)
      .def_readonly("types", &mhp::EventSequence::types)
      .def_readonly("num_types", &mhp::EventSequence::num_types)
      .def("prefix", &mhp::EventSequence::prefix)
      .def("__len__", &mhp::EventSequence::size);

  py::class_<mhp::Dataset>(m, "Dataset")
      .def(py::init<>())
      .def_readwrite("sequences", &mhp::Dataset::sequences)
      .def_readwrite("num_types", &mhp::Dataset::num_types)
      .def_readwrite("split", &mhp::Dataset::split)
      .def("num_events", &mhp::Dataset::num_events)
      .def("__len__", &mhp::Dataset::size);

  m.def("load_jsonl", [](const std::string& path) { return mhp::load_jsonl(path); }, py::arg("path"));
  m.def("save_jsonl", &mhp::save_jsonl, py::arg("path"), py::arg("dataset"));

  py::class_<mhp::HawkesGenConfig>(m, "HawkesGenConfig")
      .def(py::init<>())
      .def_static("uniform", &mhp::HawkesGenConfig::uniform, py::arg("num_types"), py::arg("mu"),
                  py::arg("alpha"), py::arg("beta"), py::arg("horizon"))
      .def_readwrite("num_types", &mhp::HawkesGenConfig::num_types)
      .def_readwrite("mu", &mhp::HawkesGenConfig::mu)
      .def_readwrite("alpha", &mhp::HawkesGenConfig::alpha)
      .def_readwrite("beta", &mhp::HawkesGenConfig::beta)
      .def_readwrite("horizon", &mhp::HawkesGenConfig::horizon)
      .def_readwrite("min_len", &mhp::HawkesGenConfig::min_len)
      .def_readwrite("max_len", &mhp::HawkesGenConfig::max_len)
      .def_readwrite("max_retries", &mhp::HawkesGenConfig::max_retries)
      .def_readwrite("seed", &mhp::HawkesGenConfig::seed)
      .def("spectral_radius", [](const mhp::HawkesGenConfig& c) { return mhp::spectral_radius(c); });

  m.def("simulate_hawkes", py::overload_cast<const mhp::HawkesGenConfig&>(&mhp::simulate_hawkes),
        py::arg("config"));
  m.def(
      "make_synthetic_benchmark",
      [](std::uint64_t seed, std::size_t train, std::size_t dev, std::size_t test) {
        auto b = mhp::make_synthetic_benchmark(seed, {train, dev, test});
        return py::make_tuple(std::move(b.train), std::move(b.dev), std::move(b.test));
      },
      py::arg("seed"), py::arg("train") = 1600, py::arg("dev") = 200, py::arg("test") = 200);

  m.def(
      "discretize",
      [](double delta, double a, double b) {
        const auto s = mhp::discretize(delta, a, b);
        return py::make_tuple(s.a_bar, s.b_bar);
      },
      py::arg("delta"), py::arg("a"), py::arg("b"));
  m.def(
      "selective_scan",
      [](const Array& x, const Array& delta, const Array& a, const Array& b, const Array& c,
         const Array& skip) {
        mhp::NoGradGuard no_grad;
        return to_array(mhp::selective_scan(to_tensor(x), to_tensor(delta), to_tensor(a),
                                            to_tensor(b), to_tensor(c), to_tensor(skip)));
      },
      py::arg("x"), py::arg("delta"), py::arg("a"), py::arg("b"), py::arg("c"), py::arg("skip"));
  m.def(
      "step_sizes",
      [](const std::vector<double>& times, bool raw) {
        mhp::DeltaTransform t;
        t.raw = raw;
        return mhp::step_sizes(times, t);
      },
      py::arg("times"), py::arg("raw") = false);

  py::class_<mhp::EvalMetrics>(m, "EvalMetrics")
      .def_readonly("log_likelihood", &mhp::EvalMetrics::log_likelihood)
      .def_readonly("num_predictions", &mhp::EvalMetrics::num_predictions)
      .def_readonly("ll_per_event", &mhp::EvalMetrics::ll_per_event)
      .def_readonly("accuracy", &mhp::EvalMetrics::accuracy)
      .def_readonly("rmse", &mhp::EvalMetrics::rmse);

  py::class_<mhp::Model>(m, "Model")
      .def(py::init([](const std::string& config_json, std::uint64_t seed) {
             return mhp::Model(model_config(config_json), seed);
           }),
           py::arg("config_json") = "{}", py::arg("seed") = 0)
      .def_static(
          "load",
          [](const std::string& path) { return std::move(mhp::load_checkpoint(path).model); },
          py::arg("path"))
      .def(
          "save",
          [](const mhp::Model& model, const std::string& path, std::uint64_t seed) {
            mhp::CheckpointInfo info;
            info.seed = seed;
            mhp::save_checkpoint(path, model, info);
          },
          py::arg("path"), py::arg("seed") = 0)
      .def_property_readonly("config_json",
                             [](const mhp::Model& model) {
                               nlohmann::json j = model.config();
                               return j.dump();
                             })
      .def_property_readonly("num_parameters",
                             [](const mhp::Model& model) { return model.parameters().scalar_count(); })
      .def(
          "log_likelihood",
          [](const mhp::Model& model, const mhp::EventSequence& seq, std::size_t points) {
            mhp::NoGradGuard no_grad;
            const auto batch = mhp::make_batch(seq);
            return model
                .log_likelihood(batch, model.forward(batch), mhp::Compensator::trapezoid(points))
                .item();
          },
          py::arg("sequence"), py::arg("points") = 1024)
      .def(
          "intensity",
          [](const mhp::Model& model, const mhp::EventSequence& seq, std::size_t j, double t) {
            mhp::NoGradGuard no_grad;
            return model.intensity(seq, model.encode(seq), j, t);
          },
          py::arg("sequence"), py::arg("j"), py::arg("t"))
      .def(
          "predict_next",
          [](const mhp::Model& model, const mhp::EventSequence& prefix) {
            const auto p = model.predict_next(prefix);
            py::dict d;
            d["type_probs"] = p.type_probs;
            d["type"] = p.type;
            d["time"] = p.time;
            d["gap"] = p.gap;
            return d;
          },
          py::arg("prefix"))
      .def("evaluate", &evaluate_model, py::arg("dataset"), py::arg("points") = 1024);

  m.def(
      "train",
      [](const std::string& config_json) {
        mhp::TrainConfig config;
        from_json(parse_json(config_json), config);
        py::gil_scoped_release release;
        const auto run = mhp::run_training(config);
        return run.summary.dump();
      },
      py::arg("config_json"));
}
