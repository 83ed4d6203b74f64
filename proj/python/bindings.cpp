#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ccfdm/contrastive.hpp"
#include "ccfdm/curiosity.hpp"
#include "ccfdm/env.hpp"
#include "ccfdm/harness.hpp"
#include "ccfdm/plot.hpp"
#include "ccfdm/replay.hpp"

namespace py = pybind11;
using namespace ccfdm;

namespace {

py::array_t<std::uint8_t> stack_to_array(const std::vector<std::uint8_t>& stack,
                                         std::int64_t frames, std::int64_t h, std::int64_t w) {
  py::array_t<std::uint8_t> arr({frames, h, w});
  std::copy(stack.begin(), stack.end(), arr.mutable_data());
  return arr;
}

class PyEnv {
 public:
  PyEnv(const std::string& name, std::int64_t render_size, std::int64_t frame_stack,
        std::int64_t action_repeat)
      : env_(make_env(name, render_size, frame_stack, action_repeat)) {}

  py::array_t<std::uint8_t> reset(std::uint64_t seed) {
    return stack_to_array(env_->reset(seed), env_->frame_stack(), env_->render_size(),
                          env_->render_size());
  }

  py::tuple step(const std::vector<double>& action) {
    auto r = env_->step(action);
    return py::make_tuple(
        stack_to_array(r.obs, env_->frame_stack(), env_->render_size(), env_->render_size()),
        r.reward, r.done);
  }

  py::array_t<std::uint8_t> render() const {
    auto frame = env_->render();
    py::array_t<std::uint8_t> arr({env_->render_size(), env_->render_size()});
    std::copy(frame.begin(), frame.end(), arr.mutable_data());
    return arr;
  }

  std::int64_t action_dim() const { return env_->action_dim(); }
  std::int64_t step_count() const { return env_->step_count(); }
  bool episode_done() const { return env_->episode_done(); }

 private:
  std::unique_ptr<PixelControlEnv> env_;
};

double py_info_nce(py::array_t<double, py::array::c_style | py::array::forcecast> logits) {
  if (logits.ndim() != 2 || logits.shape(0) != logits.shape(1)) {
    throw ConfigError("info_nce: square (K,K) logit matrix required");
  }
  const auto k = static_cast<std::int64_t>(logits.shape(0));
  TensorT<double> t({k, k}, std::vector<double>(logits.data(), logits.data() + k * k));
  TapeT<double> tape;
  return tape.value(info_nce_loss(tape, tape.leaf(t))).data[0];
}

py::array_t<double> py_ema_blend(
    py::array_t<double, py::array::c_style | py::array::forcecast> target,
    py::array_t<double, py::array::c_style | py::array::forcecast> source, double tau) {
  if (target.size() != source.size()) throw ConfigError("ema_blend: size mismatch");
  py::array_t<double> out(std::vector<py::ssize_t>(target.shape(), target.shape() + target.ndim()));
  for (py::ssize_t i = 0; i < target.size(); ++i) {
    out.mutable_data()[i] = tau * source.data()[i] + (1.0 - tau) * target.data()[i];
  }
  return out;
}

double py_prediction_error(py::array_t<double, py::array::c_style | py::array::forcecast> a,
                           py::array_t<double, py::array::c_style | py::array::forcecast> b) {
  if (a.size() != b.size()) throw ConfigError("prediction_error: size mismatch");
  return prediction_error(a.data(), b.data(), static_cast<std::int64_t>(a.size()));
}

double py_intrinsic_reward(double weight, double decay, std::uint64_t step, double error,
                           double re_max, double ri_max) {
  CuriosityState s;
  s.intrinsic_weight = weight;
  s.decay = decay;
  s.step = step;
  s.re_max = re_max;
  s.ri_max = ri_max;
  return intrinsic_reward(s, error);
}

py::array_t<float> py_random_crop(
    py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> stack, std::int64_t out_h,
    std::int64_t out_w, std::uint64_t seed) {
  if (stack.ndim() != 3) throw ConfigError("random_crop: (frames,H,W) stack required");
  const auto frames = static_cast<std::int64_t>(stack.shape(0));
  const auto h = static_cast<std::int64_t>(stack.shape(1));
  const auto w = static_cast<std::int64_t>(stack.shape(2));
  std::vector<std::uint8_t> bytes(stack.data(), stack.data() + stack.size());
  std::mt19937_64 rng(seed);
  auto cropped = random_crop<float>(bytes, frames, h, w, out_h, out_w, rng);
  py::array_t<float> out({frames, out_h, out_w});
  std::copy(cropped.data.begin(), cropped.data.end(), out.mutable_data());
  return out;
}

TrainConfig config_from_dict(const py::dict& d) {
  TrainConfig cfg;
  for (auto item : d) {
    const std::string key = py::str(item.first);
    std::string value;
    if (py::isinstance<py::bool_>(item.second)) {
      value = item.second.cast<bool>() ? "true" : "false";
    } else {
      value = py::str(item.second);
    }
    apply_kv(cfg, key, value);
  }
  return cfg;
}

py::dict py_train(const py::dict& config) {
  const auto res = run_training(config_from_dict(config));
  py::dict out;
  out["metrics_path"] = res.metrics_path;
  out["config_path"] = res.config_path;
  out["checkpoint_path"] = res.checkpoint_path;
  out["env_steps"] = res.env_steps;
  out["updates"] = res.updates;
  out["momentum_syncs"] = res.momentum_syncs;
  out["episodes"] = res.episodes;
  out["evals"] = res.evals;
  if (res.has_final_eval) {
    out["final_eval_mean"] = res.final_eval_mean;
    out["final_eval_std"] = res.final_eval_std;
  }
  return out;
}

py::tuple py_evaluate(const std::string& checkpoint, std::int64_t episodes, std::uint64_t seed) {
  TrainConfig cfg = config_from_checkpoint(checkpoint);
  cfg.resume_path = checkpoint;
  Trainer trainer(cfg);
  auto [mean, std] = trainer.evaluate(episodes, seed);
  return py::make_tuple(mean, std);
}

double py_random_baseline(const std::string& env_name, std::int64_t episodes, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.env = env_name;
  return Trainer::random_baseline(cfg, episodes, seed);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Pixel-based RL with contrastive forward-dynamics representation learning";

  py::register_exception<ConfigError>(m, "ConfigurationError");
  py::register_exception<NumericsError>(m, "NumericsError");
  py::register_exception<NotReadyError>(m, "NotReadyError");
  py::register_exception<IoError>(m, "CheckpointError");

  py::class_<PyEnv>(m, "Env", "Pixel control environment with frame stacking")
      .def(py::init<const std::string&, std::int64_t, std::int64_t, std::int64_t>(),
           py::arg("name"), py::arg("render_size") = 76, py::arg("frame_stack") = 3,
           py::arg("action_repeat") = 4)
      .def("reset", &PyEnv::reset, py::arg("seed"))
      .def("step", &PyEnv::step, py::arg("action"))
      .def("render", &PyEnv::render)
      .def_property_readonly("action_dim", &PyEnv::action_dim)
      .def_property_readonly("step_count", &PyEnv::step_count)
      .def_property_readonly("episode_done", &PyEnv::episode_done);

  m.def("info_nce", &py_info_nce, py::arg("logits"),
        "InfoNCE loss over a square logit matrix with positives on the diagonal");
  m.def("ema_blend", &py_ema_blend, py::arg("target"), py::arg("source"), py::arg("tau"));
  m.def("prediction_error", &py_prediction_error, py::arg("predicted"), py::arg("key"));
  m.def("intrinsic_reward", &py_intrinsic_reward, py::arg("weight"), py::arg("decay"),
        py::arg("step"), py::arg("error"), py::arg("re_max"), py::arg("ri_max"));
  m.def("random_crop", &py_random_crop, py::arg("stack"), py::arg("out_h"), py::arg("out_w"),
        py::arg("seed"));
  m.def("train", &py_train, py::arg("config"), "Run training from a config dict");
  m.def("evaluate", &py_evaluate, py::arg("checkpoint"), py::arg("episodes") = 10,
        py::arg("seed") = 1);
  m.def("random_baseline", &py_random_baseline, py::arg("env"), py::arg("episodes") = 10,
        py::arg("seed") = 1);
  m.def("export_curves", &export_curves, py::arg("metrics_path"), py::arg("out_path"));

#ifdef VERSION_INFO
  m.attr("__version__") = VERSION_INFO;
#else
  m.attr("__version__") = "0.1.0";
#endif
}
