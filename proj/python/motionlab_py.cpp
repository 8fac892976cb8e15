#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "motionlab/config.hpp"
#include "motionlab/error.hpp"
#include "motionlab/harness.hpp"
#include "motionlab/losses.hpp"
#include "motionlab/model.hpp"

namespace py = pybind11;
namespace ml = motionlab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

ml::Tensor to_tensor(const Array& a) {
  ml::Shape shape(a.shape(), a.shape() + a.ndim());
  return ml::Tensor::create(shape, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const ml::Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

ml::UncertaintyParams uncertainty(const Array& log_sigma) { return {to_tensor(log_sigma)}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Self-attention graph motion predictor: losses, metrics, model and training harness.";
  m.attr("__version__") = "0.1.0";

  static py::exception<ml::Error> error(m, "MotionlabError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ml::Error& e) {
      PyErr_SetString(error.ptr(), (std::string(ml::to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<ml::ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def(py::init([](std::size_t n_joints, std::size_t in_frames, std::size_t out_frames, std::size_t feature_dim,
                       std::size_t key_dim, std::size_t n_blocks, std::size_t tcn_kernel) {
             ml::ModelConfig c{n_joints, in_frames, out_frames, feature_dim, key_dim, n_blocks, tcn_kernel};
             c.validate();
             return c;
           }),
           py::arg("n_joints"), py::arg("in_frames"), py::arg("out_frames"), py::arg("feature_dim"),
           py::arg("key_dim"), py::arg("n_blocks"), py::arg("tcn_kernel") = 3)
      .def_readwrite("n_joints", &ml::ModelConfig::n_joints)
      .def_readwrite("in_frames", &ml::ModelConfig::in_frames)
      .def_readwrite("out_frames", &ml::ModelConfig::out_frames)
      .def_readwrite("feature_dim", &ml::ModelConfig::feature_dim)
      .def_readwrite("key_dim", &ml::ModelConfig::key_dim)
      .def_readwrite("n_blocks", &ml::ModelConfig::n_blocks)
      .def_readwrite("tcn_kernel", &ml::ModelConfig::tcn_kernel)
      .def("__eq__", [](const ml::ModelConfig& a, const ml::ModelConfig& b) { return a == b; });

  py::class_<ml::Predictor>(m, "Predictor")
      .def(py::init(&ml::init_model), py::arg("config"), py::arg("seed") = 0)
      .def_property_readonly("config", &ml::Predictor::config)
      .def("predict", [](const ml::Predictor& p, const Array& obs) { return to_array(ml::predict(p, to_tensor(obs))); },
           py::arg("obs"), "obs [(B,) T_in, N, 3] in meters -> [(B,) T_out, N, 3]")
      .def("param_count", [](const ml::Predictor& p) { return ml::param_count(p); })
      .def("params", [](const ml::Predictor& p) {
        py::dict out;
        for (const auto& [name, t] : p.params()) out[py::str(name)] = to_array(t);
        return out;
      });

  m.def("analytic_param_count", &ml::analytic_param_count, py::arg("config"));

  m.def("frame_errors", [](const Array& p, const Array& t) { return to_array(ml::frame_errors(to_tensor(p), to_tensor(t))); },
        py::arg("pred"), py::arg("target"), "mean joint distance per frame");
  m.def("mpjpe", [](const Array& p, const Array& t) { return ml::mpjpe(to_tensor(p), to_tensor(t)).item(); },
        py::arg("pred"), py::arg("target"));
  m.def("horizon_frame", &ml::horizon_frame, py::arg("horizon_ms"), py::arg("fps"), py::arg("out_frames"));
  m.def("jitter_from_errors", [](const std::vector<double>& e, double fps) { return ml::jitter_from_errors(e, fps); },
        py::arg("errors"), py::arg("fps"));
  m.def("jitter", [](const Array& p, const Array& t, double fps, double mpu) {
          return ml::jitter(to_tensor(p), to_tensor(t), fps, mpu);
        },
        py::arg("pred"), py::arg("target"), py::arg("fps"), py::arg("meters_per_unit") = 1e-3);

  m.def("adaptive_loss", [](const Array& p, const Array& t, const Array& s, bool squared) {
          return ml::adaptive_loss(to_tensor(p), to_tensor(t), uncertainty(s), squared).item();
        },
        py::arg("pred"), py::arg("target"), py::arg("log_sigma"), py::arg("squared_norm") = false);
  m.def("salient_loss", [](const Array& p, const Array& t, double omega) {
          return ml::salient_loss(to_tensor(p), to_tensor(t), omega).item();
        },
        py::arg("pred"), py::arg("target"), py::arg("omega"));
  m.def("combined_loss", [](const Array& p, const Array& t, const Array& s, double lambda, double omega) {
          ml::LossConfig cfg{lambda, omega, false};
          cfg.validate();
          return ml::combined_loss(to_tensor(p), to_tensor(t), cfg, uncertainty(s)).item();
        },
        py::arg("pred"), py::arg("target"), py::arg("log_sigma"), py::arg("lam") = 0.3, py::arg("omega") = 10.0);

  m.def("synth_generate", [](std::size_t n_joints, std::size_t n_frames, double fps, const std::string& family,
                             std::uint64_t seed) {
          ml::SynthSpec spec;
          spec.n_joints = n_joints;
          spec.n_frames = n_frames;
          spec.fps = fps;
          spec.motion_family = ml::motion_family_from_string(family);
          spec.validate();
          return to_array(ml::synth_generate(spec, seed).frames);
        },
        py::arg("n_joints") = 8, py::arg("n_frames") = 100, py::arg("fps") = 25.0, py::arg("family") = "sinusoid",
        py::arg("seed") = 0, "synthetic trajectories [T, N, 3] in mm");
  m.def("save_sequence", [](const std::filesystem::path& path, const Array& frames, double fps, const std::string& units) {
          if (frames.ndim() != 3) throw ml::Error(ml::ErrorKind::shape, "frames must be [T, N, 3]");
          const auto t = to_tensor(frames);
          ml::save_sequence(ml::make_sequence(t.to_vector(), t.dim(0), t.dim(1), fps, ml::units_from_string(units)), path);
        },
        py::arg("path"), py::arg("frames"), py::arg("fps") = 25.0, py::arg("units") = "mm");
  m.def("load_sequence", [](const std::filesystem::path& path) {
          const auto seq = ml::load_sequence(path);
          py::dict out;
          out["frames"] = to_array(seq.frames);
          out["fps"] = seq.fps;
          out["units"] = ml::to_string(seq.units);
          out["joint_names"] = seq.joint_names;
          return out;
        },
        py::arg("path"));
  m.def("window_split", [](const Array& frames, std::size_t in_frames, std::size_t out_frames, std::size_t stride) {
          const auto t = to_tensor(frames);
          const auto seq = ml::make_sequence(t.to_vector(), t.dim(0), t.dim(1), 25.0);
          const auto pairs = ml::window_split(seq, in_frames, out_frames, stride);
          py::list obs, target;
          for (const auto& p : pairs) {
            obs.append(to_array(p.obs));
            target.append(to_array(p.target));
          }
          return py::make_tuple(obs, target);
        },
        py::arg("frames"), py::arg("in_frames"), py::arg("out_frames"), py::arg("stride") = 1);

  m.def("gradcheck", [](std::uint64_t seed) {
          const auto report = ml::cmd_gradcheck(seed);
          py::dict groups;
          for (const auto& g : report.groups) groups[py::str(g.name)] = g.max_rel_error;
          return py::make_tuple(report.passed(), groups);
        },
        py::arg("seed") = 0, "(passed, {group: max relative error})");
  m.def("train", [](const std::filesystem::path& config, const std::filesystem::path& out_dir) {
          ml::TrainOptions opts;
          opts.out_dir = out_dir;
          const auto r = ml::cmd_train(ml::parse_config(config), opts);
          py::dict out;
          out["initial_train_mpjpe_mm"] = r.initial_train_mpjpe_mm;
          out["final_train_mpjpe_mm"] = r.final_train_mpjpe_mm;
          out["steps_run"] = r.steps_run;
          out["checkpoint"] = r.checkpoint;
          out["log"] = r.log;
          return out;
        },
        py::arg("config"), py::arg("out_dir"));
  m.def("evaluate", [](const std::filesystem::path& config, const std::filesystem::path& checkpoint,
                       const std::string& split) {
          const auto r = ml::cmd_eval(ml::parse_config(config), checkpoint, ml::eval_split_from_string(split));
          return py::module_::import("json").attr("loads")(r.json());
        },
        py::arg("config"), py::arg("checkpoint"), py::arg("split") = "val");
  m.def("predict_file", &ml::cmd_predict, py::arg("checkpoint"), py::arg("input"), py::arg("output"));
}
