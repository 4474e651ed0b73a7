#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vital/adversarial.hpp"
#include "vital/config.hpp"
#include "vital/experiment.hpp"
#include "vital/gradcheck.hpp"
#include "vital/io.hpp"
#include "vital/metrics.hpp"
#include "vital/synth.hpp"

namespace py = pybind11;
using namespace vital;

namespace {

py::array_t<double> frame_array(const Frame& f) {
  py::array_t<double> a({f.height(), f.width()});
  std::copy(f.pixels().begin(), f.pixels().end(), a.mutable_data());
  return a;
}

Frame array_frame(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw py::value_error("frames must be 2-D arrays");
  const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1));
  return Frame(w, h, std::vector<double>(a.data(), a.data() + a.size()));
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["precision_thresholds"] = r.precision.thresholds;
  d["precision"] = r.precision.values;
  d["precision_20"] = r.precision_20;
  d["success_thresholds"] = r.success.thresholds;
  d["success"] = r.success.values;
  d["success_auc"] = r.success_auc;
  return d;
}

}  // namespace

PYBIND11_MODULE(_vital, m) {
  m.doc() = "Adversarial tracking-by-detection at desk scale";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_RuntimeError);
  py::register_exception<OutOfBoundsError>(m, "OutOfBoundsError", PyExc_IndexError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  py::class_<BoundingBox>(m, "BoundingBox")
      .def(py::init<>())
      .def(py::init([](double x, double y, double w, double h) { return BoundingBox{x, y, w, h}; }), py::arg("x"),
           py::arg("y"), py::arg("w"), py::arg("h"))
      .def_readwrite("x", &BoundingBox::x)
      .def_readwrite("y", &BoundingBox::y)
      .def_readwrite("w", &BoundingBox::w)
      .def_readwrite("h", &BoundingBox::h)
      .def("__eq__", [](const BoundingBox& a, const BoundingBox& b) { return a == b; })
      .def("__repr__", [](const BoundingBox& b) {
        return "BoundingBox(" + io::format_number(b.x) + ", " + io::format_number(b.y) + ", " + io::format_number(b.w) +
               ", " + io::format_number(b.h) + ")";
      });

  m.def("cross_entropy", &cross_entropy, py::arg("p"), py::arg("y"));
  m.def("cost_sensitive", &cost_sensitive, py::arg("p"), py::arg("y"));
  m.def("entropy", &entropy, py::arg("p"));
  m.def(
      "canonical_masks",
      [](std::size_t grid, const std::string& polarity) {
        std::vector<py::array_t<double>> out;
        for (const auto& mk : canonical_masks(grid, grid, 9, parse_polarity(polarity))) {
          py::array_t<double> a({mk.height, mk.width});
          std::copy(mk.values.begin(), mk.values.end(), a.mutable_data());
          out.push_back(a);
        }
        return out;
      },
      py::arg("grid") = 3, py::arg("polarity") = "drop_one");

  m.def("iou", &iou);
  m.def("center_error", &center_error);
  m.def(
      "precision_at", [](const Trajectory& t, const Trajectory& g, double px) { return precision_at(t, g, px); },
      py::arg("trajectory"), py::arg("ground_truth"), py::arg("px") = 20.0);
  m.def("success_auc", [](const Trajectory& t, const Trajectory& g) { return success_auc(t, g); });
  m.def("evaluate", [](const Trajectory& t, const Trajectory& g) { return report_dict(evaluate(t, g)); });

  m.def(
      "generate_sequence",
      [](const std::string& name, std::uint64_t seed) {
        SequenceSpec spec;
        if (name == "occlusion_fixture") {
          spec = occlusion_fixture(seed);
        } else {
          bool found = false;
          for (const auto& s : standard_suite(seed)) {
            if (s.name == name) {
              spec = s;
              found = true;
            }
          }
          if (!found) throw ConfigError("unknown sequence '" + name + "'");
        }
        const auto seq = generate_sequence(spec);
        std::vector<py::array_t<double>> frames;
        for (const auto& f : seq.frames) frames.push_back(frame_array(f));
        return py::make_tuple(frames, seq.ground_truth);
      },
      py::arg("name"), py::arg("seed") = 1,
      "Frames (H x W arrays) and ground-truth boxes of a standard-suite sequence or 'occlusion_fixture'.");
  m.def("suite_names", [](std::uint64_t seed) {
    std::vector<std::string> names;
    for (const auto& s : standard_suite(seed)) names.push_back(s.name);
    return names;
  }, py::arg("seed") = 1);

  py::class_<RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def("set", &RunConfig::set)
      .def("get", &RunConfig::get)
      .def("dump", &RunConfig::dump)
      .def("load_text", &RunConfig::load_text)
      .def_static("keys", &RunConfig::keys)
      .def_readwrite("seed", &RunConfig::seed);

  m.def(
      "track",
      [](const std::vector<py::array_t<double, py::array::c_style | py::array::forcecast>>& frames,
         const BoundingBox& init_box, const RunConfig& cfg, const std::string& arm) {
        SequenceData seq;
        seq.name = "python";
        for (const auto& a : frames) seq.frames.push_back(array_frame(a));
        seq.ground_truth = std::vector<BoundingBox>{init_box};
        py::gil_scoped_release release;
        return run_arm(seq, cfg, parse_arm(arm));
      },
      py::arg("frames"), py::arg("init_box"), py::arg("config") = RunConfig{}, py::arg("arm") = "full");

  m.def(
      "gradcheck",
      [](std::uint64_t seed, int configurations) {
        const auto r = run_gradcheck(seed, configurations);
        py::dict d;
        d["passed"] = r.passed;
        d["max_rel_error"] = r.max_rel_error;
        d["checks"] = r.results.size();
        d["configurations"] = r.configurations;
        return d;
      },
      py::arg("seed") = 1, py::arg("configurations") = 100);
}
