#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "lidisco/boxfit.hpp"
#include "lidisco/config.hpp"
#include "lidisco/error.hpp"

namespace py = pybind11;
using namespace lidisco;

namespace {

Json parse(const std::string& text) {
  try {
    return text.empty() ? Json::object() : Json::parse(text);
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, std::string("parameter JSON: ") + e.what());
  }
}

py::array_t<double> cloud_array(const PointCloud& cloud) {
  py::array_t<double> out({static_cast<py::ssize_t>(cloud.points.size()), py::ssize_t{4}});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Point3& p = cloud.points[i];
    v(i, 0) = p.x, v(i, 1) = p.y, v(i, 2) = p.z, v(i, 3) = p.intensity;
  }
  return out;
}

std::vector<Point3> points_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2 || a.shape(1) < 3) throw Error(ErrorKind::MalformedRecord, "points must have shape (N, 3) or (N, 4)");
  auto v = a.unchecked<2>();
  std::vector<Point3> pts(static_cast<std::size_t>(a.shape(0)));
  for (py::ssize_t i = 0; i < a.shape(0); ++i)
    pts[i] = {v(i, 0), v(i, 1), v(i, 2), a.shape(1) > 3 ? v(i, 3) : 0.0};
  return pts;
}

}  // namespace

PYBIND11_MODULE(_lidisco, m) {
  m.doc() = "LiDAR object discovery: synthetic scenes, auto-labelling, template detection, evaluation.";

  static py::exception<Error> error_type(m, "LidiscoError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object err = py::reinterpret_borrow<py::object>(error_type.ptr())(e.what());
      err.attr("kind") = to_string(e.kind());
      PyErr_SetObject(error_type.ptr(), err.ptr());
    }
  });

  py::class_<OrientedBox>(m, "Box")
      .def(py::init([](double cx, double cy, double cz, double length, double width, double height, double yaw,
                       double score, std::optional<std::uint64_t> track_id) {
             return OrientedBox{cx, cy, cz, length, width, height, yaw, score, track_id};
           }),
           py::arg("cx") = 0.0, py::arg("cy") = 0.0, py::arg("cz") = 0.0, py::arg("length") = 1.0,
           py::arg("width") = 1.0, py::arg("height") = 1.0, py::arg("yaw") = 0.0, py::arg("score") = 0.0,
           py::arg("track_id") = py::none())
      .def_readwrite("cx", &OrientedBox::cx)
      .def_readwrite("cy", &OrientedBox::cy)
      .def_readwrite("cz", &OrientedBox::cz)
      .def_readwrite("length", &OrientedBox::length)
      .def_readwrite("width", &OrientedBox::width)
      .def_readwrite("height", &OrientedBox::height)
      .def_readwrite("yaw", &OrientedBox::yaw)
      .def_readwrite("score", &OrientedBox::score)
      .def_readwrite("track_id", &OrientedBox::track_id)
      .def(py::self == py::self)
      .def("__repr__", [](const OrientedBox& b) { return "Box(" + box_to_json(b).dump() + ")"; });

  py::class_<Sequence>(m, "Sequence")
      .def_readonly("sequence_id", &Sequence::sequence_id)
      .def("__len__", [](const Sequence& s) { return s.frames.size(); })
      .def_property_readonly("frame_ids",
                             [](const Sequence& s) {
                               std::vector<std::uint64_t> ids;
                               for (const auto& f : s.frames) ids.push_back(f.frame_id);
                               return ids;
                             })
      .def_property_readonly("timestamps",
                             [](const Sequence& s) {
                               std::vector<double> t;
                               for (const auto& f : s.frames) t.push_back(f.timestamp);
                               return t;
                             })
      .def("pose", [](const Sequence& s, std::size_t i) { return s.frames.at(i).pose.to_matrix(); },
           "Row-major 4x4 world_from_ego matrix of frame i.")
      .def("points", [](const Sequence& s, std::size_t i) { return cloud_array(s.clouds.at(i)); },
           "Frame i as an (N, 4) array of x, y, z, intensity.");

  py::class_<TemplateModel>(m, "Model")
      .def_property_readonly("threshold", [](const TemplateModel& t) { return t.threshold; })
      .def_property_readonly("num_bins", [](const TemplateModel& t) { return t.num_bins; })
      .def_property_readonly("patch_size", [](const TemplateModel& t) { return t.patch_size; })
      .def("to_json", [](const TemplateModel& t) { return model_to_json(t).dump(); })
      .def_static("from_json", [](const std::string& s) { return model_from_json(parse(s)); });

  m.def(
      "default_params",
      [](const std::string& kind) {
        if (kind == "scene") return to_json(SceneConfig{}).dump();
        if (kind == "pipeline") return to_json(PipelineParams{}).dump();
        if (kind == "rounds") return to_json(RoundConfig{}).dump();
        if (kind == "eval") return to_json(EvalParams{}).dump();
        throw Error(ErrorKind::InvalidConfig, "unknown parameter kind '" + kind + "'");
      },
      py::arg("kind"));

  m.def(
      "synthesize",
      [](const std::string& scene_json, int threads) {
        const SceneConfig cfg = scene_config_from_json(parse(scene_json));
        py::gil_scoped_release release;
        SyntheticScene s = generate(cfg, threads);
        return std::make_pair(std::move(s.sequence), std::move(s.truth.labels));
      },
      py::arg("scene_json") = "", py::arg("threads") = 1);

  m.def("read_sequence", [](const std::filesystem::path& p) { return read_sequence(p).sequence; });
  m.def("write_sequence", &write_sequence);
  m.def("read_labels", &read_labels);
  m.def("write_labels", &write_labels);

  m.def(
      "autolabel",
      [](const Sequence& seq, const std::string& params_json, int threads) {
        const PipelineParams p = pipeline_params_from_json(parse(params_json));
        py::gil_scoped_release release;
        return round_zero(seq, p, threads);
      },
      py::arg("sequence"), py::arg("params_json") = "", py::arg("threads") = 1);

  m.def(
      "train",
      [](const Sequence& seq, const LabelSet& labels, const std::string& params_json, int threads) {
        const PipelineParams p = pipeline_params_from_json(parse(params_json));
        py::gil_scoped_release release;
        return train_on_sequence(prepare_sequence(seq, p, threads), labels, p.detector, p.train_near_range_m);
      },
      py::arg("sequence"), py::arg("labels"), py::arg("params_json") = "", py::arg("threads") = 1);

  m.def(
      "infer",
      [](const Sequence& seq, const TemplateModel& model, const std::string& params_json, int threads) {
        const PipelineParams p = pipeline_params_from_json(parse(params_json));
        py::gil_scoped_release release;
        return detect_sequence(prepare_sequence(seq, p, threads), model, threads);
      },
      py::arg("sequence"), py::arg("model"), py::arg("params_json") = "", py::arg("threads") = 1);

  m.def(
      "self_train",
      [](const Sequence& seq, const std::string& rounds_json, int threads) {
        const RoundConfig rc = round_config_from_json(parse(rounds_json));
        SelfTrainResult r;
        {
          py::gil_scoped_release release;
          r = self_train(seq, rc, threads);
        }
        std::vector<LabelSet> labels;
        for (auto& a : r.rounds) labels.push_back(std::move(a.labels));
        return std::make_pair(labels, r.stop_reason);
      },
      py::arg("sequence"), py::arg("rounds_json") = "", py::arg("threads") = 1,
      "Per-round labels and the early-stop reason, if any.");

  m.def(
      "evaluate",
      [](const LabelSet& dets, const LabelSet& gts, const Sequence* seq, const std::string& eval_json, bool dtc) {
        const EvalParams p = eval_params_from_json(parse(eval_json));
        const std::vector<FrameInfo> frames = seq ? seq->frames : std::vector<FrameInfo>{};
        return report_to_json(evaluate(dets, gts, frames, p, dtc)).dump();
      },
      py::arg("detections"), py::arg("ground_truth"), py::arg("sequence") = nullptr, py::arg("eval_json") = "",
      py::arg("dtc") = false);

  m.def("bev_iou", [](const OrientedBox& a, const OrientedBox& b) { return bev_iou(a, b); }, py::arg("a"), py::arg("b"));
  m.def("canonicalize", [](const OrientedBox& b) { return canonicalize(b); }, py::arg("box"));
  m.def(
      "fit_box",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& pts, const std::string& criterion) {
        BoxFitParams p;
        p.criterion = box_fit_criterion_from_string(criterion);
        return fit_oriented_box(points_from(pts), p);
      },
      py::arg("points"), py::arg("criterion") = "min_area");
}
