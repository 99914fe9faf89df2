#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "projgan/config.hpp"
#include "projgan/error.hpp"
#include "projgan/evaluation.hpp"
#include "projgan/metrics.hpp"
#include "projgan/phantom.hpp"
#include "projgan/trainer.hpp"
#include "projgan/volume.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace projgan;
using nlohmann::json;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;

Volume to_volume(const FloatArray& a) {
  if (a.ndim() != 3) throw Error(ErrorKind::Shape, "expected a 3D (L, W, D) array");
  const Shape3 s{a.shape(0), a.shape(1), a.shape(2)};
  return Volume(s, std::vector<float>(a.data(), a.data() + s.numel()));
}

ProjectionMap to_map(const FloatArray& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::Shape, "expected a 2D (L, W) array");
  const Shape2 s{a.shape(0), a.shape(1)};
  return ProjectionMap(s, std::vector<float>(a.data(), a.data() + s.numel()));
}

VesselMask to_mask(const ByteArray& a) {
  if (a.ndim() != 2) throw Error(ErrorKind::Shape, "expected a 2D (L, W) mask");
  const Shape2 s{a.shape(0), a.shape(1)};
  std::vector<uint8_t> v(a.data(), a.data() + s.numel());
  for (auto& x : v) x = x ? 1 : 0;
  return VesselMask(s, std::move(v), MaskSource::AnnotatedGroundTruth);
}

py::array_t<float> from_volume(const Volume& v) {
  const auto& s = v.shape();
  py::array_t<float> out({s.L, s.W, s.D});
  std::copy(v.data().begin(), v.data().end(), out.mutable_data());
  return out;
}

py::array_t<float> from_map(const ProjectionMap& m) {
  py::array_t<float> out({m.shape().L, m.shape().W});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::array_t<uint8_t> from_mask(const VesselMask& m) {
  py::array_t<uint8_t> out({m.shape().L, m.shape().W});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<ProjectionMap> maps(const std::vector<FloatArray>& xs) {
  std::vector<ProjectionMap> out;
  for (const auto& x : xs) out.push_back(to_map(x));
  return out;
}

ExperimentConfig parse_config(const std::string& text) { return json::parse(text).get<ExperimentConfig>(); }

py::dict stage_result(const StageResult& r) {
  json log = json::array();
  for (const auto& e : r.log) log.push_back(e);
  py::dict d;
  d["best_checkpoint"] = r.best_checkpoint.string();
  d["best_epoch"] = r.best_epoch;
  d["best_validation"] = r.best_validation;
  d["log"] = log.dump();
  d["extra"] = r.extra.dump();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "C++ core: phantoms, metrics, training stages and translation";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def("project_mean", [](const FloatArray& v) { return from_map(project_mean(to_volume(v))); }, py::arg("volume"));

  m.def("mae_volume", [](const FloatArray& y, const FloatArray& p) { return mae_volume(to_volume(y), to_volume(p)); });
  m.def("psnr_volume", [](const FloatArray& y, const FloatArray& p) { return psnr_volume(to_volume(y), to_volume(p)).db; });
  m.def("ssim_volume", [](const FloatArray& y, const FloatArray& p) { return ssim_volume(to_volume(y), to_volume(p)); });
  m.def(
      "weighted_metrics",
      [](const FloatArray& gt, const FloatArray& pred, const ByteArray& mask, double gamma) {
        const WeightedMetrics w = weighted_metric_suite(to_map(gt), to_map(pred), to_mask(mask), {gamma});
        return py::make_tuple(w.mae_v, w.psnr_v, w.ssim_v);
      },
      py::arg("gt"), py::arg("pred"), py::arg("gt_mask"), py::arg("gamma") = 0.1);
  m.def("segment_global_mean_threshold",
        [](const FloatArray& map) { return from_mask(segment_global_mean_threshold(to_map(map))); });
  m.def("vessel_density", [](const ByteArray& mask) { return vessel_density(to_mask(mask)); });
  m.def("vde", [](const std::vector<FloatArray>& gt, const std::vector<FloatArray>& pred) {
    return vde(maps(gt), maps(pred));
  });
  m.def(
      "vdc",
      [](const std::vector<FloatArray>& gt, const std::vector<FloatArray>& pred, int64_t patch) {
        const VdcResult r = vdc(maps(gt), maps(pred), patch);
        return py::make_tuple(r.value, r.degenerate_pairs);
      },
      py::arg("gt"), py::arg("pred"), py::arg("patch") = kDefaultPatch);

  m.def("normalize_config", [](const std::string& config) {
    const ExperimentConfig c = parse_config(config);
    c.validate();
    return json(c).dump();
  });
  m.def("config_hash", [](const std::string& config) { return config_hash(parse_config(config)); });
  m.def("generate_dataset", [](const std::string& config, const fs::path& root) {
    const ExperimentConfig c = parse_config(config);
    return generate_dataset(c.phantom.counts, c.phantom.master_seed, c.phantom.generator, root).dump();
  });
  m.def("phantom_sample", [](uint64_t seed, const std::string& config) {
    const ExperimentConfig c = parse_config(config);
    const PhantomSample s = generate_sample(seed, c.phantom.generator);
    return py::make_tuple(from_volume(s.oct), from_volume(s.octa), from_mask(s.vessel_mask_2d));
  });

  m.def(
      "pretrain_vseg",
      [](const std::string& config, bool quiet) {
        py::gil_scoped_release release;
        const StageResult r = pretrain_vseg(parse_config(config), {.quiet = quiet});
        py::gil_scoped_acquire acquire;
        return stage_result(r);
      },
      py::arg("config"), py::arg("quiet") = true);
  m.def(
      "pretrain_hcg",
      [](const std::string& config, bool quiet) {
        py::gil_scoped_release release;
        const StageResult r = pretrain_hcg(parse_config(config), {.quiet = quiet});
        py::gil_scoped_acquire acquire;
        return stage_result(r);
      },
      py::arg("config"), py::arg("quiet") = true);
  m.def(
      "train_transpro",
      [](const std::string& config, const fs::path& vseg, const fs::path& gpre, bool quiet) {
        py::gil_scoped_release release;
        const StageResult r = train_transpro(parse_config(config), vseg, gpre, {.quiet = quiet});
        py::gil_scoped_acquire acquire;
        return stage_result(r);
      },
      py::arg("config"), py::arg("vseg_checkpoint"), py::arg("gpre_checkpoint"), py::arg("quiet") = true);

  m.def("translate", [](const fs::path& checkpoint, const FloatArray& oct) {
    return from_volume(translate(checkpoint, to_volume(oct)));
  });
  m.def("evaluate_checkpoint", [](const fs::path& checkpoint, const fs::path& dataset, const std::string& config) {
    return report_json(evaluate_checkpoint(checkpoint, dataset, eval_context(parse_config(config)))).dump();
  });
  m.def("evaluate_predictions", [](const fs::path& pred_dir, const fs::path& dataset, const std::string& config) {
    return report_json(evaluate_predictions(pred_dir, dataset, eval_context(parse_config(config)))).dump();
  });
}
