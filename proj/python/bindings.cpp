#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "til/dataset_io.hpp"
#include "til/error.hpp"
#include "til/metrics.hpp"
#include "til/pipeline.hpp"
#include "til/sampler.hpp"
#include "til/signal.hpp"
#include "til/vlm.hpp"

namespace py = pybind11;

namespace {

til::PipelineConfig make_config(int n_adj, int n_ac, double lambda, std::uint64_t seed, const std::string& sampling,
                                const std::string& registration) {
  til::PipelineConfig config;
  config.n_adj = n_adj;
  config.n_ac = n_ac;
  config.lambda = lambda;
  config.seed = seed;
  config.sampling = til::sampling_mode_from_string(sampling);
  if (registration == "identity") {
    config.registration = til::RegistrationMode::Identity;
  } else if (registration != "icp") {
    throw til::Error(til::ErrorKind::Config, "registration must be icp or identity");
  }
  config.validate();
  return config;
}

/// Runs the pipeline on a manifest with the scripted backend; returns result JSON.
std::string localize_scripted(const std::filesystem::path& manifest, const std::string& script_json, int n_adj,
                              int n_ac, double lambda, std::uint64_t seed, const std::string& sampling,
                              const std::string& registration) {
  const til::PipelineConfig config = make_config(n_adj, n_ac, lambda, seed, sampling, registration);
  const til::VideoRecord video = til::load_manifest(manifest);
  auto backend = std::make_shared<til::ScriptedBackend>(til::ScriptedBackend::from_json(script_json));
  til::VlmGateway gateway(backend);
  py::gil_scoped_release release;
  return til::result_to_json(til::localize_video(video, config, gateway));
}

std::string dynamics_json(const std::filesystem::path& manifest, const std::string& sampling,
                          const std::string& registration) {
  const til::PipelineConfig config = make_config(2, 5, 1.0, 0, sampling, registration);
  const til::VideoRecord video = til::load_manifest(manifest);
  return til::dynamics_to_json(til::video_dynamics(video, config), video.id);
}

py::dict score(const std::vector<int>& pred_contacts, const std::vector<int>& pred_separations,
               const std::vector<int>& gt_contacts, const std::vector<int>& gt_separations, int n_obs,
               const std::vector<int>& gammas) {
  const auto s = til::score_video(pred_contacts, pred_separations, gt_contacts, gt_separations, n_obs, gammas);
  py::dict sr;
  for (const auto& [gamma, value] : s.sr) sr[py::int_(gamma)] = value;
  py::dict out;
  out["mof"] = s.mof;
  out["iou"] = s.iou;
  out["mae"] = s.mae;
  out["mae_fallback"] = s.mae_fallback;
  out["matched"] = s.matched;
  out["sr"] = sr;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Zero-shot contact and separation localization in egocentric RGB-D video";

  static py::exception<til::Error> error(m, "TilError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const til::Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("sampling_weights", [](const std::vector<double>& speeds, double lambda) {
    return til::sampling_weights(speeds, lambda);
  }, py::arg("speeds"), py::arg("lambda_"));
  m.def("anchor_candidates", [](double center, int n_ac, int n_obs) {
    return til::build_candidates(center, n_ac, n_obs).candidates;
  }, py::arg("center"), py::arg("n_ac"), py::arg("n_obs"));
  m.def("fallback_uniform", &til::fallback_uniform, py::arg("n_obs"), py::arg("n_adj"));
  m.def("greedy_frames", &til::greedy_frames, py::arg("n_obs"), py::arg("n_adj"));

  m.def("smooth_speeds", [](const std::vector<double>& samples, int window, int order) {
    return til::smooth_speeds(samples, window, order);
  }, py::arg("samples"), py::arg("window"), py::arg("order"));
  m.def("speed_minima", [](const std::vector<double>& samples) {
    return til::spline_minima(til::fit_velocity_spline(samples));
  }, py::arg("samples"), "Interior minima of the natural spline through samples at t = 1..N.");

  m.def("build_segments", [](const std::vector<int>& contacts, const std::vector<int>& separations, int n_obs) {
    return til::build_segments(contacts, separations, n_obs).intervals;
  }, py::arg("contacts"), py::arg("separations"), py::arg("n_obs"));
  m.def("mof", [](const std::vector<std::pair<int, int>>& pred, const std::vector<std::pair<int, int>>& gt) {
    return til::mof({pred}, {gt});
  }, py::arg("pred"), py::arg("gt"));
  m.def("iou", [](const std::vector<std::pair<int, int>>& pred, const std::vector<std::pair<int, int>>& gt) {
    return til::iou({pred}, {gt});
  }, py::arg("pred"), py::arg("gt"));
  m.def("score_video", &score, py::arg("pred_contacts"), py::arg("pred_separations"), py::arg("gt_contacts"),
        py::arg("gt_separations"), py::arg("n_obs"), py::arg("gammas") = std::vector<int>{0, 5, 10});

  m.def("threshold_from_distances", [](const std::vector<double>& distances, double threshold) {
    const auto r = til::threshold_from_distances(distances, threshold);
    return std::make_pair(r.contacts, r.separations);
  }, py::arg("distances"), py::arg("threshold"));

  m.def("localize_scripted_json", &localize_scripted, py::arg("manifest"), py::arg("script_json"),
        py::arg("n_adj") = 2, py::arg("n_ac") = 5, py::arg("lambda_") = 1.0, py::arg("seed") = 0,
        py::arg("sampling") = "sass3d", py::arg("registration") = "icp");
  m.def("dynamics_json", &dynamics_json, py::arg("manifest"), py::arg("sampling") = "sass3d",
        py::arg("registration") = "icp");
}
