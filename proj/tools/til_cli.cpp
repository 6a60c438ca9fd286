#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/format.h>

#include "til/dataset_io.hpp"
#include "til/error.hpp"
#include "til/http_backend.hpp"
#include "til/pipeline.hpp"
#include "til/vlm.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kBackend = 2, kPartial = 3 };

struct LocalizeOptions {
  std::string input;
  std::string mode = "egoloc";
  std::string out = "results";
  int trials = 1;
  int jobs = 1;
  double threshold = 0.03;
  std::string backend = "http";
  std::string model = "gpt-4o";
  std::string base_url = "https://api.openai.com/v1";
  std::string script;
  std::string dump_prompts;
  std::string sampling = "sass3d";
  std::string registration = "icp";
  double requests_per_second = 0.0;
  int max_in_flight = 4;
};

int exit_code_for(const til::Error& e) {
  switch (e.kind()) {
    case til::ErrorKind::BackendUnavailable:
    case til::ErrorKind::TestScript:
      return kBackend;
    default:
      return kValidation;
  }
}

std::string result_name(const til::TILResult& r, int trials) {
  return trials > 1 ? fmt::format("{}.trial{}.json", r.info.video_id, r.info.trial)
                    : fmt::format("{}.json", r.info.video_id);
}

std::shared_ptr<til::VlmBackend> make_backend(const LocalizeOptions& o) {
  if (o.backend == "scripted") {
    if (o.script.empty()) throw til::Error(til::ErrorKind::Config, "--vlm-backend scripted needs --vlm-script");
    return std::make_shared<til::ScriptedBackend>(til::ScriptedBackend::from_json(til::read_text(o.script)));
  }
  auto config = til::HttpBackendConfig::from_environment();
  config.model = o.model;
  config.base_url = o.base_url;
  if (config.api_key.empty()) {
    std::cerr << "warning: TIL_VLM_API_KEY is not set; requests are sent without a bearer token\n";
  }
  return std::make_shared<til::HttpBackend>(config);
}

int run_localize(const LocalizeOptions& o, const til::PipelineConfig& base) {
  const auto videos = til::ManifestDirectoryAdapter{}.load(o.input);
  if (videos.empty()) throw til::Error(til::ErrorKind::Validation, "no manifests found in " + o.input);
  fs::create_directories(o.out);

  til::PipelineConfig config = base;
  config.sampling = til::sampling_mode_from_string(o.sampling);
  if (o.registration == "identity") config.registration = til::RegistrationMode::Identity;
  else if (o.registration != "icp") throw til::Error(til::ErrorKind::Config, "--registration must be icp or identity");
  config.validate();

  std::vector<til::TILResult> results;
  if (o.mode == "threshold") {
    for (const auto& video : videos) results.push_back(til::threshold_baseline(video, o.threshold));
  } else if (o.mode == "egoloc" || o.mode == "greedy") {
    til::GatewayConfig gateway_config;
    gateway_config.audit_path = fs::path(o.out) / "audit.jsonl";
    gateway_config.max_in_flight = o.max_in_flight;
    gateway_config.requests_per_second = o.requests_per_second;
    if (!o.dump_prompts.empty()) gateway_config.dump_dir = o.dump_prompts;
    til::VlmGateway gateway(make_backend(o), gateway_config);

    const auto run_one = [&](const til::VideoRecord& video) {
      if (o.mode == "greedy") return std::vector<til::TILResult>{til::greedy_vlm(video, config, gateway)};
      return til::run_trials(video, config, gateway, o.trials);
    };
    // Scripted replies are consumed in call order, so scripted runs stay sequential.
    const int jobs = o.backend == "scripted" ? 1 : std::max(1, o.jobs);
    for (std::size_t start = 0; start < videos.size(); start += static_cast<std::size_t>(jobs)) {
      std::vector<std::future<std::vector<til::TILResult>>> batch;
      for (std::size_t i = start; i < std::min(videos.size(), start + static_cast<std::size_t>(jobs)); ++i) {
        batch.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, run_one,
                                   std::cref(videos[i])));
      }
      for (auto& f : batch) {
        for (auto& r : f.get()) results.push_back(std::move(r));
      }
    }
  } else {
    throw til::Error(til::ErrorKind::Config, "--mode must be egoloc, threshold or greedy");
  }

  bool partial = false;
  for (const auto& r : results) {
    const fs::path path = fs::path(o.out) / result_name(r, o.mode == "egoloc" ? o.trials : 1);
    til::write_result(r, path);
    partial = partial || r.partial;
    std::cout << fmt::format("{}: contacts [{}] separations [{}]{} -> {}\n", r.info.video_id,
                             fmt::join(r.contacts, ", "), fmt::join(r.separations, ", "),
                             r.partial ? " (partial)" : "", path.string());
  }
  return partial ? kPartial : kOk;
}

int run_dynamics(const std::string& manifest, const std::string& out, const std::string& sampling,
                 const std::string& registration) {
  const til::VideoRecord video = til::load_manifest(manifest);
  til::PipelineConfig config;
  config.sampling = til::sampling_mode_from_string(sampling);
  if (registration == "identity") config.registration = til::RegistrationMode::Identity;
  std::vector<til::Diagnostic> diagnostics;
  const til::DynamicsProfile profile = til::video_dynamics(video, config, &diagnostics);
  fs::create_directories(out);
  const fs::path json_path = fs::path(out) / (video.id + ".dynamics.json");
  const fs::path svg_path = fs::path(out) / (video.id + ".dynamics.svg");
  til::write_text_atomic(json_path, til::dynamics_to_json(profile, video.id));
  const til::GroundTruth* gt = video.ground_truth ? &*video.ground_truth : nullptr;
  til::plot_dynamics(profile, nullptr, gt, svg_path);
  for (const auto& d : diagnostics) std::cerr << fmt::format("note: {} at frame {}: {}\n", d.code, d.frame, d.message);
  std::cout << fmt::format("{} zero-acceleration point(s): [{:.3f}]\n", profile.zero_accel_times.size(),
                           fmt::join(profile.zero_accel_times, ", "));
  std::cout << json_path.string() << "\n" << svg_path.string() << "\n";
  return kOk;
}

int run_plot(const std::string& manifest, const std::string& result_path, const std::string& out) {
  const til::VideoRecord video = til::load_manifest(manifest);
  til::ReadWarnings warnings;
  const til::TILResult result = til::read_result(result_path, &warnings);
  for (const auto& w : warnings.messages) std::cerr << "warning: " << w << "\n";
  til::PipelineConfig config;
  if (result.info.mode == "egoloc-sass2d") config.sampling = til::SamplingMode::Sass2d;
  const til::DynamicsProfile profile = til::video_dynamics(video, config);
  const fs::path path = out.empty() ? fs::path(result_path).replace_extension(".svg") : fs::path(out);
  const til::GroundTruth* gt = video.ground_truth ? &*video.ground_truth : nullptr;
  til::plot_dynamics(profile, &result, gt, path);
  std::cout << path.string() << "\n";
  return kOk;
}

int run_evaluate(const std::string& dir, const std::vector<int>& gammas, const std::string& out) {
  const til::MetricsReport report = til::evaluate_directory(dir, gammas);
  const std::string text = til::report_to_json(report);
  if (out.empty()) {
    std::cout << text;
  } else {
    til::write_text_atomic(out, text);
    std::cout << out << "\n";
  }
  return report.rows.empty() ? kValidation : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot temporal interaction localization for egocentric RGB-D video"};
  app.require_subcommand(1);

  til::PipelineConfig pipeline;
  LocalizeOptions lo;
  auto* localize = app.add_subcommand("localize", "Localize contact and separation frames");
  localize->add_option("input", lo.input, "Manifest file or directory of manifests")->required();
  localize->add_option("--mode", lo.mode, "egoloc | threshold | greedy")->capture_default_str();
  localize->add_option("--n-adj", pipeline.n_adj, "Grid side length")->capture_default_str();
  localize->add_option("--n-ac", pipeline.n_ac, "Anchor candidates per zero-acceleration point")->capture_default_str();
  localize->add_option("--lambda", pipeline.lambda, "Speed temperature of the anchor weights")->capture_default_str();
  localize->add_option("--seed", pipeline.seed, "Random seed")->capture_default_str();
  localize->add_option("--max-resamples", pipeline.max_resamples, "Draws per candidate set (0 = n_ac)");
  localize->add_option("--trials", lo.trials, "Trials per video, seeds seed..seed+K-1")->capture_default_str();
  localize->add_option("--jobs", lo.jobs, "Videos processed concurrently")->capture_default_str();
  localize->add_option("--sampling", lo.sampling, "sass3d | sass2d | random")->capture_default_str();
  localize->add_option("--registration", lo.registration, "icp | identity")->capture_default_str();
  localize->add_option("--random-budget", pipeline.random_budget, "Anchor plans in random sampling mode");
  localize->add_option("--threshold", lo.threshold, "Fingertip distance threshold in meters")->capture_default_str();
  localize->add_option("--vlm-backend", lo.backend, "http | scripted")->capture_default_str();
  localize->add_option("--vlm-model", lo.model, "Model name")->capture_default_str();
  localize->add_option("--vlm-base-url", lo.base_url, "Chat-completions base URL")->capture_default_str();
  localize->add_option("--vlm-script", lo.script, "JSON replies for the scripted backend");
  localize->add_option("--rate", lo.requests_per_second, "Requests per second (0 = unlimited)");
  localize->add_option("--max-in-flight", lo.max_in_flight, "Concurrent VLM requests")->capture_default_str();
  localize->add_option("--dump-prompts", lo.dump_prompts, "Directory for per-call prompt text and images");
  localize->add_option("--out", lo.out, "Output directory")->capture_default_str();

  std::string dyn_manifest, dyn_out = "dynamics", dyn_sampling = "sass3d", dyn_registration = "icp";
  auto* dynamics = app.add_subcommand("dynamics", "Dump the hand-speed profile and its plot");
  dynamics->add_option("manifest", dyn_manifest, "Manifest file")->required();
  dynamics->add_option("--out", dyn_out, "Output directory")->capture_default_str();
  dynamics->add_option("--sampling", dyn_sampling, "sass3d | sass2d")->capture_default_str();
  dynamics->add_option("--registration", dyn_registration, "icp | identity")->capture_default_str();

  std::string eval_dir, eval_out;
  std::vector<int> gammas{1, 3, 5};
  auto* evaluate = app.add_subcommand("evaluate", "Score result files against their ground truth");
  evaluate->add_option("results", eval_dir, "Directory of result files")->required();
  evaluate->add_option("--gamma", gammas, "SR tolerances in frames")->delimiter(',')->capture_default_str();
  evaluate->add_option("--out", eval_out, "Report path (default: stdout)");

  std::string plot_manifest, plot_result, plot_out;
  auto* plot = app.add_subcommand("plot", "Plot dynamics with predicted and ground-truth transitions");
  plot->add_option("manifest", plot_manifest, "Manifest file")->required();
  plot->add_option("result", plot_result, "Result file")->required();
  plot->add_option("--out", plot_out, "SVG path (default: next to the result)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*localize) return run_localize(lo, pipeline);
    if (*dynamics) return run_dynamics(dyn_manifest, dyn_out, dyn_sampling, dyn_registration);
    if (*evaluate) return run_evaluate(eval_dir, gammas, eval_out);
    if (*plot) return run_plot(plot_manifest, plot_result, plot_out);
  } catch (const til::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  }
  return kOk;
}
