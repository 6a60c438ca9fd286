#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "til/hand_motion.hpp"
#include "til/registration.hpp"
#include "til/sampler.hpp"
#include "til/types.hpp"
#include "til/video.hpp"
#include "til/visual_prompt.hpp"
#include "til/vlm.hpp"

namespace til {

struct EventRecord {
  int anchor_plan_id = -1;
  int anchor = 0;
  Attribute attribute = Attribute::Contact;
  AdjacentWindow window;
  int round1_time = 0;
  /// Empty when no check ran (baselines).
  std::optional<bool> checker_accepted;
  std::optional<int> round2_time;
  int final_time = 0;
  int resample_count = 0;
  bool low_confidence = false;  ///< a fallback replaced an unparseable answer

  bool operator==(const EventRecord&) const = default;
};

struct Diagnostic {
  std::string code;
  int plan_id = -1;
  int frame = 0;
  std::string message;

  bool operator==(const Diagnostic&) const = default;
};

struct RunInfo {
  std::string video_id;
  int n_obs = 0;
  std::string mode;
  std::uint64_t seed = 0;
  int trial = 0;
  std::string config_digest;

  bool operator==(const RunInfo&) const = default;
};

struct TILResult {
  RunInfo info;
  std::vector<int> contacts;     ///< ascending, unique, 1-based
  std::vector<int> separations;  ///< ascending, unique, 1-based
  std::vector<EventRecord> events;
  std::vector<Diagnostic> diagnostics;
  bool partial = false;  ///< the backend failed before every plan was processed
  std::optional<GroundTruth> ground_truth;

  bool has_diagnostic(std::string_view code) const;
  std::size_t count_diagnostics(std::string_view code) const;
  bool operator==(const TILResult&) const = default;
};

enum class SamplingMode { Sass3d, Sass2d, Random };
enum class RegistrationMode { Icp, Identity };

std::string_view to_string(SamplingMode mode) noexcept;
SamplingMode sampling_mode_from_string(std::string_view name);

struct PipelineConfig {
  int n_adj = 2;
  int n_ac = 5;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  int max_resamples = 0;  ///< 0 means n_ac
  int feedback_rounds = 1;
  int window_stride = 1;
  int eps_w = 10;
  int eps_h = 10;
  int boundary_height = 336;  ///< boundary-pair crops resized to this height; 0 keeps native
  int max_image_side = 1024;
  double temperature = 0.0;
  int max_tokens = 512;
  SamplingMode sampling = SamplingMode::Sass3d;
  RegistrationMode registration = RegistrationMode::Icp;
  IcpConfig icp;
  std::optional<DynamicsConfig> dynamics;  ///< empty: chosen from fps
  int random_budget = 0;  ///< anchor plans for random sampling; 0 uses the fallback count

  int effective_max_resamples() const noexcept { return max_resamples > 0 ? max_resamples : n_ac; }
  /// Throws Error(Config).
  void validate() const;
};

/// Stable hex digest of every config field.
std::string config_digest(const PipelineConfig& config);

/// Anchor plans and the per-frame speeds used to weight them.
struct SamplingPlan {
  std::vector<AnchorPlan> plans;
  std::vector<double> frame_speeds;
  std::optional<DynamicsProfile> profile;
  bool used_fallback = false;
  std::vector<Diagnostic> diagnostics;
};

/// Runs the hand-dynamics chain selected by `config.sampling` and turns its
/// zero-acceleration times into anchor plans (or uniform fallback plans).
SamplingPlan plan_anchors(const VideoRecord& video, const PipelineConfig& config);

/// Dynamics only (3D or 2D per config), without planning.
DynamicsProfile video_dynamics(const VideoRecord& video, const PipelineConfig& config,
                               std::vector<Diagnostic>* diagnostics = nullptr);

TILResult localize_video(const VideoRecord& video, const PipelineConfig& config,
                         VlmGateway& gateway);

/// Repeats localize_video with seeds seed, seed+1, ...
std::vector<TILResult> run_trials(const VideoRecord& video, const PipelineConfig& config,
                                  VlmGateway& gateway, int trials);

/// Uniform-stride subsample of at most n_adj^2 frames covering the whole video.
std::vector<int> greedy_frames(int n_obs, int n_adj);

/// Whole-video grid, one localizer query per attribute, no sampling and no feedback.
TILResult greedy_vlm(const VideoRecord& video, const PipelineConfig& config, VlmGateway& gateway);

/// Contact when the fingertip distance drops below `threshold`; separation when
/// it rises back to 1.1 * threshold or more.
TILResult threshold_baseline(std::span<const Eigen::Vector3d> index_tips,
                             std::span<const Eigen::Vector3d> thumb_tips, double threshold);

/// Distance-series form of the baseline (values in any unit consistent with `threshold`).
TILResult threshold_from_distances(std::span<const double> distances, double threshold);

/// Lifts fingertip pixels through depth and runs threshold_baseline.
TILResult threshold_baseline(const VideoRecord& video, double threshold);

}  // namespace til
