#include "til/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include <fmt/core.h>

#include "til/encoding.hpp"
#include "til/error.hpp"
#include "til/parsers.hpp"
#include "til/prompts.hpp"

namespace til {
namespace {

/// Raised inside the loop when the gateway fails; the run ends as partial.
struct BackendFailure {
  std::string message;
};

/// Keeps recently decoded frames; one plan touches the same frames several times.
class FrameCache {
 public:
  explicit FrameCache(const VideoRecord& video) : video_(video) {}

  cv::Mat operator()(int frame) {
    if (const auto it = cache_.find(frame); it != cache_.end()) return it->second;
    if (cache_.size() >= 64) cache_.clear();
    cv::Mat image = video_.load_frame(frame);
    cache_.emplace(frame, image);
    return image;
  }

 private:
  const VideoRecord& video_;
  std::unordered_map<int, cv::Mat> cache_;
};

Box hand_box_of(const VideoRecord& video, int frame) {
  if (frame < 1 || static_cast<std::size_t>(frame) > video.hand.size()) {
    throw Error(ErrorKind::MissingHand, fmt::format("no hand observation for frame {}", frame));
  }
  const HandObservation& h = video.hand[static_cast<std::size_t>(frame - 1)];
  const std::vector<Pixel> keypoints = h.all_keypoints();
  return resolve_hand_box(h.box, keypoints);
}

class Session {
 public:
  Session(const VideoRecord& video, const PipelineConfig& config, VlmGateway& gateway, TILResult& result)
      : video_(video), config_(config), gateway_(gateway), result_(result), frames_(video) {}

  std::string ask(Role role, std::optional<Attribute> attribute, int round, int n_tiles,
                  std::vector<cv::Mat> images, std::vector<int> shown) {
    const PromptBundle prompt = build_prompt(role, attribute, round, n_tiles);
    VlmRequest request;
    request.text = prompt.text;
    request.temperature = config_.temperature;
    request.max_tokens = config_.max_tokens;
    for (const auto& image : images) request.images.push_back(encode_png(image, config_.max_image_side));
    CallContext context{role, round, attribute, n_tiles, std::move(shown)};
    try {
      return gateway_.query(request, context);
    } catch (const std::exception& e) {
      throw BackendFailure{e.what()};
    }
  }

  void note(std::string code, int plan_id, int frame, std::string message) {
    result_.diagnostics.push_back({std::move(code), plan_id, frame, std::move(message)});
  }

  cv::Mat frame(int f) { return frames_(f); }
  FrameLoader loader() {
    return [this](int f) { return frames_(f); };
  }

 private:
  const VideoRecord& video_;
  const PipelineConfig& config_;
  VlmGateway& gateway_;
  TILResult& result_;
  FrameCache frames_;
};

std::vector<int>& times_for(TILResult& result, Attribute attribute) {
  return attribute == Attribute::Contact ? result.contacts : result.separations;
}

void finalize(TILResult& result) {
  for (auto* list : {&result.contacts, &result.separations}) {
    std::sort(list->begin(), list->end());
    list->erase(std::unique(list->begin(), list->end()), list->end());
  }
}

std::string mode_name(const PipelineConfig& config) {
  if (config.sampling == SamplingMode::Sass3d) return "egoloc";
  return fmt::format("egoloc-{}", to_string(config.sampling));
}

/// Processes one anchor plan; returns the emitted event, if any.
std::optional<EventRecord> run_plan(Session& session, AnchorPlan& plan, const SamplingPlan& sampling,
                                    const VideoRecord& video, const PipelineConfig& config, Rng& rng) {
  const int n_obs = video.n_obs();
  const int tiles = config.n_adj * config.n_adj;
  const int draws = std::min<int>(config.effective_max_resamples(), static_cast<int>(plan.candidates.size()));
  const auto boxes = [&video](int f) { return hand_box_of(video, f); };

  for (int draw = 0; draw < draws && !plan.remaining.empty(); ++draw) {
    const int anchor = sample_anchor(plan, sampling.frame_speeds, config.lambda, rng);
    const AdjacentWindow window = adjacent_window(anchor, config.n_adj, n_obs, config.window_stride);

    cv::Mat pair;
    try {
      pair = boundary_pair(window, session.loader(), boxes, config.eps_w, config.eps_h, config.boundary_height);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::MissingHand) throw;
      session.note("missing_hand", plan.id, anchor, e.what());
      continue;
    }

    const std::string verdict_text = session.ask(Role::Discriminator, std::nullopt, 1, tiles, {pair},
                                                 {window.first(), window.last()});
    InteractionVerdict verdict = InteractionVerdict::Neither;
    try {
      verdict = std::get<InteractionVerdict>(parse_attribute(verdict_text).kind);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Unparseable) throw;
      session.note("unparseable_discriminator", plan.id, anchor, e.what());
    }
    if (verdict == InteractionVerdict::Neither) continue;
    const Attribute attribute =
        verdict == InteractionVerdict::Contact ? Attribute::Contact : Attribute::Separation;

    EventRecord event;
    event.anchor_plan_id = plan.id;
    event.anchor = anchor;
    event.attribute = attribute;
    event.window = window;
    event.resample_count = static_cast<int>(plan.consumed.size()) - 1;

    const GridImage grid = grid_image(window.frames, session.loader(), config.n_adj);
    const auto localize = [&](int round, std::vector<cv::Mat> images) {
      const std::string text = session.ask(Role::Localizer, attribute, round, tiles, std::move(images),
                                           window.frames);
      try {
        return window.frame_at(std::get<TileIndex>(parse_tile_index(text, tiles).kind).value);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Unparseable) throw;
        session.note("unparseable_localizer", plan.id, anchor,
                     fmt::format("round {}: {}; using the anchor tile", round, e.what()));
        event.low_confidence = true;
        return window.anchor();
      }
    };

    event.round1_time = localize(1, {grid.image});

    const std::string check_text =
        session.ask(Role::Checker, attribute, 1, tiles, {session.frame(event.round1_time)}, {event.round1_time});
    bool accepted = true;
    try {
      accepted = std::get<CheckVerdict>(parse_check(check_text).kind) == CheckVerdict::Accept;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Unparseable) throw;
      session.note("unparseable_checker", plan.id, event.round1_time,
                   fmt::format("{}; treating as accept", e.what()));
    }
    event.checker_accepted = accepted;
    event.final_time = event.round1_time;
    if (!accepted) {
      // Single feedback round: the second answer is taken as final.
      event.round2_time = localize(2, {grid.image, session.frame(event.round1_time)});
      event.final_time = *event.round2_time;
    }
    plan.resolved = true;
    return event;
  }

  if (!plan.resolved) {
    session.note("candidates_exhausted", plan.id, static_cast<int>(std::lround(plan.center_time)),
                 fmt::format("{} of {} candidates tried without a transition", plan.consumed.size(),
                             plan.candidates.size()));
  }
  return std::nullopt;
}

}  // namespace

bool TILResult::has_diagnostic(std::string_view code) const { return count_diagnostics(code) > 0; }

std::size_t TILResult::count_diagnostics(std::string_view code) const {
  return static_cast<std::size_t>(
      std::count_if(diagnostics.begin(), diagnostics.end(), [&](const Diagnostic& d) { return d.code == code; }));
}

std::string_view to_string(SamplingMode mode) noexcept {
  switch (mode) {
    case SamplingMode::Sass3d: return "sass3d";
    case SamplingMode::Sass2d: return "sass2d";
    case SamplingMode::Random: return "random";
  }
  return "unknown";
}

SamplingMode sampling_mode_from_string(std::string_view name) {
  if (name == "sass3d" || name == "sass-3d") return SamplingMode::Sass3d;
  if (name == "sass2d" || name == "sass-2d") return SamplingMode::Sass2d;
  if (name == "random") return SamplingMode::Random;
  throw Error(ErrorKind::Parse, fmt::format("unknown sampling mode '{}'", name));
}

void PipelineConfig::validate() const {
  SamplerConfig{n_ac, lambda, seed, n_adj}.validate();
  const auto require = [](bool ok, std::string message) {
    if (!ok) throw Error(ErrorKind::Config, std::move(message));
  };
  require(n_adj <= 4, fmt::format("n_adj must be in [2, 4], got {}", n_adj));
  require(max_resamples >= 0, "max_resamples must be >= 0");
  require(feedback_rounds == 1, "exactly one feedback round is supported");
  require(window_stride >= 1, "window_stride must be >= 1");
  require(eps_w >= 0 && eps_h >= 0, "hand box margins must be >= 0");
  require(boundary_height >= 0, "boundary_height must be >= 0");
  require(max_image_side >= 32, "max_image_side must be >= 32");
  require(temperature >= 0.0 && std::isfinite(temperature), "temperature must be finite and >= 0");
  require(max_tokens >= 1, "max_tokens must be >= 1");
  require(random_budget >= 0, "random_budget must be >= 0");
  if (dynamics) {
    require(dynamics->savgol_window >= 3 && dynamics->savgol_window % 2 == 1, "savgol window must be odd and >= 3");
    require(dynamics->savgol_order >= 0 && dynamics->savgol_order < dynamics->savgol_window,
            "savgol order must be below the window");
  }
}

std::string config_digest(const PipelineConfig& c) {
  // The seed is left out so all trials of one configuration share a digest.
  std::string text = fmt::format(
      "n_adj={};n_ac={};lambda={:.17g};max_resamples={};feedback_rounds={};window_stride={};eps={},{};"
      "boundary_height={};max_image_side={};temperature={:.17g};max_tokens={};sampling={};registration={};"
      "icp={:.17g},{},{:.17g},{:.17g},{:.17g},{};random_budget={};prompts={}",
      c.n_adj, c.n_ac, c.lambda, c.effective_max_resamples(), c.feedback_rounds, c.window_stride, c.eps_w,
      c.eps_h, c.boundary_height, c.max_image_side, c.temperature, c.max_tokens, to_string(c.sampling),
      c.registration == RegistrationMode::Icp ? "icp" : "identity", c.icp.voxel_size, c.icp.max_iterations,
      c.icp.convergence_rms_delta, c.icp.divergence_rms, c.icp.trim_ratio, c.icp.depth_stride, c.random_budget,
      prompt_template_version());
  if (c.dynamics) {
    text += fmt::format(";savgol={},{},{}", c.dynamics->savgol_window, c.dynamics->savgol_order,
                        static_cast<int>(c.dynamics->boundary));
  }
  return sha256_hex(text).substr(0, 16);
}

DynamicsProfile video_dynamics(const VideoRecord& video, const PipelineConfig& config,
                               std::vector<Diagnostic>* diagnostics) {
  const std::size_t n = static_cast<std::size_t>(video.n_obs());
  if (video.hand.size() != n) {
    throw Error(ErrorKind::LengthMismatch,
                fmt::format("{} hand observations for {} frames", video.hand.size(), n));
  }
  const DynamicsConfig dynamics = config.dynamics.value_or(DynamicsConfig::for_fps(video.fps));
  const std::vector<std::optional<Pixel>> wrist = video.wrist_pixels();

  if (config.sampling == SamplingMode::Sass2d) {
    const WristTrack track = pixel_track(wrist);
    return analyze_dynamics(track.cam_points, video.dt(), dynamics);
  }
  if (!video.has_depth()) {
    throw Error(ErrorKind::Config, fmt::format("video '{}' has no depth; 3D sampling needs depth", video.id));
  }
  const DepthSequence depth = video.depth_sequence();
  WristTrack track = lift_wrist_track(wrist, depth, video.intrinsics);
  const PoseSequence poses = config.registration == RegistrationMode::Icp
                                 ? register_frames(depth, video.intrinsics, config.icp)
                                 : identity_poses(n);
  if (diagnostics) {
    for (int f : poses.fallback_frames) {
      diagnostics->push_back({"registration_fallback", -1, f, "ICP diverged; previous pose reused"});
    }
    for (std::size_t t = 0; t < track.valid.size(); ++t) {
      if (!track.valid[t]) {
        diagnostics->push_back({"wrist_gap", -1, static_cast<int>(t + 1), "wrist position interpolated"});
      }
    }
  }
  track = to_global(std::move(track), poses);
  return analyze_dynamics(track.glob_points, video.dt(), dynamics);
}

SamplingPlan plan_anchors(const VideoRecord& video, const PipelineConfig& config) {
  config.validate();
  const int n_obs = video.n_obs();
  if (n_obs < 1) throw Error(ErrorKind::TooShort, fmt::format("video '{}' has no frames", video.id));

  SamplingPlan out;
  if (config.sampling == SamplingMode::Random) {
    // Same budget as the uniform fallback, candidates drawn uniformly over the video.
    const int budget = config.random_budget > 0 ? config.random_budget
                                                : static_cast<int>(fallback_uniform(n_obs, config.n_adj).size());
    Rng rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
    out.frame_speeds.assign(static_cast<std::size_t>(n_obs), 0.0);
    for (int i = 0; i < budget; ++i) {
      std::vector<int> pool(static_cast<std::size_t>(n_obs));
      std::iota(pool.begin(), pool.end(), 1);
      AnchorPlan plan;
      plan.id = i;
      const int take = std::min(config.n_ac, n_obs);
      for (int j = 0; j < take; ++j) {
        const int pick = rng.uniform_int(j, n_obs - 1);
        std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick)]);
        plan.candidates.push_back(pool[static_cast<std::size_t>(j)]);
      }
      std::sort(plan.candidates.begin(), plan.candidates.end());
      plan.center_time = plan.candidates[plan.candidates.size() / 2];
      plan.remaining = plan.candidates;
      out.plans.push_back(std::move(plan));
    }
    return out;
  }

  DynamicsProfile profile = video_dynamics(video, config, &out.diagnostics);
  out.frame_speeds = profile.speeds;
  if (profile.zero_accel_times.empty()) {
    out.used_fallback = true;
    const std::vector<int> anchors = fallback_uniform(n_obs, config.n_adj);
    out.diagnostics.push_back({"fallback_uniform", -1, 0,
                               fmt::format("no interior speed minimum; {} uniform anchors", anchors.size())});
    for (int a : anchors) {
      AnchorPlan plan = build_candidates(a, 1, n_obs);
      plan.id = static_cast<int>(out.plans.size());
      out.plans.push_back(std::move(plan));
    }
  } else {
    for (double t : profile.zero_accel_times) {
      AnchorPlan plan = build_candidates(t, config.n_ac, n_obs);
      plan.id = static_cast<int>(out.plans.size());
      out.plans.push_back(std::move(plan));
    }
  }
  out.profile = std::move(profile);
  return out;
}

TILResult localize_video(const VideoRecord& video, const PipelineConfig& config, VlmGateway& gateway) {
  config.validate();
  TILResult result;
  result.info = {video.id, video.n_obs(), mode_name(config), config.seed, 0, config_digest(config)};
  result.ground_truth = video.ground_truth;

  SamplingPlan sampling = plan_anchors(video, config);
  result.diagnostics = sampling.diagnostics;
  const int tiles = config.n_adj * config.n_adj;
  const int span = config.window_stride * (tiles - 1) + 1;
  if (span > video.n_obs()) {
    throw Error(ErrorKind::WindowTooLarge,
                fmt::format("video '{}' has {} frames; the adjacent window needs {}", video.id, video.n_obs(), span));
  }

  Session session(video, config, gateway, result);
  Rng rng(config.seed);
  std::vector<int> resolved;
  try {
    for (AnchorPlan& plan : sampling.plans) {
      const int center = static_cast<int>(std::lround(plan.center_time));
      const auto near = std::find_if(resolved.begin(), resolved.end(),
                                     [&](int t) { return std::abs(t - center) < tiles; });
      if (near != resolved.end()) {
        session.note("proximity_skip", plan.id, center,
                     fmt::format("within {} frames of the event at frame {}", tiles, *near));
        continue;
      }
      std::optional<EventRecord> event = run_plan(session, plan, sampling, video, config, rng);
      if (!event) continue;
      std::vector<int>& times = times_for(result, event->attribute);
      if (std::find(times.begin(), times.end(), event->final_time) != times.end()) {
        session.note("duplicate_event", plan.id, event->final_time,
                     fmt::format("{} at frame {} already reported", to_string(event->attribute), event->final_time));
        continue;
      }
      times.push_back(event->final_time);
      resolved.push_back(event->final_time);
      result.events.push_back(std::move(*event));
    }
  } catch (const BackendFailure& failure) {
    result.partial = true;
    session.note("backend_failure", -1, 0, failure.message);
  }
  finalize(result);
  return result;
}

std::vector<TILResult> run_trials(const VideoRecord& video, const PipelineConfig& config, VlmGateway& gateway,
                                  int trials) {
  if (trials < 1) throw Error(ErrorKind::Config, "trials must be >= 1");
  std::vector<TILResult> results;
  for (int trial = 0; trial < trials; ++trial) {
    PipelineConfig trial_config = config;
    trial_config.seed = config.seed + static_cast<std::uint64_t>(trial);
    TILResult result = localize_video(video, trial_config, gateway);
    result.info.trial = trial;
    results.push_back(std::move(result));
  }
  return results;
}

std::vector<int> greedy_frames(int n_obs, int n_adj) {
  if (n_obs < 1) throw Error(ErrorKind::TooShort, "video has no frames");
  if (n_adj < 1) throw Error(ErrorKind::Config, "n_adj must be positive");
  const int tiles = n_adj * n_adj;
  const int stride = (n_obs + tiles - 1) / tiles;
  std::vector<int> frames;
  for (int f = 1; f <= n_obs && static_cast<int>(frames.size()) < tiles; f += stride) frames.push_back(f);
  return frames;
}

TILResult greedy_vlm(const VideoRecord& video, const PipelineConfig& config, VlmGateway& gateway) {
  config.validate();
  TILResult result;
  result.info = {video.id, video.n_obs(), "greedy", config.seed, 0, config_digest(config)};
  result.ground_truth = video.ground_truth;

  const std::vector<int> frames = greedy_frames(video.n_obs(), config.n_adj);
  Session session(video, config, gateway, result);
  const GridImage grid = grid_image(frames, session.loader(), config.n_adj);
  const int n_tiles = static_cast<int>(frames.size());
  AdjacentWindow window{frames, 1};

  try {
    for (Attribute attribute : {Attribute::Contact, Attribute::Separation}) {
      const std::string text = session.ask(Role::Localizer, attribute, 1, n_tiles, {grid.image}, frames);
      int tile = 0;
      try {
        tile = std::get<TileIndex>(parse_tile_index(text, n_tiles).kind).value;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Unparseable) throw;
        session.note("unparseable_localizer", -1, 0, e.what());
        continue;
      }
      EventRecord event;
      event.attribute = attribute;
      event.window = window;
      event.anchor = window.anchor();
      event.round1_time = window.frame_at(tile);
      event.final_time = event.round1_time;
      times_for(result, attribute).push_back(event.final_time);
      result.events.push_back(std::move(event));
    }
  } catch (const BackendFailure& failure) {
    result.partial = true;
    session.note("backend_failure", -1, 0, failure.message);
  }
  finalize(result);
  return result;
}

TILResult threshold_from_distances(std::span<const double> distances, double threshold) {
  if (!(threshold > 0.0) || !std::isfinite(threshold)) {
    throw Error(ErrorKind::Config, fmt::format("threshold must be positive, got {}", threshold));
  }
  TILResult result;
  result.info.n_obs = static_cast<int>(distances.size());
  result.info.mode = "threshold";
  // 1.1 * 3.0 is 3.3000000000000003 in binary; allow one part in 1e12 so 3.3 releases.
  const double release = 1.1 * threshold * (1.0 - 1e-12);
  bool in_contact = false;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const double d = distances[i];
    if (!std::isfinite(d)) throw Error(ErrorKind::Config, fmt::format("distance at frame {} is not finite", i + 1));
    const int frame = static_cast<int>(i + 1);
    std::optional<Attribute> attribute;
    if (!in_contact && d < threshold) {
      attribute = Attribute::Contact;
    } else if (in_contact && d >= release) {
      attribute = Attribute::Separation;
    }
    if (!attribute) continue;
    in_contact = !in_contact;
    EventRecord event;
    event.anchor = frame;
    event.attribute = *attribute;
    event.window = AdjacentWindow{{frame}, 1};
    event.round1_time = frame;
    event.final_time = frame;
    times_for(result, *attribute).push_back(frame);
    result.events.push_back(std::move(event));
  }
  return result;
}

TILResult threshold_baseline(std::span<const Eigen::Vector3d> index_tips, std::span<const Eigen::Vector3d> thumb_tips,
                             double threshold) {
  if (index_tips.empty() || thumb_tips.empty()) throw Error(ErrorKind::MissingHand, "fingertip tracks are empty");
  if (index_tips.size() != thumb_tips.size()) {
    throw Error(ErrorKind::LengthMismatch,
                fmt::format("{} index-tip points but {} thumb-tip points", index_tips.size(), thumb_tips.size()));
  }
  std::vector<double> distances(index_tips.size());
  for (std::size_t i = 0; i < distances.size(); ++i) distances[i] = (index_tips[i] - thumb_tips[i]).norm();
  return threshold_from_distances(distances, threshold);
}

TILResult threshold_baseline(const VideoRecord& video, double threshold) {
  const std::size_t n = static_cast<std::size_t>(video.n_obs());
  if (video.hand.size() != n) {
    throw Error(ErrorKind::LengthMismatch, fmt::format("{} hand observations for {} frames", video.hand.size(), n));
  }
  std::vector<std::optional<Pixel>> index(n), thumb(n);
  for (std::size_t t = 0; t < n; ++t) {
    index[t] = video.hand[t].index_tip;
    thumb[t] = video.hand[t].thumb_tip;
  }
  const auto none = [](const auto& v) {
    return std::none_of(v.begin(), v.end(), [](const auto& p) { return p.has_value(); });
  };
  if (none(index) || none(thumb)) {
    throw Error(ErrorKind::MissingHand, fmt::format("video '{}' lacks index-tip or thumb-tip keypoints", video.id));
  }
  const DepthSequence depth = video.depth_sequence();
  const WristTrack index_track = lift_wrist_track(index, depth, video.intrinsics);
  const WristTrack thumb_track = lift_wrist_track(thumb, depth, video.intrinsics);
  TILResult result = threshold_baseline(index_track.cam_points, thumb_track.cam_points, threshold);
  result.info.video_id = video.id;
  result.info.config_digest = sha256_hex(fmt::format("threshold={:.17g}", threshold)).substr(0, 16);
  result.ground_truth = video.ground_truth;
  for (std::size_t t = 0; t < n; ++t) {
    if (!index_track.valid[t] || !thumb_track.valid[t]) {
      result.diagnostics.push_back({"fingertip_gap", -1, static_cast<int>(t + 1), "fingertip position interpolated"});
    }
  }
  return result;
}

}  // namespace til
