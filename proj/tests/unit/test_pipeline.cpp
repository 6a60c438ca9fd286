#include <gtest/gtest.h>

#include "synthetic.hpp"
#include "til/dataset_io.hpp"
#include "til/error.hpp"
#include "til/pipeline.hpp"

namespace {

using til::testing::SceneSpec;

til::PipelineConfig base_config() {
  til::PipelineConfig c;
  c.boundary_height = 64;
  return c;
}

struct Fixture {
  til::testing::SyntheticVideo synthetic;
  til::VideoRecord& video() { return synthetic.video; }
};

Fixture scene(SceneSpec spec, const std::string& name) {
  return {til::testing::make_synthetic_video(spec, til::testing::scratch_dir(name))};
}

SceneSpec one_valley() {
  SceneSpec spec;
  spec.id = "valley20";
  spec.n_frames = 40;
  spec.valleys = {20};
  spec.contacts = {20};
  return spec;
}

std::shared_ptr<til::ScriptedBackend> scripted(const std::string& json) {
  return std::make_shared<til::ScriptedBackend>(til::ScriptedBackend::from_json(json));
}

TEST(PlanAnchors, PlantedValleyBecomesOnePlan) {
  auto f = scene(one_valley(), "plan_valley");
  const auto plan = til::plan_anchors(f.video(), base_config());
  ASSERT_FALSE(plan.used_fallback);
  ASSERT_EQ(plan.plans.size(), 1u);
  EXPECT_NEAR(plan.plans[0].center_time, 20.0, 0.05);
  EXPECT_EQ(plan.plans[0].candidates, (std::vector<int>{18, 19, 20, 21, 22}));
  // Measured speeds reproduce the planned profile.
  for (std::size_t t = 0; t + 1 < plan.frame_speeds.size(); ++t) {
    EXPECT_NEAR(plan.frame_speeds[t], f.synthetic.planned_speeds[t], 1e-6) << t;
  }
}

TEST(PlanAnchors, FlatSpeedFallsBackToUniformAnchors) {
  SceneSpec spec;
  spec.n_frames = 40;
  spec.speeds.assign(40, 0.2);
  auto f = scene(spec, "plan_flat");
  auto config = base_config();
  config.registration = til::RegistrationMode::Identity;
  const auto plan = til::plan_anchors(f.video(), config);
  EXPECT_TRUE(plan.used_fallback);
  std::vector<int> anchors;
  for (const auto& p : plan.plans) {
    ASSERT_EQ(p.candidates.size(), 1u);
    anchors.push_back(p.candidates[0]);
  }
  EXPECT_EQ(anchors, til::fallback_uniform(40, 2));
  ASSERT_EQ(plan.diagnostics.size(), 1u);
  EXPECT_EQ(plan.diagnostics[0].code, "fallback_uniform");
}

TEST(PlanAnchors, RandomModeDrawsDistinctFramesPerPlan) {
  auto f = scene(one_valley(), "plan_random");
  auto config = base_config();
  config.sampling = til::SamplingMode::Random;
  const auto a = til::plan_anchors(f.video(), config);
  ASSERT_EQ(a.plans.size(), til::fallback_uniform(40, 2).size());
  for (const auto& p : a.plans) {
    ASSERT_EQ(p.candidates.size(), 5u);
    EXPECT_TRUE(std::is_sorted(p.candidates.begin(), p.candidates.end()));
    EXPECT_EQ(std::adjacent_find(p.candidates.begin(), p.candidates.end()), p.candidates.end());
    EXPECT_GE(p.candidates.front(), 1);
    EXPECT_LE(p.candidates.back(), 40);
  }
  EXPECT_EQ(til::plan_anchors(f.video(), config).plans[3].candidates, a.plans[3].candidates);
  config.seed = 1;
  bool differs = false;
  const auto b = til::plan_anchors(f.video(), config);
  for (std::size_t i = 0; i < a.plans.size(); ++i) differs |= a.plans[i].candidates != b.plans[i].candidates;
  EXPECT_TRUE(differs);
}

TEST(PlanAnchors, PixelModeNeedsNoDepth) {
  auto spec = one_valley();
  spec.with_depth = false;
  auto f = scene(spec, "plan_2d");
  auto config = base_config();
  config.sampling = til::SamplingMode::Sass2d;
  const auto plan = til::plan_anchors(f.video(), config);
  ASSERT_EQ(plan.plans.size(), 1u);
  EXPECT_NEAR(plan.plans[0].center_time, 20.0, 0.05);
}

TEST(Localize, MissingDepthIsConfigError) {
  auto spec = one_valley();
  spec.with_depth = false;
  auto f = scene(spec, "no_depth");
  til::VlmGateway gateway(scripted("{}"));
  try {
    til::localize_video(f.video(), base_config(), gateway);
    FAIL();
  } catch (const til::Error& e) {
    EXPECT_EQ(e.kind(), til::ErrorKind::Config);
  }
}

TEST(Localize, ScriptedContactAtAnchor) {
  auto f = scene(one_valley(), "scripted_contact");
  auto config = base_config();
  config.lambda = 1000.0;  // the valley floor frame wins the draw
  til::VlmGateway gateway(scripted(R"({"discriminator": ["Answer: contact"], "localizer": ["Answer: 2"],
                                       "checker": ["Answer: Yes"]})"));
  const auto result = til::localize_video(f.video(), config, gateway);
  EXPECT_EQ(result.contacts, std::vector<int>{20});
  EXPECT_TRUE(result.separations.empty());
  ASSERT_EQ(result.events.size(), 1u);
  const auto& e = result.events[0];
  EXPECT_EQ(e.anchor, 20);
  EXPECT_EQ(e.window.frames, (std::vector<int>{19, 20, 21, 22}));
  EXPECT_EQ(e.checker_accepted, true);
  EXPECT_FALSE(e.round2_time.has_value());
  EXPECT_EQ(e.resample_count, 0);
  EXPECT_EQ(gateway.call_count(), 3u);
  EXPECT_FALSE(result.partial);
  EXPECT_EQ(result.info.mode, "egoloc");
}

TEST(Localize, RejectTriggersSecondRound) {
  auto f = scene(one_valley(), "scripted_reject");
  auto config = base_config();
  config.n_ac = 1;
  til::VlmGateway gateway(scripted(R"({"discriminator": ["contact"], "localizer": ["2", "3"],
                                       "checker": ["there is a gap, so No."]})"));
  const auto result = til::localize_video(f.video(), config, gateway);
  ASSERT_EQ(result.events.size(), 1u);
  const auto& e = result.events[0];
  EXPECT_EQ(e.window.frames, (std::vector<int>{19, 20, 21, 22}));
  EXPECT_EQ(e.round1_time, 20);
  EXPECT_EQ(e.checker_accepted, false);
  EXPECT_EQ(e.round2_time, 21);
  EXPECT_EQ(e.final_time, 21);
  EXPECT_EQ(result.contacts, std::vector<int>{21});

  const auto audit = gateway.audit();
  ASSERT_EQ(audit.size(), 4u);
  EXPECT_EQ(audit[3].role, til::Role::Localizer);
  EXPECT_EQ(audit[3].round, 2);
  EXPECT_EQ(audit[2].frames, std::vector<int>{20});
}

TEST(Localize, AllNeitherExhaustsCandidates) {
  auto f = scene(one_valley(), "scripted_neither");
  til::VlmGateway gateway(scripted(R"({"discriminator": ["neither", "Neither.", "neither", "neither", "neither"]})"));
  const auto result = til::localize_video(f.video(), base_config(), gateway);
  EXPECT_TRUE(result.contacts.empty());
  EXPECT_TRUE(result.events.empty());
  EXPECT_EQ(gateway.call_count(), 5u);
  ASSERT_EQ(result.count_diagnostics("candidates_exhausted"), 1u);
  for (const auto& d : result.diagnostics) {
    if (d.code == "candidates_exhausted") EXPECT_EQ(d.message.substr(0, 6), "5 of 5");
  }
}

TEST(Localize, ResampleAfterNeither) {
  auto f = scene(one_valley(), "scripted_resample");
  til::VlmGateway gateway(scripted(R"({"discriminator": ["neither", "neither", "contact"], "localizer": ["1"],
                                       "checker": ["Yes"]})"));
  const auto result = til::localize_video(f.video(), base_config(), gateway);
  ASSERT_EQ(result.events.size(), 1u);
  EXPECT_EQ(result.events[0].resample_count, 2);
  EXPECT_EQ(result.contacts, std::vector<int>{result.events[0].window.frames[0]});
}

TEST(Localize, UnparseableAnswersFallBack) {
  auto f = scene(one_valley(), "scripted_unparseable");
  auto config = base_config();
  config.n_ac = 1;
  til::VlmGateway gateway(scripted(R"({"discriminator": ["separation"], "localizer": ["I cannot tell"],
                                       "checker": ["hmm"]})"));
  const auto result = til::localize_video(f.video(), config, gateway);
  ASSERT_EQ(result.events.size(), 1u);
  EXPECT_TRUE(result.events[0].low_confidence);
  EXPECT_EQ(result.events[0].final_time, 20);  // anchor tile
  EXPECT_EQ(result.separations, std::vector<int>{20});
  EXPECT_TRUE(result.has_diagnostic("unparseable_localizer"));
  EXPECT_TRUE(result.has_diagnostic("unparseable_checker"));
}

TEST(Localize, BackendFailureYieldsPartialResult) {
  auto f = scene(one_valley(), "backend_down");
  til::VlmGateway gateway(std::make_shared<til::CallbackBackend>(
      [](const til::VlmRequest&, const til::CallContext&) -> std::string {
        throw til::Error(til::ErrorKind::BackendUnavailable, "VLM backend failed: offline");
      }));
  const auto result = til::localize_video(f.video(), base_config(), gateway);
  EXPECT_TRUE(result.partial);
  EXPECT_TRUE(result.has_diagnostic("backend_failure"));
  EXPECT_TRUE(result.events.empty());
}

SceneSpec two_events(int n_frames, int contact, int separation) {
  SceneSpec spec;
  spec.id = "two_events";
  spec.n_frames = n_frames;
  spec.valleys = {contact, separation};
  spec.contacts = {contact};
  spec.separations = {separation};
  return spec;
}

TEST(Localize, OracleRecoversPlantedEvents) {
  auto f = scene(two_events(60, 16, 44), "oracle");
  for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
    auto config = base_config();
    config.seed = seed;
    til::VlmGateway gateway(til::testing::oracle_backend(*f.video().ground_truth));
    const auto result = til::localize_video(f.video(), config, gateway);
    EXPECT_EQ(result.contacts, std::vector<int>{16}) << "seed " << seed;
    EXPECT_EQ(result.separations, std::vector<int>{44}) << "seed " << seed;
    for (const auto& e : result.events) EXPECT_EQ(e.checker_accepted, true);
  }
}

TEST(Localize, NearbyPlanIsSkippedAfterResolution) {
  SceneSpec spec;
  spec.n_frames = 40;
  spec.valleys = {18, 24};
  spec.contacts = {18};
  auto f = scene(spec, "proximity");
  auto config = base_config();
  config.n_adj = 3;  // valleys 6 frames apart, inside the 9-frame exclusion
  const auto plan = til::plan_anchors(f.video(), config);
  ASSERT_EQ(plan.plans.size(), 2u);
  til::VlmGateway gateway(til::testing::oracle_backend(*f.video().ground_truth));
  const auto result = til::localize_video(f.video(), config, gateway);
  EXPECT_EQ(result.contacts, std::vector<int>{18});
  EXPECT_EQ(result.count_diagnostics("proximity_skip"), 1u);
}

TEST(Localize, SameSeedSameBytes) {
  auto f = scene(two_events(60, 16, 44), "determinism");
  const auto run = [&] {
    til::VlmGateway gateway(til::testing::oracle_backend(*f.video().ground_truth));
    auto config = base_config();
    config.seed = 42;
    return til::result_to_json(til::localize_video(f.video(), config, gateway));
  };
  EXPECT_EQ(run(), run());
}

TEST(Localize, TrialsShareDigestAndAdvanceSeed) {
  auto f = scene(one_valley(), "trials");
  til::VlmGateway gateway(til::testing::oracle_backend(*f.video().ground_truth));
  auto config = base_config();
  config.seed = 10;
  const auto results = til::run_trials(f.video(), config, gateway, 3);
  ASSERT_EQ(results.size(), 3u);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(results[static_cast<std::size_t>(i)].info.trial, i);
    EXPECT_EQ(results[static_cast<std::size_t>(i)].info.seed, 10u + static_cast<std::uint64_t>(i));
    EXPECT_EQ(results[static_cast<std::size_t>(i)].info.config_digest, results[0].info.config_digest);
    EXPECT_EQ(results[static_cast<std::size_t>(i)].contacts, std::vector<int>{20});
  }
}

TEST(Localize, WindowLargerThanVideo) {
  SceneSpec spec;
  spec.n_frames = 12;
  spec.valleys = {6};
  auto f = scene(spec, "short");
  auto config = base_config();
  config.n_adj = 4;
  til::VlmGateway gateway(scripted("{}"));
  try {
    til::localize_video(f.video(), config, gateway);
    FAIL();
  } catch (const til::Error& e) {
    EXPECT_EQ(e.kind(), til::ErrorKind::WindowTooLarge);
  }
}

TEST(PipelineConfig, ValidationAndDigest) {
  auto c = base_config();
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.n_adj = 5;
  EXPECT_THROW(bad.validate(), til::Error);
  bad = c;
  bad.feedback_rounds = 2;
  EXPECT_THROW(bad.validate(), til::Error);
  bad = c;
  bad.dynamics = til::DynamicsConfig{6, 2};
  EXPECT_THROW(bad.validate(), til::Error);

  auto other = c;
  other.seed = 99;
  EXPECT_EQ(til::config_digest(other), til::config_digest(c));
  other.lambda = 2.0;
  EXPECT_NE(til::config_digest(other), til::config_digest(c));
  EXPECT_EQ(til::config_digest(c).size(), 16u);
}

TEST(SamplingMode, Names) {
  EXPECT_EQ(til::sampling_mode_from_string("sass-2d"), til::SamplingMode::Sass2d);
  EXPECT_EQ(til::to_string(til::SamplingMode::Random), "random");
  EXPECT_THROW(til::sampling_mode_from_string("dense"), til::Error);
}

TEST(Greedy, FrameSelection) {
  std::vector<int> all(16);
  std::iota(all.begin(), all.end(), 1);
  EXPECT_EQ(til::greedy_frames(16, 4), all);
  std::vector<int> odd;
  for (int f = 1; f <= 31; f += 2) odd.push_back(f);
  EXPECT_EQ(til::greedy_frames(32, 4), odd);
  EXPECT_EQ(til::greedy_frames(10, 2), (std::vector<int>{1, 4, 7, 10}));
}

TEST(Greedy, ScriptedTilesMapToFrames) {
  SceneSpec spec;
  spec.n_frames = 32;
  spec.valleys = {10};
  auto f = scene(spec, "greedy");
  auto config = base_config();
  config.n_adj = 4;
  til::VlmGateway gateway(scripted(R"({"localizer": ["Answer: 5", "Answer: 12"]})"));
  const auto result = til::greedy_vlm(f.video(), config, gateway);
  EXPECT_EQ(result.contacts, std::vector<int>{9});
  EXPECT_EQ(result.separations, std::vector<int>{23});
  EXPECT_EQ(result.info.mode, "greedy");
  const auto audit = gateway.audit();
  ASSERT_EQ(audit.size(), 2u);
  EXPECT_EQ(audit[0].n_tiles, 16);
  EXPECT_EQ(audit[0].frames, til::greedy_frames(32, 4));
}

TEST(Threshold, CrossingWithHysteresis) {
  const std::vector<double> cm = {5, 4, 2, 1, 1, 4, 5};
  const auto r = til::threshold_from_distances(cm, 3.0);
  EXPECT_EQ(r.contacts, std::vector<int>{3});
  EXPECT_EQ(r.separations, std::vector<int>{6});
}

TEST(Threshold, HysteresisBandHoldsContact) {
  // 3.2 cm is above the threshold but below the 3.3 cm release level.
  const std::vector<double> cm = {5, 2, 3.2, 3.2, 2.5, 3.3};
  const auto r = til::threshold_from_distances(cm, 3.0);
  EXPECT_EQ(r.contacts, std::vector<int>{2});
  EXPECT_EQ(r.separations, std::vector<int>{6});
}

TEST(Threshold, AlwaysAboveOrBelow) {
  EXPECT_TRUE(til::threshold_from_distances(std::vector<double>(8, 5.0), 3.0).events.empty());
  const auto below = til::threshold_from_distances(std::vector<double>(8, 1.0), 3.0);
  EXPECT_EQ(below.contacts, std::vector<int>{1});
  EXPECT_TRUE(below.separations.empty());
}

TEST(Threshold, FromVideoFingertips) {
  SceneSpec spec;
  spec.n_frames = 7;
  spec.valleys = {4};
  spec.tip_distances = {0.05, 0.04, 0.02, 0.01, 0.01, 0.04, 0.05};
  auto f = scene(spec, "threshold_video");
  const auto r = til::threshold_baseline(f.video(), 0.03);
  EXPECT_EQ(r.contacts, std::vector<int>{3});
  EXPECT_EQ(r.separations, std::vector<int>{6});

  auto bare = scene(one_valley(), "threshold_bare");
  try {
    til::threshold_baseline(bare.video(), 0.03);
    FAIL();
  } catch (const til::Error& e) {
    EXPECT_EQ(e.kind(), til::ErrorKind::MissingHand);
  }
}

}  // namespace
