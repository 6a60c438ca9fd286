#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include <Eigen/Geometry>

#include "til/registration.hpp"

namespace {

using til::PointCloud;

constexpr double kDeg = M_PI / 180.0;

/// Points scattered through an anisotropic slab so every rigid motion is observable.
PointCloud slab_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> x(-0.5, 0.5), y(-0.3, 0.3), z(0.8, 1.1);
  PointCloud cloud(n);
  for (auto& p : cloud) p = {x(gen), y(gen), z(gen)};
  return cloud;
}

PointCloud transformed(const Eigen::Isometry3d& pose, const PointCloud& cloud) {
  PointCloud out;
  out.reserve(cloud.size());
  for (const auto& p : cloud) out.push_back(pose * p);
  return out;
}

double angle_deg(const Eigen::Matrix3d& r) { return Eigen::AngleAxisd(r).angle() / kDeg; }

TEST(Kabsch, RecoversExactTransformFromCorrespondences) {
  const PointCloud source = slab_cloud(200, 1);
  Eigen::Isometry3d truth = Eigen::Isometry3d::Identity();
  truth.rotate(Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 3).normalized()));
  truth.pretranslate(Eigen::Vector3d(0.1, -0.2, 0.05));
  const Eigen::Isometry3d estimate = til::kabsch(source, transformed(truth, source));
  EXPECT_LT((estimate.matrix() - truth.matrix()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(VoxelDownsample, KeepsOnePointPerOccupiedVoxel) {
  const PointCloud cloud = {{0.001, 0.001, 0.001}, {0.002, 0.003, 0.004}, {0.015, 0.0, 0.0}, {-0.001, 0.0, 0.0}};
  const PointCloud kept = til::voxel_downsample(cloud, 0.01);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0], cloud[0]);  // first point of its voxel wins
  EXPECT_EQ(kept[1], cloud[2]);
  EXPECT_EQ(kept[2], cloud[3]);
}

TEST(RegisterSequence, IdenticalStaticCloudsGiveIdentity) {
  const PointCloud cloud = slab_cloud(3000, 2);
  const auto poses = til::register_cloud_sequence(std::vector<PointCloud>{cloud, cloud, cloud});
  ASSERT_EQ(poses.size(), 3u);
  for (const auto& pose : poses.transforms) {
    EXPECT_LT((pose.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(), 1e-6);
  }
  EXPECT_TRUE(poses.fallback_frames.empty());
}

TEST(RegisterSequence, TranslatedSecondFrameMapsBack) {
  const PointCloud first = slab_cloud(10000, 3);
  Eigen::Isometry3d shift = Eigen::Isometry3d::Identity();
  shift.translate(Eigen::Vector3d(0.1, 0.0, 0.0));
  const auto poses = til::register_cloud_sequence(std::vector<PointCloud>{first, transformed(shift, first)});
  const Eigen::Vector3d t = poses.transforms[1].translation();
  EXPECT_NEAR(t.x(), -0.1, 1e-4);
  EXPECT_NEAR(t.y(), 0.0, 1e-4);
  EXPECT_NEAR(t.z(), 0.0, 1e-4);
  EXPECT_LT(angle_deg(poses.transforms[1].rotation()), 0.1);
}

TEST(RegisterClouds, RecoversFiveDegreeYaw) {
  const PointCloud target = slab_cloud(10000, 4);
  Eigen::Isometry3d yaw = Eigen::Isometry3d::Identity();
  yaw.rotate(Eigen::AngleAxisd(5.0 * kDeg, Eigen::Vector3d::UnitZ()));
  const til::IcpResult result = til::register_clouds(transformed(yaw, target), target);
  // The estimate undoes the yaw, so composing both leaves the identity.
  EXPECT_LT(angle_deg((result.transform * yaw).rotation()), 0.1);
  EXPECT_NEAR(angle_deg(result.transform.rotation()), 5.0, 0.1);
}

TEST(RegisterClouds, RandomRigidMotionsWithinBounds) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 3; ++trial) {
    const PointCloud target = slab_cloud(10000, 100 + static_cast<std::uint64_t>(trial));
    Eigen::Vector3d axis(unit(gen), unit(gen), unit(gen));
    Eigen::Vector3d offset(unit(gen), unit(gen), unit(gen));
    Eigen::Isometry3d motion = Eigen::Isometry3d::Identity();
    motion.rotate(Eigen::AngleAxisd(10.0 * kDeg * std::abs(unit(gen)), axis.normalized()));
    motion.pretranslate(offset.normalized() * 0.3 * std::abs(unit(gen)));
    const til::IcpResult result = til::register_clouds(transformed(motion, target), target);
    const Eigen::Isometry3d residual = result.transform * motion;
    EXPECT_LT(residual.translation().norm(), 1e-4) << "trial " << trial;
    EXPECT_LT(angle_deg(residual.rotation()), 0.1) << "trial " << trial;
  }
}

TEST(RegisterSequence, DivergentPairFallsBackToPreviousPose) {
  const PointCloud cloud = slab_cloud(2000, 5);
  PointCloud unrelated;
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> wide(-20.0, 20.0);
  for (int i = 0; i < 2000; ++i) unrelated.emplace_back(wide(gen), wide(gen), 30.0 + wide(gen));
  const auto poses = til::register_cloud_sequence(std::vector<PointCloud>{cloud, cloud, unrelated});
  ASSERT_EQ(poses.fallback_frames.size(), 1u);
  EXPECT_EQ(poses.fallback_frames.front(), 3);
  EXPECT_TRUE(poses.transforms[2].isApprox(poses.transforms[1]));
}

TEST(Orthonormalize, ProjectsOntoRotations) {
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  pose.linear() = Eigen::AngleAxisd(0.4, Eigen::Vector3d::UnitY()).toRotationMatrix();
  pose.linear()(0, 1) += 1e-3;
  const Eigen::Matrix3d r = til::orthonormalize(pose).linear();
  EXPECT_LT((r.transpose() * r - Eigen::Matrix3d::Identity()).norm(), 1e-12);
  EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
}

TEST(IdentityPoses, HasRequestedLength) {
  const auto poses = til::identity_poses(4);
  EXPECT_EQ(poses.size(), 4u);
  EXPECT_EQ(poses.residuals.size(), 4u);
}

}  // namespace
