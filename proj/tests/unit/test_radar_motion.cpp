// Copyright 2026, dflow contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include <Eigen/Geometry>

#include "../common/oracles.hpp"
#include "dflow/radar/radar_motion.hpp"
#include "dflow/synth/scene.hpp"

namespace dflow::radar {
namespace {

EgoState ego_with(const Mat3& rotation, const Vec3& v_ego, const Vec3& translation = Vec3::Zero()) {
  EgoState ego;
  ego.v_ego = v_ego;
  SensorExtrinsic ext;
  ext.rotation = rotation;
  ext.translation = translation;
  ego.sensor_extrinsics = {ext};
  return ego;
}

RadarPoint radar_at(const Vec3& p, double v_meas, int sensor = 0) {
  RadarPoint r;
  r.position = p;
  r.v_meas = v_meas;
  r.sensor_id = sensor;
  return r;
}

CompensatedRadarPoint comp_point(const Vec3& p, const Vec3& vel) {
  CompensatedRadarPoint c;
  c.base.position = p;
  c.v_comp_vec = vel;
  c.v_comp = vel.norm();
  c.u = vel.norm() > 0 ? Vec3(vel.normalized()) : Vec3(Vec3::UnitX());
  return c;
}

TEST(CompensateDoppler, StaticTargetAheadOfForwardEgo) {
  const auto c = compensate_doppler(radar_at({20, 0, 0}, -10.0), ego_with(Mat3::Identity(), {10, 0, 0}));
  EXPECT_NEAR(c.v_comp, 0.0, 1e-12);
  EXPECT_TRUE(c.u.isApprox(Vec3::UnitX()));
}

TEST(CompensateDoppler, OrthogonalLineOfSight) {
  const auto c = compensate_doppler(radar_at({0, 7, 0}, 2.5), ego_with(Mat3::Identity(), {10, 0, 0}));
  EXPECT_NEAR(c.v_comp, 2.5, 1e-12);
}

TEST(CompensateDoppler, RotatedSensor) {
  // ego -> sensor rotation maps (10,0,0) to (0,10,0)
  const Mat3 R = Eigen::AngleAxisd(M_PI / 2.0, Vec3::UnitZ()).toRotationMatrix();
  ASSERT_TRUE((R * Vec3(10, 0, 0)).isApprox(Vec3(0, 10, 0)));
  const Vec3 p_sensor(6.0, 8.0, 0.0);
  const Vec3 p_ego = R.transpose() * p_sensor;
  const auto c = compensate_doppler(radar_at(p_ego, -3.0), ego_with(R, {10, 0, 0}));
  EXPECT_NEAR(c.u.x(), 0.6, 1e-12);
  EXPECT_NEAR(c.u.y(), 0.8, 1e-12);
  EXPECT_NEAR(c.v_comp, -3.0 + 0.8 * 10.0, 1e-12);
  EXPECT_NEAR(c.u.norm(), 1.0, 1e-9);
}

TEST(CompensateDoppler, LineOfSightUsesSensorOrigin) {
  // sensor 2 m ahead of the ego origin: translation = -R * origin
  const Vec3 origin(2, 0, 0);
  const auto c = compensate_doppler(radar_at({2, 5, 0}, 0.0), ego_with(Mat3::Identity(), {10, 0, 0}, -origin));
  EXPECT_TRUE(c.u.isApprox(Vec3::UnitY()));
  EXPECT_NEAR(c.v_comp, 0.0, 1e-12);
}

TEST(CompensateDoppler, RejectsReturnAtSensorOriginAndUnknownSensor) {
  const Vec3 origin(2, 0, 0);
  EXPECT_THROW(compensate_doppler(radar_at(origin, 1.0), ego_with(Mat3::Identity(), {}, -origin)), DataError);
  EXPECT_THROW(compensate_doppler(radar_at({5, 0, 0}, 1.0, 3), ego_with(Mat3::Identity(), {})), DataError);
}

TEST(ClassifyDynamic, StrictThreshold) {
  std::vector<CompensatedRadarPoint> pts(4);
  pts[0].v_comp = 0.06;
  pts[1].v_comp = 0.05;
  pts[2].v_comp = -0.06;
  pts[3].v_comp = -0.05;
  EXPECT_EQ(classify_dynamic(pts, 0.05), (std::vector<std::size_t>{0, 2}));
  std::vector<CompensatedRadarPoint> still(5);
  EXPECT_TRUE(classify_dynamic(still, 0.05).empty());
}

TEST(Ccl, TwoCloseConsistentPointsJoin) {
  std::vector<CompensatedRadarPoint> pts = {comp_point({0, 0, 0}, {5, 0, 0}), comp_point({2, 0, 0}, {5.5, 0, 0})};
  const std::vector<std::size_t> idx = {0, 1};
  EXPECT_EQ(ccl_cluster(pts, idx, 3.0, 1.5).size(), 1u);
}

TEST(Ccl, DistantPointsSplit) {
  std::vector<CompensatedRadarPoint> pts = {comp_point({0, 0, 0}, {5, 0, 0}), comp_point({4, 0, 0}, {5, 0, 0})};
  const std::vector<std::size_t> idx = {0, 1};
  EXPECT_EQ(ccl_cluster(pts, idx, 3.0, 1.5).size(), 2u);
}

TEST(Ccl, ChainIsTransitive) {
  std::vector<CompensatedRadarPoint> pts = {comp_point({0, 0, 0}, {5, 0, 0}), comp_point({2.5, 0, 0}, {5, 0, 0}),
                                            comp_point({5, 0, 0}, {5, 0, 0})};
  const std::vector<std::size_t> idx = {0, 1, 2};
  const auto clusters = ccl_cluster(pts, idx, 3.0, 1.5);
  ASSERT_EQ(clusters.size(), 1u);
  EXPECT_EQ(clusters[0].member_indices, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Ccl, MatchesTransitiveClosureOracle) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 1 + rng() % 200;
    const double extent = 5.0 + static_cast<double>(rng() % 40);
    std::uniform_real_distribution<double> u(-extent, extent);
    std::uniform_real_distribution<double> uv(-4.0, 4.0);
    std::vector<CompensatedRadarPoint> pts;
    std::vector<Vec3> pos, vel;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = u(rng);
      const double y = u(rng);
      const double vx = uv(rng);
      const double vy = uv(rng);
      pos.emplace_back(x, y, 0.5);
      vel.emplace_back(vx, vy, 0.0);
      pts.push_back(comp_point(pos.back(), vel.back()));
    }
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (rng() % 4 != 0) idx.push_back(i);
    oracle::Partition got;
    for (const auto& c : ccl_cluster(pts, idx, 3.0, 1.5)) got.push_back(c.member_indices);
    EXPECT_EQ(oracle::canonical(got), oracle::ccl(pos, vel, idx, 3.0, 1.5)) << "trial " << trial;
  }
}

TEST(Ccl, PartitionIsPermutationInvariant) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> u(-15.0, 15.0);
  std::vector<CompensatedRadarPoint> pts;
  for (int i = 0; i < 120; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    const double v = u(rng) / 5.0;
    pts.push_back(comp_point({x, y, 0}, {v, 0, 0}));
  }
  std::vector<std::size_t> idx(pts.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto a = ccl_cluster(pts, idx, 3.0, 1.5);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto b = ccl_cluster(pts, idx, 3.0, 1.5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(a[k].member_indices, b[k].member_indices);
}

TEST(BoundedLsq, OrthonormalDirectionsInvertExactly) {
  Eigen::MatrixX3d A = Eigen::MatrixX3d::Identity(3, 3);
  Eigen::VectorXd b(3);
  b << 3, -1, 2;
  const auto r = solve_bounded_least_squares(A, b, 60.0);
  EXPECT_TRUE(r.x.isApprox(Vec3(3, -1, 2), 1e-14));
  EXPECT_NEAR(r.rms_residual, 0.0, 1e-14);
  EXPECT_FALSE(r.rank_deficient);
}

TEST(BoundedLsq, SingleRowIsMinimumNorm) {
  Eigen::MatrixX3d A(1, 3);
  A << 1, 0, 0;
  Eigen::VectorXd b(1);
  b << 5;
  const auto r = solve_bounded_least_squares(A, b, 60.0);
  EXPECT_TRUE(r.x.isApprox(Vec3(5, 0, 0), 1e-14));
  EXPECT_TRUE(r.rank_deficient);
}

TEST(BoundedLsq, SingleRowBoundActive) {
  Eigen::MatrixX3d A(1, 3);
  A << 1, 0, 0;
  Eigen::VectorXd b(1);
  b << 80;
  const auto r = solve_bounded_least_squares(A, b, 60.0);
  // 1-D projection of the unconstrained optimum 80 onto [-60, 60]
  EXPECT_EQ(r.x, Vec3(60, 0, 0));
  EXPECT_NEAR(r.rms_residual, 20.0, 1e-12);
}

TEST(BoundedLsq, RankDeficientPicksMinimumNormMinimizer) {
  Eigen::MatrixX3d A(2, 3);
  A << 1, 1, 0, 1, 1, 0;
  A /= std::sqrt(2.0);
  Eigen::VectorXd b(2);
  b << std::sqrt(2.0), std::sqrt(2.0);
  const auto r = solve_bounded_least_squares(A, b, 60.0);
  EXPECT_TRUE(r.rank_deficient);
  EXPECT_NEAR((r.x - Vec3(1, 1, 0)).norm(), 0.0, 1e-12);
}

TEST(BoundedLsq, RandomDirectionsRecoverTruth) {
  std::mt19937_64 rng(33);
  Eigen::MatrixX3d A(10, 3);
  for (int j = 0; j < 10; ++j) A.row(j) = oracle::random_unit(rng).transpose();
  const Vec3 truth(12, -3, 0);
  const Eigen::VectorXd b = A * truth;
  const auto r = solve_bounded_least_squares(A, b, 60.0);
  EXPECT_LT((r.x - truth).norm(), 1e-6);
}

TEST(BoundedLsq, InteriorAgreesWithNormalEquations) {
  std::mt19937_64 rng(34);
  std::normal_distribution<double> noise(0.0, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 15);
    Eigen::MatrixX3d A(n, 3);
    Eigen::VectorXd b(n);
    for (int j = 0; j < n; ++j) {
      A.row(j) = oracle::random_unit(rng).transpose();
      b[j] = 10.0 * noise(rng);
    }
    const Mat3 H = A.transpose() * A;
    const Vec3 normal = H.ldlt().solve(A.transpose() * b);
    if (normal.cwiseAbs().maxCoeff() > 59.0) continue;
    const auto r = solve_bounded_least_squares(A, b, 60.0);
    EXPECT_LT((r.x - normal).norm(), 1e-9 * std::max(1.0, normal.norm())) << "trial " << trial;
  }
}

TEST(BoundedLsq, BoxActiveMatchesProjectedGradientOracle) {
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> big(-150.0, 150.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 3 + static_cast<int>(rng() % 10);
    Eigen::MatrixX3d A(n, 3);
    Eigen::VectorXd b(n);
    for (int j = 0; j < n; ++j) {
      A.row(j) = oracle::random_unit(rng).transpose();
      b[j] = big(rng);
    }
    const auto r = solve_bounded_least_squares(A, b, 60.0);
    const Vec3 ref = oracle::projected_gradient_lsq(A, b, 60.0, 20000);
    const double f_got = (A * r.x - b).squaredNorm();
    const double f_ref = (A * ref - b).squaredNorm();
    EXPECT_LE(r.x.cwiseAbs().maxCoeff(), 60.0);
    EXPECT_LE(f_got, f_ref + 1e-9 * std::max(1.0, f_ref)) << "trial " << trial;
  }
}

TEST(BoundedLsq, ConsistentRowsKeepResidualZero) {
  std::mt19937_64 rng(36);
  const Vec3 truth(-7, 4, 1.5);
  Eigen::MatrixX3d A(20, 3);
  for (int j = 0; j < 20; ++j) A.row(j) = oracle::random_unit(rng).transpose();
  const Eigen::VectorXd b = A * truth;
  for (int n = 3; n <= 20; ++n) {
    const auto r = solve_bounded_least_squares(A.topRows(n), b.head(n), 60.0);
    EXPECT_LE(r.rms_residual, 1e-9) << "rows " << n;
  }
}

TEST(EstimateRadarMotion, NoDynamicPoints) {
  std::vector<RadarPoint> radar = {radar_at({20, 0, 0}, -10.0), radar_at({30, 3, 0}, -10.0 * 30 / std::hypot(30, 3))};
  const auto m = estimate_radar_motion(radar, ego_with(Mat3::Identity(), {10, 0, 0}), PipelineConfig{});
  EXPECT_TRUE(m.dynamic_indices.empty());
  EXPECT_TRUE(m.clusters.empty());
}

synth::SceneSpec two_mover_scene() {
  auto spec = synth::preset_scene("highway-5-movers");
  spec.name = "two-movers";
  spec.ego_velocity = Vec3(10, 0, 0);
  spec.bodies.clear();
  synth::RigidBody a;
  a.center = Vec3(20, 4, 1.25);
  a.extents = Vec3(4.5, 1.8, 1.5);
  a.velocity = Vec3(15, 0, 0);
  synth::RigidBody b = a;
  b.center = Vec3(30, -6, 1.25);
  b.velocity = Vec3(-8, 2, 0);
  spec.bodies = {a, b};
  return spec;
}

TEST(EstimateRadarMotion, TwoRigidMoversRecovered) {
  const auto spec = two_mover_scene();
  const auto pair = synth::generate_frame_pair(spec);
  const auto m = estimate_radar_motion(pair.t.frame.radar, pair.t.frame.ego, PipelineConfig{});
  ASSERT_EQ(m.clusters.size(), 2u);
  for (const auto& c : m.clusters) {
    const int body = pair.t.radar_source[c.member_indices.front()];
    for (const auto i : c.member_indices) EXPECT_EQ(pair.t.radar_source[i], body);
    EXPECT_LT((c.v_full - spec.bodies[static_cast<std::size_t>(body)].velocity).norm(), 1e-6);
  }
  for (const auto i : m.dynamic_indices) EXPECT_NE(m.cluster_of[i], kNoCluster);
}

TEST(EstimateRadarMotion, FarGhostBecomesSingleton) {
  const auto spec = two_mover_scene();
  auto frame = synth::generate_frame_pair(spec).t.frame;
  std::size_t source = 0;
  for (std::size_t i = 0; i < frame.radar.size(); ++i)
    if (frame.radar[i].position.y() > 2.0) source = i;
  frame.radar.push_back(synth::mirror_ghost(frame.radar[source], 25.0, -1.0));
  const auto m = estimate_radar_motion(frame.radar, frame.ego, PipelineConfig{});
  const auto ghost = frame.radar.size() - 1;
  ASSERT_NE(m.cluster_of[ghost], kNoCluster);
  EXPECT_EQ(m.clusters[static_cast<std::size_t>(m.cluster_of[ghost])].member_indices,
            (std::vector<std::size_t>{ghost}));
  EXPECT_EQ(m.clusters.size(), 3u);
}

TEST(EstimateRadarMotion, PermutationKeepsVelocities) {
  const auto spec = two_mover_scene();
  const auto frame = synth::generate_frame_pair(spec).t.frame;
  std::vector<std::size_t> perm(frame.radar.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::mt19937_64 rng(37);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<RadarPoint> shuffled;
  for (const auto i : perm) shuffled.push_back(frame.radar[i]);

  const auto a = estimate_radar_motion(frame.radar, frame.ego, PipelineConfig{});
  const auto b = estimate_radar_motion(shuffled, frame.ego, PipelineConfig{});
  ASSERT_EQ(a.clusters.size(), b.clusters.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    const int ca = a.cluster_of[perm[k]];
    const int cb = b.cluster_of[k];
    ASSERT_EQ(ca == kNoCluster, cb == kNoCluster);
    if (ca == kNoCluster) continue;
    EXPECT_LT((a.clusters[static_cast<std::size_t>(ca)].v_full - b.clusters[static_cast<std::size_t>(cb)].v_full).norm(),
              1e-9);
    EXPECT_EQ(a.clusters[static_cast<std::size_t>(ca)].member_indices.size(),
              b.clusters[static_cast<std::size_t>(cb)].member_indices.size());
  }
}

}  // namespace
}  // namespace dflow::radar
