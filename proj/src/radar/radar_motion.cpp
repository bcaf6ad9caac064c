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

#include "dflow/radar/radar_motion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <Eigen/SVD>

namespace dflow::radar {

namespace {

constexpr double kSensorOriginTol = 1e-6;

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // smaller root wins so the representative is the smallest member
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }
  std::vector<std::size_t> parent;
};

/// Minimum-norm least squares on the given columns; singular values below
/// `cutoff` are dropped.
Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& A, const Eigen::VectorXd& r, double cutoff) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd utr = svd.matrixU().transpose() * r;
  for (Eigen::Index i = 0; i < s.size(); ++i) utr[i] = s[i] > cutoff ? utr[i] / s[i] : 0.0;
  return svd.matrixV() * utr;
}

}  // namespace

CompensatedRadarPoint compensate_doppler(const RadarPoint& point, const EgoState& ego) {
  if (point.sensor_id < 0 || point.sensor_id >= static_cast<int>(ego.sensor_extrinsics.size()))
    throw DataError("radar point references unknown sensor " + std::to_string(point.sensor_id));
  const auto& ext = ego.sensor_extrinsics[static_cast<std::size_t>(point.sensor_id)];
  const Vec3 rel = ext.to_sensor(point.position);
  const double range = rel.norm();
  if (!(range >= kSensorOriginTol)) throw DataError("radar point at sensor origin");

  CompensatedRadarPoint out;
  out.base = point;
  out.u = rel / range;
  out.v_comp = point.v_meas + out.u.dot(ext.rotation * ego.v_ego);
  out.v_comp_vec = ext.rotation.transpose() * (out.v_comp * out.u);
  return out;
}

std::vector<std::size_t> classify_dynamic(std::span<const CompensatedRadarPoint> points, double delta_dyn) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (std::abs(points[i].v_comp) > delta_dyn) out.push_back(i);
  return out;
}

std::vector<RadarCluster> ccl_cluster(std::span<const CompensatedRadarPoint> points,
                                      std::span<const std::size_t> indices, double delta_spatial,
                                      double delta_velocity) {
  const std::size_t n = indices.size();
  UnionFind uf(n);
  // Pairwise O(N^2): dynamic returns are sparse.
  for (std::size_t a = 0; a < n; ++a) {
    const auto& pa = points[indices[a]];
    for (std::size_t b = a + 1; b < n; ++b) {
      const auto& pb = points[indices[b]];
      if ((pa.base.position - pb.base.position).norm() < delta_spatial &&
          (pa.v_comp_vec - pb.v_comp_vec).norm() < delta_velocity)
        uf.unite(a, b);
    }
  }

  // Order members by frame index so the output does not depend on input order.
  std::vector<std::size_t> by_index(n);
  std::iota(by_index.begin(), by_index.end(), std::size_t{0});
  std::sort(by_index.begin(), by_index.end(), [&](std::size_t a, std::size_t b) { return indices[a] < indices[b]; });

  std::vector<RadarCluster> clusters;
  std::vector<int> slot(n, -1);
  for (const std::size_t local : by_index) {
    const std::size_t root = uf.find(local);
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(clusters.size());
      clusters.emplace_back();
    }
    clusters[static_cast<std::size_t>(slot[root])].member_indices.push_back(indices[local]);
  }
  for (auto& c : clusters) {
    std::sort(c.member_indices.begin(), c.member_indices.end());
    c.member_indices.erase(std::unique(c.member_indices.begin(), c.member_indices.end()), c.member_indices.end());
  }
  return clusters;
}

BoundedLsqResult solve_bounded_least_squares(const Eigen::MatrixX3d& A, const Eigen::VectorXd& b, double bound) {
  BoundedLsqResult result;
  const auto n = A.rows();
  if (n == 0) {
    result.rank_deficient = true;
    return result;
  }

  Eigen::JacobiSVD<Eigen::MatrixX3d> full(A);
  const double s_max = full.singularValues()[0];
  const double cutoff = kRankTolerance * s_max;
  int rank = 0;
  for (Eigen::Index i = 0; i < full.singularValues().size(); ++i)
    if (s_max > 0.0 && full.singularValues()[i] > cutoff) ++rank;
  result.rank_deficient = rank < 3;

  const double feas_tol = 1e-9 * std::max(1.0, bound);
  auto objective = [&](const Vec3& x) { return (A * x - b).squaredNorm(); };

  // The unconstrained minimum-norm minimizer is optimal whenever it is feasible.
  {
    const Eigen::VectorXd x = min_norm_solve(A, b, cutoff);
    if (x.cwiseAbs().maxCoeff() <= bound + feas_tol) {
      result.x = x.cwiseMax(-bound).cwiseMin(bound);
      result.rms_residual = std::sqrt(objective(result.x) / static_cast<double>(n));
      return result;
    }
  }

  // 0 = free, 1 = at -bound, 2 = at +bound
  double best_obj = std::numeric_limits<double>::infinity();
  Vec3 best_x = Vec3::Zero();
  const double obj_tol = 1e-12 * std::max(1.0, b.squaredNorm());
  for (int code = 1; code < 27; ++code) {
    std::array<int, 3> state = {code % 3, (code / 3) % 3, code / 9};
    Vec3 x = Vec3::Zero();
    std::vector<int> free_cols;
    for (int k = 0; k < 3; ++k) {
      if (state[k] == 0)
        free_cols.push_back(k);
      else
        x[k] = state[k] == 1 ? -bound : bound;
    }
    if (!free_cols.empty()) {
      const Eigen::VectorXd r = b - A * x;
      Eigen::MatrixXd sub(n, static_cast<Eigen::Index>(free_cols.size()));
      for (std::size_t c = 0; c < free_cols.size(); ++c) sub.col(static_cast<Eigen::Index>(c)) = A.col(free_cols[c]);
      const Eigen::VectorXd y = min_norm_solve(sub, r, cutoff);
      bool feasible = true;
      for (std::size_t c = 0; c < free_cols.size(); ++c) {
        const double v = y[static_cast<Eigen::Index>(c)];
        if (std::abs(v) > bound + feas_tol) feasible = false;
        x[free_cols[c]] = std::clamp(v, -bound, bound);
      }
      if (!feasible) continue;
    }
    const double obj = objective(x);
    if (obj < best_obj - obj_tol || (obj <= best_obj + obj_tol && x.norm() < best_x.norm())) {
      best_obj = std::min(obj, best_obj);
      best_x = x;
    }
  }
  result.x = best_x;
  result.rms_residual = std::sqrt(objective(best_x) / static_cast<double>(n));
  return result;
}

void build_velocity_system(std::span<const CompensatedRadarPoint> cluster_points, const EgoState& ego,
                           Eigen::MatrixX3d& A, Eigen::VectorXd& b) {
  const auto n = static_cast<Eigen::Index>(cluster_points.size());
  A.resize(n, 3);
  b.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& p = cluster_points[static_cast<std::size_t>(j)];
    const auto& rot = ego.sensor_extrinsics.at(static_cast<std::size_t>(p.base.sensor_id)).rotation;
    A.row(j) = p.u.transpose() * rot;
    b[j] = p.v_comp;
  }
}

BoundedLsqResult solve_cluster_velocity(std::span<const CompensatedRadarPoint> cluster_points, const EgoState& ego,
                                        double v_bound) {
  Eigen::MatrixX3d A;
  Eigen::VectorXd b;
  build_velocity_system(cluster_points, ego, A, b);
  return solve_bounded_least_squares(A, b, v_bound);
}

RadarMotion estimate_radar_motion(std::span<const RadarPoint> radar, const EgoState& ego,
                                  const PipelineConfig& config) {
  RadarMotion motion;
  motion.points.reserve(radar.size());
  for (const auto& r : radar) motion.points.push_back(compensate_doppler(r, ego));
  motion.dynamic_indices = classify_dynamic(motion.points, config.delta_dyn);
  motion.clusters = ccl_cluster(motion.points, motion.dynamic_indices, config.delta_spatial, config.delta_velocity);
  motion.cluster_of.assign(radar.size(), kNoCluster);

  std::vector<CompensatedRadarPoint> members;
  for (std::size_t k = 0; k < motion.clusters.size(); ++k) {
    auto& cluster = motion.clusters[k];
    members.clear();
    for (const auto idx : cluster.member_indices) {
      members.push_back(motion.points[idx]);
      motion.cluster_of[idx] = static_cast<int>(k);
    }
    const auto sol = solve_cluster_velocity(members, ego, config.v_bound);
    cluster.v_full = sol.x;
    cluster.solve_residual = sol.rms_residual;
    cluster.rank_deficient = sol.rank_deficient;
  }
  return motion;
}

}  // namespace dflow::radar
