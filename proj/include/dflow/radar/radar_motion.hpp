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

/**
 * \file radar_motion.hpp
 * \brief Dynamic radar point extraction and per-cluster full velocity recovery.
 *
 * Each radar return measures only the radial component of the target velocity.
 * After removing the ego contribution, dynamic returns are grouped by a joint
 * position/Doppler-vector proximity graph, and every group is assumed to move
 * rigidly, so its returns stack into A v = b with one row (u^T R) per return.
 *
 * The ego velocity is treated as purely translational; yaw-rate contributions
 * to the measured Doppler are not compensated.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "dflow/core/types.hpp"

namespace dflow::radar {

struct CompensatedRadarPoint {
  RadarPoint base;
  Vec3 u = Vec3::UnitX();  ///< unit line of sight, sensor frame
  double v_comp = 0.0;     ///< ego-compensated radial velocity [m/s]
  Vec3 v_comp_vec = Vec3::Zero();  ///< v_comp * u rotated into the ego frame
};

/// v_comp = v_meas + u^T R v_ego. Throws DataError when the return sits within
/// 1e-6 m of its sensor origin or references an unknown sensor.
CompensatedRadarPoint compensate_doppler(const RadarPoint& point, const EgoState& ego);

/// Indices whose |v_comp| is strictly above delta_dyn.
std::vector<std::size_t> classify_dynamic(std::span<const CompensatedRadarPoint> points, double delta_dyn);

/// Connected components over `indices`, with an edge (j, m) iff
/// |p_j - p_m| < delta_spatial and |v_comp_vec_j - v_comp_vec_m| < delta_velocity.
/// Clusters are ordered by their smallest member; members ascend. Velocities are left unsolved.
std::vector<RadarCluster> ccl_cluster(std::span<const CompensatedRadarPoint> points,
                                      std::span<const std::size_t> indices, double delta_spatial,
                                      double delta_velocity);

struct BoundedLsqResult {
  Vec3 x = Vec3::Zero();
  double rms_residual = 0.0;
  bool rank_deficient = false;
};

/// Relative singular value cutoff used for rank decisions.
inline constexpr double kRankTolerance = 1e-8;

/// min |A x - b| subject to |x_i| <= bound. Rank-deficient systems return the
/// minimum-norm minimizer. Solved by enumerating the 27 active-set patterns of
/// the 3D box; the problem is convex, so the best feasible pattern is optimal.
BoundedLsqResult solve_bounded_least_squares(const Eigen::MatrixX3d& A, const Eigen::VectorXd& b,
                                             double bound);

/// Builds A (rows u_j^T R_j) and b (v_comp_j) for one cluster.
void build_velocity_system(std::span<const CompensatedRadarPoint> cluster_points, const EgoState& ego,
                           Eigen::MatrixX3d& A, Eigen::VectorXd& b);

/// Fills v_full, solve_residual and rank_deficient of a cluster.
BoundedLsqResult solve_cluster_velocity(std::span<const CompensatedRadarPoint> cluster_points,
                                        const EgoState& ego, double v_bound);

struct RadarMotion {
  std::vector<CompensatedRadarPoint> points;  ///< same order as the input frame
  std::vector<std::size_t> dynamic_indices;
  std::vector<RadarCluster> clusters;         ///< solved
  std::vector<int> cluster_of;                ///< per radar point, kNoCluster when static

  bool is_dynamic(std::size_t i) const { return cluster_of[i] != kNoCluster; }
};

RadarMotion estimate_radar_motion(std::span<const RadarPoint> radar, const EgoState& ego,
                                  const PipelineConfig& config);

}  // namespace dflow::radar
