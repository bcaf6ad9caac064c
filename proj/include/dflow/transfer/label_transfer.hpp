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
 * \file label_transfer.hpp
 * \brief Radar-to-LiDAR label propagation: association, cluster voting,
 *        candidate-velocity arbitration and the non-ego flow field.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dflow/core/types.hpp"
#include "dflow/lidar/lidar_prep.hpp"
#include "dflow/radar/radar_motion.hpp"
#include "dflow/spatial/kd_tree.hpp"

namespace dflow::transfer {

/// Association gate: grows linearly from delta_adaptive_min at the ego origin
/// to delta_adaptive_max at adaptive_range_ref and stays flat beyond.
double range_adaptive_threshold(const Vec3& p, const PipelineConfig& config);

struct Association {
  int radar_index = -1;  ///< nearest radar return; -1 when the association is invalid
  double distance = 0.0;
  bool valid = false;
  bool radar_is_dynamic = false;
};

/// Nearest radar return for every LiDAR point over the full radar frame. An
/// association is valid when the distance is strictly below the range-adaptive
/// gate of the LiDAR point. With no radar returns every entry is invalid.
std::vector<Association> associate(std::span<const LidarPoint> lidar, std::span<const Vec3> radar_positions,
                                   std::span<const char> radar_dynamic, const PipelineConfig& config);

/// Dynamic iff more than half of the members' valid associations point at
/// dynamic radar returns. No valid associations -> static.
bool vote_cluster_dynamic(const LidarCluster& cluster, std::span<const Association> associations);

/// One-sided mean nearest-neighbor distance from `source` into `target`.
/// Throws DataError("no reference frame") on an empty target.
double chamfer_distance(std::span<const Vec3> source, const KdTree& target);
double chamfer_distance(std::span<const Vec3> source, std::span<const Vec3> target);

/// Index of the candidate whose forward projection (points + v * dt) best
/// matches `next_frame`. A single candidate is returned without scoring; scores
/// within 1e-9 m keep the earlier candidate.
std::size_t resolve_velocity_ambiguity(std::span<const Vec3> cluster_points, std::span<const Vec3> candidates,
                                       const KdTree& next_frame, double dt);

struct Candidates {
  std::vector<Vec3> velocities;         ///< deduplicated at 1e-6 m/s, by radar cluster id
  std::vector<int> radar_clusters;      ///< every dynamic radar cluster reached
};

Candidates candidate_velocities(const LidarCluster& cluster, std::span<const Association> associations,
                                const radar::RadarMotion& radar);

/// Votes every cluster in `prepared`, assigns velocities to dynamic ones and
/// emits the non-ego flow field. `next_frame` indexes frame t+1 after ground
/// removal, expressed in frame t's ego coordinates.
FlowField propagate_labels(std::span<const LidarPoint> lidar, lidar::PreparedLidarFrame& prepared,
                           const radar::RadarMotion& radar, std::span<const Association> associations,
                           const KdTree& next_frame, double dt);

/// Total displacement per point: ego displacement (T_ego p - p, a pure
/// translation by v_ego * dt) plus the non-ego delta.
std::vector<Vec3> assemble_total_flow(const FlowField& flow, const EgoState& ego,
                                      std::span<const LidarPoint> lidar);

}  // namespace dflow::transfer
