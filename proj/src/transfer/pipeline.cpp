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

#include "dflow/pipeline.hpp"

#include <string>

#include "dflow/core/log.hpp"
#include "dflow/spatial/kd_tree.hpp"

namespace dflow {

std::vector<Vec3> align_next_frame(const Frame& next, const EgoState& ego_t, const PipelineConfig& config) {
  const auto ground = lidar::remove_ground(next.lidar, config.ground_cell_size, config.ground_height_tol);
  const Vec3 shift = ego_t.displacement();
  std::vector<Vec3> out;
  out.reserve(ground.kept.size());
  for (const auto i : ground.kept) out.push_back(next.lidar[i].position + shift);
  return out;
}

PipelineResult run_pipeline(const Frame& frame_t, const Frame& frame_t1, const PipelineConfig& config) {
  config.validate();
  PipelineResult result;
  const auto& lidar_pts = frame_t.lidar;

  result.radar = radar::estimate_radar_motion(frame_t.radar, frame_t.ego, config);
  if (!frame_t.has_radar || frame_t.radar.empty()) {
    result.radar_missing = true;
    log::warn("frame " + std::to_string(frame_t.index) + ": no radar returns, emitting all-static flow");
  }

  std::vector<Vec3> radar_pos(result.radar.points.size());
  std::vector<char> radar_dyn(result.radar.points.size(), 0);
  for (std::size_t i = 0; i < radar_pos.size(); ++i) {
    radar_pos[i] = result.radar.points[i].base.position;
    radar_dyn[i] = result.radar.is_dynamic(i) ? 1 : 0;
  }
  result.associations = transfer::associate(lidar_pts, radar_pos, radar_dyn, config);

  result.lidar = lidar::split_lidar_frame(lidar_pts, config);
  std::vector<std::size_t> candidates;
  for (const auto i : result.lidar.kept_indices)
    if (result.associations[i].valid) candidates.push_back(i);
  lidar::cluster_lidar_frame(result.lidar, lidar_pts, candidates, config);

  const auto next = align_next_frame(frame_t1, frame_t.ego, config);
  const KdTree next_tree(next);
  if (next_tree.empty()) log::warn("frame " + std::to_string(frame_t1.index) + ": no non-ground points");
  result.flow = transfer::propagate_labels(lidar_pts, result.lidar, result.radar, result.associations, next_tree,
                                           frame_t.ego.dt);
  return result;
}

nlohmann::json debug_clusters_json(const PipelineResult& result) {
  nlohmann::json j;
  j["radar_clusters"] = nlohmann::json::array();
  for (std::size_t k = 0; k < result.radar.clusters.size(); ++k) {
    const auto& c = result.radar.clusters[k];
    j["radar_clusters"].push_back({{"id", k},
                                   {"members", c.member_indices},
                                   {"v_full", {c.v_full.x(), c.v_full.y(), c.v_full.z()}},
                                   {"residual", c.solve_residual},
                                   {"rank_deficient", c.rank_deficient}});
  }
  j["lidar_clusters"] = nlohmann::json::array();
  for (std::size_t k = 0; k < result.lidar.clusters.size(); ++k) {
    const auto& c = result.lidar.clusters[k];
    nlohmann::json entry = {{"id", k},
                            {"size", c.member_indices.size()},
                            {"dynamic", c.dynamic},
                            {"source_radar_clusters", c.source_radar_clusters}};
    if (c.assigned_velocity)
      entry["velocity"] = {c.assigned_velocity->x(), c.assigned_velocity->y(), c.assigned_velocity->z()};
    j["lidar_clusters"].push_back(entry);
  }
  j["dynamic_radar_points"] = result.radar.dynamic_indices.size();
  j["ground_points"] = result.lidar.ground_indices.size();
  j["unclustered_points"] = result.lidar.unclustered.size();
  return j;
}

}  // namespace dflow
