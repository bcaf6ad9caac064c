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

#include "dflow/transfer/label_transfer.hpp"

#include <algorithm>
#include <cmath>

namespace dflow::transfer {

namespace {
constexpr double kVoteFraction = 0.5;
constexpr double kVelocityDedupTol = 1e-6;
constexpr double kChamferTieTol = 1e-9;
}  // namespace

double range_adaptive_threshold(const Vec3& p, const PipelineConfig& config) {
  const double t = std::min(p.norm() / config.adaptive_range_ref, 1.0);
  return config.delta_adaptive_min + (config.delta_adaptive_max - config.delta_adaptive_min) * t;
}

std::vector<Association> associate(std::span<const LidarPoint> lidar, std::span<const Vec3> radar_positions,
                                   std::span<const char> radar_dynamic, const PipelineConfig& config) {
  std::vector<Association> out(lidar.size());
  if (radar_positions.empty()) return out;
  const KdTree tree(radar_positions);
  for (std::size_t i = 0; i < lidar.size(); ++i) {
    const auto nn = tree.nearest(lidar[i].position);
    auto& a = out[i];
    a.distance = nn->distance;
    a.valid = nn->distance < range_adaptive_threshold(lidar[i].position, config);
    if (a.valid) {
      a.radar_index = static_cast<int>(nn->index);
      a.radar_is_dynamic = radar_dynamic[nn->index] != 0;
    }
  }
  return out;
}

bool vote_cluster_dynamic(const LidarCluster& cluster, std::span<const Association> associations) {
  std::size_t valid = 0;
  std::size_t dynamic = 0;
  for (const auto i : cluster.member_indices) {
    const auto& a = associations[i];
    if (!a.valid) continue;
    ++valid;
    if (a.radar_is_dynamic) ++dynamic;
  }
  if (valid == 0) return false;
  return static_cast<double>(dynamic) / static_cast<double>(valid) > kVoteFraction;
}

double chamfer_distance(std::span<const Vec3> source, const KdTree& target) {
  if (target.empty()) throw DataError("no reference frame");
  if (source.empty()) throw DataError("chamfer distance of an empty source set");
  double sum = 0.0;
  for (const auto& p : source) sum += target.nearest(p)->distance;
  return sum / static_cast<double>(source.size());
}

double chamfer_distance(std::span<const Vec3> source, std::span<const Vec3> target) {
  if (target.empty()) throw DataError("no reference frame");
  return chamfer_distance(source, KdTree(target));
}

std::size_t resolve_velocity_ambiguity(std::span<const Vec3> cluster_points, std::span<const Vec3> candidates,
                                       const KdTree& next_frame, double dt) {
  if (candidates.empty()) throw std::invalid_argument("resolve_velocity_ambiguity: no candidates");
  if (candidates.size() == 1) return 0;
  std::size_t best = 0;
  double best_score = 0.0;
  std::vector<Vec3> moved(cluster_points.size());
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const Vec3 shift = candidates[k] * dt;
    for (std::size_t i = 0; i < cluster_points.size(); ++i) moved[i] = cluster_points[i] + shift;
    const double score = chamfer_distance(moved, next_frame);
    if (k == 0 || score < best_score - kChamferTieTol) {
      best = k;
      best_score = score;
    }
  }
  return best;
}

Candidates candidate_velocities(const LidarCluster& cluster, std::span<const Association> associations,
                                const radar::RadarMotion& radar) {
  Candidates out;
  for (const auto i : cluster.member_indices) {
    const auto& a = associations[i];
    if (!a.valid || !a.radar_is_dynamic) continue;
    const int rc = radar.cluster_of[static_cast<std::size_t>(a.radar_index)];
    if (rc != kNoCluster) out.radar_clusters.push_back(rc);
  }
  std::sort(out.radar_clusters.begin(), out.radar_clusters.end());
  out.radar_clusters.erase(std::unique(out.radar_clusters.begin(), out.radar_clusters.end()),
                           out.radar_clusters.end());
  for (const int rc : out.radar_clusters) {
    const Vec3& v = radar.clusters[static_cast<std::size_t>(rc)].v_full;
    const bool seen = std::any_of(out.velocities.begin(), out.velocities.end(),
                                  [&](const Vec3& w) { return (w - v).norm() <= kVelocityDedupTol; });
    if (!seen) out.velocities.push_back(v);
  }
  return out;
}

FlowField propagate_labels(std::span<const LidarPoint> lidar, lidar::PreparedLidarFrame& prepared,
                           const radar::RadarMotion& radar, std::span<const Association> associations,
                           const KdTree& next_frame, double dt) {
  FlowField flow;
  flow.points.resize(lidar.size());

  std::vector<Vec3> members;
  for (std::size_t c = 0; c < prepared.clusters.size(); ++c) {
    auto& cluster = prepared.clusters[c];
    cluster.dynamic = false;
    cluster.assigned_velocity.reset();
    cluster.source_radar_clusters.clear();

    Vec3 delta = Vec3::Zero();
    if (vote_cluster_dynamic(cluster, associations)) {
      const auto cands = candidate_velocities(cluster, associations, radar);
      cluster.source_radar_clusters = cands.radar_clusters;
      if (!cands.velocities.empty()) {
        std::size_t pick = 0;
        if (cands.velocities.size() > 1) {
          members.clear();
          for (const auto i : cluster.member_indices) members.push_back(lidar[i].position);
          pick = resolve_velocity_ambiguity(members, cands.velocities, next_frame, dt);
        }
        cluster.dynamic = true;
        cluster.assigned_velocity = cands.velocities[pick];
        delta = cands.velocities[pick] * dt;
      }
    }
    for (const auto i : cluster.member_indices) {
      auto& fp = flow.points[i];
      fp.delta = delta;
      fp.dynamic = cluster.dynamic;
      fp.valid = true;
      fp.cluster_id = static_cast<int>(c);
    }
  }
  return flow;
}

std::vector<Vec3> assemble_total_flow(const FlowField& flow, const EgoState& ego, std::span<const LidarPoint> lidar) {
  if (flow.size() != lidar.size()) throw DataError("assemble_total_flow: length mismatch");
  const Vec3 ego_shift = ego.displacement();
  std::vector<Vec3> total(flow.size());
  for (std::size_t i = 0; i < flow.size(); ++i) total[i] = ego_shift + flow.points[i].delta;
  return total;
}

}  // namespace dflow::transfer
