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

#include "dflow/lidar/lidar_prep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "dflow/spatial/kd_tree.hpp"

namespace dflow::lidar {

namespace {

constexpr double kTieTolerance = 1e-9;

struct CellKey {
  std::int64_t x;
  std::int64_t y;
  bool operator==(const CellKey& o) const { return x == o.x && y == o.y; }
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return std::hash<std::int64_t>()(k.x * 73856093LL) ^ std::hash<std::int64_t>()(k.y * 19349663LL);
  }
};

CellKey cell_of(const Vec3& p, double cell_size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_size)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_size))};
}

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

GroundSplit remove_ground(std::span<const LidarPoint> points, double cell_size, double height_tol) {
  std::unordered_map<CellKey, double, CellHash> lowest;
  lowest.reserve(points.size() / 4 + 1);
  for (const auto& p : points) {
    const auto key = cell_of(p.position, cell_size);
    auto [it, inserted] = lowest.try_emplace(key, p.position.z());
    if (!inserted) it->second = std::min(it->second, p.position.z());
  }
  GroundSplit out;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double floor_z = lowest.at(cell_of(points[i].position, cell_size));
    if (points[i].position.z() - floor_z <= height_tol)
      out.ground.push_back(i);
    else
      out.kept.push_back(i);
  }
  return out;
}

IntensitySplit split_by_intensity(std::span<const LidarPoint> points, std::span<const std::size_t> subset,
                                  double delta_intensity) {
  IntensitySplit out;
  for (const auto i : subset) {
    if (points[i].intensity >= delta_intensity)
      out.high.push_back(i);
    else
      out.low.push_back(i);
  }
  return out;
}

DensityClusters density_cluster(std::span<const Vec3> positions, std::span<const std::size_t> subset, double eps,
                                int min_pts) {
  std::vector<std::size_t> ids(subset.begin(), subset.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const std::size_t n = ids.size();

  std::vector<Vec3> local(n);
  for (std::size_t i = 0; i < n; ++i) local[i] = positions[ids[i]];
  const KdTree tree(local);

  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    core[i] = tree.count_within(local[i], eps) >= static_cast<std::size_t>(std::max(min_pts, 0));

  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  // border point -> local index of its nearest core
  std::vector<std::size_t> anchor(n, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < n; ++i) {
    const auto nbrs = tree.radius_search(local[i], eps);
    if (core[i]) {
      for (const auto j : nbrs) {
        if (j <= i || !core[j]) continue;
        auto a = find_root(parent, i);
        auto b = find_root(parent, j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    } else {
      double best = std::numeric_limits<double>::infinity();
      for (const auto j : nbrs) {
        if (!core[j]) continue;
        // nbrs ascend by local index, which ascends by frame index
        const double d = (local[j] - local[i]).norm();
        if (d < best) {
          best = d;
          anchor[i] = j;
        }
      }
    }
  }

  DensityClusters out;
  std::vector<int> slot(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root;
    if (core[i])
      root = find_root(parent, i);
    else if (anchor[i] != std::numeric_limits<std::size_t>::max())
      root = find_root(parent, anchor[i]);
    else {
      out.noise.push_back(ids[i]);
      continue;
    }
    if (slot[root] < 0) {
      slot[root] = static_cast<int>(out.clusters.size());
      out.clusters.emplace_back();
    }
    out.clusters[static_cast<std::size_t>(slot[root])].push_back(ids[i]);
  }
  return out;
}

ReattachResult reattach_low_intensity(std::span<const LidarPoint> points, std::span<const std::size_t> low,
                                      std::vector<LidarCluster> clusters, double delta_neighbor) {
  std::vector<std::pair<std::size_t, std::size_t>> members;  // (frame index, cluster)
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (const auto idx : clusters[c].member_indices) members.emplace_back(idx, c);
  std::sort(members.begin(), members.end());

  std::vector<Vec3> local(members.size());
  for (std::size_t i = 0; i < members.size(); ++i) local[i] = points[members[i].first].position;
  const KdTree tree(local);

  ReattachResult out;
  std::vector<std::pair<std::size_t, std::size_t>> joins;
  for (const auto idx : low) {
    const auto nn = tree.nearest(points[idx].position);
    if (!nn || !(nn->distance < delta_neighbor)) {
      out.unattached.push_back(idx);
      continue;
    }
    // Local order matches frame order, so the smallest local index within the
    // tie band is the smallest frame index.
    const auto band = tree.radius_search(points[idx].position, nn->distance + kTieTolerance);
    const std::size_t pick = band.empty() ? nn->index : band.front();
    joins.emplace_back(idx, members[pick].second);
    out.attached.push_back(idx);
  }
  for (const auto& [idx, c] : joins) clusters[c].member_indices.push_back(idx);
  for (auto& c : clusters) std::sort(c.member_indices.begin(), c.member_indices.end());
  out.clusters = std::move(clusters);
  return out;
}

PreparedLidarFrame split_lidar_frame(std::span<const LidarPoint> points, const PipelineConfig& config) {
  PreparedLidarFrame frame;
  auto ground = remove_ground(points, config.ground_cell_size, config.ground_height_tol);
  frame.kept_indices = std::move(ground.kept);
  frame.ground_indices = std::move(ground.ground);
  auto split = split_by_intensity(points, frame.kept_indices, config.delta_intensity);
  frame.high_set = std::move(split.high);
  frame.low_set = std::move(split.low);
  frame.unclustered = frame.kept_indices;
  return frame;
}

void cluster_lidar_frame(PreparedLidarFrame& frame, std::span<const LidarPoint> points,
                         std::span<const std::size_t> candidates, const PipelineConfig& config) {
  std::vector<Vec3> positions(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) positions[i] = points[i].position;

  const auto density =
      density_cluster(positions, candidates, config.density_cluster_eps, config.density_cluster_min_pts);
  std::vector<LidarCluster> clusters;
  clusters.reserve(density.clusters.size());
  for (const auto& members : density.clusters) {
    LidarCluster c;
    c.member_indices = members;
    clusters.push_back(std::move(c));
  }

  std::vector<char> is_candidate(points.size(), 0);
  for (const auto i : candidates) is_candidate[i] = 1;
  std::vector<std::size_t> low_rest;
  for (const auto i : frame.low_set)
    if (!is_candidate[i]) low_rest.push_back(i);

  auto reattached = reattach_low_intensity(points, low_rest, std::move(clusters), config.delta_neighbor);
  frame.clusters = std::move(reattached.clusters);

  std::vector<char> in_cluster(points.size(), 0);
  for (const auto& c : frame.clusters)
    for (const auto i : c.member_indices) in_cluster[i] = 1;
  frame.unclustered.clear();
  for (const auto i : frame.kept_indices)
    if (!in_cluster[i]) frame.unclustered.push_back(i);
}

}  // namespace dflow::lidar
