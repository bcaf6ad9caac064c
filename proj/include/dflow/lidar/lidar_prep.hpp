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
 * \file lidar_prep.hpp
 * \brief LiDAR ground removal, intensity split, density clustering and
 *        low-intensity reattachment.
 *
 * Every function returns indices into the frame it was given; none of them
 * reorders or copies points.
 */
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dflow/core/types.hpp"

namespace dflow::lidar {

struct GroundSplit {
  std::vector<std::size_t> kept;
  std::vector<std::size_t> ground;
};

/// Grid-lowest-point ground removal. Per XY cell of `cell_size`, points within
/// `height_tol` of the cell's lowest point are ground, so a cell holding a
/// single point is ground.
GroundSplit remove_ground(std::span<const LidarPoint> points, double cell_size, double height_tol);

struct IntensitySplit {
  std::vector<std::size_t> high;  ///< intensity >= delta
  std::vector<std::size_t> low;
};

IntensitySplit split_by_intensity(std::span<const LidarPoint> points, std::span<const std::size_t> subset,
                                  double delta_intensity);

struct DensityClusters {
  std::vector<std::vector<std::size_t>> clusters;  ///< ordered by smallest member
  std::vector<std::size_t> noise;
};

/// Fixed-radius density clustering over `subset` of `positions`.
///
/// A point is core when at least `min_pts` points (itself included) lie within
/// `eps`. Core points within `eps` of each other share a cluster; a non-core
/// point within `eps` of a core joins the cluster of its nearest core (ties to
/// the smaller index); everything else is noise. The result is independent of
/// the order of `subset`.
DensityClusters density_cluster(std::span<const Vec3> positions, std::span<const std::size_t> subset, double eps,
                                int min_pts);

struct ReattachResult {
  std::vector<LidarCluster> clusters;
  std::vector<std::size_t> attached;
  std::vector<std::size_t> unattached;
};

/// Each low-intensity point joins the cluster of its nearest clustered point
/// when that point is closer than `delta_neighbor`. Near-ties within 1e-9 m go
/// to the clustered point with the smaller index. Nearest points are taken
/// from the clusters as given, never from points attached in the same pass.
ReattachResult reattach_low_intensity(std::span<const LidarPoint> points, std::span<const std::size_t> low,
                                      std::vector<LidarCluster> clusters, double delta_neighbor);

struct PreparedLidarFrame {
  std::vector<std::size_t> kept_indices;
  std::vector<std::size_t> ground_indices;
  std::vector<std::size_t> high_set;
  std::vector<std::size_t> low_set;
  std::vector<LidarCluster> clusters;
  std::vector<std::size_t> unclustered;  ///< kept points that belong to no cluster
};

/// Ground removal and intensity split; clusters left empty.
PreparedLidarFrame split_lidar_frame(std::span<const LidarPoint> points, const PipelineConfig& config);

/// Clusters `candidates` (a subset of the kept points), reattaches the
/// low-intensity kept points outside `candidates`, and fills `unclustered`.
void cluster_lidar_frame(PreparedLidarFrame& frame, std::span<const LidarPoint> points,
                         std::span<const std::size_t> candidates, const PipelineConfig& config);

}  // namespace dflow::lidar
