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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "dflow/core/types.hpp"

namespace dflow {

/// Static 3D kd-tree over a point set. Immutable after construction and safe
/// to query concurrently. Ties in nearest-neighbor queries resolve to the
/// smaller point index, so results do not depend on tree layout.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index = 0;
    double distance = 0.0;
  };

  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  std::optional<Neighbor> nearest(const Vec3& query) const;

  /// Indices with distance <= radius, in ascending index order.
  std::vector<std::size_t> radius_search(const Vec3& query, double radius) const;

  std::size_t count_within(const Vec3& query, double radius) const;

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void nearest_impl(int node, const Vec3& q, std::size_t& best, double& best_d2) const;
  template <class Visit>
  void radius_impl(int node, const Vec3& q, double r2, Visit&& visit) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace dflow
