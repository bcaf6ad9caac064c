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

#include "dflow/spatial/kd_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace dflow {

namespace {
constexpr std::size_t kLeafSize = 12;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 1);
    build(0, points_.size());
  }
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] <= 0.0) return id;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  auto first = order_.begin() + static_cast<std::ptrdiff_t>(begin);
  auto nth = order_.begin() + static_cast<std::ptrdiff_t>(mid);
  auto last = order_.begin() + static_cast<std::ptrdiff_t>(end);
  std::nth_element(first, nth, last, [&](std::size_t a, std::size_t b) {
    const double va = points_[a][axis];
    const double vb = points_[b][axis];
    return va < vb || (va == vb && a < b);
  });
  const double split = points_[order_[mid]][axis];

  const int left = build(begin, mid);
  const int right = build(mid, end);
  auto& node = nodes_[static_cast<std::size_t>(id)];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::nearest_impl(int node_id, const Vec3& q, std::size_t& best, double& best_d2) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
        best_d2 = d2;
        best = idx;
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const int near = diff < 0.0 ? node.left : node.right;
  const int far = diff < 0.0 ? node.right : node.left;
  nearest_impl(near, q, best, best_d2);
  if (diff * diff <= best_d2) nearest_impl(far, q, best, best_d2);
}

std::optional<KdTree::Neighbor> KdTree::nearest(const Vec3& query) const {
  if (points_.empty()) return std::nullopt;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_d2 = std::numeric_limits<double>::infinity();
  nearest_impl(0, query, best, best_d2);
  return Neighbor{best, std::sqrt(best_d2)};
}

template <class Visit>
void KdTree::radius_impl(int node_id, const Vec3& q, double r2, Visit&& visit) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      if ((points_[idx] - q).squaredNorm() <= r2) visit(idx);
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  // Points equal to the split value may sit on either side.
  if (diff <= 0.0 || diff * diff <= r2) radius_impl(node.left, q, r2, visit);
  if (diff >= 0.0 || diff * diff <= r2) radius_impl(node.right, q, r2, visit);
}

std::vector<std::size_t> KdTree::radius_search(const Vec3& query, double radius) const {
  std::vector<std::size_t> out;
  if (points_.empty() || radius < 0.0) return out;
  radius_impl(0, query, radius * radius, [&](std::size_t idx) { out.push_back(idx); });
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t KdTree::count_within(const Vec3& query, double radius) const {
  std::size_t n = 0;
  if (points_.empty() || radius < 0.0) return n;
  radius_impl(0, query, radius * radius, [&](std::size_t) { ++n; });
  return n;
}

}  // namespace dflow
