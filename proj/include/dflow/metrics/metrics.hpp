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
 * \file metrics.hpp
 * \brief Range-wise dynamic EPE, range-wise dynamic IoU and three-way EPE.
 *
 * All flows are non-ego flows. A point counts as dynamic when its flow
 * magnitude exceeds the dynamic threshold (0.05 m per frame by default).
 * Range is the Euclidean distance of the point from the ego origin. Bins are
 * [e_k, e_{k+1}) with an open last bin [e_last, inf).
 */
#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dflow/core/types.hpp"

namespace dflow::metrics {

inline constexpr double kDefaultDynamicThreshold = 0.05;
inline constexpr double kDefaultHalfExtent = 204.8;

struct EvalSample {
  std::vector<Vec3> positions;
  std::vector<Vec3> pred;
  std::vector<Vec3> gt;
  std::vector<PointClass> classes;  ///< may be empty when classes are unknown

  std::size_t size() const { return positions.size(); }
};

/// Keeps points with |x| <= half_extent and |y| <= half_extent.
/// Throws DataError when the arrays disagree in length.
EvalSample crop_to_grid(const EvalSample& in, double half_extent);

/// Checks edges start at 0 and strictly ascend; throws ConfigError otherwise.
void validate_bin_edges(std::span<const double> edges);
std::vector<std::string> bin_labels(std::span<const double> edges);
/// Bin of a range value, or -1 below the first edge.
int bin_index(double range, std::span<const double> edges);

/// Mean endpoint error over GT-dynamic points, per bin; absent for empty bins.
std::vector<std::optional<double>> range_wise_dynamic_epe(const EvalSample& s, std::span<const double> edges,
                                                          double threshold = kDefaultDynamicThreshold);

/// TP / (TP + FP + FN) per bin; absent when the bin has no dynamic point in
/// either mask.
std::vector<std::optional<double>> range_wise_dynamic_iou(const EvalSample& s, std::span<const double> edges,
                                                          double threshold = kDefaultDynamicThreshold);

struct ThreeWayEpe {
  std::optional<double> fd;
  std::optional<double> fs;
  std::optional<double> bs;
  std::optional<double> mean;  ///< over the classes present
  std::size_t n_fd = 0;
  std::size_t n_fs = 0;
  std::size_t n_bs = 0;
};

ThreeWayEpe three_way_epe(const EvalSample& s);

struct BinReport {
  std::string label;
  double lower = 0.0;
  std::optional<double> upper;
  std::optional<double> dynamic_epe;
  std::optional<double> dynamic_iou;
  std::size_t points = 0;
  std::size_t gt_dynamic = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct EvalReport {
  std::vector<double> range_bin_edges;
  std::vector<BinReport> bins;
  ThreeWayEpe three_way;
  std::size_t points_total = 0;
  std::size_t points_in_grid = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  /// Aligned human-readable table.
  std::string to_table() const;
};

EvalReport evaluate(const EvalSample& sample, std::span<const double> edges,
                    double half_extent = kDefaultHalfExtent, double threshold = kDefaultDynamicThreshold);

/// Deterministic pairwise summation.
double pairwise_sum(std::span<const double> values);

}  // namespace dflow::metrics
