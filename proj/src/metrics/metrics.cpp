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

#include "dflow/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dflow/core/log.hpp"

namespace dflow::metrics {

namespace {

void check_lengths(const EvalSample& s) {
  const auto n = s.positions.size();
  if (s.pred.size() != n || s.gt.size() != n || (!s.classes.empty() && s.classes.size() != n))
    throw DataError("metrics: prediction, ground truth and positions differ in length");
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return pairwise_sum(v) / static_cast<double>(v.size());
}

std::string fmt(const std::optional<double>& v, int prec = 4) {
  if (!v) return "-";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, *v);
  return buf;
}

std::string edge_label(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (const double v : values) s += v;
    return s;
  }
  const auto half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

EvalSample crop_to_grid(const EvalSample& in, double half_extent) {
  check_lengths(in);
  EvalSample out;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const auto& p = in.positions[i];
    if (std::abs(p.x()) > half_extent || std::abs(p.y()) > half_extent) continue;
    out.positions.push_back(p);
    out.pred.push_back(in.pred[i]);
    out.gt.push_back(in.gt[i]);
    if (!in.classes.empty()) out.classes.push_back(in.classes[i]);
  }
  return out;
}

void validate_bin_edges(std::span<const double> edges) {
  if (edges.empty()) throw ConfigError("bins: at least one edge required");
  if (edges.front() != 0.0) throw ConfigError("bins: first edge must be 0");
  for (std::size_t i = 1; i < edges.size(); ++i)
    if (!(edges[i] > edges[i - 1]) || !std::isfinite(edges[i]))
      throw ConfigError("bins: edges must be finite and strictly ascending");
}

std::vector<std::string> bin_labels(std::span<const double> edges) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (i + 1 < edges.size())
      out.push_back(edge_label(edges[i]) + "-" + edge_label(edges[i + 1]));
    else
      out.push_back(edge_label(edges[i]) + "+");
  }
  return out;
}

int bin_index(double range, std::span<const double> edges) {
  const auto it = std::upper_bound(edges.begin(), edges.end(), range);
  return static_cast<int>(it - edges.begin()) - 1;
}

std::vector<std::optional<double>> range_wise_dynamic_epe(const EvalSample& s, std::span<const double> edges,
                                                          double threshold) {
  check_lengths(s);
  validate_bin_edges(edges);
  std::vector<std::vector<double>> errors(edges.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s.gt[i].norm() > threshold)) continue;
    const int b = bin_index(s.positions[i].norm(), edges);
    if (b < 0) continue;
    errors[static_cast<std::size_t>(b)].push_back((s.pred[i] - s.gt[i]).norm());
  }
  std::vector<std::optional<double>> out;
  for (const auto& e : errors) out.push_back(mean_of(e));
  return out;
}

std::vector<std::optional<double>> range_wise_dynamic_iou(const EvalSample& s, std::span<const double> edges,
                                                          double threshold) {
  check_lengths(s);
  validate_bin_edges(edges);
  std::vector<std::size_t> tp(edges.size(), 0), fp(edges.size(), 0), fn(edges.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int b = bin_index(s.positions[i].norm(), edges);
    if (b < 0) continue;
    const bool pd = s.pred[i].norm() > threshold;
    const bool gd = s.gt[i].norm() > threshold;
    const auto k = static_cast<std::size_t>(b);
    if (pd && gd) ++tp[k];
    else if (pd) ++fp[k];
    else if (gd) ++fn[k];
  }
  std::vector<std::optional<double>> out;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto denom = tp[k] + fp[k] + fn[k];
    if (denom == 0)
      out.emplace_back(std::nullopt);
    else
      out.emplace_back(static_cast<double>(tp[k]) / static_cast<double>(denom));
  }
  return out;
}

ThreeWayEpe three_way_epe(const EvalSample& s) {
  check_lengths(s);
  if (s.classes.size() != s.size()) throw DataError("three-way EPE needs a class label per point");
  std::vector<double> fd, fs, bs;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double e = (s.pred[i] - s.gt[i]).norm();
    switch (s.classes[i]) {
      case PointClass::FD: fd.push_back(e); break;
      case PointClass::FS: fs.push_back(e); break;
      case PointClass::BS: bs.push_back(e); break;
    }
  }
  ThreeWayEpe out;
  out.fd = mean_of(fd);
  out.fs = mean_of(fs);
  out.bs = mean_of(bs);
  out.n_fd = fd.size();
  out.n_fs = fs.size();
  out.n_bs = bs.size();
  std::vector<double> present;
  for (const auto& v : {out.fd, out.fs, out.bs})
    if (v) present.push_back(*v);
  if (!present.empty()) out.mean = pairwise_sum(present) / static_cast<double>(present.size());
  return out;
}

EvalReport evaluate(const EvalSample& sample, std::span<const double> edges, double half_extent,
                    double threshold) {
  validate_bin_edges(edges);
  const auto grid = crop_to_grid(sample, half_extent);
  EvalReport report;
  report.range_bin_edges.assign(edges.begin(), edges.end());
  report.points_total = sample.size();
  report.points_in_grid = grid.size();

  const auto epe = range_wise_dynamic_epe(grid, edges, threshold);
  const auto iou = range_wise_dynamic_iou(grid, edges, threshold);
  const auto labels = bin_labels(edges);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    BinReport b;
    b.label = labels[k];
    b.lower = edges[k];
    if (k + 1 < edges.size()) b.upper = edges[k + 1];
    b.dynamic_epe = epe[k];
    b.dynamic_iou = iou[k];
    report.bins.push_back(b);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const int b = bin_index(grid.positions[i].norm(), edges);
    if (b < 0) continue;
    auto& bin = report.bins[static_cast<std::size_t>(b)];
    ++bin.points;
    const bool pd = grid.pred[i].norm() > threshold;
    const bool gd = grid.gt[i].norm() > threshold;
    if (gd) ++bin.gt_dynamic;
    if (pd && gd) ++bin.tp;
    else if (pd) ++bin.fp;
    else if (gd) ++bin.fn;
  }

  if (grid.classes.size() == grid.size() && grid.size() > 0) {
    report.three_way = three_way_epe(grid);
    const std::pair<const char*, const std::optional<double>*> classes[] = {
        {"FD", &report.three_way.fd}, {"FS", &report.three_way.fs}, {"BS", &report.three_way.bs}};
    for (const auto& [name, v] : classes) {
      if (!v->has_value()) {
        report.warnings.push_back(std::string("class ") + name + " absent; three-way mean over present classes");
        log::warn(report.warnings.back());
      }
    }
  } else {
    report.warnings.push_back("no class labels; three-way EPE skipped");
  }
  return report;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["range_bin_edges"] = range_bin_edges;
  j["bins"] = nlohmann::json::array();
  for (const auto& b : bins) {
    j["bins"].push_back({{"label", b.label},
                         {"lower", b.lower},
                         {"upper", opt_json(b.upper)},
                         {"dynamic_epe", opt_json(b.dynamic_epe)},
                         {"dynamic_iou", opt_json(b.dynamic_iou)},
                         {"points", b.points},
                         {"gt_dynamic", b.gt_dynamic},
                         {"tp", b.tp},
                         {"fp", b.fp},
                         {"fn", b.fn}});
  }
  j["three_way"] = {{"FD", opt_json(three_way.fd)},
                    {"FS", opt_json(three_way.fs)},
                    {"BS", opt_json(three_way.bs)},
                    {"mean", opt_json(three_way.mean)},
                    {"counts", {{"FD", three_way.n_fd}, {"FS", three_way.n_fs}, {"BS", three_way.n_bs}}}};
  j["points_total"] = points_total;
  j["points_in_grid"] = points_in_grid;
  j["warnings"] = warnings;
  return j;
}

std::string EvalReport::to_table() const {
  std::ostringstream ss;
  char line[256];
  std::snprintf(line, sizeof(line), "%-12s %10s %10s %10s %12s\n", "range (m)", "dyn EPE", "dyn IoU", "points",
                "gt dynamic");
  ss << line;
  for (const auto& b : bins) {
    std::snprintf(line, sizeof(line), "%-12s %10s %10s %10zu %12zu\n", b.label.c_str(), fmt(b.dynamic_epe).c_str(),
                  fmt(b.dynamic_iou).c_str(), b.points, b.gt_dynamic);
    ss << line;
  }
  std::snprintf(line, sizeof(line), "three-way EPE  FD %s  FS %s  BS %s  mean %s\n", fmt(three_way.fd).c_str(),
                fmt(three_way.fs).c_str(), fmt(three_way.bs).c_str(), fmt(three_way.mean).c_str());
  ss << line;
  return ss.str();
}

}  // namespace dflow::metrics
