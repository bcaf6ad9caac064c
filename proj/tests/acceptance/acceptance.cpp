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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits nonzero
// when any of them fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "../common/oracles.hpp"
#include "dflow/cli/commands.hpp"
#include "dflow/core/frame.hpp"
#include "dflow/core/log.hpp"
#include "dflow/metrics/metrics.hpp"
#include "dflow/pipeline.hpp"
#include "dflow/radar/radar_motion.hpp"
#include "dflow/lidar/lidar_prep.hpp"
#include "dflow/synth/scene.hpp"
#include "dflow/transfer/label_transfer.hpp"

namespace {

using namespace dflow;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;
using metrics::EvalSample;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------- solver

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double w = n(rng);
  const double x = n(rng);
  const double y = n(rng);
  const double z = n(rng);
  return Eigen::Quaterniond(w, x, y, z).normalized().toRotationMatrix();
}

struct SolverCase {
  std::vector<radar::CompensatedRadarPoint> points;
  EgoState ego;
  Vec3 truth;
  Eigen::MatrixX3d A;
  Eigen::VectorXd b;
};

// A cluster seen by up to three randomly mounted sensors. Doppler is simulated
// from the target velocity relative to the ego and then compensated by the
// library, so the whole radar chain is exercised.
SolverCase random_cluster(std::mt19937_64& rng, int n_points, double v_max, double doppler_sigma) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> range(2.0, 80.0);
  std::normal_distribution<double> noise(0.0, doppler_sigma > 0.0 ? doppler_sigma : 1.0);
  for (;;) {
    SolverCase c;
    const int n_sensors = 1 + static_cast<int>(rng() % 3);
    for (int s = 0; s < n_sensors; ++s) {
      SensorExtrinsic e;
      e.rotation = random_rotation(rng);
      e.translation = Vec3(unit(rng), unit(rng), unit(rng)) * 2.0;
      c.ego.sensor_extrinsics.push_back(e);
    }
    c.ego.v_ego = Vec3(unit(rng) * 30.0, unit(rng) * 5.0, 0.0);
    c.truth = Vec3(unit(rng), unit(rng), unit(rng)) * v_max;
    for (int j = 0; j < n_points; ++j) {
      RadarPoint r;
      r.sensor_id = static_cast<int>(rng() % static_cast<std::uint64_t>(n_sensors));
      const auto& e = c.ego.sensor_extrinsics[static_cast<std::size_t>(r.sensor_id)];
      r.position = e.origin_in_ego() + oracle::random_unit(rng) * range(rng);
      const Vec3 u = e.to_sensor(r.position).normalized();
      r.v_meas = u.dot(e.rotation * (c.truth - c.ego.v_ego));
      if (doppler_sigma > 0.0) r.v_meas += noise(rng);
      c.points.push_back(radar::compensate_doppler(r, c.ego));
    }
    radar::build_velocity_system(c.points, c.ego, c.A, c.b);
    const Eigen::JacobiSVD<Eigen::MatrixX3d> svd(c.A);
    const auto sv = svd.singularValues();
    if (sv(2) > 0.0 && sv(0) / sv(2) < 1e3) return c;
  }
}

Outcome solver_exactness() {
  std::mt19937_64 rng(1001);
  std::vector<SolverCase> cases;
  for (int i = 0; i < 1000; ++i) cases.push_back(random_cluster(rng, 3 + static_cast<int>(rng() % 18), 60.0, 0.0));
  double max_err = 0.0;
  const auto start = Clock::now();
  for (const auto& c : cases) {
    const auto r = radar::solve_cluster_velocity(c.points, c.ego, 60.0);
    max_err = std::max(max_err, (r.x - c.truth).norm());
  }
  const double secs = seconds_since(start);
  return {max_err < 1e-6 && secs < 5.0,
          "max error " + fmt("%.3g", max_err) + " m/s (< 1e-6), " + fmt("%.3f", secs) + " s (< 5)"};
}

Outcome solver_noise() {
  std::mt19937_64 rng(1002);
  std::vector<double> errors;
  std::vector<double> reference;
  for (int i = 0; i < 1000; ++i) {
    const auto c = random_cluster(rng, 10, 40.0, 0.1);
    errors.push_back((radar::solve_cluster_velocity(c.points, c.ego, 60.0).x - c.truth).norm());
    // unconstrained normal equations as the Monte-Carlo reference
    const Vec3 ls = (c.A.transpose() * c.A).ldlt().solve(c.A.transpose() * c.b);
    reference.push_back((ls - c.truth).norm());
  }
  const double med = median(errors);
  return {med < 0.15, "median error " + fmt("%.4f", med) + " m/s (< 0.15), normal-equation reference " +
                          fmt("%.4f", median(reference))};
}

// ---------------------------------------------------------------- scenes

EvalSample sample_of(const Frame& frame, const FlowField& flow) {
  EvalSample s;
  for (std::size_t i = 0; i < frame.lidar.size(); ++i) {
    s.positions.push_back(frame.lidar[i].position);
    s.pred.push_back(flow.points[i].delta);
  }
  s.gt = frame.gt->flow;
  s.classes = frame.gt->classes;
  return s;
}

PipelineResult run_pair(const synth::FramePair& pair) {
  return run_pipeline(pair.t.frame, pair.t1.frame, PipelineConfig{});
}

Outcome static_world() {
  const auto spec = synth::preset_scene("static-world");
  bool rotated = false;
  for (const auto& r : spec.radars) rotated |= r.yaw != 0.0 || r.pitch != 0.0 || r.roll != 0.0;
  if (spec.ego_velocity.norm() == 0.0 || !rotated) return {false, "preset lacks ego motion or rotated sensors"};

  const auto frames = synth::generate_sequence(spec, 3);
  double max_vcomp = 0.0;
  std::size_t nonzero = 0;
  bool iou_empty = true;
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const auto& f = frames[k].frame;
    for (const auto& r : f.radar) max_vcomp = std::max(max_vcomp, std::abs(radar::compensate_doppler(r, f.ego).v_comp));
    const auto result = run_pipeline(f, frames[k + 1].frame, PipelineConfig{});
    for (const auto& p : result.flow.points) nonzero += p.delta != Vec3::Zero() || p.dynamic;
    const auto report = metrics::evaluate(sample_of(f, result.flow), std::vector<double>{0.0, 35.0});
    for (const auto& b : report.bins) iou_empty &= !b.dynamic_iou.has_value();
    (void)report.to_table();
    (void)report.to_json().dump();
  }
  return {max_vcomp <= 1e-9 && nonzero == 0 && iou_empty,
          "max |v_comp| " + fmt("%.3g", max_vcomp) + " m/s, " + std::to_string(nonzero) +
              " nonzero flow points, dynamic IoU " + (iou_empty ? "empty in every bin" : "unexpectedly defined")};
}

Outcome highway() {
  const auto pair = synth::generate_frame_pair(synth::preset_scene("highway-5-movers"));
  double worst_time = 0.0;
  PipelineResult result;
  for (int run = 0; run < 3; ++run) {
    const auto start = Clock::now();
    auto t = pair.t.frame;
    auto t1 = pair.t1.frame;
    validate_frame(t);
    validate_frame(t1);
    result = run_pipeline(t, t1, PipelineConfig{});
    worst_time = std::max(worst_time, seconds_since(start));
  }
  double max_err = 0.0;
  for (std::size_t i = 0; i < result.flow.size(); ++i)
    max_err = std::max(max_err, (result.flow.points[i].delta - pair.t.frame.gt->flow[i]).norm());
  const auto report = metrics::evaluate(sample_of(pair.t.frame, result.flow), std::vector<double>{0.0, 35.0});
  bool iou_one = true;
  std::string ious;
  for (const auto& b : report.bins) {
    iou_one &= b.dynamic_iou.has_value() && *b.dynamic_iou == 1.0;
    ious += " " + b.label + "=" + (b.dynamic_iou ? fmt("%.4f", *b.dynamic_iou) : std::string("-"));
  }
  return {max_err < 1e-6 && iou_one && worst_time < 2.0,
          "max point error " + fmt("%.3g", max_err) + " m, IoU" + ious + ", " + fmt("%.3f", worst_time) +
              " s per pair (< 2)"};
}

Outcome long_range() {
  const auto pair = synth::generate_frame_pair(synth::preset_scene("long-range-mover"));
  const auto result = run_pair(pair);
  const auto report = metrics::evaluate(sample_of(pair.t.frame, result.flow), std::vector<double>{0.0, 35.0});
  const auto& far = report.bins[1];
  const bool ok = far.dynamic_epe.has_value() && *far.dynamic_epe < 1e-6;
  return {ok, "35+ dynamic EPE " + (far.dynamic_epe ? fmt("%.3g", *far.dynamic_epe) : std::string("-")) +
                  " m over " + std::to_string(far.gt_dynamic) + " points"};
}

// A decision is a moving LiDAR cluster offered at least two candidate
// velocities, exactly one within 0.5 m/s of its body's velocity and every
// other candidate at least 2 m/s away from it.
std::vector<char> ghost_decisions(std::uint64_t seed) {
  auto spec = synth::preset_scene("ghost-alley");
  spec.seed = seed;
  const auto pair = synth::generate_frame_pair(spec);
  const auto result = run_pair(pair);
  std::vector<char> out;
  for (const auto& c : result.lidar.clusters) {
    const int body = pair.t.lidar_source[c.member_indices.front()];
    if (body < 0) continue;
    const Vec3 truth = spec.bodies[static_cast<std::size_t>(body)].velocity;
    if (truth.norm() == 0.0) continue;
    const auto cands = transfer::candidate_velocities(c, result.associations, result.radar);
    if (cands.velocities.size() < 2) continue;
    int near = -1;
    bool applicable = true;
    for (std::size_t k = 0; k < cands.velocities.size(); ++k) {
      const double d = (cands.velocities[k] - truth).norm();
      if (d <= 0.5) {
        applicable &= near < 0;
        near = static_cast<int>(k);
      } else if (d < 2.0) {
        applicable = false;
      }
    }
    if (!applicable || near < 0) continue;
    out.push_back(c.assigned_velocity &&
                  (*c.assigned_velocity - cands.velocities[static_cast<std::size_t>(near)]).norm() < 1e-9);
  }
  return out;
}

Outcome ghost_alley() {
  constexpr std::size_t kDecisions = 1000;
  constexpr std::uint64_t kMaxSeed = 5000;
  const std::uint64_t block = std::max(4u, std::thread::hardware_concurrency()) * 4;
  std::vector<char> decisions;
  std::uint64_t seed = 1;
  while (decisions.size() < kDecisions && seed <= kMaxSeed) {
    std::vector<std::future<std::vector<char>>> jobs;
    for (std::uint64_t s = seed; s < seed + block && s <= kMaxSeed; ++s)
      jobs.push_back(std::async(std::launch::async, ghost_decisions, s));
    for (auto& j : jobs) {
      for (const char d : j.get())
        if (decisions.size() < kDecisions) decisions.push_back(d);
      ++seed;
      if (decisions.size() >= kDecisions) break;
    }
  }
  const auto correct = static_cast<std::size_t>(std::count(decisions.begin(), decisions.end(), 1));
  const double rate = decisions.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(decisions.size());
  return {decisions.size() == kDecisions && rate >= 0.99,
          std::to_string(correct) + "/" + std::to_string(decisions.size()) + " correct (" + fmt("%.1f", 100 * rate) +
              "% >= 99%) from " + std::to_string(seed - 1) + " seeds"};
}

Outcome snowstorm() {
  std::size_t clutter = 0;
  std::size_t clutter_dynamic = 0;
  double min_iou = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto spec = synth::preset_scene("snowstorm");
    spec.seed = seed;
    const auto pair = synth::generate_frame_pair(spec);
    const auto result = run_pair(pair);
    for (std::size_t i = 0; i < result.flow.size(); ++i) {
      if (pair.t.lidar_source[i] != synth::kClutterSource) continue;
      ++clutter;
      clutter_dynamic += result.flow.points[i].dynamic;
    }
    const auto report = metrics::evaluate(sample_of(pair.t.frame, result.flow), std::vector<double>{0.0});
    const auto iou = report.bins[0].dynamic_iou;
    min_iou = std::min(min_iou, iou.value_or(0.0));
  }
  return {clutter > 0 && clutter_dynamic == 0 && min_iou >= 0.95,
          std::to_string(clutter_dynamic) + " of " + std::to_string(clutter) +
              " clutter points dynamic, min mover IoU " + fmt("%.4f", min_iou) + " (>= 0.95) over 5 seeds"};
}

// ---------------------------------------------------------------- oracles

Outcome clustering_oracles() {
  std::mt19937_64 rng(1008);
  int ccl_match = 0;
  int density_match = 0;
  constexpr int kTrials = 200;
  for (int trial = 0; trial < kTrials; ++trial) {
    const std::size_t n = 1 + rng() % 500;
    const double extent = 3.0 + static_cast<double>(rng() % 40);
    std::uniform_real_distribution<double> u(-extent, extent);
    std::uniform_real_distribution<double> vu(-4.0, 4.0);
    std::vector<Vec3> pos;
    std::vector<Vec3> vel;
    std::vector<radar::CompensatedRadarPoint> pts;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = u(rng);
      const double y = u(rng);
      const double z = u(rng) / 8.0;
      pos.emplace_back(x, y, z);
      const double vx = vu(rng);
      const double vy = vu(rng);
      vel.emplace_back(vx, vy, 0.0);
      radar::CompensatedRadarPoint c;
      c.base.position = pos.back();
      c.v_comp_vec = vel.back();
      c.v_comp = vel.back().norm();
      pts.push_back(c);
    }
    std::vector<std::size_t> subset;
    for (std::size_t i = 0; i < n; ++i)
      if (rng() % 4 != 0) subset.push_back(i);
    std::shuffle(subset.begin(), subset.end(), rng);

    oracle::Partition got;
    for (const auto& c : radar::ccl_cluster(pts, subset, 3.0, 1.5)) got.push_back(c.member_indices);
    ccl_match += oracle::canonical(got) == oracle::ccl(pos, vel, subset, 3.0, 1.5);

    const double eps = 0.5 + static_cast<double>(rng() % 10) / 4.0;
    const int min_pts = 1 + static_cast<int>(rng() % 8);
    const auto dc = lidar::density_cluster(pos, subset, eps, min_pts);
    const auto ref = oracle::density(pos, subset, eps, min_pts);
    auto noise = dc.noise;
    std::sort(noise.begin(), noise.end());
    density_match += oracle::canonical(dc.clusters) == ref.clusters && noise == ref.noise;
  }
  return {ccl_match == kTrials && density_match == kTrials,
          "CCL " + std::to_string(ccl_match) + "/" + std::to_string(kTrials) + ", density " +
              std::to_string(density_match) + "/" + std::to_string(kTrials) + " exact matches"};
}

bool close(const std::optional<double>& a, const std::optional<double>& b, double tol, double& worst) {
  if (a.has_value() != b.has_value()) return false;
  if (a) worst = std::max(worst, std::abs(*a - *b));
  return !a || std::abs(*a - *b) <= tol;
}

Outcome metrics_oracles() {
  std::mt19937_64 rng(1009);
  int matched = 0;
  double worst = 0.0;
  constexpr int kTrials = 100;
  std::uniform_real_distribution<double> pos(-240.0, 240.0);
  std::uniform_real_distribution<double> flow(-0.2, 0.2);
  for (int trial = 0; trial < kTrials; ++trial) {
    EvalSample s;
    const std::size_t n = 1 + rng() % 20000;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = pos(rng);
      const double y = pos(rng);
      const double z = pos(rng) / 40.0;
      s.positions.emplace_back(x, y, z);
      const bool moving = rng() % 3 == 0;
      const double k = moving ? 10.0 : 1.0;
      const double gx = k * flow(rng);
      const double gy = k * flow(rng);
      s.gt.emplace_back(gx, gy, 0.0);
      const double px = flow(rng);
      const double py = flow(rng);
      const double pz = flow(rng);
      s.pred.push_back(s.gt.back() + Vec3(px, py, pz) * (rng() % 2 ? 1.0 : 4.0));
      s.classes.push_back(moving ? PointClass::FD : static_cast<PointClass>(rng() % 2));
    }
    std::vector<double> edges = {0.0};
    const int nb = static_cast<int>(rng() % 10);
    for (int k = 0; k < nb; ++k) edges.push_back(edges.back() + 2.0 + static_cast<double>(rng() % 50));

    const auto report = metrics::evaluate(s, edges);
    const auto grid = metrics::crop_to_grid(s, 204.8);
    const auto ref = oracle::metrics(grid.positions, grid.pred, grid.gt, grid.classes, edges, 0.05);
    bool ok = report.bins.size() == edges.size();
    for (std::size_t k = 0; ok && k < edges.size(); ++k) {
      ok &= close(report.bins[k].dynamic_epe, ref.epe[k], 1e-9, worst);
      ok &= close(report.bins[k].dynamic_iou, ref.iou[k], 1e-9, worst);
    }
    ok &= close(report.three_way.fd, ref.fd, 1e-9, worst);
    ok &= close(report.three_way.fs, ref.fs, 1e-9, worst);
    ok &= close(report.three_way.bs, ref.bs, 1e-9, worst);
    ok &= close(report.three_way.mean, ref.mean3, 1e-9, worst);
    matched += ok;
  }
  return {matched == kTrials, std::to_string(matched) + "/" + std::to_string(kTrials) +
                                  " instances within 1e-9, worst difference " + fmt("%.3g", worst)};
}

// ---------------------------------------------------------------- determinism

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dflow");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream sink;
  auto* old = std::cout.rdbuf(sink.rdbuf());
  const int code = cli::run(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old);
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "dflow_acceptance_determinism";
  fs::remove_all(root);
  const auto seq = (root / "seq").string();
  if (cli({"--seed", "11", "synth", "--preset", "ghost-alley", "--frames", "11", "--out", seq}) != 0)
    return {false, "synth failed"};
  for (const std::string threads : {"1", "8"}) {
    const auto flows = (root / ("flows" + threads)).string();
    if (cli({"--threads", threads, "batch", "--seq", seq, "--out", flows}) != 0) return {false, "batch failed"};
    if (cli({"eval", "--seq", seq, "--flow-dir", flows, "--out", (root / ("report" + threads + ".json")).string()}) != 0)
      return {false, "eval failed"};
  }
  std::size_t files = 0;
  std::size_t identical = 0;
  for (const auto& e : fs::directory_iterator(root / "flows1")) {
    if (!e.path().string().ends_with(".flow.csv")) continue;
    ++files;
    identical += slurp(e.path()) == slurp(root / "flows8" / e.path().filename());
  }
  const bool reports = slurp(root / "report1.json") == slurp(root / "report8.json");
  fs::remove_all(root);
  return {files == 10 && identical == files && reports,
          std::to_string(identical) + "/" + std::to_string(files) + " flow files identical, reports " +
              (reports ? "identical" : "differ")};
}

}  // namespace

int main() {
  log::set_level(log::Level::kQuiet);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"solver exactness", solver_exactness},
      {"solver noise robustness", solver_noise},
      {"static-world soundness", static_world},
      {"highway end-to-end", highway},
      {"long-range mover", long_range},
      {"ghost resolution", ghost_alley},
      {"snowstorm clutter", snowstorm},
      {"clustering oracles", clustering_oracles},
      {"metrics oracles", metrics_oracles},
      {"batch determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << (i + 1) << ". " << criteria[i].first << ": " << o.detail
              << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << "\n";
  return failed ? 1 : 0;
}
