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

#include "dflow/cli/commands.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "dflow/core/frame.hpp"
#include "dflow/core/io.hpp"
#include "dflow/core/log.hpp"
#include "dflow/metrics/metrics.hpp"
#include "dflow/pipeline.hpp"
#include "dflow/synth/scene.hpp"

namespace dflow::cli {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

nlohmann::json manifest(const std::string& command, const nlohmann::json& input, const PipelineConfig& config,
                        const GlobalOptions& global) {
  nlohmann::json m;
  m["tool"] = "dflow";
  m["version"] = kVersion;
  m["command"] = command;
  m["input"] = input;
  m["config"] = io::config_to_json(config);
  m["seed"] = global.seed ? nlohmann::json(*global.seed) : nlohmann::json(nullptr);
  m["timings_ms"] = nlohmann::json::object();
  return m;
}

void write_manifest(const fs::path& dir, const nlohmann::json& m) {
  io::write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

/// Dotted paths of every leaf key, e.g. "noise.clutter_fraction".
void collect_keys(const nlohmann::json& j, const std::string& prefix, std::vector<std::string>& out) {
  for (const auto& [key, value] : j.items()) {
    const auto path = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object())
      collect_keys(value, path, out);
    else
      out.push_back(path);
  }
}

Frame load_validated(const fs::path& dir) {
  auto v = validate_frame(io::read_frame(dir));
  if (v.rejected_lidar > 0 || v.rejected_radar > 0)
    log::warn(dir.string() + ": dropped " + std::to_string(v.rejected_lidar) + " lidar and " +
              std::to_string(v.rejected_radar) + " radar points");
  return std::move(v.frame);
}

std::string flow_file_name(int index, bool binary) {
  return io::frame_dir_name(index) + (binary ? ".flow.bin" : ".flow.csv");
}

void write_flow(const fs::path& file, const FlowField& flow, bool binary) {
  if (binary)
    io::write_flow_binary(file, flow);
  else
    io::write_flow_csv(file, flow);
}

int worker_count(int requested, std::size_t jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return std::max(1, std::min<int>(n, static_cast<int>(jobs)));
}

}  // namespace

PipelineConfig effective_config(const GlobalOptions& global) {
  PipelineConfig config = global.config_path.empty() ? PipelineConfig{} : io::read_config_file(global.config_path);
  for (const auto& o : global.overrides) io::apply_config_override(config, o);
  config.validate();
  return config;
}

std::vector<double> parse_bins(const std::string& text) {
  std::vector<double> edges;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError("bins: not a number: '" + item + "'");
    edges.push_back(v);
  }
  metrics::validate_bin_edges(edges);
  return edges;
}

int cmd_synth(const GlobalOptions& global, const SynthOptions& opts) {
  if (opts.preset.empty() == opts.spec_file.empty()) throw ConfigError("synth: give exactly one of --preset, --spec");
  if (opts.frames < 2) throw ConfigError("synth: --frames must be at least 2");

  synth::SceneSpec spec;
  std::vector<std::string> overridden;
  if (!opts.preset.empty()) {
    spec = synth::preset_scene(opts.preset);
  } else {
    const auto j = io::parse_json_text(io::read_text_file(opts.spec_file), opts.spec_file);
    spec = synth::scene_from_json(j);
    collect_keys(j, "", overridden);
    std::erase(overridden, std::string("preset"));
  }
  if (global.seed) spec.seed = *global.seed;

  const auto t0 = Clock::now();
  const auto frames = synth::generate_sequence(spec, opts.frames);
  const double gen_ms = elapsed_ms(t0);

  const fs::path out(opts.out);
  auto m = manifest("synth", {{"preset", opts.preset}, {"spec_file", opts.spec_file}}, effective_config(global),
                    global);
  m["seed"] = spec.seed;
  m["scene"] = synth::scene_to_json(spec);
  m["overrides"] = overridden;
  m["timings_ms"]["generate"] = gen_ms;
  for (const auto& f : frames) {
    const auto dir = out / io::frame_dir_name(f.frame.index);
    const auto tw = Clock::now();
    if (opts.binary) {
      fs::create_directories(dir);
      io::write_frame_binary(dir / "frame.bin", f.frame);
    } else {
      io::write_frame_dir(dir, f.frame);
    }
    m["timings_ms"][io::frame_dir_name(f.frame.index)] = elapsed_ms(tw);
  }
  write_manifest(out, m);
  log::info("synth: wrote " + std::to_string(frames.size()) + " frames to " + out.string());
  return kExitOk;
}

int cmd_flow(const GlobalOptions& global, const FlowOptions& opts) {
  const auto config = effective_config(global);
  const auto frame_t = load_validated(opts.frame_t);
  const auto frame_t1 = load_validated(opts.frame_t1);

  const auto t0 = Clock::now();
  const auto result = run_pipeline(frame_t, frame_t1, config);
  const double ms = elapsed_ms(t0);

  const fs::path out(opts.out);
  write_flow(out, result.flow, opts.binary);
  if (opts.dump_clusters) io::write_text_file(out.string() + ".clusters.json", debug_clusters_json(result).dump(2) + "\n");

  auto m = manifest("flow", {{"frame_t", opts.frame_t}, {"frame_t1", opts.frame_t1}}, config, global);
  m["timings_ms"][io::frame_dir_name(frame_t.index)] = ms;
  m["radar_missing"] = result.radar_missing;
  write_manifest(out.has_parent_path() ? out.parent_path() : fs::path("."), m);
  return kExitOk;
}

int cmd_batch(const GlobalOptions& global, const BatchOptions& opts) {
  const auto config = effective_config(global);
  const auto frames = io::list_sequence(opts.seq);
  if (frames.size() < 2) throw DataError("need at least two frames");

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    if (frames[i + 1].first == frames[i].first + 1)
      pairs.emplace_back(i, i + 1);
    else
      log::warn("batch: gap between frames " + std::to_string(frames[i].first) + " and " +
                std::to_string(frames[i + 1].first) + "; pair skipped");
  }
  if (pairs.empty()) throw DataError("no consecutive frame pairs in " + opts.seq);

  const fs::path out(opts.out);
  fs::create_directories(out);
  std::vector<double> timings(pairs.size(), 0.0);
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;

  auto worker = [&]() {
    for (;;) {
      const auto k = next.fetch_add(1);
      if (k >= pairs.size()) return;
      {
        std::lock_guard lock(error_mutex);
        if (error) return;
      }
      try {
        const auto& [a, b] = pairs[k];
        const auto frame_t = load_validated(frames[a].second);
        const auto frame_t1 = load_validated(frames[b].second);
        const auto t0 = Clock::now();
        const auto result = run_pipeline(frame_t, frame_t1, config);
        timings[k] = elapsed_ms(t0);
        write_flow(out / flow_file_name(frames[a].first, opts.binary), result.flow, opts.binary);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };

  const int n_workers = worker_count(global.threads, pairs.size());
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  auto m = manifest("batch", {{"sequence", opts.seq}}, config, global);
  m["threads"] = n_workers;
  for (std::size_t k = 0; k < pairs.size(); ++k)
    m["timings_ms"][io::frame_dir_name(frames[pairs[k].first].first)] = timings[k];
  write_manifest(out, m);
  log::info("batch: wrote " + std::to_string(pairs.size()) + " flow files");
  return kExitOk;
}

int cmd_eval(const GlobalOptions& global, const EvalOptions& opts) {
  const auto config = effective_config(global);
  metrics::validate_bin_edges(opts.bins);

  std::vector<std::pair<fs::path, fs::path>> inputs;  // (flow file, frame dir)
  if (!opts.seq.empty()) {
    if (opts.flow_dir.empty()) throw ConfigError("eval: --seq needs --flow-dir");
    for (const auto& [index, dir] : io::list_sequence(opts.seq)) {
      for (const bool binary : {false, true}) {
        const auto f = fs::path(opts.flow_dir) / flow_file_name(index, binary);
        if (fs::exists(f)) {
          inputs.emplace_back(f, dir);
          break;
        }
      }
    }
    if (inputs.empty()) throw DataError("eval: no flow files in " + opts.flow_dir);
  } else {
    if (opts.flows.empty() || opts.flows.size() != opts.frames.size())
      throw ConfigError("eval: give matching --flow and --frame lists, or --seq with --flow-dir");
    for (std::size_t i = 0; i < opts.flows.size(); ++i) inputs.emplace_back(opts.flows[i], opts.frames[i]);
  }

  metrics::EvalSample sample;
  for (const auto& [flow_file, frame_dir] : inputs) {
    const auto frame = load_validated(frame_dir);
    if (!frame.gt) throw DataError("eval: frame " + frame_dir.string() + " has no ground truth");
    const auto flow = io::read_flow(flow_file);
    if (flow.size() != frame.lidar.size())
      throw DataError("eval: frame " + frame_dir.string() + ": flow has " + std::to_string(flow.size()) +
                      " points, frame has " + std::to_string(frame.lidar.size()));
    for (std::size_t i = 0; i < flow.size(); ++i) {
      sample.positions.push_back(frame.lidar[i].position);
      sample.pred.push_back(flow.points[i].delta);
      sample.gt.push_back(frame.gt->flow[i]);
      sample.classes.push_back(frame.gt->classes[i]);
    }
  }

  const auto report = metrics::evaluate(sample, opts.bins, config.grid_half_extent, config.dynamic_flow_threshold);
  std::cout << report.to_table();
  if (!opts.out.empty()) io::write_text_file(opts.out, report.to_json().dump(2) + "\n");

  bool failed = false;
  if (opts.max_epe) {
    if (!report.three_way.mean) {
      log::warn("eval: no three-way EPE to check against --max-epe");
    } else if (!(*report.three_way.mean <= *opts.max_epe)) {
      std::cerr << "eval: three-way EPE " << *report.three_way.mean << " exceeds " << *opts.max_epe << "\n";
      failed = true;
    }
  }
  if (opts.min_iou) {
    for (const auto& b : report.bins) {
      if (b.dynamic_iou && !(*b.dynamic_iou >= *opts.min_iou)) {
        std::cerr << "eval: dynamic IoU " << *b.dynamic_iou << " in bin " << b.label << " below " << *opts.min_iou
                  << "\n";
        failed = true;
      }
    }
  }
  return failed ? kExitThreshold : kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Radar-guided LiDAR scene flow pseudo-labelling"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  GlobalOptions global;
  std::uint64_t seed = 0;
  app.add_option("--config", global.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", global.overrides, "Config override key=value (repeatable)");
  app.add_option("--threads", global.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_flag("-v,--verbose", global.verbose, "Verbose logging");
  app.fallthrough();

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic sequence with ground truth");
  synth->add_option("--preset", synth_opts.preset, "Preset scene name");
  synth->add_option("--spec", synth_opts.spec_file, "Scene spec JSON file");
  synth->add_option("--out", synth_opts.out, "Output sequence directory")->required();
  synth->add_option("--frames", synth_opts.frames, "Number of frames")->capture_default_str();
  synth->add_flag("--binary", synth_opts.binary, "Write frame.bin containers");

  FlowOptions flow_opts;
  auto* flow = app.add_subcommand("flow", "Estimate flow for one frame pair");
  flow->add_option("--frame-t", flow_opts.frame_t, "Frame t directory")->required();
  flow->add_option("--frame-t1", flow_opts.frame_t1, "Frame t+1 directory")->required();
  flow->add_option("--out", flow_opts.out, "Output flow file")->required();
  flow->add_flag("--binary", flow_opts.binary, "Binary flow file");
  flow->add_flag("--dump-clusters", flow_opts.dump_clusters, "Write per-cluster decisions as JSON");

  BatchOptions batch_opts;
  auto* batch = app.add_subcommand("batch", "Estimate flow for every consecutive pair of a sequence");
  batch->add_option("--seq", batch_opts.seq, "Sequence directory")->required();
  batch->add_option("--out", batch_opts.out, "Output directory")->required();
  batch->add_flag("--binary", batch_opts.binary, "Binary flow files");

  EvalOptions eval_opts;
  std::string bins = "0,35";
  auto* eval = app.add_subcommand("eval", "Score flow files against ground truth");
  eval->add_option("--flow", eval_opts.flows, "Flow file (repeatable, paired with --frame)");
  eval->add_option("--frame", eval_opts.frames, "Frame directory with gt.csv (repeatable)");
  eval->add_option("--seq", eval_opts.seq, "Sequence directory");
  eval->add_option("--flow-dir", eval_opts.flow_dir, "Directory of NNNNNN.flow.* files");
  eval->add_option("--bins", bins, "Range bin edges")->capture_default_str();
  eval->add_option("--out", eval_opts.out, "Report JSON path");
  eval->add_option("--max-epe", eval_opts.max_epe, "Fail (exit 3) above this three-way EPE");
  eval->add_option("--min-iou", eval_opts.min_iou, "Fail (exit 3) below this dynamic IoU");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) global.seed = seed;
  log::set_level(global.verbose ? log::Level::kInfo : log::Level::kWarn);

  try {
    if (*synth) return cmd_synth(global, synth_opts);
    if (*flow) return cmd_flow(global, flow_opts);
    if (*batch) return cmd_batch(global, batch_opts);
    eval_opts.bins = parse_bins(bins);
    return cmd_eval(global, eval_opts);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace dflow::cli
