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
 * \file commands.hpp
 * \brief Subcommands of the `dflow` tool: synth, flow, batch and eval.
 *
 * Every command writes one `manifest.json` into its output directory holding
 * the input paths, the effective config, per-frame timings, the tool version
 * and the seed.
 */
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dflow/core/types.hpp"

namespace dflow::cli {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitThreshold = 3;

struct GlobalOptions {
  std::string config_path;             ///< empty: built-in defaults
  std::vector<std::string> overrides;  ///< "key=value", applied after the file
  int threads = 1;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

struct SynthOptions {
  std::string preset;
  std::string spec_file;
  std::string out;
  int frames = 2;
  bool binary = false;
};

struct FlowOptions {
  std::string frame_t;
  std::string frame_t1;
  std::string out;
  bool binary = false;
  bool dump_clusters = false;
};

struct BatchOptions {
  std::string seq;
  std::string out;
  bool binary = false;
};

struct EvalOptions {
  std::vector<std::string> flows;   ///< paired with `frames`
  std::vector<std::string> frames;
  std::string seq;                  ///< alternative: sequence + flow directory
  std::string flow_dir;
  std::vector<double> bins{0.0, 35.0};
  std::string out;
  std::optional<double> max_epe;    ///< on the three-way mean
  std::optional<double> min_iou;    ///< on every non-empty range bin
};

/// Defaults, then the config file, then `--set` overrides.
PipelineConfig effective_config(const GlobalOptions& global);

/// Parses "0,35" style bin edge lists.
std::vector<double> parse_bins(const std::string& text);

int cmd_synth(const GlobalOptions& global, const SynthOptions& opts);
int cmd_flow(const GlobalOptions& global, const FlowOptions& opts);
int cmd_batch(const GlobalOptions& global, const BatchOptions& opts);
int cmd_eval(const GlobalOptions& global, const EvalOptions& opts);

/// Full command-line entry point with exit-code mapping.
int run(int argc, char** argv);

}  // namespace dflow::cli
