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
 * \file io.hpp
 * \brief Frame directories, binary containers, flow files and config files.
 *
 * Frame directory `NNNNNN/`:
 *   lidar.csv  x,y,z,intensity
 *   radar.csv  x,y,z,v_meas,sensor_id
 *   ego.json   {"v_ego": [..], "dt": s, "extrinsics": [{"rotation": [[..]x3], "translation": [..]}]}
 *   gt.csv     dx,dy,dz,class   (optional, class in {BS, FS, FD})
 *
 * Binary containers are little-endian and start with a 16-byte magic.
 */
#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "dflow/core/types.hpp"

namespace dflow::io {

namespace fs = std::filesystem;

inline constexpr std::array<char, 16> kFrameMagic = {'D', 'F', 'L', 'O', 'W', '-', 'F', 'R',
                                                     'A', 'M', 'E', '-', 'V', '1', '\0', '\0'};
inline constexpr std::array<char, 16> kFlowMagic = {'D', 'F', 'L', 'O', 'W', '-', 'F', 'L',
                                                    'O', 'W', '-', 'V', '1', '\0', '\0', '\0'};

/// Shortest decimal that round-trips the double exactly.
std::string format_double(double v);

std::string frame_dir_name(int index);

/// Reads a text frame directory. A missing radar.csv yields has_radar = false.
Frame read_frame_dir(const fs::path& dir);
void write_frame_dir(const fs::path& dir, const Frame& frame);

void write_frame_binary(const fs::path& file, const Frame& frame);
Frame read_frame_binary(const fs::path& file);

/// Reads `dir/frame.bin` when present, the text files otherwise.
Frame read_frame(const fs::path& dir);

/// Numbered frame directories in a sequence, sorted by index.
std::vector<std::pair<int, fs::path>> list_sequence(const fs::path& dir);

// Flow files: per-point dx,dy,dz,dynamic,valid,cluster_id
void write_flow_csv(const fs::path& file, const FlowField& flow);
FlowField read_flow_csv(const fs::path& file);
void write_flow_binary(const fs::path& file, const FlowField& flow);
FlowField read_flow_binary(const fs::path& file);
/// Dispatches on the magic header.
FlowField read_flow(const fs::path& file);

nlohmann::json ego_to_json(const EgoState& ego);
EgoState ego_from_json(const nlohmann::json& j);

nlohmann::json config_to_json(const PipelineConfig& config);
/// Applies the keys in `j` onto `base`; unknown keys throw ConfigError.
PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base = {});
PipelineConfig read_config_file(const fs::path& file);
/// Applies a single "key=value" override.
void apply_config_override(PipelineConfig& config, std::string_view assignment);

/// Parses JSON text; syntax errors become DataError naming the line number.
nlohmann::json parse_json_text(const std::string& text, const std::string& origin);
nlohmann::json read_json_file(const fs::path& file);
void write_text_file(const fs::path& file, const std::string& text);
std::string read_text_file(const fs::path& file);

}  // namespace dflow::io
