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

#include <vector>

#include <nlohmann/json.hpp>

#include "dflow/core/types.hpp"
#include "dflow/lidar/lidar_prep.hpp"
#include "dflow/radar/radar_motion.hpp"
#include "dflow/transfer/label_transfer.hpp"

namespace dflow {

struct PipelineResult {
  FlowField flow;
  radar::RadarMotion radar;
  lidar::PreparedLidarFrame lidar;
  std::vector<transfer::Association> associations;
  bool radar_missing = false;  ///< degraded to an all-static field
};

/// Ground-removes frame t+1 and moves it into frame t's ego coordinates.
std::vector<Vec3> align_next_frame(const Frame& next, const EgoState& ego_t, const PipelineConfig& config);

/// Full frame-pair pipeline. Both frames must already be validated.
PipelineResult run_pipeline(const Frame& frame_t, const Frame& frame_t1, const PipelineConfig& config);

/// Per-frame dump of radar clusters and LiDAR cluster decisions.
nlohmann::json debug_clusters_json(const PipelineResult& result);

}  // namespace dflow
