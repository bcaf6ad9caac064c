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

#include "dflow/core/types.hpp"

#include <cmath>

namespace dflow {

std::string to_string(PointClass c) {
  switch (c) {
    case PointClass::BS: return "BS";
    case PointClass::FS: return "FS";
    case PointClass::FD: return "FD";
  }
  return "BS";
}

PointClass point_class_from_string(const std::string& s) {
  if (s == "BS") return PointClass::BS;
  if (s == "FS") return PointClass::FS;
  if (s == "FD") return PointClass::FD;
  throw DataError("unknown point class '" + s + "' (expected BS, FS or FD)");
}

void PipelineConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw ConfigError(std::string("config: ") + name + " must be strictly positive");
  };
  positive(delta_dyn, "delta_dyn");
  positive(delta_spatial, "delta_spatial");
  positive(delta_velocity, "delta_velocity");
  positive(delta_intensity, "delta_intensity");
  positive(delta_neighbor, "delta_neighbor");
  positive(delta_adaptive_min, "delta_adaptive_min");
  positive(delta_adaptive_max, "delta_adaptive_max");
  positive(adaptive_range_ref, "adaptive_range_ref");
  positive(v_bound, "v_bound");
  positive(grid_half_extent, "grid_half_extent");
  positive(density_cluster_eps, "density_cluster_eps");
  positive(static_cast<double>(density_cluster_min_pts), "density_cluster_min_pts");
  positive(dynamic_flow_threshold, "dynamic_flow_threshold");
  positive(ground_cell_size, "ground_cell_size");
  positive(ground_height_tol, "ground_height_tol");
  if (!(delta_adaptive_min < delta_adaptive_max))
    throw ConfigError("config: delta_adaptive_min must be below delta_adaptive_max");
}

}  // namespace dflow
