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

#include "dflow/core/types.hpp"

namespace dflow {

struct ValidatedFrame {
  Frame frame;
  std::size_t rejected_lidar = 0;
  std::size_t rejected_radar = 0;
};

/// Drops non-finite or out-of-range points and checks the extrinsics table.
///
/// LiDAR points are rejected when a coordinate is non-finite or the intensity
/// falls outside [0, 1]; ground-truth rows of rejected points are dropped with
/// them. Radar points are rejected when non-finite, at the ego origin, or at
/// the origin of their own sensor. Throws DataError on an empty LiDAR frame,
/// an unknown sensor id, an improper or non-orthonormal rotation, or dt <= 0.
ValidatedFrame validate_frame(Frame frame);

/// Throws DataError unless every rotation is orthonormal with det +1 (1e-9).
void check_extrinsics(const EgoState& ego);

}  // namespace dflow
