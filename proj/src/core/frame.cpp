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

#include "dflow/core/frame.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>

namespace dflow {

namespace {

constexpr double kRotationTol = 1e-9;
constexpr double kSensorOriginTol = 1e-6;

bool finite(const Vec3& v) { return v.allFinite(); }

}  // namespace

void check_extrinsics(const EgoState& ego) {
  if (!(ego.dt > 0.0) || !std::isfinite(ego.dt)) throw DataError("ego: dt must be positive");
  if (!finite(ego.v_ego)) throw DataError("ego: non-finite ego velocity");
  for (std::size_t i = 0; i < ego.sensor_extrinsics.size(); ++i) {
    const auto& ext = ego.sensor_extrinsics[i];
    if (!ext.rotation.allFinite() || !finite(ext.translation))
      throw DataError("sensor " + std::to_string(i) + ": non-finite extrinsic");
    const double det = ext.rotation.determinant();
    if (det < 0.0) throw DataError("sensor " + std::to_string(i) + ": improper rotation");
    const double ortho = (ext.rotation.transpose() * ext.rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > kRotationTol || std::abs(det - 1.0) > kRotationTol)
      throw DataError("sensor " + std::to_string(i) + ": rotation is not orthonormal");
  }
}

ValidatedFrame validate_frame(Frame frame) {
  check_extrinsics(frame.ego);

  ValidatedFrame out;
  const bool has_gt = frame.gt.has_value();
  if (has_gt && (frame.gt->flow.size() != frame.lidar.size() ||
                 frame.gt->classes.size() != frame.lidar.size()))
    throw DataError("frame " + std::to_string(frame.index) + ": ground truth length mismatch");

  std::vector<LidarPoint> lidar;
  GroundTruth gt;
  lidar.reserve(frame.lidar.size());
  for (std::size_t i = 0; i < frame.lidar.size(); ++i) {
    const auto& p = frame.lidar[i];
    const bool ok = finite(p.position) && std::isfinite(p.intensity) && p.intensity >= 0.0 &&
                    p.intensity <= 1.0;
    if (!ok) {
      ++out.rejected_lidar;
      continue;
    }
    lidar.push_back(p);
    if (has_gt) {
      gt.flow.push_back(frame.gt->flow[i]);
      gt.classes.push_back(frame.gt->classes[i]);
    }
  }
  if (lidar.empty()) throw DataError("frame " + std::to_string(frame.index) + ": empty LiDAR frame");

  const auto n_sensors = static_cast<int>(frame.ego.sensor_extrinsics.size());
  std::vector<RadarPoint> radar;
  radar.reserve(frame.radar.size());
  for (const auto& r : frame.radar) {
    if (r.sensor_id < 0 || r.sensor_id >= n_sensors)
      throw DataError("frame " + std::to_string(frame.index) + ": unknown sensor_id " +
                      std::to_string(r.sensor_id));
    const bool ok = finite(r.position) && std::isfinite(r.v_meas) && r.position.norm() > 0.0 &&
                    frame.ego.sensor_extrinsics[r.sensor_id].to_sensor(r.position).norm() >=
                        kSensorOriginTol;
    if (!ok) {
      ++out.rejected_radar;
      continue;
    }
    radar.push_back(r);
  }

  frame.lidar = std::move(lidar);
  frame.radar = std::move(radar);
  if (has_gt) frame.gt = std::move(gt);
  out.frame = std::move(frame);
  return out;
}

}  // namespace dflow
