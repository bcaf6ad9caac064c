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
 * \file types.hpp
 * \brief Shared domain types for the radar-to-LiDAR scene flow pipeline.
 *
 * Frame conventions:
 *  - All positions are expressed in the ego frame at the frame's own timestamp.
 *  - Sensor extrinsics map ego frame -> sensor frame: p_s = R * p_e + t.
 *  - Doppler sign: positive v_meas means the target recedes from the sensor.
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace dflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Malformed or inconsistent input data (CLI exit code 2).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (CLI exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RadarPoint {
  Vec3 position = Vec3::Zero();
  double v_meas = 0.0;  ///< radial velocity [m/s], positive = receding
  int sensor_id = 0;
  int frame_index = 0;
};

struct LidarPoint {
  Vec3 position = Vec3::Zero();
  double intensity = 0.0;  ///< in [0, 1]
  int frame_index = 0;
};

struct SensorExtrinsic {
  Mat3 rotation = Mat3::Identity();  ///< ego -> sensor
  Vec3 translation = Vec3::Zero();   ///< ego -> sensor

  Vec3 to_sensor(const Vec3& p_ego) const { return rotation * p_ego + translation; }
  /// Sensor origin expressed in the ego frame.
  Vec3 origin_in_ego() const { return -rotation.transpose() * translation; }
};

struct EgoState {
  Vec3 v_ego = Vec3::Zero();  ///< ego linear velocity [m/s], ego frame
  std::vector<SensorExtrinsic> sensor_extrinsics;
  double dt = 0.1;  ///< frame interval [s]

  /// Rigid ego displacement over one frame interval (pure translation model).
  Vec3 displacement() const { return v_ego * dt; }
};

struct RadarCluster {
  std::vector<std::size_t> member_indices;  ///< into the radar frame
  Vec3 v_full = Vec3::Zero();
  double solve_residual = 0.0;  ///< RMS of A v - b [m/s]
  bool rank_deficient = false;
};

struct LidarCluster {
  std::vector<std::size_t> member_indices;  ///< into the LiDAR frame
  bool dynamic = false;
  std::optional<Vec3> assigned_velocity;
  std::vector<int> source_radar_clusters;
};

inline constexpr int kNoCluster = -1;

struct FlowPoint {
  Vec3 delta = Vec3::Zero();  ///< non-ego displacement over dt [m]
  bool dynamic = false;
  bool valid = false;  ///< point took part in association/clustering
  int cluster_id = kNoCluster;
};

/// Per-LiDAR-point non-ego flow.
struct FlowField {
  std::vector<FlowPoint> points;

  std::size_t size() const { return points.size(); }
};

enum class PointClass : std::uint8_t { BS = 0, FS = 1, FD = 2 };

std::string to_string(PointClass c);
PointClass point_class_from_string(const std::string& s);

struct GroundTruth {
  std::vector<Vec3> flow;  ///< non-ego flow per LiDAR point [m]
  std::vector<PointClass> classes;
};

struct Frame {
  int index = 0;
  std::vector<LidarPoint> lidar;
  std::vector<RadarPoint> radar;
  EgoState ego;
  std::optional<GroundTruth> gt;
  bool has_radar = true;  ///< false when the radar stream was missing on disk
};

/// Pipeline hyperparameters.
struct PipelineConfig {
  double delta_dyn = 0.05;            ///< [m/s] Doppler motion threshold
  double delta_spatial = 3.0;         ///< [m] CCL spatial edge threshold
  double delta_velocity = 1.5;        ///< [m/s] CCL velocity edge threshold
  double delta_intensity = 0.008;     ///< LiDAR intensity split
  double delta_neighbor = 0.5;        ///< [m] low-intensity reattachment radius
  double delta_adaptive_min = 0.1;    ///< [m]
  double delta_adaptive_max = 5.0;    ///< [m]
  double adaptive_range_ref = 200.0;  ///< [m] range at which the gate saturates
  double v_bound = 60.0;              ///< [m/s] per-axis solver box
  double grid_half_extent = 204.8;    ///< [m]
  double density_cluster_eps = 1.0;   ///< [m]
  int density_cluster_min_pts = 5;
  double dynamic_flow_threshold = 0.05;  ///< [m]
  double ground_cell_size = 1.0;         ///< [m]
  double ground_height_tol = 0.3;        ///< [m]

  /// Throws ConfigError on a non-positive threshold or inverted adaptive range.
  void validate() const;
};

}  // namespace dflow
