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
 * \file scene.hpp
 * \brief Synthetic rigid-body scenes with LiDAR, Doppler radar and exact flow.
 *
 * Bodies are axis-aligned boxes that translate without rotating. LiDAR returns
 * are grid samples on the box faces that face the LiDAR origin (no inter-object
 * occlusion), with spacing growing with range. The sample set is fixed at the
 * first frame and carried along by the body velocity, so consecutive frames
 * observe the same surface points.
 *
 * Radar returns are drawn from those surface samples inside some radar's field
 * of view, thinned greedily so every sample has a radar return closer than
 * min(0.9 * default association gate, 0.6 m). Multipath ghosts mirror a real
 * return about a vertical plane y = body_y + ghost_plane_offset and scale its
 * Doppler by -1 or 0.5.
 *
 * World frame = ego frame of frame 0; the ego translates at constant velocity.
 */
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dflow/core/types.hpp"

namespace dflow::synth {

inline constexpr int kGroundSource = -1;
inline constexpr int kClutterSource = -2;

struct RigidBody {
  Vec3 center = Vec3::Zero();
  Vec3 extents = Vec3::Ones();
  Vec3 velocity = Vec3::Zero();

  /// FD when the body moves more than 5 cm per frame, FS otherwise.
  PointClass point_class(double dt) const;
};

struct RadarSensorModel {
  Vec3 origin = Vec3::Zero();  ///< ego frame
  double yaw = 0.0;            ///< [rad]
  double pitch = 0.0;
  double roll = 0.0;
  double fov_half_angle = 1.3;  ///< azimuth half-width [rad]
  double max_range = 300.0;

  SensorExtrinsic extrinsic() const;
  bool sees(const Vec3& p_ego) const;
};

struct NoiseModel {
  double doppler_sigma = 0.0;  ///< [m/s]
  double lidar_sigma = 0.0;    ///< [m], per axis
  double clutter_fraction = 0.0;
  double ghost_probability = 0.0;
  double ghost_plane_offset = 0.0;  ///< [m]
};

struct SceneSpec {
  std::string name;
  std::vector<RigidBody> bodies;
  Vec3 ego_velocity = Vec3::Zero();
  std::vector<RadarSensorModel> radars;
  Vec3 lidar_origin{0.0, 0.0, 2.5};
  double dt = 0.1;
  NoiseModel noise;
  std::uint64_t seed = 0;
  bool ground_plane = true;
  double ground_radius = 60.0;  ///< [m] ground lattice radius around the ego

  /// Throws ConfigError on an empty scene or invalid parameters.
  void validate() const;
};

struct SyntheticFrame {
  Frame frame;                    ///< with ground truth
  std::vector<int> lidar_source;  ///< body id, kGroundSource or kClutterSource
  std::vector<int> radar_source;  ///< body id
  std::vector<char> radar_ghost;
};

struct FramePair {
  SyntheticFrame t;
  SyntheticFrame t1;
};

std::vector<SyntheticFrame> generate_sequence(const SceneSpec& spec, int n_frames);
FramePair generate_frame_pair(const SceneSpec& spec);

/// Ghost of `source` mirrored about the plane y = plane_y, Doppler scaled by `factor`.
RadarPoint mirror_ghost(const RadarPoint& source, double plane_y, double factor);

const std::vector<std::string>& preset_names();
std::map<std::string, SceneSpec> preset_scenes();
/// Throws ConfigError listing the catalog for an unknown name.
SceneSpec preset_scene(const std::string& name);

nlohmann::json scene_to_json(const SceneSpec& spec);
/// Applies the keys of `j` onto `base`. A "preset" key selects the base first.
SceneSpec scene_from_json(const nlohmann::json& j, SceneSpec base = {});

}  // namespace dflow::synth
