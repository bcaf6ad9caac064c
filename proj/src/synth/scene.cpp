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

#include "dflow/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>

#include <Eigen/Geometry>

namespace dflow::synth {

namespace {

constexpr double kFdThreshold = 0.05;     // [m] per frame
constexpr double kGroundLattice = 1.0;    // [m]
constexpr double kGroundMargin = 3.0;     // [m] around body footprints
constexpr double kMinSpacing = 0.1;       // [m] LiDAR face sampling
constexpr double kMaxSpacing = 0.35;
constexpr double kSpacingPerMeter = 0.01;
constexpr double kRadarCoverFraction = 0.9;
constexpr double kRadarMaxSpacing = 0.6;  // [m]
constexpr double kObjectIntensityMin = 0.1;
constexpr double kClutterIntensityMax = 0.007;
constexpr double kClutterZMin = 0.5;
constexpr double kClutterZMax = 4.0;

double deg(double d) { return d * std::numbers::pi / 180.0; }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t frame, std::uint64_t stream) {
  return splitmix64(splitmix64(splitmix64(seed) ^ frame) ^ (stream * 0xD1B54A32D192ED03ULL));
}

double default_gate(double range) {
  const PipelineConfig cfg;
  const double t = std::min(range / cfg.adaptive_range_ref, 1.0);
  return cfg.delta_adaptive_min + (cfg.delta_adaptive_max - cfg.delta_adaptive_min) * t;
}

double distance_to_box(const Vec3& p, const Vec3& center, const Vec3& extents) {
  const Vec3 d = ((p - center).cwiseAbs() - extents / 2.0).cwiseMax(0.0);
  return d.norm();
}

/// Grid samples (offsets from the box center) on faces facing `viewpoint`.
std::vector<Vec3> sample_visible_faces(const RigidBody& body, const Vec3& viewpoint) {
  const double range = (body.center - viewpoint).norm();
  const double spacing = std::clamp(kSpacingPerMeter * range, kMinSpacing, kMaxSpacing);
  const Vec3 half = body.extents / 2.0;
  std::vector<Vec3> out;
  for (int axis = 0; axis < 3; ++axis) {
    for (int sign : {-1, 1}) {
      if (axis == 2 && sign < 0) continue;  // underside faces the ground
      Vec3 normal = Vec3::Zero();
      normal[axis] = sign;
      const Vec3 face_center = body.center + normal.cwiseProduct(half);
      if (normal.dot(viewpoint - face_center) <= 0.0) continue;
      const int a1 = (axis + 1) % 3;
      const int a2 = (axis + 2) % 3;
      const int n1 = std::max(1, static_cast<int>(std::ceil(body.extents[a1] / spacing)));
      const int n2 = std::max(1, static_cast<int>(std::ceil(body.extents[a2] / spacing)));
      for (int i = 0; i < n1; ++i) {
        for (int j = 0; j < n2; ++j) {
          Vec3 off = normal.cwiseProduct(half);
          off[a1] = -half[a1] + (i + 0.5) * body.extents[a1] / n1;
          off[a2] = -half[a2] + (j + 0.5) * body.extents[a2] / n2;
          out.push_back(off);
        }
      }
    }
  }
  return out;
}

std::vector<std::pair<long, long>> ground_cells(const SceneSpec& spec, int n_frames) {
  std::set<std::pair<long, long>> cells;
  auto add_disc = [&](const Vec3& c, double radius) {
    const long x0 = static_cast<long>(std::floor((c.x() - radius) / kGroundLattice));
    const long x1 = static_cast<long>(std::floor((c.x() + radius) / kGroundLattice));
    const long y0 = static_cast<long>(std::floor((c.y() - radius) / kGroundLattice));
    const long y1 = static_cast<long>(std::floor((c.y() + radius) / kGroundLattice));
    for (long i = x0; i <= x1; ++i)
      for (long j = y0; j <= y1; ++j) {
        const double cx = (static_cast<double>(i) + 0.5) * kGroundLattice;
        const double cy = (static_cast<double>(j) + 0.5) * kGroundLattice;
        if (std::hypot(cx - c.x(), cy - c.y()) <= radius) cells.emplace(i, j);
      }
  };
  auto add_rect = [&](const Vec3& c, const Vec3& ext) {
    const long x0 = static_cast<long>(std::floor((c.x() - ext.x() / 2 - kGroundMargin) / kGroundLattice));
    const long x1 = static_cast<long>(std::floor((c.x() + ext.x() / 2 + kGroundMargin) / kGroundLattice));
    const long y0 = static_cast<long>(std::floor((c.y() - ext.y() / 2 - kGroundMargin) / kGroundLattice));
    const long y1 = static_cast<long>(std::floor((c.y() + ext.y() / 2 + kGroundMargin) / kGroundLattice));
    for (long i = x0; i <= x1; ++i)
      for (long j = y0; j <= y1; ++j) cells.emplace(i, j);
  };
  for (int k = 0; k <= n_frames; ++k) {
    const double tau = k * spec.dt;
    add_disc(spec.ego_velocity * tau, spec.ground_radius);
    for (const auto& b : spec.bodies) add_rect(b.center + b.velocity * tau, b.extents);
  }
  return {cells.begin(), cells.end()};
}

int first_radar_seeing(const SceneSpec& spec, const Vec3& p) {
  for (std::size_t s = 0; s < spec.radars.size(); ++s)
    if (spec.radars[s].sees(p)) return static_cast<int>(s);
  return -1;
}

}  // namespace

PointClass RigidBody::point_class(double dt) const {
  return velocity.norm() * dt > kFdThreshold ? PointClass::FD : PointClass::FS;
}

SensorExtrinsic RadarSensorModel::extrinsic() const {
  const Mat3 sensor_to_ego = (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
                              Eigen::AngleAxisd(roll, Vec3::UnitX()))
                                 .toRotationMatrix();
  SensorExtrinsic ext;
  ext.rotation = sensor_to_ego.transpose();
  ext.translation = -ext.rotation * origin;
  return ext;
}

bool RadarSensorModel::sees(const Vec3& p_ego) const {
  const Vec3 ps = extrinsic().to_sensor(p_ego);
  if (ps.norm() > max_range || ps.norm() < 1e-6) return false;
  return std::abs(std::atan2(ps.y(), ps.x())) <= fov_half_angle;
}

void SceneSpec::validate() const {
  if (bodies.empty() && !ground_plane) throw ConfigError("empty scene");
  if (!(dt > 0.0)) throw ConfigError("scene: dt must be positive");
  if (noise.clutter_fraction < 0.0 || noise.clutter_fraction >= 1.0)
    throw ConfigError("scene: clutter_fraction must lie in [0, 1)");
  if (noise.ghost_probability < 0.0 || noise.ghost_probability > 1.0)
    throw ConfigError("scene: ghost_probability must lie in [0, 1]");
  if (noise.doppler_sigma < 0.0 || noise.lidar_sigma < 0.0) throw ConfigError("scene: negative noise sigma");
  for (const auto& b : bodies)
    if (!(b.extents.array() > 0.0).all()) throw ConfigError("scene: body extents must be positive");
  if (radars.empty()) throw ConfigError("scene: at least one radar required");
}

RadarPoint mirror_ghost(const RadarPoint& source, double plane_y, double factor) {
  RadarPoint ghost = source;
  ghost.position.y() = 2.0 * plane_y - source.position.y();
  ghost.v_meas = factor * source.v_meas;
  return ghost;
}

std::vector<SyntheticFrame> generate_sequence(const SceneSpec& spec, int n_frames) {
  spec.validate();
  if (n_frames < 1) throw ConfigError("scene: need at least one frame");

  std::vector<std::vector<Vec3>> samples;
  for (const auto& b : spec.bodies) samples.push_back(sample_visible_faces(b, spec.lidar_origin));
  const auto cells = spec.ground_plane ? ground_cells(spec, n_frames) : std::vector<std::pair<long, long>>{};

  EgoState ego;
  ego.v_ego = spec.ego_velocity;
  ego.dt = spec.dt;
  for (const auto& r : spec.radars) ego.sensor_extrinsics.push_back(r.extrinsic());

  std::vector<SyntheticFrame> frames;
  for (int k = 0; k < n_frames; ++k) {
    const double tau = k * spec.dt;
    const Vec3 ego_pos = spec.ego_velocity * tau;
    std::mt19937_64 lidar_rng(derive_seed(spec.seed, static_cast<std::uint64_t>(k), 1));
    std::mt19937_64 clutter_rng(derive_seed(spec.seed, static_cast<std::uint64_t>(k), 2));
    std::mt19937_64 radar_rng(derive_seed(spec.seed, static_cast<std::uint64_t>(k), 3));
    std::normal_distribution<double> lidar_noise(0.0, 1.0);
    std::uniform_real_distribution<double> object_intensity(kObjectIntensityMin, 1.0);
    auto jitter = [&]() -> Vec3 {
      if (spec.noise.lidar_sigma <= 0.0) return Vec3::Zero();
      const double x = lidar_noise(lidar_rng);
      const double y = lidar_noise(lidar_rng);
      const double z = lidar_noise(lidar_rng);
      return spec.noise.lidar_sigma * Vec3(x, y, z);
    };

    SyntheticFrame out;
    out.frame.index = k;
    out.frame.ego = ego;
    GroundTruth gt;

    auto push_lidar = [&](const Vec3& p, double intensity, int source, const Vec3& flow, PointClass cls) {
      LidarPoint lp;
      lp.position = p;
      lp.intensity = intensity;
      lp.frame_index = k;
      out.frame.lidar.push_back(lp);
      out.lidar_source.push_back(source);
      gt.flow.push_back(flow);
      gt.classes.push_back(cls);
    };

    for (const auto& [i, j] : cells) {
      const Vec3 g((static_cast<double>(i) + 0.5) * kGroundLattice, (static_cast<double>(j) + 0.5) * kGroundLattice,
                   0.0);
      const Vec3 p = g - ego_pos + jitter();
      push_lidar(p, object_intensity(lidar_rng), kGroundSource, Vec3::Zero(), PointClass::BS);
    }

    std::vector<Vec3> body_centers;  // ego frame k
    for (std::size_t b = 0; b < spec.bodies.size(); ++b) {
      const auto& body = spec.bodies[b];
      const Vec3 center = body.center + body.velocity * tau - ego_pos;
      body_centers.push_back(center);
      const Vec3 flow = body.velocity * spec.dt;
      const auto cls = body.point_class(spec.dt);
      for (const auto& off : samples[b])
        push_lidar(center + off + jitter(), object_intensity(lidar_rng), static_cast<int>(b), flow, cls);
    }

    if (spec.noise.clutter_fraction > 0.0) {
      const double f = spec.noise.clutter_fraction;
      const auto n_real = static_cast<double>(out.frame.lidar.size());
      const auto n_clutter = static_cast<std::size_t>(std::llround(f / (1.0 - f) * n_real));
      const double half = spec.ground_plane ? std::min(40.0, 0.7 * spec.ground_radius) : 40.0;
      std::uniform_real_distribution<double> uxy(-half, half);
      std::uniform_real_distribution<double> uz(kClutterZMin, kClutterZMax);
      std::uniform_real_distribution<double> clutter_intensity(0.0, kClutterIntensityMax);
      std::size_t attempts = 0;
      std::size_t placed = 0;
      while (placed < n_clutter) {
        if (++attempts > 1000 * (n_clutter + 1)) throw ConfigError("scene: cannot place clutter");
        const double x = uxy(clutter_rng);
        const double y = uxy(clutter_rng);
        const double z = uz(clutter_rng);
        const Vec3 p(x, y, z);
        const double keep_out = 1.0 + 0.025 * p.norm();
        bool near_body = false;
        for (std::size_t b = 0; b < spec.bodies.size(); ++b)
          if (distance_to_box(p, body_centers[b], spec.bodies[b].extents) < keep_out) near_body = true;
        if (near_body) continue;
        push_lidar(p, clutter_intensity(clutter_rng), kClutterSource, Vec3::Zero(), PointClass::BS);
        ++placed;
      }
    }

    std::normal_distribution<double> doppler_noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::pair<RadarPoint, int>> ghosts;
    for (std::size_t b = 0; b < spec.bodies.size(); ++b) {
      const auto& body = spec.bodies[b];
      std::vector<Vec3> chosen;
      for (const auto& off : samples[b]) {
        const Vec3 p = body_centers[b] + off;
        const double cover = std::min(kRadarCoverFraction * default_gate(p.norm()), kRadarMaxSpacing);
        const bool covered =
            std::any_of(chosen.begin(), chosen.end(), [&](const Vec3& q) { return (q - p).norm() < cover; });
        if (covered) continue;
        const int sensor = first_radar_seeing(spec, p);
        if (sensor < 0) continue;
        chosen.push_back(p);

        const auto& ext = ego.sensor_extrinsics[static_cast<std::size_t>(sensor)];
        const Vec3 u = ext.to_sensor(p).normalized();
        RadarPoint r;
        r.position = p;
        r.sensor_id = sensor;
        r.frame_index = k;
        r.v_meas = u.dot(ext.rotation * (body.velocity - spec.ego_velocity));
        if (spec.noise.doppler_sigma > 0.0) r.v_meas += spec.noise.doppler_sigma * doppler_noise(radar_rng);
        out.frame.radar.push_back(r);
        out.radar_source.push_back(static_cast<int>(b));
        out.radar_ghost.push_back(0);

        if (spec.noise.ghost_probability > 0.0 && unit(radar_rng) < spec.noise.ghost_probability) {
          const double factor = unit(radar_rng) < 0.5 ? -1.0 : 0.5;
          auto ghost = mirror_ghost(r, body_centers[b].y() + spec.noise.ghost_plane_offset, factor);
          if (ext.to_sensor(ghost.position).norm() >= 1e-6) ghosts.emplace_back(ghost, static_cast<int>(b));
        }
      }
    }
    for (const auto& [g, b] : ghosts) {
      out.frame.radar.push_back(g);
      out.radar_source.push_back(b);
      out.radar_ghost.push_back(1);
    }
    out.frame.gt = std::move(gt);
    frames.push_back(std::move(out));
  }
  return frames;
}

FramePair generate_frame_pair(const SceneSpec& spec) {
  auto seq = generate_sequence(spec, 2);
  return {std::move(seq[0]), std::move(seq[1])};
}

namespace {

RigidBody box_on_ground(double x, double y, const Vec3& size, const Vec3& velocity, double clearance = 0.5) {
  RigidBody b;
  b.center = Vec3(x, y, clearance + size.z() / 2.0);
  b.extents = size;
  b.velocity = velocity;
  return b;
}

const Vec3 kCar(4.5, 1.8, 1.5);
const Vec3 kTruck(10.0, 2.5, 3.0);

std::vector<RadarSensorModel> corner_radars() {
  std::vector<RadarSensorModel> radars;
  const struct {
    double x, y, yaw;
  } mounts[] = {{3.5, 1.0, 45.0}, {3.5, -1.0, -45.0}, {-1.0, 1.0, 135.0}, {-1.0, -1.0, -135.0}};
  for (const auto& m : mounts) {
    RadarSensorModel r;
    r.origin = Vec3(m.x, m.y, 0.8);
    r.yaw = deg(m.yaw);
    r.pitch = deg(1.5);
    r.roll = deg(-0.7);
    r.fov_half_angle = deg(75.0);
    radars.push_back(r);
  }
  return radars;
}

SceneSpec base_scene(const std::string& name, const Vec3& ego_velocity) {
  SceneSpec s;
  s.name = name;
  s.ego_velocity = ego_velocity;
  s.radars = corner_radars();
  return s;
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"static-world", "highway-5-movers", "long-range-mover",
                                                 "blindspot-lateral", "snowstorm", "ghost-alley"};
  return names;
}

std::map<std::string, SceneSpec> preset_scenes() {
  std::map<std::string, SceneSpec> out;

  {
    auto s = base_scene("static-world", Vec3(12.0, 0.5, 0.0));
    s.bodies = {box_on_ground(20, 6, kCar, Vec3::Zero()),     box_on_ground(35, -8, kCar, Vec3::Zero()),
                box_on_ground(-15, 7, kCar, Vec3::Zero()),    box_on_ground(10, -10, kCar, Vec3::Zero()),
                box_on_ground(60, 10, kTruck, Vec3::Zero()),  box_on_ground(-30, -6, kCar, Vec3::Zero())};
    out[s.name] = s;
  }
  {
    auto s = base_scene("highway-5-movers", Vec3(25.0, 0.0, 0.0));
    s.bodies = {box_on_ground(15, 0, kCar, Vec3(30, 0, 0)),
                box_on_ground(28, 3.7, kCar, Vec3(20, 0, 0)),
                box_on_ground(45, -3.7, kCar, Vec3(-25, 0, 0)),
                box_on_ground(-20, 3.7, kCar, Vec3(28, 0.5, 0)),
                box_on_ground(70, 0, kTruck, Vec3(22, 0, 0)),
                box_on_ground(30, -10, kCar, Vec3::Zero()),
                box_on_ground(-8, -10, kCar, Vec3::Zero())};
    out[s.name] = s;
  }
  {
    auto s = base_scene("long-range-mover", Vec3(10.0, 0.0, 0.0));
    const double height = 0.5 + kCar.z() / 2.0;
    auto body = box_on_ground(std::sqrt(150.0 * 150.0 - height * height), 0.0, kCar, Vec3(-15, 0, 0));
    s.bodies = {body};
    out[s.name] = s;
  }
  {
    auto s = base_scene("blindspot-lateral", Vec3(8.0, 0.0, 0.0));
    RadarSensorModel front;
    front.origin = Vec3(3.5, 0.0, 0.8);
    front.fov_half_angle = deg(40.0);
    RadarSensorModel rear = front;
    rear.origin = Vec3(-1.0, 0.0, 0.8);
    rear.yaw = deg(180.0);
    s.radars = {front, rear};
    s.bodies = {box_on_ground(2, 9, kCar, Vec3(12, 0, 0)), box_on_ground(25, 0, kCar, Vec3(15, 0, 0)),
                box_on_ground(20, -8, kCar, Vec3::Zero())};
    out[s.name] = s;
  }
  {
    auto s = base_scene("snowstorm", Vec3(10.0, 0.0, 0.0));
    s.ground_radius = 50.0;
    s.noise.clutter_fraction = 0.3;
    s.bodies = {box_on_ground(18, 3.5, kCar, Vec3(14, 0, 0)), box_on_ground(30, -3.5, kCar, Vec3(-12, 0, 0)),
                box_on_ground(-15, 0, kCar, Vec3(16, 0, 0)), box_on_ground(12, -9, kCar, Vec3::Zero())};
    out[s.name] = s;
  }
  {
    auto s = base_scene("ghost-alley", Vec3(3.0, 0.0, 0.0));
    s.ground_radius = 40.0;
    s.noise.ghost_probability = 0.5;
    s.bodies = {box_on_ground(18, 2, kCar, Vec3(12, 0, 0)), box_on_ground(32, -2.5, kCar, Vec3(-10, 0, 0)),
                box_on_ground(20, 7.5, Vec3(30, 0.4, 3.0), Vec3::Zero(), 0.0),
                box_on_ground(20, -7.5, Vec3(30, 0.4, 3.0), Vec3::Zero(), 0.0)};
    out[s.name] = s;
  }
  return out;
}

SceneSpec preset_scene(const std::string& name) {
  auto all = preset_scenes();
  const auto it = all.find(name);
  if (it == all.end()) {
    std::string catalog;
    for (const auto& n : preset_names()) catalog += (catalog.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "'; available: " + catalog);
  }
  return it->second;
}

namespace {

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ConfigError(std::string("scene: ") + what + " must be a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

nlohmann::json scene_to_json(const SceneSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  j["bodies"] = nlohmann::json::array();
  for (const auto& b : spec.bodies)
    j["bodies"].push_back(
        {{"center", vec_json(b.center)}, {"extents", vec_json(b.extents)}, {"velocity", vec_json(b.velocity)}});
  j["ego_velocity"] = vec_json(spec.ego_velocity);
  j["radars"] = nlohmann::json::array();
  for (const auto& r : spec.radars)
    j["radars"].push_back({{"origin", vec_json(r.origin)},
                           {"yaw_deg", r.yaw * 180.0 / std::numbers::pi},
                           {"pitch_deg", r.pitch * 180.0 / std::numbers::pi},
                           {"roll_deg", r.roll * 180.0 / std::numbers::pi},
                           {"fov_half_angle_deg", r.fov_half_angle * 180.0 / std::numbers::pi},
                           {"max_range", r.max_range}});
  j["lidar_origin"] = vec_json(spec.lidar_origin);
  j["dt"] = spec.dt;
  j["noise"] = {{"doppler_sigma", spec.noise.doppler_sigma},
                {"lidar_sigma", spec.noise.lidar_sigma},
                {"clutter_fraction", spec.noise.clutter_fraction},
                {"ghost_probability", spec.noise.ghost_probability},
                {"ghost_plane_offset", spec.noise.ghost_plane_offset}};
  j["seed"] = spec.seed;
  j["ground_plane"] = spec.ground_plane;
  j["ground_radius"] = spec.ground_radius;
  return j;
}

SceneSpec scene_from_json(const nlohmann::json& j, SceneSpec base) {
  if (!j.is_object()) throw ConfigError("scene: expected a JSON object");
  try {
    if (j.contains("preset")) base = preset_scene(j.at("preset").get<std::string>());
    for (const auto& [key, value] : j.items()) {
      if (key == "preset") continue;
      if (key == "name") {
        base.name = value.get<std::string>();
      } else if (key == "bodies") {
        base.bodies.clear();
        for (const auto& b : value) {
          RigidBody body;
          body.center = vec_from(b.at("center"), "center");
          body.extents = vec_from(b.at("extents"), "extents");
          if (b.contains("velocity")) body.velocity = vec_from(b.at("velocity"), "velocity");
          base.bodies.push_back(body);
        }
      } else if (key == "ego_velocity") {
        base.ego_velocity = vec_from(value, "ego_velocity");
      } else if (key == "radars") {
        base.radars.clear();
        for (const auto& r : value) {
          RadarSensorModel m;
          m.origin = vec_from(r.at("origin"), "origin");
          m.yaw = deg(r.value("yaw_deg", 0.0));
          m.pitch = deg(r.value("pitch_deg", 0.0));
          m.roll = deg(r.value("roll_deg", 0.0));
          m.fov_half_angle = deg(r.value("fov_half_angle_deg", 75.0));
          m.max_range = r.value("max_range", 300.0);
          base.radars.push_back(m);
        }
      } else if (key == "lidar_origin") {
        base.lidar_origin = vec_from(value, "lidar_origin");
      } else if (key == "dt") {
        base.dt = value.get<double>();
      } else if (key == "noise") {
        for (const auto& [nk, nv] : value.items()) {
          if (nk == "doppler_sigma") base.noise.doppler_sigma = nv.get<double>();
          else if (nk == "lidar_sigma") base.noise.lidar_sigma = nv.get<double>();
          else if (nk == "clutter_fraction") base.noise.clutter_fraction = nv.get<double>();
          else if (nk == "ghost_probability") base.noise.ghost_probability = nv.get<double>();
          else if (nk == "ghost_plane_offset") base.noise.ghost_plane_offset = nv.get<double>();
          else throw ConfigError("scene: unknown noise key '" + nk + "'");
        }
      } else if (key == "seed") {
        base.seed = value.get<std::uint64_t>();
      } else if (key == "ground_plane") {
        base.ground_plane = value.get<bool>();
      } else if (key == "ground_radius") {
        base.ground_radius = value.get<double>();
      } else {
        throw ConfigError("scene: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scene: ") + e.what());
  }
  return base;
}

}  // namespace dflow::synth
