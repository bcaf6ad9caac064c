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

#include "dflow/core/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace dflow::io {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

namespace {

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    auto token = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    while (!token.empty() && (token.back() == '\r' || token.back() == ' ')) token.remove_suffix(1);
    while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
    out.emplace_back(token);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& s, const fs::path& file, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc() && ptr == end) return v;
  // from_chars rejects "nan"/"inf" spellings on some libstdc++ versions
  char* stop = nullptr;
  v = std::strtod(s.c_str(), &stop);
  if (!s.empty() && stop == s.c_str() + s.size()) return v;
  throw DataError(file.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
}

int parse_int(const std::string& s, const fs::path& file, std::size_t line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError(file.string() + ":" + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

/// Calls `row(fields, line_no)` for every data line after the expected header.
void read_csv(const fs::path& file, const std::vector<std::string>& header,
              const std::function<void(const std::vector<std::string>&, std::size_t)>& row) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split(line, ',');
    if (!seen_header) {
      seen_header = true;
      if (fields != header) {
        std::string expected;
        for (const auto& h : header) expected += (expected.empty() ? "" : ",") + h;
        throw DataError(file.string() + ":" + std::to_string(line_no) + ": expected header '" +
                        expected + "'");
      }
      continue;
    }
    if (fields.size() != header.size())
      throw DataError(file.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " columns");
    row(fields, line_no);
  }
  if (!seen_header) throw DataError(file.string() + ": missing header");
}

class BinaryWriter {
 public:
  explicit BinaryWriter(const fs::path& file) : out_(file, std::ios::binary), file_(file) {
    if (!out_) throw DataError("cannot write " + file.string());
  }
  template <class T>
  void put(const T& v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_vec(const Vec3& v) {
    put(v.x());
    put(v.y());
    put(v.z());
  }
  void put_bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
  ~BinaryWriter() = default;
  void close() {
    out_.close();
    if (!out_) throw DataError("write failed: " + file_.string());
  }

 private:
  std::ofstream out_;
  fs::path file_;
};

class BinaryReader {
 public:
  explicit BinaryReader(const fs::path& file) : file_(file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open " + file.string());
    data_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  template <class T>
  T get() {
    T v{};
    need(sizeof(T));
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  Vec3 get_vec() {
    const double x = get<double>();
    const double y = get<double>();
    const double z = get<double>();
    return {x, y, z};
  }
  void expect_magic(const std::array<char, 16>& magic, const char* what) {
    need(magic.size());
    if (std::memcmp(data_.data(), magic.data(), magic.size()) != 0)
      throw DataError(file_.string() + ": not a " + what + " container");
    pos_ += magic.size();
  }
  /// Guards element counts against truncated or corrupted files.
  void check_count(std::uint64_t count, std::size_t elem_size) const {
    if (count > (data_.size() - pos_) / std::max<std::size_t>(elem_size, 1))
      throw DataError(file_.string() + ": element count exceeds file size");
  }
  void expect_end() const {
    if (pos_ != data_.size()) throw DataError(file_.string() + ": trailing bytes");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw DataError(file_.string() + ": truncated container");
  }
  fs::path file_;
  std::vector<char> data_;
  std::size_t pos_ = 0;
};

bool has_magic(const fs::path& file, const std::array<char, 16>& magic) {
  std::ifstream in(file, std::ios::binary);
  std::array<char, 16> head{};
  in.read(head.data(), head.size());
  return in.gcount() == static_cast<std::streamsize>(head.size()) && head == magic;
}

nlohmann::json vec_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw DataError(std::string(what) + ": expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// Key table shared by the config reader and writer.
struct ConfigKey {
  const char* name;
  double PipelineConfig::*real = nullptr;
  int PipelineConfig::*integer = nullptr;
};

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"delta_dyn", &PipelineConfig::delta_dyn},
      {"delta_spatial", &PipelineConfig::delta_spatial},
      {"delta_velocity", &PipelineConfig::delta_velocity},
      {"delta_intensity", &PipelineConfig::delta_intensity},
      {"delta_neighbor", &PipelineConfig::delta_neighbor},
      {"delta_adaptive_min", &PipelineConfig::delta_adaptive_min},
      {"delta_adaptive_max", &PipelineConfig::delta_adaptive_max},
      {"adaptive_range_ref", &PipelineConfig::adaptive_range_ref},
      {"v_bound", &PipelineConfig::v_bound},
      {"grid_half_extent", &PipelineConfig::grid_half_extent},
      {"density_cluster_eps", &PipelineConfig::density_cluster_eps},
      {"density_cluster_min_pts", nullptr, &PipelineConfig::density_cluster_min_pts},
      {"dynamic_flow_threshold", &PipelineConfig::dynamic_flow_threshold},
      {"ground_cell_size", &PipelineConfig::ground_cell_size},
      {"ground_height_tol", &PipelineConfig::ground_height_tol},
  };
  return keys;
}

const ConfigKey& find_key(std::string_view name) {
  for (const auto& k : config_keys())
    if (name == k.name) return k;
  throw ConfigError("config: unknown key '" + std::string(name) + "'");
}

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

std::string frame_dir_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d", index);
  return buf;
}

nlohmann::json ego_to_json(const EgoState& ego) {
  nlohmann::json j;
  j["v_ego"] = vec_json(ego.v_ego);
  j["dt"] = ego.dt;
  j["extrinsics"] = nlohmann::json::array();
  for (const auto& ext : ego.sensor_extrinsics) {
    nlohmann::json rot = nlohmann::json::array();
    for (int r = 0; r < 3; ++r)
      rot.push_back({ext.rotation(r, 0), ext.rotation(r, 1), ext.rotation(r, 2)});
    j["extrinsics"].push_back({{"rotation", rot}, {"translation", vec_json(ext.translation)}});
  }
  return j;
}

EgoState ego_from_json(const nlohmann::json& j) {
  try {
    EgoState ego;
    ego.v_ego = vec_from_json(j.at("v_ego"), "v_ego");
    ego.dt = j.at("dt").get<double>();
    for (const auto& e : j.at("extrinsics")) {
      SensorExtrinsic ext;
      const auto& rot = e.at("rotation");
      if (!rot.is_array() || rot.size() != 3) throw DataError("rotation: expected 3 rows");
      for (int r = 0; r < 3; ++r) ext.rotation.row(r) = vec_from_json(rot[r], "rotation row").transpose();
      ext.translation = vec_from_json(e.at("translation"), "translation");
      ego.sensor_extrinsics.push_back(ext);
    }
    return ego;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("ego.json: ") + e.what());
  }
}

Frame read_frame_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a frame directory: " + dir.string());
  Frame frame;
  const auto name = dir.filename().string();
  frame.index = 0;
  if (!name.empty() && std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; }))
    frame.index = std::stoi(name);

  frame.ego = ego_from_json(read_json_file(dir / "ego.json"));

  const auto lidar_file = dir / "lidar.csv";
  read_csv(lidar_file, {"x", "y", "z", "intensity"}, [&](const auto& f, std::size_t line) {
    LidarPoint p;
    p.position = {parse_double(f[0], lidar_file, line), parse_double(f[1], lidar_file, line),
                  parse_double(f[2], lidar_file, line)};
    p.intensity = parse_double(f[3], lidar_file, line);
    p.frame_index = frame.index;
    frame.lidar.push_back(p);
  });

  const auto radar_file = dir / "radar.csv";
  if (fs::exists(radar_file)) {
    read_csv(radar_file, {"x", "y", "z", "v_meas", "sensor_id"}, [&](const auto& f, std::size_t line) {
      RadarPoint r;
      r.position = {parse_double(f[0], radar_file, line), parse_double(f[1], radar_file, line),
                    parse_double(f[2], radar_file, line)};
      r.v_meas = parse_double(f[3], radar_file, line);
      r.sensor_id = parse_int(f[4], radar_file, line);
      r.frame_index = frame.index;
      frame.radar.push_back(r);
    });
  } else {
    frame.has_radar = false;
  }

  const auto gt_file = dir / "gt.csv";
  if (fs::exists(gt_file)) {
    GroundTruth gt;
    read_csv(gt_file, {"dx", "dy", "dz", "class"}, [&](const auto& f, std::size_t line) {
      gt.flow.emplace_back(parse_double(f[0], gt_file, line), parse_double(f[1], gt_file, line),
                           parse_double(f[2], gt_file, line));
      gt.classes.push_back(point_class_from_string(f[3]));
    });
    frame.gt = std::move(gt);
  }
  return frame;
}

void write_frame_dir(const fs::path& dir, const Frame& frame) {
  fs::create_directories(dir);
  {
    std::string s = "x,y,z,intensity\n";
    for (const auto& p : frame.lidar)
      s += format_double(p.position.x()) + ',' + format_double(p.position.y()) + ',' +
           format_double(p.position.z()) + ',' + format_double(p.intensity) + '\n';
    write_text_file(dir / "lidar.csv", s);
  }
  if (frame.has_radar) {
    std::string s = "x,y,z,v_meas,sensor_id\n";
    for (const auto& r : frame.radar)
      s += format_double(r.position.x()) + ',' + format_double(r.position.y()) + ',' +
           format_double(r.position.z()) + ',' + format_double(r.v_meas) + ',' +
           std::to_string(r.sensor_id) + '\n';
    write_text_file(dir / "radar.csv", s);
  }
  write_text_file(dir / "ego.json", ego_to_json(frame.ego).dump(2) + "\n");
  if (frame.gt) {
    std::string s = "dx,dy,dz,class\n";
    for (std::size_t i = 0; i < frame.gt->flow.size(); ++i) {
      const auto& f = frame.gt->flow[i];
      s += format_double(f.x()) + ',' + format_double(f.y()) + ',' + format_double(f.z()) + ',' +
           to_string(frame.gt->classes[i]) + '\n';
    }
    write_text_file(dir / "gt.csv", s);
  }
}

void write_frame_binary(const fs::path& file, const Frame& frame) {
  BinaryWriter w(file);
  w.put_bytes(kFrameMagic.data(), kFrameMagic.size());
  w.put(static_cast<std::int32_t>(frame.index));
  w.put_vec(frame.ego.v_ego);
  w.put(frame.ego.dt);
  w.put(static_cast<std::uint32_t>(frame.ego.sensor_extrinsics.size()));
  for (const auto& ext : frame.ego.sensor_extrinsics) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) w.put(ext.rotation(r, c));
    w.put_vec(ext.translation);
  }
  w.put(static_cast<std::uint64_t>(frame.lidar.size()));
  for (const auto& p : frame.lidar) {
    w.put_vec(p.position);
    w.put(p.intensity);
  }
  w.put(static_cast<std::uint8_t>(frame.has_radar ? 1 : 0));
  w.put(static_cast<std::uint64_t>(frame.radar.size()));
  for (const auto& r : frame.radar) {
    w.put_vec(r.position);
    w.put(r.v_meas);
    w.put(static_cast<std::int32_t>(r.sensor_id));
  }
  w.put(static_cast<std::uint8_t>(frame.gt ? 1 : 0));
  if (frame.gt) {
    for (std::size_t i = 0; i < frame.gt->flow.size(); ++i) {
      w.put_vec(frame.gt->flow[i]);
      w.put(static_cast<std::uint8_t>(frame.gt->classes[i]));
    }
  }
  w.close();
}

Frame read_frame_binary(const fs::path& file) {
  BinaryReader r(file);
  r.expect_magic(kFrameMagic, "frame");
  Frame frame;
  frame.index = r.get<std::int32_t>();
  frame.ego.v_ego = r.get_vec();
  frame.ego.dt = r.get<double>();
  const auto n_sensors = r.get<std::uint32_t>();
  r.check_count(n_sensors, 12 * sizeof(double));
  for (std::uint32_t s = 0; s < n_sensors; ++s) {
    SensorExtrinsic ext;
    for (int row = 0; row < 3; ++row)
      for (int c = 0; c < 3; ++c) ext.rotation(row, c) = r.get<double>();
    ext.translation = r.get_vec();
    frame.ego.sensor_extrinsics.push_back(ext);
  }
  const auto n_lidar = r.get<std::uint64_t>();
  r.check_count(n_lidar, 4 * sizeof(double));
  frame.lidar.resize(n_lidar);
  for (auto& p : frame.lidar) {
    p.position = r.get_vec();
    p.intensity = r.get<double>();
    p.frame_index = frame.index;
  }
  frame.has_radar = r.get<std::uint8_t>() != 0;
  const auto n_radar = r.get<std::uint64_t>();
  r.check_count(n_radar, 4 * sizeof(double) + sizeof(std::int32_t));
  frame.radar.resize(n_radar);
  for (auto& p : frame.radar) {
    p.position = r.get_vec();
    p.v_meas = r.get<double>();
    p.sensor_id = r.get<std::int32_t>();
    p.frame_index = frame.index;
  }
  if (r.get<std::uint8_t>() != 0) {
    GroundTruth gt;
    r.check_count(n_lidar, 3 * sizeof(double) + 1);
    for (std::uint64_t i = 0; i < n_lidar; ++i) {
      gt.flow.push_back(r.get_vec());
      const auto c = r.get<std::uint8_t>();
      if (c > 2) throw DataError(file.string() + ": bad class code");
      gt.classes.push_back(static_cast<PointClass>(c));
    }
    frame.gt = std::move(gt);
  }
  r.expect_end();
  return frame;
}

Frame read_frame(const fs::path& dir) {
  const auto bin = dir / "frame.bin";
  if (fs::exists(bin)) return read_frame_binary(bin);
  return read_frame_dir(dir);
}

std::vector<std::pair<int, fs::path>> list_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("not a sequence directory: " + dir.string());
  std::vector<std::pair<int, fs::path>> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_directory()) continue;
    const auto name = entry.path().filename().string();
    if (name.empty() || !std::all_of(name.begin(), name.end(), [](char c) { return c >= '0' && c <= '9'; }))
      continue;
    out.emplace_back(std::stoi(name), entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_flow_csv(const fs::path& file, const FlowField& flow) {
  std::string s = "dx,dy,dz,dynamic,valid,cluster_id\n";
  s.reserve(flow.size() * 48);
  for (const auto& p : flow.points)
    s += format_double(p.delta.x()) + ',' + format_double(p.delta.y()) + ',' + format_double(p.delta.z()) +
         ',' + (p.dynamic ? '1' : '0') + ',' + (p.valid ? '1' : '0') + ',' + std::to_string(p.cluster_id) +
         '\n';
  write_text_file(file, s);
}

FlowField read_flow_csv(const fs::path& file) {
  FlowField flow;
  read_csv(file, {"dx", "dy", "dz", "dynamic", "valid", "cluster_id"}, [&](const auto& f, std::size_t line) {
    FlowPoint p;
    p.delta = {parse_double(f[0], file, line), parse_double(f[1], file, line), parse_double(f[2], file, line)};
    p.dynamic = parse_int(f[3], file, line) != 0;
    p.valid = parse_int(f[4], file, line) != 0;
    p.cluster_id = parse_int(f[5], file, line);
    flow.points.push_back(p);
  });
  return flow;
}

void write_flow_binary(const fs::path& file, const FlowField& flow) {
  BinaryWriter w(file);
  w.put_bytes(kFlowMagic.data(), kFlowMagic.size());
  w.put(static_cast<std::uint64_t>(flow.size()));
  for (const auto& p : flow.points) {
    w.put_vec(p.delta);
    w.put(static_cast<std::uint8_t>(p.dynamic ? 1 : 0));
    w.put(static_cast<std::uint8_t>(p.valid ? 1 : 0));
    w.put(static_cast<std::int32_t>(p.cluster_id));
  }
  w.close();
}

FlowField read_flow_binary(const fs::path& file) {
  BinaryReader r(file);
  r.expect_magic(kFlowMagic, "flow");
  const auto n = r.get<std::uint64_t>();
  r.check_count(n, 3 * sizeof(double) + 2 + sizeof(std::int32_t));
  FlowField flow;
  flow.points.resize(n);
  for (auto& p : flow.points) {
    p.delta = r.get_vec();
    p.dynamic = r.get<std::uint8_t>() != 0;
    p.valid = r.get<std::uint8_t>() != 0;
    p.cluster_id = r.get<std::int32_t>();
  }
  r.expect_end();
  return flow;
}

FlowField read_flow(const fs::path& file) {
  if (has_magic(file, kFlowMagic)) return read_flow_binary(file);
  return read_flow_csv(file);
}

nlohmann::json config_to_json(const PipelineConfig& config) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : config_keys()) {
    if (k.real)
      j[k.name] = config.*(k.real);
    else
      j[k.name] = config.*(k.integer);
  }
  return j;
}

PipelineConfig config_from_json(const nlohmann::json& j, PipelineConfig base) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  for (const auto& [name, value] : j.items()) {
    const auto& key = find_key(name);
    if (!value.is_number()) throw ConfigError("config: '" + name + "' must be a number");
    if (key.real) {
      base.*(key.real) = value.get<double>();
    } else {
      if (!value.is_number_integer()) throw ConfigError("config: '" + name + "' must be an integer");
      base.*(key.integer) = value.get<int>();
    }
  }
  base.validate();
  return base;
}

PipelineConfig read_config_file(const fs::path& file) {
  try {
    return config_from_json(read_json_file(file));
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
}

void apply_config_override(PipelineConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must be key=value: " + std::string(assignment));
  const auto name = assignment.substr(0, eq);
  const std::string value(assignment.substr(eq + 1));
  const auto& key = find_key(name);
  char* end = nullptr;
  if (key.real) {
    const double v = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size())
      throw ConfigError("override: bad number for " + std::string(name));
    config.*(key.real) = v;
  } else {
    const long v = std::strtol(value.c_str(), &end, 10);
    if (value.empty() || end != value.c_str() + value.size())
      throw ConfigError("override: bad integer for " + std::string(name));
    config.*(key.integer) = static_cast<int>(v);
  }
  config.validate();
}

nlohmann::json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw DataError(origin + ":" + std::to_string(line) + ": JSON parse error: " + e.what());
  }
}

nlohmann::json read_json_file(const fs::path& file) { return parse_json_text(read_text_file(file), file.string()); }

void write_text_file(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write " + file.string());
  out << text;
  if (!out) throw DataError("write failed: " + file.string());
}

std::string read_text_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dflow::io
