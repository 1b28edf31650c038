#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "handover/error.hpp"
#include "handover/geometry.hpp"
#include "handover/raster.hpp"

namespace handover {

using json = nlohmann::json;

namespace io_detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), errc::io, "cannot open file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), errc::io, "cannot open file for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  require(f.good(), errc::io, "write failed: " + path.string());
}

// PNM header scanner: skips whitespace and '#' comments between tokens.
class PnmScanner {
 public:
  PnmScanner(const std::vector<std::uint8_t>& bytes, std::string file)
      : bytes_(bytes), file_(std::move(file)) {}

  std::string magic() {
    require(bytes_.size() >= 2, errc::format, file_ + ": truncated PNM header");
    pos_ = 2;
    return {static_cast<char>(bytes_[0]), static_cast<char>(bytes_[1])};
  }

  long next_int(const char* field) {
    skip_space_and_comments();
    require(pos_ < bytes_.size() && std::isdigit(bytes_[pos_]), errc::format,
            file_ + ": expected integer for " + field);
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      require(value <= 1'000'000'000L, errc::format, file_ + ": " + field + " out of range");
      ++pos_;
    }
    return value;
  }

  // After maxval exactly one whitespace byte separates header from raster.
  void expect_raster_separator() {
    require(pos_ < bytes_.size() && std::isspace(bytes_[pos_]), errc::format,
            file_ + ": missing whitespace before raster data");
    ++pos_;
  }

  const std::uint8_t* raster(std::size_t need, const char* what) {
    require(bytes_.size() - pos_ >= need, errc::format,
            file_ + ": truncated raster data (" + what + ")");
    return bytes_.data() + pos_;
  }

  std::size_t pos() const { return pos_; }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  const std::string& file() const { return file_; }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string file_;
  std::size_t pos_ = 0;
};

inline void check_dims(long w, long h, const std::string& file) {
  require(w >= 1 && h >= 1, errc::format, file + ": non-positive dimensions");
  require(w * h <= 100'000'000L, errc::format, file + ": dimensions out of range");
}

}  // namespace io_detail

// --- PPM / PGM ----------------------------------------------------------

// Binary P6, maxval 255.
inline Image read_image_ppm(const std::filesystem::path& path) {
  auto bytes = io_detail::read_file_bytes(path);
  io_detail::PnmScanner sc(bytes, path.string());
  require(sc.magic() == "P6", errc::format, path.string() + ": wrong magic, expected P6");
  long w = sc.next_int("width");
  long h = sc.next_int("height");
  io_detail::check_dims(w, h, path.string());
  long maxval = sc.next_int("maxval");
  require(maxval == 255, errc::format, path.string() + ": maxval must be 255");
  sc.expect_raster_separator();
  std::size_t need = static_cast<std::size_t>(w) * h * 3;
  const std::uint8_t* raster = sc.raster(need, "P6 pixels");

  Image img(static_cast<int>(w), static_cast<int>(h));
  img.data.assign(raster, raster + need);
  return img;
}

inline void write_image_ppm(const Image& img, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out;
  std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                       "\n255\n";
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), img.data.begin(), img.data.end());
  io_detail::write_file_bytes(path, out);
}

// Mask: P5 (binary) or P2 (ascii), maxval 255; sample >= 128 reads as true.
inline BinaryMask read_mask_pgm(const std::filesystem::path& path) {
  auto bytes = io_detail::read_file_bytes(path);
  io_detail::PnmScanner sc(bytes, path.string());
  std::string magic = sc.magic();
  require(magic == "P5" || magic == "P2", errc::format,
          path.string() + ": wrong magic, expected P5 or P2");
  long w = sc.next_int("width");
  long h = sc.next_int("height");
  io_detail::check_dims(w, h, path.string());
  long maxval = sc.next_int("maxval");
  require(maxval == 255, errc::format, path.string() + ": maxval must be 255");

  BinaryMask mask(static_cast<int>(w), static_cast<int>(h));
  std::size_t n = static_cast<std::size_t>(w) * h;
  if (magic == "P5") {
    sc.expect_raster_separator();
    const std::uint8_t* raster = sc.raster(n, "P5 pixels");
    for (std::size_t i = 0; i < n; ++i) mask.data[i] = raster[i] >= 128 ? 1 : 0;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      long v = sc.next_int("P2 sample");
      require(v <= maxval, errc::format, path.string() + ": sample exceeds maxval");
      mask.data[i] = v >= 128 ? 1 : 0;
    }
  }
  return mask;
}

inline void write_mask_pgm(const BinaryMask& mask, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out;
  std::string header = "P5\n" + std::to_string(mask.width) + " " +
                       std::to_string(mask.height) + "\n255\n";
  out.insert(out.end(), header.begin(), header.end());
  for (auto b : mask.data) out.push_back(b ? 255 : 0);
  io_detail::write_file_bytes(path, out);
}

// Depth: P5, maxval 65535, big-endian two-byte samples per the PGM spec.
inline DepthImage read_depth_pgm16(const std::filesystem::path& path) {
  auto bytes = io_detail::read_file_bytes(path);
  io_detail::PnmScanner sc(bytes, path.string());
  require(sc.magic() == "P5", errc::format, path.string() + ": wrong magic, expected P5");
  long w = sc.next_int("width");
  long h = sc.next_int("height");
  io_detail::check_dims(w, h, path.string());
  long maxval = sc.next_int("maxval");
  require(maxval == 65535, errc::format, path.string() + ": maxval must be 65535");
  sc.expect_raster_separator();
  std::size_t n = static_cast<std::size_t>(w) * h;
  const std::uint8_t* raster = sc.raster(n * 2, "P5 16-bit samples");

  DepthImage depth(static_cast<int>(w), static_cast<int>(h));
  for (std::size_t i = 0; i < n; ++i)
    depth.data[i] = static_cast<std::uint16_t>((raster[2 * i] << 8) | raster[2 * i + 1]);
  return depth;
}

inline void write_depth_pgm16(const DepthImage& depth, const std::filesystem::path& path) {
  std::vector<std::uint8_t> out;
  std::string header = "P5\n" + std::to_string(depth.width) + " " +
                       std::to_string(depth.height) + "\n65535\n";
  out.insert(out.end(), header.begin(), header.end());
  for (auto d : depth.data) {
    out.push_back(static_cast<std::uint8_t>(d >> 8));
    out.push_back(static_cast<std::uint8_t>(d & 0xff));
  }
  io_detail::write_file_bytes(path, out);
}

// --- PLY point clouds ----------------------------------------------------

// ASCII PLY, double x/y/z plus optional int u/v pixel columns and an
// optional int label column. Doubles are printed with max_digits10 so a
// write-then-read round trip is exact.
inline void write_pointcloud_ply(const PointCloud& cloud, const std::filesystem::path& path,
                                 const std::vector<int>* labels = nullptr) {
  require(labels == nullptr || labels->size() == cloud.size(), errc::invalid_argument,
          "label list length differs from point count");
  std::ostringstream os;
  os.precision(17);
  os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
     << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_pixels()) os << "property int u\nproperty int v\n";
  if (labels) os << "property int label\n";
  os << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    os << p.x << " " << p.y << " " << p.z;
    if (cloud.has_pixels()) os << " " << cloud.pixels[i].first << " " << cloud.pixels[i].second;
    if (labels) os << " " << (*labels)[i];
    os << "\n";
  }
  std::string s = os.str();
  io_detail::write_file_bytes(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

inline PointCloud read_pointcloud_ply(const std::filesystem::path& path,
                                      std::vector<int>* labels_out = nullptr) {
  auto bytes = io_detail::read_file_bytes(path);
  std::string text(bytes.begin(), bytes.end());
  std::istringstream is(text);
  std::string line;

  auto next_line = [&](const char* what) {
    require(static_cast<bool>(std::getline(is, line)), errc::format,
            path.string() + ": truncated header (" + what + ")");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  require(next_line("magic") == "ply", errc::format, path.string() + ": wrong magic, expected ply");
  require(next_line("format") == "format ascii 1.0", errc::format,
          path.string() + ": unsupported PLY format line");

  long count = -1;
  std::vector<std::string> props;
  while (true) {
    next_line("end_header");
    if (line.rfind("comment", 0) == 0) continue;
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "element") {
      std::string name;
      ls >> name >> count;
      require(name == "vertex" && count >= 0 && count <= 100'000'000L, errc::format,
              path.string() + ": bad element line");
    } else if (kw == "property") {
      std::string type, name;
      ls >> type >> name;
      require(!name.empty(), errc::format, path.string() + ": bad property line");
      props.push_back(name);
    } else {
      fail(errc::format, path.string() + ": unexpected header line: " + line);
    }
  }
  require(count >= 0, errc::format, path.string() + ": missing element vertex line");
  bool has_pixels = false, has_labels = false;
  if (props.size() >= 3 && props[0] == "x" && props[1] == "y" && props[2] == "z") {
    std::vector<std::string> rest(props.begin() + 3, props.end());
    if (rest == std::vector<std::string>{}) {
    } else if (rest == std::vector<std::string>{"u", "v"}) {
      has_pixels = true;
    } else if (rest == std::vector<std::string>{"label"}) {
      has_labels = true;
    } else if (rest == std::vector<std::string>{"u", "v", "label"}) {
      has_pixels = has_labels = true;
    } else {
      fail(errc::format, path.string() + ": unsupported property layout");
    }
  } else {
    fail(errc::format, path.string() + ": properties must start with x y z");
  }

  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(count));
  if (labels_out) labels_out->clear();
  for (long i = 0; i < count; ++i) {
    Vec3 p;
    require(static_cast<bool>(is >> p.x >> p.y >> p.z), errc::format,
            path.string() + ": truncated vertex data at row " + std::to_string(i));
    if (has_pixels) {
      int u = 0, v = 0;
      require(static_cast<bool>(is >> u >> v), errc::format,
              path.string() + ": truncated pixel data at row " + std::to_string(i));
      cloud.pixels.emplace_back(u, v);
    }
    if (has_labels) {
      int label = 0;
      require(static_cast<bool>(is >> label), errc::format,
              path.string() + ": truncated label data at row " + std::to_string(i));
      if (labels_out) labels_out->push_back(label);
    }
    cloud.points.push_back(p);
  }
  return cloud;
}

// --- grasps JSON ----------------------------------------------------------

namespace io_detail {

inline json parse_json_file(const std::filesystem::path& path) {
  auto bytes = read_file_bytes(path);
  json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
  require(!j.is_discarded(), errc::format, path.string() + ": invalid JSON");
  return j;
}

inline double number_field(const json& j, const char* field, const std::string& ctx) {
  require(j.is_number(), errc::format, ctx + ": field '" + field + "' must be a number");
  return j.get<double>();
}

}  // namespace io_detail

// Array of {"rotation": [9 row-major], "translation": [x,y,z], "confidence"?}.
// Candidates get sequential ids in file order starting at 0.
inline std::vector<GraspCandidate> read_grasps_json(const std::filesystem::path& path) {
  json j = io_detail::parse_json_file(path);
  require(j.is_array(), errc::format, path.string() + ": top level must be an array");
  std::vector<GraspCandidate> grasps;
  grasps.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string ctx = path.string() + ": grasp " + std::to_string(i);
    const json& e = j[i];
    require(e.is_object(), errc::format, ctx + " must be an object");
    require(e.contains("rotation") && e["rotation"].is_array() && e["rotation"].size() == 9,
            errc::format, ctx + ": 'rotation' must be an array of 9 numbers");
    require(e.contains("translation") && e["translation"].is_array() &&
                e["translation"].size() == 3,
            errc::format, ctx + ": 'translation' must be an array of 3 numbers");

    GraspCandidate g;
    for (int k = 0; k < 9; ++k)
      g.rotation.m[static_cast<std::size_t>(k)] =
          io_detail::number_field(e["rotation"][static_cast<std::size_t>(k)], "rotation", ctx);
    require(g.rotation.is_orthonormal(), errc::format,
            ctx + ": 'rotation' is not orthonormal within 1e-6");
    g.translation = {io_detail::number_field(e["translation"][0], "translation", ctx),
                     io_detail::number_field(e["translation"][1], "translation", ctx),
                     io_detail::number_field(e["translation"][2], "translation", ctx)};
    if (e.contains("confidence") && !e["confidence"].is_null()) {
      double c = io_detail::number_field(e["confidence"], "confidence", ctx);
      require(c >= 0.0 && c <= 1.0, errc::format, ctx + ": 'confidence' must be in [0,1]");
      g.confidence = c;
    }
    g.id = static_cast<int>(i);
    grasps.push_back(g);
  }
  return grasps;
}

inline void write_grasps_json(const std::vector<GraspCandidate>& grasps,
                              const std::filesystem::path& path) {
  json arr = json::array();
  for (const auto& g : grasps) {
    json e;
    e["rotation"] = g.rotation.m;
    e["translation"] = {g.translation.x, g.translation.y, g.translation.z};
    if (g.confidence) e["confidence"] = *g.confidence;
    arr.push_back(std::move(e));
  }
  std::string s = arr.dump(2);
  s.push_back('\n');
  io_detail::write_file_bytes(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

// --- human joints ---------------------------------------------------------

struct HumanJoints {
  Vec3 shoulder;
  Vec3 elbow;
  Vec3 wrist;

  void validate() const {
    require((shoulder - elbow).norm() > 0.0, errc::invalid_argument,
            "human joints: shoulder and elbow coincide");
    require((elbow - wrist).norm() > 0.0, errc::invalid_argument,
            "human joints: elbow and wrist coincide");
  }
};

inline Vec3 json_vec3(const json& j, const std::string& ctx) {
  require(j.is_array() && j.size() == 3 && j[0].is_number() && j[1].is_number() &&
              j[2].is_number(),
          errc::format, ctx + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline HumanJoints read_human_pose_json(const std::filesystem::path& path) {
  json j = io_detail::parse_json_file(path);
  require(j.is_object(), errc::format, path.string() + ": top level must be an object");
  for (const char* field : {"shoulder", "elbow", "wrist"})
    require(j.contains(field), errc::format,
            path.string() + ": missing field '" + field + "'");
  HumanJoints joints{json_vec3(j["shoulder"], path.string() + ": shoulder"),
                     json_vec3(j["elbow"], path.string() + ": elbow"),
                     json_vec3(j["wrist"], path.string() + ": wrist")};
  joints.validate();
  return joints;
}

inline void write_human_pose_json(const HumanJoints& joints,
                                  const std::filesystem::path& path) {
  json j;
  j["shoulder"] = {joints.shoulder.x, joints.shoulder.y, joints.shoulder.z};
  j["elbow"] = {joints.elbow.x, joints.elbow.y, joints.elbow.z};
  j["wrist"] = {joints.wrist.x, joints.wrist.y, joints.wrist.z};
  std::string s = j.dump(2);
  s.push_back('\n');
  io_detail::write_file_bytes(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

// --- scene manifest and bundle ---------------------------------------------

struct SceneManifest {
  std::string image_path;
  std::string depth_path;
  double depth_scale = 0.0;  // meters per raw depth unit
  CameraIntrinsics intrinsics;
  std::array<int, 4> bbox{0, 0, 0, 0};  // x, y, w, h in pixels
  std::string object_mask_path;
  std::string grasps_path;
  std::optional<std::string> human_pose_path;
  std::string object_query;
};

struct SceneBundle {
  Image image;
  DepthImage depth;
  double depth_scale = 0.0;
  CameraIntrinsics intrinsics;
  std::array<int, 4> bbox{0, 0, 0, 0};
  BinaryMask object_mask;
  std::vector<GraspCandidate> grasps;
  std::optional<HumanJoints> joints;
  std::string object_query;
  std::filesystem::path scene_dir;
};

inline SceneManifest read_manifest_json(const std::filesystem::path& path) {
  json j = io_detail::parse_json_file(path);
  require(j.is_object(), errc::format, path.string() + ": top level must be an object");
  auto str_field = [&](const char* f) {
    require(j.contains(f) && j[f].is_string(), errc::format,
            path.string() + ": missing or non-string field '" + f + "'");
    return j[f].get<std::string>();
  };

  SceneManifest m;
  m.image_path = str_field("image_path");
  m.depth_path = str_field("depth_path");
  m.object_mask_path = str_field("object_mask_path");
  m.grasps_path = str_field("grasps_path");
  m.object_query = str_field("object_query");
  if (j.contains("human_pose_path") && !j["human_pose_path"].is_null())
    m.human_pose_path = str_field("human_pose_path");

  require(j.contains("depth_scale") && j["depth_scale"].is_number(), errc::format,
          path.string() + ": missing or non-numeric field 'depth_scale'");
  m.depth_scale = j["depth_scale"].get<double>();
  require(m.depth_scale > 0.0, errc::format, path.string() + ": depth_scale must be positive");

  require(j.contains("intrinsics") && j["intrinsics"].is_object(), errc::format,
          path.string() + ": missing object field 'intrinsics'");
  const json& k = j["intrinsics"];
  for (const char* f : {"fx", "fy", "cx", "cy", "width", "height"})
    require(k.contains(f) && k[f].is_number(), errc::format,
            path.string() + ": intrinsics missing numeric field '" + f + "'");
  m.intrinsics = {k["fx"].get<double>(),  k["fy"].get<double>(), k["cx"].get<double>(),
                  k["cy"].get<double>(),  k["width"].get<int>(), k["height"].get<int>()};
  m.intrinsics.validate();

  require(j.contains("bbox") && j["bbox"].is_array() && j["bbox"].size() == 4, errc::format,
          path.string() + ": 'bbox' must be an array of 4 integers");
  for (int i = 0; i < 4; ++i) {
    require(j["bbox"][static_cast<std::size_t>(i)].is_number_integer(), errc::format,
            path.string() + ": 'bbox' must be an array of 4 integers");
    m.bbox[static_cast<std::size_t>(i)] = j["bbox"][static_cast<std::size_t>(i)].get<int>();
  }
  require(m.bbox[2] >= 1 && m.bbox[3] >= 1, errc::format,
          path.string() + ": bbox width/height must be >= 1");
  require(m.bbox[0] >= 0 && m.bbox[1] >= 0 &&
              m.bbox[0] + m.bbox[2] <= m.intrinsics.width &&
              m.bbox[1] + m.bbox[3] <= m.intrinsics.height,
          errc::format, path.string() + ": bbox extends past image bounds");
  return m;
}

inline void write_manifest_json(const SceneManifest& m, const std::filesystem::path& path) {
  json j;
  j["image_path"] = m.image_path;
  j["depth_path"] = m.depth_path;
  j["depth_scale"] = m.depth_scale;
  j["intrinsics"] = {{"fx", m.intrinsics.fx},       {"fy", m.intrinsics.fy},
                     {"cx", m.intrinsics.cx},       {"cy", m.intrinsics.cy},
                     {"width", m.intrinsics.width}, {"height", m.intrinsics.height}};
  j["bbox"] = m.bbox;
  j["object_mask_path"] = m.object_mask_path;
  j["grasps_path"] = m.grasps_path;
  if (m.human_pose_path) j["human_pose_path"] = *m.human_pose_path;
  j["object_query"] = m.object_query;
  std::string s = j.dump(2);
  s.push_back('\n');
  io_detail::write_file_bytes(path, std::vector<std::uint8_t>(s.begin(), s.end()));
}

// Load and cross-validate everything a manifest references. Paths resolve
// relative to the manifest's directory.
inline SceneBundle read_scene(const std::filesystem::path& manifest_path) {
  SceneManifest m = read_manifest_json(manifest_path);
  std::filesystem::path dir = manifest_path.parent_path();

  SceneBundle b;
  b.scene_dir = dir;
  b.image = read_image_ppm(dir / m.image_path);
  require(b.image.width == m.intrinsics.width && b.image.height == m.intrinsics.height,
          errc::format, "image dimensions do not match manifest intrinsics");
  b.depth = read_depth_pgm16(dir / m.depth_path);
  require(b.depth.width == m.intrinsics.width && b.depth.height == m.intrinsics.height,
          errc::format, "depth dimensions do not match manifest intrinsics");
  b.object_mask = read_mask_pgm(dir / m.object_mask_path);
  require(b.object_mask.width == m.intrinsics.width &&
              b.object_mask.height == m.intrinsics.height,
          errc::format, "object mask dimensions do not match manifest intrinsics");
  b.grasps = read_grasps_json(dir / m.grasps_path);
  if (m.human_pose_path) b.joints = read_human_pose_json(dir / *m.human_pose_path);
  b.depth_scale = m.depth_scale;
  b.intrinsics = m.intrinsics;
  b.bbox = m.bbox;
  b.object_query = m.object_query;
  return b;
}

}  // namespace handover
