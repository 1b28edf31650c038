#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "handover/error.hpp"
#include "handover/geometry.hpp"
#include "handover/grasp_selection.hpp"
#include "handover/raster.hpp"
#include "handover/rng.hpp"
#include "handover/scene_io.hpp"

namespace handover {

// --- success metric --------------------------------------------------------

struct SuccessParams {
  int sample_n = 100;
  double threshold = 0.8;
  std::uint64_t seed = 0;
  bool resample = true;   // false: evaluate the full cloud once, exactly
  double side_sign = 1.0; // +1: success side is the positive half-space along the approach

  void validate() const {
    require(sample_n >= 1, errc::invalid_argument, "sample_n must be >= 1");
    require(threshold > 0.0 && threshold < 1.0, errc::invalid_argument,
            "threshold must be in (0,1)");
    require(side_sign == 1.0 || side_sign == -1.0, errc::invalid_argument,
            "side_sign must be +1 or -1");
  }
};

struct SuccessResult {
  double p = 0.0;
  bool success = false;
};

// Plane-side metric: sample points from the human-region cloud (uniform,
// with replacement) and measure the fraction on the success side of the
// plane through the grasp point with the approach direction as normal.
// Success is strict: p must exceed the threshold.
inline SuccessResult evaluate_success(const GraspCandidate& grasp, const PointCloud& pc_human,
                                      const SuccessParams& params) {
  params.validate();
  require(!pc_human.empty(), errc::invalid_argument, "human region cloud is empty");
  Vec3 n = (grasp.approach() * params.side_sign).normalized();

  SuccessResult r;
  if (!params.resample) {
    r.p = plane_side_fraction(pc_human.points, grasp.translation, n);
  } else {
    Rng rng(params.seed);
    int positive = 0;
    for (int i = 0; i < params.sample_n; ++i) {
      const Vec3& q = pc_human.points[rng.below(pc_human.size())];
      if ((q - grasp.translation).dot(n) > 0.0) ++positive;
    }
    r.p = static_cast<double>(positive) / static_cast<double>(params.sample_n);
  }
  r.success = r.p > params.threshold;
  return r;
}

// --- synthetic scenes -------------------------------------------------------

enum class ObjectKind { hammer, knife, mug, spatula, box };

inline const char* object_kind_name(ObjectKind k) {
  switch (k) {
    case ObjectKind::hammer: return "hammer";
    case ObjectKind::knife: return "knife";
    case ObjectKind::mug: return "mug";
    case ObjectKind::spatula: return "spatula";
    case ObjectKind::box: return "box";
  }
  return "?";
}

inline ObjectKind object_kind_from_string(const std::string& s) {
  for (ObjectKind k : {ObjectKind::hammer, ObjectKind::knife, ObjectKind::mug,
                       ObjectKind::spatula, ObjectKind::box})
    if (s == object_kind_name(k)) return k;
  fail(errc::unknown_kind, "unknown object kind: " + s);
}

constexpr int kLabelNeither = 0;
constexpr int kLabelHuman = 1;
constexpr int kLabelRobot = 2;

struct LabeledBox {
  Vec3 center;  // object frame, z up, meters
  Vec3 half;
  int label = kLabelNeither;
};

// Composite-box objects. Each has the human part protruding at one
// extremity so region geometry, not rendering fidelity, drives the
// benchmark outcomes.
inline std::vector<LabeledBox> object_parts(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::hammer:
      return {{{0, 0, 0.125}, {0.015, 0.015, 0.125}, kLabelHuman},
              {{0, 0, 0.2675}, {0.05, 0.0175, 0.0175}, kLabelRobot}};
    case ObjectKind::knife:
      // thick body at the far end offers every approach family the thin
      // heel offers, so the ranking argmax always lands on the body
      return {{{0.22, 0, 0}, {0.05, 0.008, 0.012}, kLabelHuman},
              {{0.12, 0, 0}, {0.05, 0.006, 0.0025}, kLabelRobot},
              {{0.035, 0, 0}, {0.035, 0.012, 0.014}, kLabelRobot}};
    case ObjectKind::mug:
      return {{{0, 0, 0.05}, {0.04, 0.04, 0.05}, kLabelRobot},
              {{0.055, 0, 0.05}, {0.015, 0.01, 0.035}, kLabelHuman}};
    case ObjectKind::spatula:
      // the neither-labeled collar hides the handle's front face so no
      // human grasp approaches along +x (keeps the ring family suppressed)
      return {{{0.02, 0, 0}, {0.02, 0.045, 0.024}, kLabelRobot},
              {{0.1, 0, 0}, {0.06, 0.045, 0.012}, kLabelRobot},
              {{0.17, 0, 0}, {0.01, 0.011, 0.02}, kLabelNeither},
              {{0.25, 0, 0}, {0.07, 0.011, 0.02}, kLabelHuman}};
    case ObjectKind::box:
      return {{{0, 0, 0.04}, {0.09, 0.05, 0.04}, kLabelRobot},
              {{0.055, 0, 0.092}, {0.025, 0.008, 0.012}, kLabelHuman}};
  }
  fail(errc::unknown_kind, "unknown object kind");
}

struct SurfacePoint {
  Vec3 p;       // camera frame
  Vec3 normal;  // outward, camera frame
  int label = kLabelNeither;
};

struct SyntheticScene {
  std::string name;
  ObjectKind kind = ObjectKind::hammer;
  std::uint64_t seed = 0;
  CameraIntrinsics intrinsics;
  double depth_scale = 0.001;
  std::vector<SurfacePoint> surface;
  std::vector<GraspCandidate> grasps;
  Image image;
  DepthImage depth;
  BinaryMask object_mask;
  BinaryMask m_human;
  BinaryMask m_robot;
  std::array<int, 4> bbox{0, 0, 0, 0};
  HumanJoints joints;
  std::string object_query;

  PointCloud labeled_cloud(int label) const {
    PointCloud cloud;
    for (const auto& sp : surface)
      if (sp.label == label) cloud.points.push_back(sp.p);
    return cloud;
  }
};

namespace eval_detail {

inline bool inside_box_eps(const Vec3& q, const LabeledBox& box, double eps = 1e-9) {
  return std::abs(q.x - box.center.x) <= box.half.x + eps &&
         std::abs(q.y - box.center.y) <= box.half.y + eps &&
         std::abs(q.z - box.center.z) <= box.half.z + eps;
}

// Uniform samples on every face of every part; samples falling on or inside
// another part (junction faces) are discarded so only true surface remains.
inline std::vector<SurfacePoint> sample_surface(const std::vector<LabeledBox>& parts,
                                                double density, Rng& rng) {
  std::vector<SurfacePoint> out;
  for (std::size_t bi = 0; bi < parts.size(); ++bi) {
    const LabeledBox& box = parts[bi];
    // faces: +x, -x, +y, -y, +z, -z
    for (int axis = 0; axis < 3; ++axis) {
      for (int sign = -1; sign <= 1; sign += 2) {
        double ha = axis == 0 ? box.half.y : box.half.x;
        double hb = axis == 2 ? box.half.y : box.half.z;
        double area = 4.0 * ha * hb;
        auto count = static_cast<long>(std::llround(area * density));
        for (long i = 0; i < std::max(1L, count); ++i) {
          double a = rng.uniform(-ha, ha);
          double b = rng.uniform(-hb, hb);
          Vec3 q = box.center;
          Vec3 n{0, 0, 0};
          if (axis == 0) {
            q.x += sign * box.half.x;
            q.y += a;
            q.z += b;
            n.x = sign;
          } else if (axis == 1) {
            q.y += sign * box.half.y;
            q.x += a;
            q.z += b;
            n.y = sign;
          } else {
            q.z += sign * box.half.z;
            q.x += a;
            q.y += b;
            n.z = sign;
          }
          bool junction = false;
          for (std::size_t bj = 0; bj < parts.size() && !junction; ++bj)
            if (bj != bi && inside_box_eps(q, parts[bj])) junction = true;
          if (!junction) out.push_back({q, n, box.label});
        }
      }
    }
  }
  return out;
}

inline std::pair<int, int> project(const CameraIntrinsics& k, const Vec3& p) {
  int u = static_cast<int>(std::floor(k.fx * p.x / p.z + k.cx + 0.5));
  int v = static_cast<int>(std::floor(k.fy * p.y / p.z + k.cy + 0.5));
  return {u, v};
}

inline void splat_mask(BinaryMask& mask, int u, int v) {
  for (int dv = -1; dv <= 1; ++dv)
    for (int du = -1; du <= 1; ++du) mask.set(u + du, v + dv, true);
}

inline std::array<std::uint8_t, 3> object_color(ObjectKind kind) {
  switch (kind) {
    case ObjectKind::hammer: return {139, 94, 50};
    case ObjectKind::knife: return {165, 165, 175};
    case ObjectKind::mug: return {182, 66, 60};
    case ObjectKind::spatula: return {66, 120, 182};
    case ObjectKind::box: return {200, 172, 110};
  }
  return {128, 128, 128};
}

}  // namespace eval_detail

// k grasps anchored on seeded-random surface points: approach is the
// negated outward normal, completed to a right-handed frame by an arbitrary
// orthonormal tangent x-axis.
inline std::vector<GraspCandidate> sample_grasps(const std::vector<SurfacePoint>& surface,
                                                 int k, std::uint64_t seed) {
  require(k >= 1, errc::invalid_argument, "grasp count must be >= 1");
  require(!surface.empty(), errc::invalid_argument, "surface is empty");
  Rng rng(seed);
  std::vector<GraspCandidate> grasps;
  grasps.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    const SurfacePoint& sp = surface[rng.below(surface.size())];
    Vec3 approach = (-sp.normal).normalized();
    Vec3 ref = std::abs(approach.z) > 0.9 ? Vec3{1, 0, 0} : Vec3{0, 0, 1};
    Vec3 x_axis = approach.cross(ref).normalized();
    Vec3 y_axis = approach.cross(x_axis);
    GraspCandidate g;
    g.rotation = Rot3::from_columns(x_axis, y_axis, approach);
    g.translation = sp.p;
    g.id = i;
    grasps.push_back(g);
  }
  return grasps;
}

inline SyntheticScene generate_scene(ObjectKind kind, std::uint64_t seed, double density,
                                     int width = 640, int height = 480, int grasp_count = 80) {
  require(density > 0.0, errc::invalid_argument, "density must be positive");

  SyntheticScene scene;
  scene.kind = kind;
  scene.seed = seed;
  scene.name = object_kind_name(kind);
  scene.object_query = object_kind_name(kind);
  scene.intrinsics = {0.82 * width, 0.82 * width, width / 2.0, height / 2.0, width, height};
  scene.depth_scale = 0.001;  // millimeters

  auto parts = object_parts(kind);
  Rng rng(derive_seed(seed, std::string("scene/") + object_kind_name(kind)));

  // object frame (z up) -> camera frame (y down, z forward), composed with a
  // seeded yaw about the object's vertical axis and a seeded camera distance
  double yaw = rng.uniform(-0.4, 0.4);
  double cam_z = rng.uniform(0.55, 0.7);
  Rot3 tilt = Rot3::from_rows({1, 0, 0}, {0, 0, -1}, {0, 1, 0});
  Rot3 place_r = tilt * Rot3::axis_angle({0, 0, 1}, yaw);
  Vec3 centroid{0, 0, 0};
  for (const auto& b : parts) centroid = centroid + b.center;
  centroid = centroid * (1.0 / static_cast<double>(parts.size()));
  Vec3 place_t = Vec3{0, 0, cam_z} - place_r * centroid;

  auto obj_points = eval_detail::sample_surface(parts, density, rng);
  scene.surface.reserve(obj_points.size());
  for (const auto& sp : obj_points)
    scene.surface.push_back({place_r * sp.p + place_t, place_r * sp.normal, sp.label});

  // render: nearest-z depth at the exact pixel, 3x3 splats for the masks and image
  scene.image = Image(width, height, 208, 208, 212);
  scene.depth = DepthImage(width, height);
  scene.object_mask = BinaryMask(width, height);
  scene.m_human = BinaryMask(width, height);
  scene.m_robot = BinaryMask(width, height);
  auto color = eval_detail::object_color(kind);
  for (const auto& sp : scene.surface) {
    require(sp.p.z > 0.0, errc::degenerate_geometry, "surface point behind the camera");
    auto [u, v] = eval_detail::project(scene.intrinsics, sp.p);
    if (u < 0 || u >= width || v < 0 || v >= height) continue;
    eval_detail::splat_mask(scene.object_mask, u, v);
    if (sp.label == kLabelHuman) eval_detail::splat_mask(scene.m_human, u, v);
    if (sp.label == kLabelRobot) eval_detail::splat_mask(scene.m_robot, u, v);

    auto raw = static_cast<std::uint16_t>(
        std::clamp<long>(std::lround(sp.p.z / scene.depth_scale), 1, 65535));
    std::uint16_t prev = scene.depth.at(u, v);
    if (prev == 0 || raw < prev) scene.depth.set(u, v, raw);

    double shade = 0.6 + 0.4 * std::max(0.0, -sp.normal.z);
    for (int dv = -1; dv <= 1; ++dv)
      for (int du = -1; du <= 1; ++du)
        scene.image.set(u + du, v + dv, static_cast<std::uint8_t>(color[0] * shade),
                        static_cast<std::uint8_t>(color[1] * shade),
                        static_cast<std::uint8_t>(color[2] * shade));
  }
  // human region wins mask overlaps at part junctions
  for (std::size_t i = 0; i < scene.m_robot.data.size(); ++i)
    if (scene.m_human.data[i]) scene.m_robot.data[i] = 0;

  int u0 = width, v0 = height, u1 = -1, v1 = -1;
  for (int v = 0; v < height; ++v)
    for (int u = 0; u < width; ++u)
      if (scene.object_mask.at(u, v)) {
        u0 = std::min(u0, u);
        v0 = std::min(v0, v);
        u1 = std::max(u1, u);
        v1 = std::max(v1, v);
      }
  require(u1 >= u0 && v1 >= v0, errc::degenerate_geometry, "object projects to no pixels");
  u0 = std::max(0, u0 - 4);
  v0 = std::max(0, v0 - 4);
  u1 = std::min(width - 1, u1 + 4);
  v1 = std::min(height - 1, v1 + 4);
  scene.bbox = {u0, v0, u1 - u0 + 1, v1 - v0 + 1};

  scene.grasps = sample_grasps(scene.surface, grasp_count,
                               derive_seed(seed, std::string("grasps/") + scene.name));

  // plausible receiver, world frame (z up), slight seeded variation
  double dy = rng.uniform(-0.1, 0.1);
  scene.joints.shoulder = {0.85, dy, 1.35};
  scene.joints.elbow = {0.87, dy + 0.03, 1.04};
  scene.joints.wrist = {0.92, dy + 0.06, 0.78};
  return scene;
}

// Scene directory layout consumed by the CLI and the benchmark loader.
inline void write_scene(const SyntheticScene& scene, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_image_ppm(scene.image, dir / "image.ppm");
  write_depth_pgm16(scene.depth, dir / "depth.pgm");
  write_mask_pgm(scene.object_mask, dir / "object_mask.pgm");
  write_mask_pgm(scene.m_human, dir / "m_human_gt.pgm");
  write_mask_pgm(scene.m_robot, dir / "m_robot_gt.pgm");
  write_grasps_json(scene.grasps, dir / "grasps.json");
  write_human_pose_json(scene.joints, dir / "human_pose.json");

  PointCloud gt;
  std::vector<int> labels;
  for (const auto& sp : scene.surface) {
    gt.points.push_back(sp.p);
    labels.push_back(sp.label);
  }
  write_pointcloud_ply(gt, dir / "gt_points.ply", &labels);

  SceneManifest m;
  m.image_path = "image.ppm";
  m.depth_path = "depth.pgm";
  m.depth_scale = scene.depth_scale;
  m.intrinsics = scene.intrinsics;
  m.bbox = scene.bbox;
  m.object_mask_path = "object_mask.pgm";
  m.grasps_path = "grasps.json";
  m.human_pose_path = "human_pose.json";
  m.object_query = scene.object_query;
  write_manifest_json(m, dir / "manifest.json");
}

// --- benchmark ---------------------------------------------------------------

// What the harness needs from a scene, whether generated in-memory or
// reloaded from a scene directory.
struct BenchScene {
  std::string name;
  std::vector<GraspCandidate> grasps;
  PointCloud pc_human;  // ground-truth labeled points
  PointCloud pc_robot;

  static BenchScene from_synthetic(const SyntheticScene& scene, const std::string& name) {
    BenchScene b;
    b.name = name;
    b.grasps = scene.grasps;
    b.pc_human = scene.labeled_cloud(kLabelHuman);
    b.pc_robot = scene.labeled_cloud(kLabelRobot);
    return b;
  }

  static BenchScene from_directory(const std::filesystem::path& dir) {
    BenchScene b;
    b.name = dir.filename().string();
    b.grasps = read_grasps_json(dir / "grasps.json");
    std::vector<int> labels;
    PointCloud gt = read_pointcloud_ply(dir / "gt_points.ply", &labels);
    require(labels.size() == gt.size(), errc::format,
            (dir / "gt_points.ply").string() + ": missing label column");
    for (std::size_t i = 0; i < gt.size(); ++i) {
      if (labels[i] == kLabelHuman) b.pc_human.points.push_back(gt.points[i]);
      if (labels[i] == kLabelRobot) b.pc_robot.points.push_back(gt.points[i]);
    }
    require(!b.pc_human.empty() && !b.pc_robot.empty(), errc::format,
            dir.string() + ": ground-truth regions are empty");
    return b;
  }
};

struct BenchMode {
  std::string label;  // a1, a2, a3, b1, b2
  SelectionMode mode = SelectionMode::full;
};

inline BenchMode bench_mode_from_label(const std::string& label) {
  std::string l;
  for (char c : label) l += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (l == "a1") return {l, SelectionMode::no_regions};
  if (l == "a2") return {l, SelectionMode::no_robot_region};
  if (l == "a3" || l == "b2") return {l, SelectionMode::full};
  if (l == "b1") return {l, SelectionMode::random_in_robot_region};
  fail(errc::invalid_argument, "unknown benchmark mode label: " + label);
}

struct ModeResult {
  std::string label;
  SelectionMode mode = SelectionMode::full;
  long successes = 0;
  long trials = 0;
  double rate = 0.0;
  std::map<std::string, long> per_scene_successes;
};

struct BenchReport {
  std::vector<ModeResult> modes;
  std::vector<std::string> scene_names;
  int trials_per_scene = 0;
  std::uint64_t master_seed = 0;
  SelectionParams selection;
  SuccessParams success;
};

// A trial succeeds when the chosen grasp avoids the human region (not
// within epsilon of pc_human) and passes the plane-side metric.
// Infeasible selections count as failures, not aborts.
inline BenchReport run_benchmark(const std::vector<BenchScene>& scenes,
                                 const std::vector<BenchMode>& modes, int trials,
                                 std::uint64_t master_seed,
                                 const SelectionParams& base_selection = {},
                                 const SuccessParams& base_success = {}) {
  require(trials >= 1, errc::invalid_argument, "trials must be >= 1");
  require(!modes.empty(), errc::invalid_argument, "mode list must be non-empty");
  require(!scenes.empty(), errc::invalid_argument, "scene list must be non-empty");

  BenchReport report;
  report.trials_per_scene = trials;
  report.master_seed = master_seed;
  report.selection = base_selection;
  report.success = base_success;
  for (const auto& s : scenes) report.scene_names.push_back(s.name);

  for (const auto& bm : modes) {
    ModeResult mr;
    mr.label = bm.label;
    mr.mode = bm.mode;
    for (const auto& scene : scenes) {
      long scene_successes = 0;
      for (int trial = 0; trial < trials; ++trial) {
        std::string cell = scene.name + "/" + bm.label + "/trial" + std::to_string(trial);
        SelectionParams sp = base_selection;
        sp.mode = bm.mode;
        sp.seed = derive_seed(master_seed, "select/" + cell);
        bool ok = false;
        try {
          SelectionReport sel = select(scene.grasps, scene.pc_human, scene.pc_robot, sp);
          bool in_human_region = false;
          for (const auto& p : scene.pc_human.points)
            if (distance(sel.chosen.translation, p) < sp.epsilon) {
              in_human_region = true;
              break;
            }
          SuccessParams su = base_success;
          su.seed = derive_seed(master_seed, "success/" + cell);
          SuccessResult res = evaluate_success(sel.chosen, scene.pc_human, su);
          ok = !in_human_region && res.success;
        } catch (const error& e) {
          if (e.code() != errc::no_feasible_grasp && e.code() != errc::degenerate_scoring)
            throw;
        }
        if (ok) ++scene_successes;
      }
      mr.per_scene_successes[scene.name] = scene_successes;
      mr.successes += scene_successes;
      mr.trials += trials;
    }
    mr.rate = static_cast<double>(mr.successes) / static_cast<double>(mr.trials);
    report.modes.push_back(std::move(mr));
  }
  return report;
}

// The paper-default evaluation suite: two seeded instances of each object kind.
inline std::vector<BenchScene> default_bench_suite(std::uint64_t master_seed,
                                                   double density = 30000.0) {
  std::vector<BenchScene> scenes;
  for (ObjectKind kind : {ObjectKind::hammer, ObjectKind::knife, ObjectKind::mug,
                          ObjectKind::spatula, ObjectKind::box}) {
    for (int instance = 0; instance < 2; ++instance) {
      std::string name = std::string(object_kind_name(kind)) + "-" + std::to_string(instance);
      auto scene = generate_scene(kind, derive_seed(master_seed, "suite/" + name), density);
      scenes.push_back(BenchScene::from_synthetic(scene, name));
    }
  }
  return scenes;
}

inline nlohmann::json bench_report_to_json(const BenchReport& r) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : r.modes) {
    nlohmann::json per_scene;
    for (const auto& [name, k] : m.per_scene_successes) per_scene[name] = k;
    modes.push_back({{"label", m.label},
                     {"mode", selection_mode_name(m.mode)},
                     {"successes", m.successes},
                     {"trials", m.trials},
                     {"rate", m.rate},
                     {"per_scene_successes", per_scene}});
  }
  return {{"modes", modes},
          {"scenes", r.scene_names},
          {"trials_per_scene", r.trials_per_scene},
          {"master_seed", r.master_seed},
          {"epsilon", r.selection.epsilon},
          {"alpha", r.selection.alpha},
          {"success_sample_n", r.success.sample_n},
          {"success_threshold", r.success.threshold},
          {"success_side_sign", r.success.side_sign}};
}

// Plain-text table in the shape of the paper's ablation tables: one row per
// mode with its ablation factors and the aggregate success rate.
inline std::string bench_report_to_table(const BenchReport& r) {
  auto factor = [](const std::string& label, int which) {
    bool human = label != "a1";
    bool robot = label == "a3" || label == "b1" || label == "b2";
    bool ranking = label != "b1";
    bool v = which == 0 ? human : which == 1 ? robot : ranking;
    return v ? "yes" : "no ";
  };
  char buf[160];
  std::string out;
  out += "method                          human-region  robot-region  ranking   success\n";
  for (const auto& m : r.modes) {
    std::snprintf(buf, sizeof buf, "%-4s %-26s %-13s %-13s %-9s %3ld/%-4ld %6.1f%%\n",
                  m.label.c_str(), selection_mode_name(m.mode), factor(m.label, 0),
                  factor(m.label, 1), factor(m.label, 2), m.successes, m.trials,
                  100.0 * m.rate);
    out += buf;
  }
  return out;
}

}  // namespace handover
