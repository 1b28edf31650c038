#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "handover/error.hpp"
#include "handover/raster.hpp"

namespace handover {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }

  Vec3 normalized() const {
    double n = norm();
    require(n > 1e-12, errc::degenerate_geometry, "cannot normalize near-zero vector");
    return {x / n, y / n, z / n};
  }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

// 3x3 rotation matrix, row-major. Orthonormality (R^T R = I, det = +1) is
// enforced within 1e-6 wherever a rotation is ingested from outside.
struct Rot3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  static Rot3 identity() { return {}; }

  static Rot3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
    return Rot3{{r0.x, r0.y, r0.z, r1.x, r1.y, r1.z, r2.x, r2.y, r2.z}};
  }

  static Rot3 from_columns(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
    return Rot3{{c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z}};
  }

  // Rotation about an axis by angle (radians), Rodrigues form.
  static Rot3 axis_angle(const Vec3& axis, double angle) {
    Vec3 a = axis.normalized();
    double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    return Rot3{{t * a.x * a.x + c,       t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y,
                 t * a.x * a.y + s * a.z, t * a.y * a.y + c,       t * a.y * a.z - s * a.x,
                 t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c}};
  }

  double at(int r, int c) const { return m[static_cast<std::size_t>(r) * 3 + c]; }

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z,
            m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }

  Rot3 operator*(const Rot3& o) const {
    Rot3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += at(i, k) * o.at(k, j);
        r.m[static_cast<std::size_t>(i) * 3 + j] = s;
      }
    return r;
  }

  Rot3 transposed() const {
    return Rot3{{m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]}};
  }

  double det() const {
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }

  double orthonormality_error() const {
    Rot3 rtr = transposed() * (*this);
    double e = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        e = std::max(e, std::abs(rtr.at(i, j) - (i == j ? 1.0 : 0.0)));
    return std::max(e, std::abs(det() - 1.0));
  }

  bool is_orthonormal(double tol = 1e-6) const { return orthonormality_error() <= tol; }

  void validate(const char* what = "rotation") const {
    require(is_orthonormal(), errc::invalid_argument,
            std::string(what) + " is not orthonormal within 1e-6 (det/Rt*R check failed)");
  }

  // Gripper approach direction: the frame's z-axis, R * (0,0,1).
  Vec3 z_axis() const { return {m[2], m[5], m[8]}; }
};

struct GraspCandidate {
  Rot3 rotation;
  Vec3 translation;                  // meters, camera frame
  std::optional<double> confidence;  // [0,1] when present
  int id = 0;

  Vec3 approach() const { return rotation.z_axis(); }
};

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const {
    require(fx > 0 && fy > 0, errc::invalid_argument, "intrinsics: fx and fy must be positive");
    require(width > 0 && height > 0, errc::invalid_argument,
            "intrinsics: width and height must be positive");
    require(cx >= 0 && cx < width, errc::invalid_argument, "intrinsics: cx out of [0,width)");
    require(cy >= 0 && cy < height, errc::invalid_argument, "intrinsics: cy out of [0,height)");
  }
};

// Points in meters with an optional parallel (u,v) pixel list recording
// which image pixel each point was back-projected from.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<std::pair<int, int>> pixels;  // empty, or same length as points

  bool has_pixels() const { return !pixels.empty(); }
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void validate(int image_width = -1, int image_height = -1) const {
    if (!pixels.empty()) {
      require(pixels.size() == points.size(), errc::invalid_argument,
              "pixel list length differs from point list length");
      if (image_width > 0) {
        for (const auto& [u, v] : pixels)
          require(u >= 0 && u < image_width && v >= 0 && v < image_height,
                  errc::invalid_argument, "pixel coordinate outside image bounds");
      }
    }
  }
};

struct RigidTransform {
  Rot3 rotation;
  Vec3 translation;

  static RigidTransform identity() { return {}; }

  RigidTransform inverse() const {
    Rot3 rt = rotation.transposed();
    return {rt, -(rt * translation)};
  }

  RigidTransform compose(const RigidTransform& inner) const {
    // (*this) applied after inner: p -> R*(Ri*p + ti) + t
    return {rotation * inner.rotation, rotation * inner.translation + translation};
  }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
};

// --- operations ---------------------------------------------------------

// Back-project a depth raster through a pinhole model. Raw depth 0 means
// missing and is skipped; every emitted point records its (u,v) origin.
// scale converts raw depth units to meters.
inline PointCloud depth_to_pointcloud(const DepthImage& depth, const CameraIntrinsics& k,
                                      double scale) {
  k.validate();
  require(scale > 0.0, errc::invalid_argument, "depth scale must be positive");
  require(depth.width == k.width && depth.height == k.height, errc::invalid_argument,
          "depth dimensions do not match intrinsics");

  PointCloud cloud;
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      std::uint16_t raw = depth.at(u, v);
      if (raw == 0) continue;
      double z = raw * scale;
      cloud.points.push_back({z * (u - k.cx) / k.fx, z * (v - k.cy) / k.fy, z});
      cloud.pixels.emplace_back(u, v);
    }
  }
  return cloud;
}

// Keep exactly the points whose recorded pixel lies on a true mask cell.
inline PointCloud filter_cloud_by_mask(const PointCloud& cloud, const BinaryMask& mask) {
  require(cloud.empty() || cloud.has_pixels(), errc::invalid_argument,
          "cloud has no pixel coordinates to filter by");
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& [u, v] = cloud.pixels[i];
    require(mask.in_bounds(u, v), errc::invalid_argument,
            "cloud pixel coordinate outside mask bounds");
    if (mask.at(u, v)) {
      out.points.push_back(cloud.points[i]);
      out.pixels.push_back(cloud.pixels[i]);
    }
  }
  return out;
}

// Fraction of points strictly on the positive side of the plane through
// `origin` with normal `normal`. Points exactly on the plane do not count.
inline double plane_side_fraction(const std::vector<Vec3>& points, const Vec3& origin,
                                  const Vec3& normal) {
  require(!points.empty(), errc::invalid_argument, "plane_side_fraction: empty point list");
  Vec3 n = normal.normalized();
  std::size_t positive = 0;
  for (const auto& q : points)
    if ((q - origin).dot(n) > 0.0) ++positive;
  return static_cast<double>(positive) / static_cast<double>(points.size());
}

inline PointCloud apply_rigid(const RigidTransform& t, const PointCloud& cloud) {
  t.rotation.validate("transform rotation");
  PointCloud out = cloud;
  for (auto& p : out.points) p = t.apply(p);
  return out;
}

inline GraspCandidate apply_rigid(const RigidTransform& t, const GraspCandidate& g) {
  t.rotation.validate("transform rotation");
  GraspCandidate out = g;
  out.rotation = t.rotation * g.rotation;
  out.translation = t.apply(g.translation);
  return out;
}

inline std::vector<GraspCandidate> apply_rigid(const RigidTransform& t,
                                               const std::vector<GraspCandidate>& grasps) {
  std::vector<GraspCandidate> out;
  out.reserve(grasps.size());
  for (const auto& g : grasps) out.push_back(apply_rigid(t, g));
  return out;
}

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace handover
