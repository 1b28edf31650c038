#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "handover/error.hpp"
#include "handover/geometry.hpp"
#include "handover/scene_io.hpp"

namespace handover {

// 2-DOF planar receiver arm. Angles are measured from the downward
// vertical: theta1 = 0 means the upper arm hangs straight down and positive
// rotation swings it toward the robot; theta2 is elbow flexion with 0 a
// straight arm. Ranges and segment masses follow the cited anthropometrics.
struct ArmModel {
  double l_upper = 0.0;  // m
  double l_fore = 0.0;   // m
  double m_upper = 2.6;  // kg
  double m_fore = 1.8;   // kg
  double theta1_min_deg = -45.0;
  double theta1_max_deg = 180.0;
  double theta2_min_deg = -15.0;
  double theta2_max_deg = 140.0;
  double gravity = 9.80665;  // m/s^2

  static ArmModel from_joints(const HumanJoints& joints) {
    joints.validate();
    ArmModel arm;
    arm.l_upper = (joints.shoulder - joints.elbow).norm();
    arm.l_fore = (joints.elbow - joints.wrist).norm();
    return arm;
  }

  double theta1_mid_deg() const { return 0.5 * (theta1_min_deg + theta1_max_deg); }  // 67.5
  double theta2_mid_deg() const { return 0.5 * (theta2_min_deg + theta2_max_deg); }  // 62.5

  void validate() const {
    require(l_upper > 0.0 && l_fore > 0.0, errc::invalid_argument,
            "arm segment lengths must be positive");
  }
};

// Vertical plane through the shoulder, oriented toward the robot base.
struct TaskPlane {
  Vec3 origin;      // shoulder
  Vec3 horizontal;  // unit, toward the robot base, perpendicular to up
  Vec3 vertical;    // unit, world up
};

inline TaskPlane build_task_plane(const Vec3& shoulder, const Vec3& robot_base,
                                  const Vec3& up = {0, 0, 1}) {
  Vec3 v = up.normalized();
  Vec3 toward = robot_base - shoulder;
  Vec3 h = toward - v * toward.dot(v);  // horizontal projection
  require(h.norm() > 1e-9, errc::degenerate_geometry,
          "robot base is directly above or below the shoulder; task plane undefined");
  return {shoulder, h.normalized(), v};
}

struct ArmPose {
  Vec3 elbow;
  Vec3 wrist;
};

inline ArmPose forward_kinematics(const ArmModel& arm, const TaskPlane& plane,
                                  double theta1_deg, double theta2_deg) {
  arm.validate();
  require(theta1_deg >= arm.theta1_min_deg - 1e-9 && theta1_deg <= arm.theta1_max_deg + 1e-9,
          errc::invalid_argument, "theta1 outside joint range");
  require(theta2_deg >= arm.theta2_min_deg - 1e-9 && theta2_deg <= arm.theta2_max_deg + 1e-9,
          errc::invalid_argument, "theta2 outside joint range");
  double t1 = deg2rad(theta1_deg);
  double t12 = deg2rad(theta1_deg + theta2_deg);
  Vec3 elbow = plane.origin +
               arm.l_upper * (std::sin(t1) * plane.horizontal - std::cos(t1) * plane.vertical);
  Vec3 wrist = elbow +
               arm.l_fore * (std::sin(t12) * plane.horizontal - std::cos(t12) * plane.vertical);
  return {elbow, wrist};
}

// Static gravity torques for a held posture, segment COMs at midpoints.
// tau1 acts at the shoulder, tau2 at the elbow; both vanish when the arm
// hangs vertically.
inline std::pair<double, double> gravity_torques(const ArmModel& arm, double theta1_deg,
                                                 double theta2_deg) {
  double s1 = std::sin(deg2rad(theta1_deg));
  double s12 = std::sin(deg2rad(theta1_deg + theta2_deg));
  double tau1 = arm.gravity * (arm.m_upper * (arm.l_upper / 2.0) * s1 +
                               arm.m_fore * (arm.l_upper * s1 + (arm.l_fore / 2.0) * s12));
  double tau2 = arm.gravity * arm.m_fore * (arm.l_fore / 2.0) * s12;
  return {tau1, tau2};
}

struct ErgoCost {
  double total = 0.0;
  double torque = 0.0;  // in [0,1] once normalized by the grid maximum
  double disp = 0.0;    // in [0,1] once normalized by the grid maximum
};

// Torque-squared sum plus squared deviation from the joint-range midpoints
// (radians), each normalized by the supplied maxima.
inline ErgoCost ergonomic_cost(const ArmModel& arm, double theta1_deg, double theta2_deg,
                               double c_torque_max, double c_disp_max) {
  require(c_torque_max > 0.0 && c_disp_max > 0.0, errc::invalid_argument,
          "normalization maxima must be positive");
  auto [tau1, tau2] = gravity_torques(arm, theta1_deg, theta2_deg);
  double torque_sq = tau1 * tau1 + tau2 * tau2;
  double d1 = deg2rad(arm.theta1_mid_deg() - theta1_deg);
  double d2 = deg2rad(arm.theta2_mid_deg() - theta2_deg);
  double disp_sq = d1 * d1 + d2 * d2;
  ErgoCost c;
  c.torque = torque_sq / c_torque_max;
  c.disp = disp_sq / c_disp_max;
  c.total = c.torque + c.disp;
  return c;
}

struct ErgoResult {
  double theta1_deg = 0.0;
  double theta2_deg = 0.0;
  Vec3 wrist;  // world frame handover point
  double c_total = 0.0;
  double c_torque = 0.0;
  double c_disp = 0.0;
  long cells_total = 0;     // grid cells evaluated (reach filter not applied)
  long cells_feasible = 0;  // cells whose wrist lies within max_reach
  double c_torque_max = 0.0;
  double c_disp_max = 0.0;
};

namespace ergo_detail {

inline std::vector<double> grid_values(double lo, double hi, double step) {
  std::vector<double> values;
  for (double v = lo; v <= hi + 1e-9; v += step) values.push_back(v);
  return values;
}

}  // namespace ergo_detail

// Exhaustive search over the joint grid. The normalization maxima are the
// grid maxima of the two raw terms (computed over every cell, reachable or
// not), so both cost components land in [0,1]. Feasibility means the wrist
// stays within max_reach of the robot base. Ties break toward smaller
// theta1, then smaller theta2.
inline ErgoResult solve_handover_point(const ArmModel& arm, const TaskPlane& plane,
                                       const Vec3& robot_base, double max_reach,
                                       double granularity_deg = 1.0) {
  arm.validate();
  require(granularity_deg > 0.0, errc::invalid_argument, "granularity must be positive");
  require(max_reach >= 0.0, errc::invalid_argument, "max_reach must be non-negative");

  auto t1s = ergo_detail::grid_values(arm.theta1_min_deg, arm.theta1_max_deg, granularity_deg);
  auto t2s = ergo_detail::grid_values(arm.theta2_min_deg, arm.theta2_max_deg, granularity_deg);

  double torque_max = 0.0, disp_max = 0.0;
  for (double t1 : t1s) {
    for (double t2 : t2s) {
      auto [tau1, tau2] = gravity_torques(arm, t1, t2);
      torque_max = std::max(torque_max, tau1 * tau1 + tau2 * tau2);
      double d1 = deg2rad(arm.theta1_mid_deg() - t1);
      double d2 = deg2rad(arm.theta2_mid_deg() - t2);
      disp_max = std::max(disp_max, d1 * d1 + d2 * d2);
    }
  }
  require(torque_max > 0.0 && disp_max > 0.0, errc::degenerate_geometry,
          "degenerate grid: zero-range normalization maxima");

  ErgoResult best;
  best.cells_total = static_cast<long>(t1s.size()) * static_cast<long>(t2s.size());
  best.c_torque_max = torque_max;
  best.c_disp_max = disp_max;
  bool found = false;
  for (double t1 : t1s) {
    for (double t2 : t2s) {
      ArmPose pose = forward_kinematics(arm, plane, t1, t2);
      if (distance(pose.wrist, robot_base) > max_reach) continue;
      ++best.cells_feasible;
      ErgoCost c = ergonomic_cost(arm, t1, t2, torque_max, disp_max);
      if (!found || c.total < best.c_total) {
        found = true;
        best.theta1_deg = t1;
        best.theta2_deg = t2;
        best.wrist = pose.wrist;
        best.c_total = c.total;
        best.c_torque = c.torque;
        best.c_disp = c.disp;
      }
    }
  }
  require(found, errc::no_feasible_point,
          "no joint configuration puts the wrist within max_reach of the robot base");
  return best;
}

inline nlohmann::json ergo_result_to_json(const ErgoResult& r) {
  return {{"theta1_deg", r.theta1_deg},
          {"theta2_deg", r.theta2_deg},
          {"wrist", {r.wrist.x, r.wrist.y, r.wrist.z}},
          {"c_total", r.c_total},
          {"c_torque", r.c_torque},
          {"c_disp", r.c_disp},
          {"cells_total", r.cells_total},
          {"cells_feasible", r.cells_feasible}};
}

}  // namespace handover
