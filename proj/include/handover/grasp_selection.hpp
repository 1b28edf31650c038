#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "handover/error.hpp"
#include "handover/geometry.hpp"
#include "handover/region_grounding.hpp"
#include "handover/rng.hpp"

namespace handover {

enum class SelectionMode {
  full,                     // A3 / B2: rank within the robot grasp region
  no_robot_region,          // A2: rank outside the human grasp region
  no_regions,               // A1: best pair over all candidates, random member
  random_in_robot_region,   // B1: uniform choice within the robot grasp region
};

inline const char* selection_mode_name(SelectionMode m) {
  switch (m) {
    case SelectionMode::full: return "full";
    case SelectionMode::no_robot_region: return "no_robot_region";
    case SelectionMode::no_regions: return "no_regions";
    case SelectionMode::random_in_robot_region: return "random_in_robot_region";
  }
  return "?";
}

inline SelectionMode selection_mode_from_string(const std::string& s) {
  std::string lower;
  for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower == "full" || lower == "a3" || lower == "b2") return SelectionMode::full;
  if (lower == "no-robot-region" || lower == "no_robot_region" || lower == "a2")
    return SelectionMode::no_robot_region;
  if (lower == "no-regions" || lower == "no_regions" || lower == "a1")
    return SelectionMode::no_regions;
  if (lower == "random-in-robot-region" || lower == "random_in_robot_region" || lower == "b1")
    return SelectionMode::random_in_robot_region;
  fail(errc::invalid_argument, "unknown selection mode: " + s);
}

struct SelectionParams {
  double epsilon = 0.02;  // meters, region membership threshold
  double alpha = 0.5;     // distance weight; 1-alpha weights the angle term
  SelectionMode mode = SelectionMode::full;
  std::uint64_t seed = 0;

  void validate() const {
    require(epsilon > 0.0, errc::invalid_argument, "epsilon must be positive");
    require(alpha >= 0.0 && alpha <= 1.0, errc::invalid_argument, "alpha must be in [0,1]");
  }
};

struct CandidateScore {
  int id = 0;
  double mean_distance = 0.0;  // meters, raw
  double mean_angle = 0.0;     // radians, raw
  double z_distance = 0.0;
  double z_angle = 0.0;
  double score = 0.0;
};

struct SelectionReport {
  GraspCandidate chosen;
  std::vector<int> g_human_ids;
  std::vector<int> g_robot_ids;
  std::vector<CandidateScore> scores;  // one entry per pool member
  SelectionMode mode = SelectionMode::full;
  SelectionMode effective_mode = SelectionMode::full;  // differs when full fell back
  bool fell_back = false;
  std::uint64_t seed = 0;
  double epsilon = 0.0;
  double alpha = 0.0;
  std::optional<std::pair<int, int>> chosen_pair;  // no_regions mode only
};

// Eq. 1: candidates whose grasp point lies strictly within epsilon of any
// region point. Returns ids in candidate order.
inline std::vector<int> filter_grasps(const std::vector<GraspCandidate>& grasps,
                                      const PointCloud& region_cloud, double epsilon) {
  require(epsilon > 0.0, errc::invalid_argument, "epsilon must be positive");
  std::vector<int> ids;
  for (const auto& g : grasps) {
    for (const auto& p : region_cloud.points) {
      if (distance(g.translation, p) < epsilon) {
        ids.push_back(g.id);
        break;
      }
    }
  }
  return ids;
}

// Eq. 4's angle: between the approach directions (frame z-axes) of two
// grasps, clamped against rounding so arccos never leaves its domain.
inline double approach_angle(const GraspCandidate& a, const GraspCandidate& b) {
  double d = a.approach().dot(b.approach());
  return std::acos(std::clamp(d, -1.0, 1.0));
}

// z-scores with population standard deviation. A near-constant input
// (sigma < 1e-12) maps to all zeros instead of dividing by noise.
inline std::vector<double> normalize(const std::vector<double>& values) {
  require(!values.empty(), errc::invalid_argument, "cannot normalize an empty list");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  double sigma = std::sqrt(var / static_cast<double>(values.size()));
  std::vector<double> out(values.size(), 0.0);
  if (sigma < 1e-12) return out;
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - mean) / sigma;
  return out;
}

namespace selection_detail {

inline const GraspCandidate& by_id(const std::vector<GraspCandidate>& grasps, int id) {
  for (const auto& g : grasps)
    if (g.id == id) return g;
  fail(errc::invalid_argument, "grasp id not found: " + std::to_string(id));
}

// Raw per-candidate means over G_human, then pool-level z-normalization,
// then the Eq. 2 convex combination. Ties break toward the lowest id.
inline void score_pool(const std::vector<GraspCandidate>& grasps,
                       const std::vector<int>& pool_ids,
                       const std::vector<int>& human_ids, double alpha,
                       SelectionReport& report) {
  std::vector<double> mean_d, mean_a;
  for (int id : pool_ids) {
    const GraspCandidate& gi = by_id(grasps, id);
    double sum_d = 0.0, sum_a = 0.0;
    for (int hid : human_ids) {
      const GraspCandidate& gj = by_id(grasps, hid);
      sum_d += distance(gi.translation, gj.translation);
      sum_a += approach_angle(gi, gj);
    }
    mean_d.push_back(sum_d / static_cast<double>(human_ids.size()));
    mean_a.push_back(sum_a / static_cast<double>(human_ids.size()));
  }
  std::vector<double> z_d = normalize(mean_d);
  std::vector<double> z_a = normalize(mean_a);

  int best_id = -1;
  double best_score = 0.0;
  for (std::size_t i = 0; i < pool_ids.size(); ++i) {
    double score = alpha * z_d[i] + (1.0 - alpha) * z_a[i];
    report.scores.push_back({pool_ids[i], mean_d[i], mean_a[i], z_d[i], z_a[i], score});
    if (best_id < 0 || score > best_score ||
        (score == best_score && pool_ids[i] < best_id)) {
      best_id = pool_ids[i];
      best_score = score;
    }
  }
  report.chosen = by_id(grasps, best_id);
}

// A1: z-normalize pairwise distance and angle across all unordered pairs,
// take the best pair, then a seeded coin picks the member.
inline void select_best_pair(const std::vector<GraspCandidate>& grasps, double alpha,
                             std::uint64_t seed, SelectionReport& report) {
  require(grasps.size() >= 2, errc::no_feasible_grasp,
          "no_regions mode needs at least two candidates");
  std::vector<std::pair<int, int>> pairs;
  std::vector<double> d, a;
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    for (std::size_t j = i + 1; j < grasps.size(); ++j) {
      pairs.emplace_back(grasps[i].id, grasps[j].id);
      d.push_back(distance(grasps[i].translation, grasps[j].translation));
      a.push_back(approach_angle(grasps[i], grasps[j]));
    }
  }
  std::vector<double> z_d = normalize(d);
  std::vector<double> z_a = normalize(a);

  std::size_t best = 0;
  double best_score = alpha * z_d[0] + (1.0 - alpha) * z_a[0];
  for (std::size_t k = 1; k < pairs.size(); ++k) {
    double score = alpha * z_d[k] + (1.0 - alpha) * z_a[k];
    if (score > best_score || (score == best_score && pairs[k] < pairs[best])) {
      best = k;
      best_score = score;
    }
  }
  report.chosen_pair = pairs[best];
  Rng rng(seed);
  int chosen_id = rng.below(2) == 0 ? pairs[best].first : pairs[best].second;
  report.chosen = by_id(grasps, chosen_id);

  // informational per-candidate stats: means over all partners
  for (const auto& g : grasps) {
    double sum_d = 0.0, sum_a = 0.0;
    for (const auto& o : grasps) {
      if (o.id == g.id) continue;
      sum_d += distance(g.translation, o.translation);
      sum_a += approach_angle(g, o);
    }
    double denom = static_cast<double>(grasps.size() - 1);
    report.scores.push_back({g.id, sum_d / denom, sum_a / denom, 0.0, 0.0, 0.0});
  }
}

}  // namespace selection_detail

inline SelectionReport select(const std::vector<GraspCandidate>& grasps,
                              const PointCloud& pc_human, const PointCloud& pc_robot,
                              const SelectionParams& params) {
  params.validate();
  require(!grasps.empty(), errc::no_feasible_grasp, "candidate set is empty");

  SelectionReport report;
  report.mode = report.effective_mode = params.mode;
  report.seed = params.seed;
  report.epsilon = params.epsilon;
  report.alpha = params.alpha;
  report.g_human_ids = filter_grasps(grasps, pc_human, params.epsilon);
  report.g_robot_ids = filter_grasps(grasps, pc_robot, params.epsilon);

  switch (params.mode) {
    case SelectionMode::no_regions:
      selection_detail::select_best_pair(grasps, params.alpha, params.seed, report);
      return report;

    case SelectionMode::random_in_robot_region: {
      require(!report.g_robot_ids.empty(), errc::no_feasible_grasp,
              "robot grasp region contains no candidates");
      Rng rng(params.seed);
      int id = report.g_robot_ids[rng.below(report.g_robot_ids.size())];
      report.chosen = selection_detail::by_id(grasps, id);
      for (int pid : report.g_robot_ids) {
        CandidateScore cs;
        cs.id = pid;
        report.scores.push_back(cs);
      }
      return report;
    }

    case SelectionMode::full:
    case SelectionMode::no_robot_region: {
      require(!report.g_human_ids.empty(), errc::degenerate_scoring,
              "human grasp region contains no candidates; ranking is undefined");
      std::vector<int> pool;
      if (params.mode == SelectionMode::full) {
        pool = report.g_robot_ids;
        if (pool.empty()) {
          // stay feasible while still avoiding the human region
          report.fell_back = true;
          report.effective_mode = SelectionMode::no_robot_region;
        }
      }
      if (pool.empty()) {
        for (const auto& g : grasps)
          if (std::find(report.g_human_ids.begin(), report.g_human_ids.end(), g.id) ==
              report.g_human_ids.end())
            pool.push_back(g.id);
      }
      require(!pool.empty(), errc::no_feasible_grasp,
              "no candidate outside the human grasp region");
      selection_detail::score_pool(grasps, pool, report.g_human_ids, params.alpha, report);
      return report;
    }
  }
  fail(errc::invalid_argument, "unreachable selection mode");
}

inline SelectionReport select(const std::vector<GraspCandidate>& grasps,
                              const RegionMaskSet& masks, const SelectionParams& params) {
  return select(grasps, masks.pc_human, masks.pc_robot, params);
}

inline nlohmann::json selection_report_to_json(const SelectionReport& r) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : r.scores)
    scores.push_back({{"id", s.id},
                      {"mean_distance_m", s.mean_distance},
                      {"mean_angle_rad", s.mean_angle},
                      {"z_distance", s.z_distance},
                      {"z_angle", s.z_angle},
                      {"score", s.score}});
  nlohmann::json j = {
      {"chosen_id", r.chosen.id},
      {"chosen_translation", {r.chosen.translation.x, r.chosen.translation.y, r.chosen.translation.z}},
      {"g_human_ids", r.g_human_ids},
      {"g_robot_ids", r.g_robot_ids},
      {"scores", scores},
      {"mode", selection_mode_name(r.mode)},
      {"effective_mode", selection_mode_name(r.effective_mode)},
      {"fell_back", r.fell_back},
      {"seed", r.seed},
      {"epsilon", r.epsilon},
      {"alpha", r.alpha},
      {"angle_term_convention", "summed over G_human, |G_human| normalizer"},
  };
  if (r.chosen_pair) j["chosen_pair"] = {r.chosen_pair->first, r.chosen_pair->second};
  return j;
}

}  // namespace handover
