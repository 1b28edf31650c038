#pragma once

#include <algorithm>
#include <array>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "handover/chat.hpp"
#include "handover/error.hpp"
#include "handover/geometry.hpp"
#include "handover/raster.hpp"

namespace handover {

struct GridCell {
  int label = 0;                    // 1..n*n, row-major from the top-left
  std::array<int, 4> rect{0, 0, 0, 0};  // x, y, w, h in pixels
};

struct GridSpec {
  std::array<int, 4> bbox{0, 0, 0, 0};
  int n = 0;
  std::vector<GridCell> cells;
};

struct RegionIndices {
  std::set<int> human;
  std::set<int> robot;
};

struct RegionMaskSet {
  BinaryMask m_human;
  BinaryMask m_robot;
  PointCloud pc_human;
  PointCloud pc_robot;
};

// Tile the bounding box into n x n cells. Base cell size is the floor
// division; the last column and row absorb the remainder so the union is
// exactly the bbox. Labels run 1..n*n, left to right then top to bottom.
inline GridSpec make_grid(const std::array<int, 4>& bbox, int n) {
  require(n >= 1, errc::invalid_argument, "grid n must be >= 1");
  auto [x, y, w, h] = bbox;
  require(w >= n && h >= n, errc::invalid_argument,
          "bbox smaller than n in at least one dimension");

  GridSpec grid;
  grid.bbox = bbox;
  grid.n = n;
  int base_w = w / n;
  int base_h = h / n;
  for (int row = 0; row < n; ++row) {
    int cy = y + row * base_h;
    int ch = (row == n - 1) ? h - (n - 1) * base_h : base_h;
    for (int col = 0; col < n; ++col) {
      int cx = x + col * base_w;
      int cw = (col == n - 1) ? w - (n - 1) * base_w : base_w;
      grid.cells.push_back({row * n + col + 1, {cx, cy, cw, ch}});
    }
  }
  return grid;
}

// The two-part user prompt; the second message carries the annotated image.
inline std::vector<ChatMessage> build_prompt(const std::string& object_query, int n) {
  require(!object_query.empty(), errc::invalid_argument, "object query must be non-empty");
  require(n >= 1, errc::invalid_argument, "grid n must be >= 1");
  std::vector<ChatMessage> messages;
  messages.push_back({"user", "You are an intelligent service robot.", false});
  messages.push_back(
      {"user",
       "When you need to hand over this " + object_query +
           " to people, which region would people grasp? And which region would you grasp? "
           "Name 3 indices in a format like: human:[id_1, id_2, id_3], robot:[id_1, id_2, "
           "id_3] indicating human and robot grasp regions.",
       true});
  return messages;
}

namespace grounding_detail {

inline std::set<int> parse_index_list(const std::string& reply, const char* region, int n) {
  std::regex rx(std::string(region) + R"(\s*:\s*\[([^\]]*)\])", std::regex::icase);
  std::smatch match;
  require(std::regex_search(reply, match, rx), errc::reply_parse,
          std::string("reply has no '") + region + ":[...]' list");

  std::set<int> indices;
  std::regex num(R"(-?\d+)");
  std::string body = match[1].str();
  // reject stray non-numeric tokens so "robot:[a,b]" is an error, not empty
  std::string residue = std::regex_replace(body, num, "");
  for (char c : residue)
    require(std::isspace(static_cast<unsigned char>(c)) || c == ',', errc::reply_parse,
            std::string(region) + " list contains a non-integer token");
  for (auto it = std::sregex_iterator(body.begin(), body.end(), num);
       it != std::sregex_iterator(); ++it) {
    int idx = std::stoi(it->str());
    require(idx >= 1 && idx <= n * n, errc::reply_parse,
            std::string(region) + " index " + it->str() + " outside [1, " +
                std::to_string(n * n) + "]");
    indices.insert(idx);
  }
  require(!indices.empty(), errc::reply_parse, std::string(region) + " list is empty");
  require(indices.size() <= 10, errc::reply_parse,
          std::string(region) + " list has more than 10 distinct indices");
  return indices;
}

}  // namespace grounding_detail

// Case- and whitespace-tolerant extraction of "human:[...]" and
// "robot:[...]". Duplicates are deduplicated; 1..10 distinct indices per
// list are accepted.
inline RegionIndices parse_region_reply(const std::string& reply, int n) {
  require(n >= 1, errc::invalid_argument, "grid n must be >= 1");
  RegionIndices idx;
  idx.human = grounding_detail::parse_index_list(reply, "human", n);
  idx.robot = grounding_detail::parse_index_list(reply, "robot", n);
  return idx;
}

inline std::string format_region_reply(const RegionIndices& idx) {
  auto fmt = [](const std::set<int>& s) {
    std::string out = "[";
    bool first = true;
    for (int i : s) {
      if (!first) out += ", ";
      out += std::to_string(i);
      first = false;
    }
    return out + "]";
  };
  return "human:" + fmt(idx.human) + ", robot:" + fmt(idx.robot);
}

// Merge the named cells into per-region masks clipped to the object mask,
// then pull each region's point cloud out of the scene cloud. Overlapping
// cells go to the human mask; the robot mask is trimmed.
inline RegionMaskSet assemble_masks(const GridSpec& grid, const RegionIndices& idx,
                                    const BinaryMask& object_mask, const PointCloud& cloud) {
  require(cloud.empty() || cloud.has_pixels(), errc::invalid_argument,
          "scene cloud has no pixel coordinates");
  for (int i : idx.human)
    require(i >= 1 && i <= grid.n * grid.n, errc::invalid_argument, "human index out of grid");
  for (int i : idx.robot)
    require(i >= 1 && i <= grid.n * grid.n, errc::invalid_argument, "robot index out of grid");

  auto paint = [&](const std::set<int>& labels) {
    BinaryMask mask(object_mask.width, object_mask.height, false);
    for (const auto& cell : grid.cells) {
      if (!labels.count(cell.label)) continue;
      auto [x, y, w, h] = cell.rect;
      for (int v = y; v < y + h; ++v)
        for (int u = x; u < x + w; ++u)
          if (mask.in_bounds(u, v) && object_mask.at(u, v)) mask.set(u, v, true);
    }
    return mask;
  };

  RegionMaskSet set;
  set.m_human = paint(idx.human);
  set.m_robot = paint(idx.robot);
  for (std::size_t i = 0; i < set.m_robot.data.size(); ++i)
    if (set.m_human.data[i]) set.m_robot.data[i] = 0;

  require(set.m_human.count_true() > 0, errc::region_empty,
          "human region mask is empty after object clipping");
  require(set.m_robot.count_true() > 0, errc::region_empty,
          "robot region mask is empty after object clipping");

  set.pc_human = filter_cloud_by_mask(cloud, set.m_human);
  set.pc_robot = filter_cloud_by_mask(cloud, set.m_robot);
  require(!set.pc_human.empty(), errc::region_empty, "human region has no 3-D points");
  require(!set.pc_robot.empty(), errc::region_empty, "robot region has no 3-D points");
  return set;
}

inline nlohmann::json region_indices_to_json(const RegionIndices& idx) {
  return {{"human", std::vector<int>(idx.human.begin(), idx.human.end())},
          {"robot", std::vector<int>(idx.robot.begin(), idx.robot.end())}};
}

inline RegionIndices region_indices_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("human") && j.contains("robot") &&
              j["human"].is_array() && j["robot"].is_array(),
          errc::format, "region indices JSON must have 'human' and 'robot' arrays");
  RegionIndices idx;
  for (const auto& v : j["human"]) idx.human.insert(v.get<int>());
  for (const auto& v : j["robot"]) idx.robot.insert(v.get<int>());
  return idx;
}

}  // namespace handover
