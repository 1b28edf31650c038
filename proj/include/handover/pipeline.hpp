#pragma once

#include <string>
#include <vector>

#include "handover/annotate.hpp"
#include "handover/error.hpp"
#include "handover/geometry.hpp"
#include "handover/png_writer.hpp"
#include "handover/region_grounding.hpp"
#include "handover/scene_io.hpp"
#include "handover/vlm_client.hpp"

namespace handover {

struct GroundingResult {
  GridSpec grid;
  std::vector<std::uint8_t> annotated_png;
  std::vector<std::string> replies;  // one per VLM call (two when retried)
  RegionIndices indices;
  RegionMaskSet masks;
  bool retried = false;
};

// Region grounding for one scene: annotate, prompt, parse, assemble. A
// parse failure or an empty region earns exactly one re-prompt carrying a
// correction message; a second failure propagates.
inline GroundingResult ground_scene(const SceneBundle& bundle, int grid_n, VlmClient& client) {
  GroundingResult result;
  result.grid = make_grid(bundle.bbox, grid_n);
  result.annotated_png = encode_png_rgb8(annotate_image(bundle.image, result.grid));

  PointCloud cloud = depth_to_pointcloud(bundle.depth, bundle.intrinsics, bundle.depth_scale);
  std::vector<ChatMessage> messages = build_prompt(bundle.object_query, grid_n);

  std::string reply = client.complete(messages, result.annotated_png);
  result.replies.push_back(reply);
  try {
    result.indices = parse_region_reply(reply, grid_n);
    result.masks = assemble_masks(result.grid, result.indices, bundle.object_mask, cloud);
    return result;
  } catch (const error& e) {
    if (e.code() != errc::reply_parse && e.code() != errc::region_empty) throw;
    result.retried = true;
    std::vector<ChatMessage> retry = messages;
    retry.push_back({"assistant", reply, false});
    retry.push_back({"user",
                     std::string("Your previous answer could not be used (") + e.what() +
                         "). Answer again strictly in the format human:[id_1, id_2, id_3], "
                         "robot:[id_1, id_2, id_3], choosing grid indices between 1 and " +
                         std::to_string(grid_n * grid_n) + " that lie on the object.",
                     true});
    std::string second = client.complete(retry, result.annotated_png);
    result.replies.push_back(second);
    result.indices = parse_region_reply(second, grid_n);
    result.masks = assemble_masks(result.grid, result.indices, bundle.object_mask, cloud);
    return result;
  }
}

}  // namespace handover
