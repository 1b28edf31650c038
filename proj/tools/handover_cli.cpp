// Command-line surface for the handover toolkit: region grounding, grasp
// selection, benchmark evaluation, synthetic scene generation, ergonomic
// handover-point solving, grid annotation, and the chained pipeline.
//
// Exit codes: 0 success, 2 domain error, 3 external-service error, 64 usage.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "handover/annotate.hpp"
#include "handover/ergonomics.hpp"
#include "handover/error.hpp"
#include "handover/geometry.hpp"
#include "handover/grasp_selection.hpp"
#include "handover/handover_eval.hpp"
#include "handover/pipeline.hpp"
#include "handover/png_writer.hpp"
#include "handover/region_grounding.hpp"
#include "handover/rng.hpp"
#include "handover/scene_io.hpp"
#include "handover/vlm_client.hpp"

namespace {

using handover::json;

struct GlobalConfig {
  handover::VlmConfig vlm;
  double epsilon = 0.02;
  double alpha = 0.5;
  int grid_n = 5;
  int success_sample_n = 100;
  double success_threshold = 0.8;
  double success_side_sign = 1.0;
  double max_reach = 0.9;
  double granularity_deg = 1.0;
};

GlobalConfig load_config(const std::string& flag_path) {
  GlobalConfig cfg;
  std::string path = flag_path;
  if (path.empty()) {
    const char* env = std::getenv("HANDOVER_CONFIG");
    if (env) path = env;
  }
  if (path.empty()) return cfg;
  json j = handover::io_detail::parse_json_file(path);
  handover::require(j.is_object(), handover::errc::format, path + ": config must be an object");
  if (j.contains("vlm")) cfg.vlm = handover::vlm_config_from_json(j["vlm"]);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.grid_n = j.value("grid_n", cfg.grid_n);
  cfg.max_reach = j.value("max_reach", cfg.max_reach);
  cfg.granularity_deg = j.value("granularity_deg", cfg.granularity_deg);
  if (j.contains("success")) {
    const json& s = j["success"];
    cfg.success_sample_n = s.value("sample_n", cfg.success_sample_n);
    cfg.success_threshold = s.value("threshold", cfg.success_threshold);
    cfg.success_side_sign = s.value("side_sign", cfg.success_side_sign);
  }
  return cfg;
}

json config_to_json(const GlobalConfig& cfg) {
  return {{"vlm", handover::vlm_config_to_json(cfg.vlm)},
          {"epsilon", cfg.epsilon},
          {"alpha", cfg.alpha},
          {"grid_n", cfg.grid_n},
          {"success",
           {{"sample_n", cfg.success_sample_n},
            {"threshold", cfg.success_threshold},
            {"side_sign", cfg.success_side_sign}}},
          {"max_reach", cfg.max_reach},
          {"granularity_deg", cfg.granularity_deg}};
}

handover::Vec3 parse_vec3_flag(const std::string& s, const char* flag) {
  double x, y, z;
  if (std::sscanf(s.c_str(), "%lf,%lf,%lf", &x, &y, &z) != 3)
    handover::fail(handover::errc::invalid_argument,
                   std::string(flag) + " must be formatted as x,y,z");
  return {x, y, z};
}

std::array<int, 4> parse_bbox_flag(const std::string& s) {
  int x, y, w, h;
  if (std::sscanf(s.c_str(), "%d,%d,%d,%d", &x, &y, &w, &h) != 4)
    handover::fail(handover::errc::invalid_argument, "--bbox must be formatted as x,y,w,h");
  return {x, y, w, h};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  handover::io_detail::write_file_bytes(
      path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::string s = j.dump(2);
  s.push_back('\n');
  write_text(path, s);
}

std::string file_digest(const std::filesystem::path& path) {
  auto bytes = handover::io_detail::read_file_bytes(path);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(handover::fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

// Shared by ground and pipeline.
struct VlmFlags {
  std::string mode = "mock";
  std::vector<std::string> mock_replies;
  std::string cache_dir;
  bool record = false;
};

std::unique_ptr<handover::VlmClient> make_client(const VlmFlags& flags,
                                                 const handover::VlmConfig& config) {
  std::unique_ptr<handover::VlmClient> client;
  if (flags.mode == "live") {
    client = std::make_unique<handover::LiveVlmClient>(config);
  } else if (flags.mode == "mock") {
    handover::require(!flags.mock_replies.empty(), handover::errc::invalid_argument,
                      "--vlm mock requires at least one --mock-reply");
    client = std::make_unique<handover::MockVlmClient>(flags.mock_replies);
  } else if (flags.mode == "replay") {
    handover::require(!flags.cache_dir.empty(), handover::errc::invalid_argument,
                      "--vlm replay requires --cache");
    return std::make_unique<handover::ReplayVlmClient>(
        handover::TranscriptCache(flags.cache_dir));
  } else {
    handover::fail(handover::errc::invalid_argument, "unknown --vlm mode: " + flags.mode);
  }
  if (flags.record) {
    handover::require(!flags.cache_dir.empty(), handover::errc::invalid_argument,
                      "--record requires --cache");
    client = std::make_unique<handover::RecordingVlmClient>(
        std::move(client), handover::TranscriptCache(flags.cache_dir));
  }
  return client;
}

struct GroundArtifacts {
  handover::GroundingResult result;
  std::vector<std::filesystem::path> files;
};

GroundArtifacts run_ground(const handover::SceneBundle& bundle, const GlobalConfig& cfg,
                           const VlmFlags& vlm_flags, const std::filesystem::path& out_dir) {
  auto client = make_client(vlm_flags, cfg.vlm);
  GroundArtifacts art;
  art.result = handover::ground_scene(bundle, cfg.grid_n, *client);

  std::filesystem::create_directories(out_dir);
  auto save = [&](const std::filesystem::path& p) { art.files.push_back(p); };

  handover::io_detail::write_file_bytes(out_dir / "annotated.png", art.result.annotated_png);
  save(out_dir / "annotated.png");
  write_text(out_dir / "vlm_reply.txt", art.result.replies.back());
  save(out_dir / "vlm_reply.txt");
  write_json_file(out_dir / "region_indices.json",
                  handover::region_indices_to_json(art.result.indices));
  save(out_dir / "region_indices.json");
  handover::write_mask_pgm(art.result.masks.m_human, out_dir / "m_human.pgm");
  save(out_dir / "m_human.pgm");
  handover::write_mask_pgm(art.result.masks.m_robot, out_dir / "m_robot.pgm");
  save(out_dir / "m_robot.pgm");
  handover::write_pointcloud_ply(art.result.masks.pc_human, out_dir / "pc_human.ply");
  save(out_dir / "pc_human.ply");
  handover::write_pointcloud_ply(art.result.masks.pc_robot, out_dir / "pc_robot.ply");
  save(out_dir / "pc_robot.ply");
  return art;
}

handover::SelectionReport run_select(const handover::SceneBundle& bundle,
                                     const handover::PointCloud& pc_human,
                                     const handover::PointCloud& pc_robot,
                                     const handover::SelectionParams& params) {
  return handover::select(bundle.grasps, pc_human, pc_robot, params);
}

json selection_output(const handover::SelectionReport& report, const GlobalConfig& cfg) {
  json j = handover::selection_report_to_json(report);
  j["config"] = config_to_json(cfg);
  return j;
}

int dispatch(int argc, char** argv) {
  CLI::App app{"zero-shot robot-to-human handover planning toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 "JSON config file (or set HANDOVER_CONFIG); flags override file values");

  // --- ground ---
  auto* ground = app.add_subcommand("ground", "ground human/robot grasp regions via the VLM");
  std::string g_scene, g_out = "ground_out";
  VlmFlags g_vlm;
  ground->add_option("--scene", g_scene, "scene manifest JSON")->required();
  ground->add_option("--vlm", g_vlm.mode, "client mode")
      ->check(CLI::IsMember({"live", "mock", "replay"}));
  ground->add_option("--mock-reply", g_vlm.mock_replies, "scripted reply (repeatable)");
  ground->add_option("--cache", g_vlm.cache_dir, "transcript cache directory");
  ground->add_flag("--record", g_vlm.record, "record transcripts into --cache");
  ground->add_option("--out", g_out, "output directory");

  // --- select ---
  auto* sel = app.add_subcommand("select", "select the handover-optimal grasp");
  std::string s_scene, s_masks, s_mode = "full", s_out = "selection.json";
  double s_alpha = -1.0, s_epsilon = -1.0;
  std::uint64_t s_seed = 0;
  sel->add_option("--scene", s_scene, "scene manifest JSON")->required();
  sel->add_option("--masks", s_masks, "directory holding m_human.pgm and m_robot.pgm")
      ->required();
  sel->add_option("--mode", s_mode, "full|a1|a2|a3|b1|b2");
  sel->add_option("--alpha", s_alpha, "distance weight")->check(CLI::Range(0.0, 1.0));
  sel->add_option("--epsilon", s_epsilon, "region membership threshold (m)")
      ->check(CLI::PositiveNumber);
  sel->add_option("--seed", s_seed, "random seed");
  sel->add_option("--out", s_out, "selection report JSON path");

  // --- evaluate ---
  auto* eval = app.add_subcommand("evaluate", "run the ablation benchmark");
  std::string e_bench_dir, e_modes = "a1,a2,a3,b1,b2", e_out = "bench_report.json";
  int e_trials = 10;
  std::uint64_t e_seed = 7;
  eval->add_option("--bench-dir", e_bench_dir,
                   "directory of scene subdirectories; omitted = default synthetic suite");
  eval->add_option("--modes", e_modes, "comma-separated mode labels");
  eval->add_option("--trials", e_trials, "trials per scene")->check(CLI::PositiveNumber);
  eval->add_option("--seed", e_seed, "master seed");
  eval->add_option("--out", e_out, "benchmark report JSON path");

  // --- synth ---
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene (or the suite)");
  std::string sy_object = "hammer", sy_out = "scene_out";
  std::uint64_t sy_seed = 0;
  double sy_density = 50000.0;
  int sy_width = 640, sy_height = 480, sy_grasps = 60;
  synth->add_option("--object", sy_object, "hammer|knife|mug|spatula|box|suite");
  synth->add_option("--seed", sy_seed, "scene seed");
  synth->add_option("--density", sy_density, "surface points per square meter")
      ->check(CLI::PositiveNumber);
  synth->add_option("--width", sy_width, "image width")->check(CLI::PositiveNumber);
  synth->add_option("--height", sy_height, "image height")->check(CLI::PositiveNumber);
  synth->add_option("--grasps", sy_grasps, "grasp candidates to sample")
      ->check(CLI::PositiveNumber);
  synth->add_option("--out", sy_out, "output directory")->required();

  // --- pose ---
  auto* pose = app.add_subcommand("pose", "solve the ergonomically optimal handover point");
  std::string p_pose, p_base = "0,0,0", p_out = "ergo_result.json";
  double p_max_reach = -1.0, p_granularity = -1.0;
  pose->add_option("--pose", p_pose, "human pose JSON (shoulder/elbow/wrist)")->required();
  pose->add_option("--robot-base", p_base, "robot base position x,y,z (world frame)");
  pose->add_option("--max-reach", p_max_reach, "robot reach limit (m)");
  pose->add_option("--granularity", p_granularity, "joint grid step (deg)");
  pose->add_option("--out", p_out, "result JSON path");

  // --- annotate ---
  auto* annotate = app.add_subcommand("annotate", "overlay the labeled grid on an image");
  std::string a_image, a_bbox, a_out = "annotated.png";
  int a_n = 0;
  annotate->add_option("--image", a_image, "PPM image")->required();
  annotate->add_option("--bbox", a_bbox, "bounding box x,y,w,h")->required();
  annotate->add_option("--n", a_n, "grid subdivisions per side");
  annotate->add_option("--out", a_out, "output PNG path");

  // --- pipeline ---
  auto* pipe = app.add_subcommand("pipeline", "ground -> select -> pose on one scene");
  std::string pl_scene, pl_out = "pipeline_out", pl_mode = "full", pl_base = "0,0,0";
  VlmFlags pl_vlm;
  double pl_alpha = -1.0, pl_epsilon = -1.0, pl_max_reach = -1.0;
  std::uint64_t pl_seed = 0;
  pipe->add_option("--scene", pl_scene, "scene manifest JSON")->required();
  pipe->add_option("--vlm", pl_vlm.mode, "client mode")
      ->check(CLI::IsMember({"live", "mock", "replay"}));
  pipe->add_option("--mock-reply", pl_vlm.mock_replies, "scripted reply (repeatable)");
  pipe->add_option("--cache", pl_vlm.cache_dir, "transcript cache directory");
  pipe->add_flag("--record", pl_vlm.record, "record transcripts into --cache");
  pipe->add_option("--mode", pl_mode, "selection mode");
  pipe->add_option("--alpha", pl_alpha, "distance weight")->check(CLI::Range(0.0, 1.0));
  pipe->add_option("--epsilon", pl_epsilon, "region membership threshold (m)")
      ->check(CLI::PositiveNumber);
  pipe->add_option("--seed", pl_seed, "random seed");
  pipe->add_option("--robot-base", pl_base, "robot base position x,y,z");
  pipe->add_option("--max-reach", pl_max_reach, "robot reach limit (m)");
  pipe->add_option("--out", pl_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 64;
  }
  GlobalConfig cfg = load_config(config_path);

  if (*ground) {
    auto bundle = handover::read_scene(g_scene);
    auto art = run_ground(bundle, cfg, g_vlm, g_out);
    json record = {{"scene", g_scene},
                   {"vlm_mode", g_vlm.mode},
                   {"grid_n", cfg.grid_n},
                   {"retried", art.result.retried},
                   {"config", config_to_json(cfg)}};
    write_json_file(std::filesystem::path(g_out) / "ground_record.json", record);
    std::cout << "regions human=" << art.result.indices.human.size()
              << " robot=" << art.result.indices.robot.size()
              << " pc_human=" << art.result.masks.pc_human.size()
              << " pc_robot=" << art.result.masks.pc_robot.size() << "\n";
    return 0;
  }

  if (*sel) {
    auto bundle = handover::read_scene(s_scene);
    auto m_human = handover::read_mask_pgm(std::filesystem::path(s_masks) / "m_human.pgm");
    auto m_robot = handover::read_mask_pgm(std::filesystem::path(s_masks) / "m_robot.pgm");
    auto cloud =
        handover::depth_to_pointcloud(bundle.depth, bundle.intrinsics, bundle.depth_scale);
    handover::SelectionParams params;
    params.epsilon = s_epsilon > 0 ? s_epsilon : cfg.epsilon;
    params.alpha = s_alpha >= 0 ? s_alpha : cfg.alpha;
    params.mode = handover::selection_mode_from_string(s_mode);
    params.seed = s_seed;
    auto report = run_select(bundle, handover::filter_cloud_by_mask(cloud, m_human),
                             handover::filter_cloud_by_mask(cloud, m_robot), params);
    write_json_file(s_out, selection_output(report, cfg));
    const auto* score = [&]() -> const handover::CandidateScore* {
      for (const auto& cs : report.scores)
        if (cs.id == report.chosen.id) return &cs;
      return nullptr;
    }();
    std::cout << "chosen id=" << report.chosen.id << " score="
              << (score ? score->score : 0.0) << " mode="
              << handover::selection_mode_name(report.effective_mode) << "\n";
    return 0;
  }

  if (*eval) {
    std::vector<handover::BenchScene> scenes;
    if (e_bench_dir.empty()) {
      scenes = handover::default_bench_suite(e_seed);
    } else {
      std::vector<std::filesystem::path> dirs;
      for (const auto& entry : std::filesystem::directory_iterator(e_bench_dir))
        if (entry.is_directory() && std::filesystem::exists(entry.path() / "manifest.json"))
          dirs.push_back(entry.path());
      std::sort(dirs.begin(), dirs.end());
      for (const auto& d : dirs) scenes.push_back(handover::BenchScene::from_directory(d));
      handover::require(!scenes.empty(), handover::errc::invalid_argument,
                        "no scene directories under " + e_bench_dir);
    }
    std::vector<handover::BenchMode> modes;
    std::string token;
    std::istringstream ms(e_modes);
    while (std::getline(ms, token, ','))
      if (!token.empty()) modes.push_back(handover::bench_mode_from_label(token));

    handover::SelectionParams sp;
    sp.epsilon = cfg.epsilon;
    sp.alpha = cfg.alpha;
    handover::SuccessParams su;
    su.sample_n = cfg.success_sample_n;
    su.threshold = cfg.success_threshold;
    su.side_sign = cfg.success_side_sign;
    auto report = handover::run_benchmark(scenes, modes, e_trials, e_seed, sp, su);
    json j = handover::bench_report_to_json(report);
    j["config"] = config_to_json(cfg);
    write_json_file(e_out, j);
    std::cout << handover::bench_report_to_table(report);
    return 0;
  }

  if (*synth) {
    if (sy_object == "suite") {
      for (handover::ObjectKind kind :
           {handover::ObjectKind::hammer, handover::ObjectKind::knife,
            handover::ObjectKind::mug, handover::ObjectKind::spatula,
            handover::ObjectKind::box}) {
        for (int instance = 0; instance < 2; ++instance) {
          std::string name = std::string(handover::object_kind_name(kind)) + "-" +
                             std::to_string(instance);
          auto scene = handover::generate_scene(
              kind, handover::derive_seed(sy_seed, "suite/" + name), sy_density, sy_width,
              sy_height, sy_grasps);
          handover::write_scene(scene, std::filesystem::path(sy_out) / name);
        }
      }
      std::cout << "wrote 10-scene suite to " << sy_out << "\n";
    } else {
      auto scene = handover::generate_scene(handover::object_kind_from_string(sy_object),
                                            sy_seed, sy_density, sy_width, sy_height,
                                            sy_grasps);
      handover::write_scene(scene, sy_out);
      std::cout << "wrote scene " << sy_object << " (" << scene.surface.size()
                << " surface points, " << scene.grasps.size() << " grasps) to " << sy_out
                << "\n";
    }
    return 0;
  }

  if (*pose) {
    auto joints = handover::read_human_pose_json(p_pose);
    auto arm = handover::ArmModel::from_joints(joints);
    auto plane = handover::build_task_plane(joints.shoulder, parse_vec3_flag(p_base, "--robot-base"));
    double reach = p_max_reach >= 0 ? p_max_reach : cfg.max_reach;
    double gran = p_granularity > 0 ? p_granularity : cfg.granularity_deg;
    auto result = handover::solve_handover_point(arm, plane,
                                                 parse_vec3_flag(p_base, "--robot-base"),
                                                 reach, gran);
    json j = handover::ergo_result_to_json(result);
    j["arm"] = {{"l_upper", arm.l_upper}, {"l_fore", arm.l_fore}};
    j["max_reach"] = reach;
    j["granularity_deg"] = gran;
    j["config"] = config_to_json(cfg);
    write_json_file(p_out, j);
    std::cout << "handover point (" << result.wrist.x << ", " << result.wrist.y << ", "
              << result.wrist.z << ") theta=(" << result.theta1_deg << ", "
              << result.theta2_deg << ") c_total=" << result.c_total << "\n";
    return 0;
  }

  if (*annotate) {
    auto image = handover::read_image_ppm(a_image);
    int n = a_n > 0 ? a_n : cfg.grid_n;
    auto grid = handover::make_grid(parse_bbox_flag(a_bbox), n);
    handover::write_png_rgb8(handover::annotate_image(image, grid), a_out);
    std::cout << "wrote " << a_out << "\n";
    return 0;
  }

  if (*pipe) {
    auto bundle = handover::read_scene(pl_scene);
    std::filesystem::path out_dir(pl_out);
    auto art = run_ground(bundle, cfg, pl_vlm, out_dir);

    handover::SelectionParams params;
    params.epsilon = pl_epsilon > 0 ? pl_epsilon : cfg.epsilon;
    params.alpha = pl_alpha >= 0 ? pl_alpha : cfg.alpha;
    params.mode = handover::selection_mode_from_string(pl_mode);
    params.seed = handover::derive_seed(pl_seed, "pipeline/select");
    auto report = run_select(bundle, art.result.masks.pc_human, art.result.masks.pc_robot,
                             params);
    write_json_file(out_dir / "selection.json", selection_output(report, cfg));
    art.files.push_back(out_dir / "selection.json");

    json run = {{"scene", pl_scene},
                {"vlm_mode", pl_vlm.mode},
                {"seed", pl_seed},
                {"selection_seed", params.seed},
                {"chosen_id", report.chosen.id},
                {"config", config_to_json(cfg)}};

    if (bundle.joints) {
      auto arm = handover::ArmModel::from_joints(*bundle.joints);
      handover::Vec3 base = parse_vec3_flag(pl_base, "--robot-base");
      auto plane = handover::build_task_plane(bundle.joints->shoulder, base);
      double reach = pl_max_reach >= 0 ? pl_max_reach : cfg.max_reach;
      auto ergo = handover::solve_handover_point(arm, plane, base, reach,
                                                 cfg.granularity_deg);
      json je = handover::ergo_result_to_json(ergo);
      je["max_reach"] = reach;
      write_json_file(out_dir / "ergo_result.json", je);
      art.files.push_back(out_dir / "ergo_result.json");
      run["handover_point"] = {ergo.wrist.x, ergo.wrist.y, ergo.wrist.z};
    }

    json digests;
    for (const auto& f : art.files) digests[f.filename().string()] = file_digest(f);
    run["artifact_digests"] = digests;
    write_json_file(out_dir / "run_record.json", run);
    std::cout << "pipeline complete: chosen id=" << report.chosen.id << " artifacts in "
              << pl_out << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return dispatch(argc, argv);
  } catch (const handover::error& e) {
    std::cerr << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 70;
  }
}
