#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "handover/rng.hpp"
#include "handover/scene_io.hpp"
#include "test_support.hpp"

namespace {

namespace fs = std::filesystem;

std::string cli_path() {
  const char* env = std::getenv("HANDOVER_CLI");
  REQUIRE(env != nullptr);
  return env;
}

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const std::string& args, const fs::path& workdir) {
  fs::path log = workdir / "cli_output.log";
  std::string cmd = "cd '" + workdir.string() + "' && '" + cli_path() + "' " + args + " > '" +
                    log.string() + "' 2>&1";
  int status = std::system(cmd.c_str());
  std::ifstream f(log);
  std::string output((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return {WEXITSTATUS(status), output};
}

std::string digest_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& f : files) {
    auto bytes = handover::io_detail::read_file_bytes(f);
    h = handover::fnv1a64(f.filename().string(), h);
    h = handover::fnv1a64(bytes.data(), bytes.size(), h);
  }
  return std::to_string(h);
}

}  // namespace

TEST_CASE("synth is deterministic across runs", "[cli]") {
  test_support::TempDir tmp("cli_synth");
  auto a = run_cli("synth --object hammer --seed 1 --density 20000 --out scene_a", tmp.path());
  auto b = run_cli("synth --object hammer --seed 1 --density 20000 --out scene_b", tmp.path());
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(digest_dir(tmp.path() / "scene_a") == digest_dir(tmp.path() / "scene_b"));
}

TEST_CASE("ground with a mock reply writes the full artifact set", "[cli]") {
  test_support::TempDir tmp("cli_ground");
  REQUIRE(run_cli("synth --object mug --seed 4 --density 40000 --width 320 --height 240 "
                  "--out scene",
                  tmp.path())
              .exit_code == 0);
  auto res = run_cli(
      "ground --scene scene/manifest.json --vlm mock "
      "--mock-reply 'human:[7, 12, 17], robot:[3, 4, 5]' --out gnd",
      tmp.path());
  REQUIRE(res.exit_code == 0);
  for (const char* name : {"annotated.png", "vlm_reply.txt", "region_indices.json",
                           "m_human.pgm", "m_robot.pgm", "pc_human.ply", "pc_robot.ply",
                           "ground_record.json"})
    CHECK(fs::exists(tmp.path() / "gnd" / name));
  auto m_human = handover::read_mask_pgm(tmp.path() / "gnd" / "m_human.pgm");
  auto m_robot = handover::read_mask_pgm(tmp.path() / "gnd" / "m_robot.pgm");
  CHECK(m_human.count_true() > 0);
  CHECK(m_robot.count_true() > 0);
}

TEST_CASE("ground retries once then fails with exit 2", "[cli]") {
  test_support::TempDir tmp("cli_retry");
  REQUIRE(run_cli("synth --object mug --seed 4 --density 40000 --width 320 --height 240 "
                  "--out scene",
                  tmp.path())
              .exit_code == 0);

  SECTION("both replies unparseable") {
    auto res = run_cli(
        "ground --scene scene/manifest.json --vlm mock --mock-reply 'gibberish' "
        "--mock-reply 'more gibberish' --out gnd",
        tmp.path());
    CHECK(res.exit_code == 2);
    CHECK(res.output.find("ReplyParse") != std::string::npos);
  }

  SECTION("second reply rescues the run") {
    auto res = run_cli(
        "ground --scene scene/manifest.json --vlm mock --mock-reply 'gibberish' "
        "--mock-reply 'human:[7, 12, 17], robot:[3, 4, 5]' --out gnd",
        tmp.path());
    CHECK(res.exit_code == 0);
    auto record = handover::io_detail::parse_json_file(tmp.path() / "gnd" /
                                                       "ground_record.json");
    CHECK(record["retried"] == true);
  }
}

TEST_CASE("replay with a cold cache exits 3 with CacheMiss", "[cli]") {
  test_support::TempDir tmp("cli_replay");
  REQUIRE(run_cli("synth --object mug --seed 4 --density 40000 --width 320 --height 240 "
                  "--out scene",
                  tmp.path())
              .exit_code == 0);
  fs::create_directories(tmp.path() / "cache");
  auto res = run_cli("ground --scene scene/manifest.json --vlm replay --cache cache --out gnd",
                     tmp.path());
  CHECK(res.exit_code == 3);
  CHECK(res.output.find("CacheMiss") != std::string::npos);
}

TEST_CASE("select validates flags and is deterministic per seed", "[cli]") {
  test_support::TempDir tmp("cli_select");
  REQUIRE(run_cli("synth --object hammer --seed 6 --density 40000 --width 320 --height 240 "
                  "--out scene",
                  tmp.path())
              .exit_code == 0);
  REQUIRE(run_cli("ground --scene scene/manifest.json --vlm mock "
                  "--mock-reply 'human:[13, 18, 23], robot:[3, 8, 12]' --out gnd",
                  tmp.path())
              .exit_code == 0);

  SECTION("usage error for alpha outside [0,1]") {
    auto res = run_cli(
        "select --scene scene/manifest.json --masks gnd --alpha 1.5 --out sel.json",
        tmp.path());
    CHECK(res.exit_code == 64);
  }

  SECTION("b1 is reproducible for a fixed seed") {
    auto a = run_cli(
        "select --scene scene/manifest.json --masks gnd --mode b1 --seed 7 --out a.json",
        tmp.path());
    auto b = run_cli(
        "select --scene scene/manifest.json --masks gnd --mode b1 --seed 7 --out b.json",
        tmp.path());
    REQUIRE(a.exit_code == 0);
    REQUIRE(b.exit_code == 0);
    CHECK(a.output == b.output);
    auto ja = handover::io_detail::parse_json_file(tmp.path() / "a.json");
    auto jb = handover::io_detail::parse_json_file(tmp.path() / "b.json");
    CHECK(ja["chosen_id"] == jb["chosen_id"]);
  }

  SECTION("full mode emits a report echoing parameters") {
    auto res = run_cli(
        "select --scene scene/manifest.json --masks gnd --mode full --out sel.json",
        tmp.path());
    REQUIRE(res.exit_code == 0);
    CHECK(res.output.find("chosen id=") != std::string::npos);
    auto j = handover::io_detail::parse_json_file(tmp.path() / "sel.json");
    CHECK(j["alpha"] == 0.5);
    CHECK(j["epsilon"] == 0.02);
    CHECK(j["config"]["grid_n"] == 5);
  }
}

TEST_CASE("pose solves and reports the handover point", "[cli]") {
  test_support::TempDir tmp("cli_pose");
  std::string pose = R"({"shoulder": [0.9, 0, 1.35], "elbow": [0.9, 0.05, 1.05],
                         "wrist": [0.95, 0.1, 0.8]})";
  std::ofstream(tmp.path() / "pose.json") << pose;
  auto res = run_cli("pose --pose pose.json --robot-base 0,0,0 --max-reach 2.0 --out ergo.json",
                     tmp.path());
  REQUIRE(res.exit_code == 0);
  auto j = handover::io_detail::parse_json_file(tmp.path() / "ergo.json");
  CHECK(j["cells_total"] == 35256);
  CHECK(j["c_total"].get<double>() >= 0.0);

  auto bad = run_cli("pose --pose pose.json --robot-base 0,0,0 --max-reach 0 --out x.json",
                     tmp.path());
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("NoFeasiblePoint") != std::string::npos);
}

TEST_CASE("annotate renders a grid over a PPM image", "[cli]") {
  test_support::TempDir tmp("cli_annotate");
  handover::Image img(120, 90, 50, 60, 70);
  handover::write_image_ppm(img, tmp.path() / "img.ppm");
  auto res = run_cli("annotate --image img.ppm --bbox 10,10,100,70 --n 5 --out grid.png",
                     tmp.path());
  REQUIRE(res.exit_code == 0);
  CHECK(fs::file_size(tmp.path() / "grid.png") > 100);

  auto bad = run_cli("annotate --image img.ppm --bbox 50,50,100,70 --out grid.png",
                     tmp.path());
  CHECK(bad.exit_code == 2);  // grid extends past the image
}

TEST_CASE("evaluate emits the ablation table", "[cli]") {
  test_support::TempDir tmp("cli_eval");
  REQUIRE(run_cli("synth --object suite --seed 3 --density 8000 --out bench", tmp.path())
              .exit_code == 0);
  auto res = run_cli(
      "evaluate --bench-dir bench --modes a3,b1 --trials 2 --seed 3 --out report.json",
      tmp.path());
  REQUIRE(res.exit_code == 0);
  CHECK(res.output.find("a3") != std::string::npos);
  CHECK(res.output.find("b1") != std::string::npos);
  auto j = handover::io_detail::parse_json_file(tmp.path() / "report.json");
  CHECK(j["modes"].size() == 2);
  CHECK(j["modes"][0]["trials"] == 20);
}

TEST_CASE("unknown subcommands and bad flags exit 64", "[cli]") {
  test_support::TempDir tmp("cli_usage");
  CHECK(run_cli("frobnicate", tmp.path()).exit_code == 64);
  CHECK(run_cli("synth --object hammer", tmp.path()).exit_code == 64);  // --out required
}
