#include <catch2/catch_amalgamated.hpp>

#include <zlib.h>

#include <filesystem>
#include <fstream>

#include "handover/handover_eval.hpp"
#include "handover/png_writer.hpp"
#include "handover/rng.hpp"
#include "handover/region_grounding.hpp"
#include "handover/annotate.hpp"
#include "handover/scene_io.hpp"
#include "test_support.hpp"

using namespace handover;

namespace {

void write_raw(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("P6 decode of known bytes", "[scene_io]") {
  test_support::TempDir tmp("ppm");
  std::string header = "P6\n# a comment\n2 2\n255\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  for (int i = 0; i < 12; ++i) bytes.push_back(static_cast<std::uint8_t>(i * 20));
  write_raw(tmp.path() / "a.ppm", bytes);

  Image img = read_image_ppm(tmp.path() / "a.ppm");
  REQUIRE(img.width == 2);
  REQUIRE(img.height == 2);
  for (int i = 0; i < 12; ++i) CHECK(img.data[static_cast<std::size_t>(i)] == i * 20);
}

TEST_CASE("16-bit depth samples are big-endian", "[scene_io]") {
  test_support::TempDir tmp("pgm16");
  std::string header = "P5\n1 1\n65535\n";
  std::vector<std::uint8_t> bytes(header.begin(), header.end());
  bytes.push_back(0x01);
  bytes.push_back(0x00);
  write_raw(tmp.path() / "d.pgm", bytes);
  CHECK(read_depth_pgm16(tmp.path() / "d.pgm").at(0, 0) == 256);
}

TEST_CASE("raster round trips are exact", "[scene_io]") {
  test_support::TempDir tmp("roundtrip");
  Rng rng(17);

  SECTION("image") {
    Image img(13, 9);
    for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.below(256));
    write_image_ppm(img, tmp.path() / "i.ppm");
    Image back = read_image_ppm(tmp.path() / "i.ppm");
    CHECK(back.data == img.data);
    write_image_ppm(back, tmp.path() / "i2.ppm");
    CHECK(slurp(tmp.path() / "i.ppm") == slurp(tmp.path() / "i2.ppm"));
  }

  SECTION("mask") {
    BinaryMask mask(7, 5);
    for (auto& b : mask.data) b = rng.below(2) ? 1 : 0;
    write_mask_pgm(mask, tmp.path() / "m.pgm");
    CHECK(read_mask_pgm(tmp.path() / "m.pgm").data == mask.data);
  }

  SECTION("depth") {
    DepthImage depth(6, 4);
    for (auto& d : depth.data) d = static_cast<std::uint16_t>(rng.below(65536));
    write_depth_pgm16(depth, tmp.path() / "d.pgm");
    CHECK(read_depth_pgm16(tmp.path() / "d.pgm").data == depth.data);
  }

  SECTION("point cloud with pixels and labels") {
    PointCloud cloud;
    std::vector<int> labels;
    for (int i = 0; i < 50; ++i) {
      cloud.points.push_back(
          {rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.01, 3)});
      cloud.pixels.emplace_back(static_cast<int>(rng.below(640)),
                                static_cast<int>(rng.below(480)));
      labels.push_back(static_cast<int>(rng.below(3)));
    }
    write_pointcloud_ply(cloud, tmp.path() / "c.ply", &labels);
    std::vector<int> labels_back;
    PointCloud back = read_pointcloud_ply(tmp.path() / "c.ply", &labels_back);
    REQUIRE(back.size() == cloud.size());
    CHECK(labels_back == labels);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      CHECK(back.points[i].x == cloud.points[i].x);  // exact: max_digits10 text
      CHECK(back.points[i].y == cloud.points[i].y);
      CHECK(back.points[i].z == cloud.points[i].z);
      CHECK(back.pixels[i] == cloud.pixels[i]);
    }
  }
}

TEST_CASE("P2 masks and the >=128 threshold", "[scene_io]") {
  test_support::TempDir tmp("p2");
  std::string text = "P2\n2 2\n255\n0 127\n128 255\n";
  write_raw(tmp.path() / "m.pgm", {text.begin(), text.end()});
  BinaryMask m = read_mask_pgm(tmp.path() / "m.pgm");
  CHECK(!m.at(0, 0));
  CHECK(!m.at(1, 0));
  CHECK(m.at(0, 1));
  CHECK(m.at(1, 1));
}

TEST_CASE("PNM readers reject malformed files with named errors", "[scene_io]") {
  test_support::TempDir tmp("badpnm");

  auto expect_error = [&](const std::string& content, const char* what) {
    write_raw(tmp.path() / "f.pnm", {content.begin(), content.end()});
    CHECK_THROWS_AS(read_image_ppm(tmp.path() / "f.pnm"), error);
    (void)what;
  };
  expect_error("P5\n2 2\n255\n....", "wrong magic for ppm");
  expect_error("P6\n2 2\n255\nxx", "truncated raster");
  expect_error("P6\n2 2\n65535\n" + std::string(24, 'a'), "wrong maxval");
  expect_error("P6\n-2 2\n255\n", "negative dims");

  std::string depth_small = "P5\n2 2\n255\n....";
  write_raw(tmp.path() / "d.pgm", {depth_small.begin(), depth_small.end()});
  CHECK_THROWS_WITH(read_depth_pgm16(tmp.path() / "d.pgm"),
                    Catch::Matchers::ContainsSubstring("65535"));
  CHECK_THROWS_AS(read_mask_pgm(tmp.path() / "missing.pgm"), error);
}

TEST_CASE("grasp JSON loads with sequential ids and validation", "[scene_io]") {
  test_support::TempDir tmp("grasps");

  SECTION("identity rotation has approach (0,0,1)") {
    std::string text = R"([{"rotation": [1,0,0, 0,1,0, 0,0,1], "translation": [0,0,0]}])";
    write_raw(tmp.path() / "g.json", {text.begin(), text.end()});
    auto grasps = read_grasps_json(tmp.path() / "g.json");
    REQUIRE(grasps.size() == 1);
    CHECK(grasps[0].id == 0);
    CHECK(grasps[0].approach().z == 1.0);
    CHECK(!grasps[0].confidence.has_value());
  }

  SECTION("det = -1 rotations are rejected") {
    std::string text = R"([{"rotation": [1,0,0, 0,1,0, 0,0,-1], "translation": [0,0,0]}])";
    write_raw(tmp.path() / "g.json", {text.begin(), text.end()});
    CHECK_THROWS_WITH(read_grasps_json(tmp.path() / "g.json"),
                      Catch::Matchers::ContainsSubstring("orthonormal"));
  }

  SECTION("wrong arity is rejected") {
    std::string text = R"([{"rotation": [1,0,0,0,1,0], "translation": [0,0,0]}])";
    write_raw(tmp.path() / "g.json", {text.begin(), text.end()});
    CHECK_THROWS_AS(read_grasps_json(tmp.path() / "g.json"), error);
  }

  SECTION("confidence outside [0,1] is rejected") {
    std::string text =
        R"([{"rotation": [1,0,0, 0,1,0, 0,0,1], "translation": [0,0,0], "confidence": 1.5}])";
    write_raw(tmp.path() / "g.json", {text.begin(), text.end()});
    CHECK_THROWS_WITH(read_grasps_json(tmp.path() / "g.json"),
                      Catch::Matchers::ContainsSubstring("confidence"));
  }

  SECTION("50 random grasps round trip in order") {
    Rng rng(23);
    std::vector<GraspCandidate> grasps;
    for (int i = 0; i < 50; ++i) {
      auto g = test_support::random_grasp(rng, {0, 0, 0.6}, 0.3, i);
      if (i % 3 == 0) g.confidence = rng.uniform();
      grasps.push_back(g);
    }
    write_grasps_json(grasps, tmp.path() / "g.json");
    auto back = read_grasps_json(tmp.path() / "g.json");
    REQUIRE(back.size() == grasps.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      CHECK(back[i].id == grasps[i].id);
      CHECK(back[i].translation.x == grasps[i].translation.x);
      for (int k = 0; k < 9; ++k) CHECK(back[i].rotation.m[k] == grasps[i].rotation.m[k]);
      CHECK(back[i].confidence == grasps[i].confidence);
    }
  }
}

TEST_CASE("scene manifests validate and load bundles", "[scene_io]") {
  test_support::TempDir tmp("scene");
  auto scene = generate_scene(ObjectKind::mug, 5, 40000.0, 160, 120, 20);
  write_scene(scene, tmp.path());

  SECTION("a complete manifest loads with all grasps") {
    SceneBundle b = read_scene(tmp.path() / "manifest.json");
    CHECK(b.grasps.size() == 20);
    CHECK(b.joints.has_value());
    CHECK(b.image.width == 160);
    CHECK(b.object_query == "mug");
  }

  SECTION("bbox outside the image is rejected with the field named") {
    json j = io_detail::parse_json_file(tmp.path() / "manifest.json");
    j["bbox"] = {100, 100, 100, 100};
    std::string s = j.dump();
    write_raw(tmp.path() / "manifest.json", {s.begin(), s.end()});
    CHECK_THROWS_WITH(read_scene(tmp.path() / "manifest.json"),
                      Catch::Matchers::ContainsSubstring("bbox"));
  }

  SECTION("missing human pose path means absent joints") {
    json j = io_detail::parse_json_file(tmp.path() / "manifest.json");
    j.erase("human_pose_path");
    std::string s = j.dump();
    write_raw(tmp.path() / "manifest.json", {s.begin(), s.end()});
    SceneBundle b = read_scene(tmp.path() / "manifest.json");
    CHECK(!b.joints.has_value());
  }

  SECTION("referenced file missing is an IoError") {
    std::filesystem::remove(tmp.path() / "depth.pgm");
    CHECK_THROWS_WITH(read_scene(tmp.path() / "manifest.json"),
                      Catch::Matchers::ContainsSubstring("depth.pgm"));
  }
}

TEST_CASE("human pose JSON rejects coincident joints", "[scene_io]") {
  test_support::TempDir tmp("pose");
  std::string text = R"({"shoulder": [0,0,1.4], "elbow": [0,0,1.4], "wrist": [0,0,0.8]})";
  write_raw(tmp.path() / "p.json", {text.begin(), text.end()});
  CHECK_THROWS_WITH(read_human_pose_json(tmp.path() / "p.json"),
                    Catch::Matchers::ContainsSubstring("shoulder"));
}

TEST_CASE("PNG writer emits a valid stored-deflate stream", "[scene_io]") {
  Rng rng(29);
  Image img(100, 100);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.below(256));
  auto grid = make_grid({5, 5, 90, 90}, 5);
  Image annotated = annotate_image(img, grid);
  auto png = encode_png_rgb8(annotated);

  REQUIRE(png.size() > 8);
  CHECK(png[0] == 0x89);
  CHECK(png[1] == 'P');

  // walk the chunks, checking each CRC against zlib's crc32 oracle
  auto u32 = [&](std::size_t i) {
    return (static_cast<std::uint32_t>(png[i]) << 24) | (png[i + 1] << 16) | (png[i + 2] << 8) |
           png[i + 3];
  };
  std::size_t pos = 8;
  std::vector<std::uint8_t> idat;
  int chunks = 0;
  while (pos + 12 <= png.size()) {
    std::uint32_t len = u32(pos);
    std::string type(png.begin() + pos + 4, png.begin() + pos + 8);
    std::uint32_t stored_crc = u32(pos + 8 + len);
    uLong oracle = crc32(0L, png.data() + pos + 4, len + 4);
    CHECK(stored_crc == static_cast<std::uint32_t>(oracle));
    if (type == "IDAT")
      idat.insert(idat.end(), png.begin() + pos + 8, png.begin() + pos + 8 + len);
    if (type == "IHDR") {
      CHECK(u32(pos + 8) == 100);   // width
      CHECK(u32(pos + 12) == 100);  // height
    }
    ++chunks;
    pos += 12 + len;
  }
  CHECK(pos == png.size());
  CHECK(chunks == 3);  // IHDR, IDAT, IEND

  // inflate the zlib stream with the independent implementation and check
  // the filtered scanlines plus the Adler32 trailer
  std::vector<std::uint8_t> raw(100 * (1 + 300));
  uLongf raw_len = raw.size();
  REQUIRE(uncompress(raw.data(), &raw_len, idat.data(), idat.size()) == Z_OK);
  REQUIRE(raw_len == raw.size());
  for (int v = 0; v < 100; ++v) {
    CHECK(raw[static_cast<std::size_t>(v) * 301] == 0);  // filter byte None
    for (int i = 0; i < 300; ++i)
      REQUIRE(raw[static_cast<std::size_t>(v) * 301 + 1 + i] ==
              annotated.data[static_cast<std::size_t>(v) * 300 + i]);
  }
  uLong adler_oracle = adler32(1L, raw.data(), raw.size());
  // trailer: last 4 bytes of the zlib stream
  std::uint32_t trailer = (static_cast<std::uint32_t>(idat[idat.size() - 4]) << 24) |
                          (idat[idat.size() - 3] << 16) | (idat[idat.size() - 2] << 8) |
                          idat[idat.size() - 1];
  CHECK(trailer == static_cast<std::uint32_t>(adler_oracle));
}

TEST_CASE("annotated PNG output is byte-deterministic", "[scene_io]") {
  Rng rng(31);
  Image img(64, 48);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.below(256));
  auto grid = make_grid({2, 2, 60, 44}, 5);
  auto a = encode_png_rgb8(annotate_image(img, grid));
  auto b = encode_png_rgb8(annotate_image(img, grid));
  CHECK(a == b);
}

TEST_CASE("single-cell grid annotates with one label", "[scene_io]") {
  Image img(40, 40, 10, 10, 10);
  auto grid = make_grid({0, 0, 40, 40}, 1);
  REQUIRE(grid.cells.size() == 1);
  Image annotated = annotate_image(img, grid);
  auto png = encode_png_rgb8(annotated);
  CHECK(png.size() > 100);
}
