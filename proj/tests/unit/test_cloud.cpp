#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "wsl3d/cloud.hpp"

using namespace wsl3d;
using wsl3d::testing::TempDir;
using wsl3d::testing::read_file;
using wsl3d::testing::write_file;

TEST_CASE("xyz file loads points in order without colors") {
  TempDir dir("cloud");
  write_file(dir / "a.xyz", "0 0 0\n1 0 0\n0 1 0\n");
  const PointCloud c = load_cloud(dir / "a.xyz");
  REQUIRE(c.size() == 3);
  CHECK_FALSE(c.has_colors());
  CHECK(c.points[1] == Vec3(1, 0, 0));
  CHECK(c.points[2] == Vec3(0, 1, 0));
}

TEST_CASE("ascii ply colors map bytes to the unit interval") {
  TempDir dir("cloud");
  write_file(dir / "a.ply",
             "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\n"
             "property float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\n"
             "end_header\n0 0 0 255 0 51\n1 2 3 0 255 102\n");
  const PointCloud c = load_cloud(dir / "a.ply");
  REQUIRE(c.size() == 2);
  REQUIRE(c.has_colors());
  CHECK(c.colors[0] == Vec3(1.0, 0.0, 0.2));
  CHECK(c.colors[1] == Vec3(0.0, 1.0, 0.4));
  CHECK(c.points[1] == Vec3(1, 2, 3));
}

TEST_CASE("non-finite coordinate is reported with its line") {
  TempDir dir("cloud");
  write_file(dir / "bad.xyz", "nan 0 0\n");
  CHECK_THROWS_WITH_AS(load_cloud(dir / "bad.xyz"), doctest::Contains(":1: non-finite"),
                       InputError);
  write_file(dir / "bad2.xyz", "0 0 0\n1 inf 0\n");
  CHECK_THROWS_WITH_AS(load_cloud(dir / "bad2.xyz"), doctest::Contains(":2:"), InputError);
}

TEST_CASE("color channel mismatch and malformed headers are input errors") {
  TempDir dir("cloud");
  write_file(dir / "a.xyzrgb", "0 0 0 1 1 1\n1 1 1\n");
  CHECK_THROWS_WITH_AS(load_cloud(dir / "a.xyzrgb"), doctest::Contains("color channel count"),
                       InputError);
  write_file(dir / "b.ply", "ply\nformat ascii 1.0\nelement vertex x\nend_header\n");
  CHECK_THROWS_AS(load_cloud(dir / "b.ply"), InputError);
  write_file(dir / "c.ply", "not a ply\n");
  CHECK_THROWS_AS(load_cloud(dir / "c.ply"), InputError);
  CHECK_THROWS_AS(load_cloud(dir / "missing.xyz"), InputError);
}

TEST_CASE("truncated binary ply reports a byte offset") {
  TempDir dir("cloud");
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
  save_cloud(c, dir / "a.ply", CloudFormat::PlyBinaryLE);
  std::string bytes = read_file(dir / "a.ply");
  bytes.resize(bytes.size() - 4);
  write_file(dir / "t.ply", bytes);
  CHECK_THROWS_WITH_AS(load_cloud(dir / "t.ply"), doctest::Contains("byte"), InputError);
}

TEST_CASE("binary ply round trip is bit exact for float32 coordinates") {
  TempDir dir("cloud");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(-50.0f, 50.0f);
  std::uniform_int_distribution<int> byte(0, 255);
  PointCloud c;
  for (int i = 0; i < 500; ++i) {
    c.points.emplace_back(u(rng), u(rng), u(rng));
    c.colors.emplace_back(byte(rng) / 255.0, byte(rng) / 255.0, byte(rng) / 255.0);
  }
  save_cloud(c, dir / "r.ply", CloudFormat::PlyBinaryLE);
  CHECK(detect_cloud_format(dir / "r.ply") == CloudFormat::PlyBinaryLE);
  const PointCloud back = load_cloud(dir / "r.ply", CloudFormat::PlyBinaryLE);
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back.points[i] == c.points[i]);
    CHECK((back.colors[i] - c.colors[i]).norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("ascii formats round trip to six decimals") {
  TempDir dir("cloud");
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  PointCloud c;
  for (int i = 0; i < 200; ++i) {
    c.points.emplace_back(u(rng), u(rng), u(rng));
    c.colors.emplace_back(0.25, 0.5, 1.0);
  }
  for (auto fmt : {CloudFormat::Xyz, CloudFormat::XyzRgb, CloudFormat::PlyAscii}) {
    const auto path = dir / ("r." + std::string(fmt == CloudFormat::Xyz      ? "xyz"
                                                : fmt == CloudFormat::XyzRgb ? "xyzrgb"
                                                                             : "ply"));
    save_cloud(c, path, fmt);
    const PointCloud back = load_cloud(path, fmt);
    REQUIRE(back.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      // ply ascii stores float32, so allow float rounding on top of 6 decimals.
      CHECK((back.points[i] - c.points[i]).cwiseAbs().maxCoeff() <= 5e-6);
    }
  }
}

TEST_CASE("declared format must match the header") {
  TempDir dir("cloud");
  PointCloud c;
  c.points = {Vec3(0, 0, 0)};
  save_cloud(c, dir / "a.ply", CloudFormat::PlyAscii);
  CHECK_THROWS_AS(load_cloud(dir / "a.ply", CloudFormat::PlyBinaryLE), InputError);
  CHECK(parse_cloud_format("ply-binary-le") == CloudFormat::PlyBinaryLE);
  CHECK(to_string(CloudFormat::XyzRgb) == "xyzrgb");
  CHECK_THROWS_AS(parse_cloud_format("las"), InputError);
}

TEST_CASE("weak labels parse, validate and reject duplicates") {
  TempDir dir("weak");
  write_file(dir / "w.txt", "classes 20\n5 3\n900 7\n");
  const WeakLabels w = load_weak_labels(dir / "w.txt");
  CHECK(w.num_classes == 20);
  REQUIRE(w.size() == 2);
  CHECK(w.entries[1].point_index == 900);
  CHECK(w.entries[1].class_id == 7);
  CHECK_THROWS_AS(w.check_against(900), InputError);
  CHECK_NOTHROW(w.check_against(901));

  write_file(dir / "d.txt", "classes 20\n5 3\n5 4\n");
  CHECK_THROWS_WITH_AS(load_weak_labels(dir / "d.txt"), doctest::Contains("duplicate"),
                       InputError);
  write_file(dir / "c.txt", "classes 4\n1 4\n");
  CHECK_THROWS_AS(load_weak_labels(dir / "c.txt"), InputError);
  write_file(dir / "h.txt", "1 2\n");
  CHECK_THROWS_AS(load_weak_labels(dir / "h.txt"), InputError);
  write_file(dir / "e.txt", "classes 4\n");
  CHECK_THROWS_AS(load_weak_labels(dir / "e.txt"), InputError);
}

TEST_CASE("20 weak labels over two million points is the sparsest supported ratio") {
  TempDir dir("weak");
  WeakLabels w;
  w.num_classes = 20;
  for (std::size_t i = 0; i < 20; ++i) w.entries.push_back({i * 100000, static_cast<int>(i)});
  save_weak_labels(w, dir / "w.txt");
  const WeakLabels back = load_weak_labels(dir / "w.txt");
  REQUIRE(back.size() == 20);
  CHECK_NOTHROW(back.check_against(2'000'000));
  const double per_mille = 1000.0 * static_cast<double>(back.size()) / 2e6;
  CHECK(per_mille == doctest::Approx(0.01));
}

TEST_CASE("labels text is written verbatim and round trips") {
  TempDir dir("labels");
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
  LabelMatrix l(3);
  l.cluster_id = {0, 0, 1};
  l.semantic_label = {2, 2, -1};
  write_labeled_cloud(c, l, dir / "l.txt", LabelOutput::LabelsText);
  CHECK(read_file(dir / "l.txt") == "0 2\n0 2\n1 -1\n");
  const LabelMatrix back = read_labels_text(dir / "l.txt");
  CHECK(back == l);
  CHECK(read_semantic_labels(dir / "l.txt") == std::vector<int>{2, 2, -1});

  LabelMatrix short_labels(2);
  CHECK_THROWS_AS(write_labeled_cloud(c, short_labels, dir / "x.txt", LabelOutput::LabelsText),
                  InputError);
}

TEST_CASE("colored ply paints unlabeled points gray") {
  TempDir dir("labels");
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
  LabelMatrix l(2);
  write_labeled_cloud(c, l, dir / "g.ply", LabelOutput::ColoredPly);
  const PointCloud back = load_cloud(dir / "g.ply");
  REQUIRE(back.has_colors());
  for (const auto& col : back.colors) CHECK((col * 255.0 - Vec3(128, 128, 128)).norm() < 1e-9);
}

TEST_CASE("palette is deterministic and distinct for the first classes") {
  CHECK(palette_color(-1) == std::array<std::uint8_t, 3>{128, 128, 128});
  for (int c = 0; c < 40; ++c) CHECK(palette_color(c) == palette_color(c));
  for (int a = 0; a < 20; ++a) {
    for (int b = a + 1; b < 20; ++b) CHECK(palette_color(a) != palette_color(b));
  }
}

TEST_CASE("cloud validation") {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(1, 1, 1)};
  c.colors = {Vec3(0, 0, 0)};
  CHECK_THROWS_AS(c.validate(), InputError);
  c.colors.clear();
  c.points[1].x() = std::nan("");
  CHECK_THROWS_AS(c.validate(), InputError);
}
