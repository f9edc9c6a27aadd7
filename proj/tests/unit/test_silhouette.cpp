#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <map>

#include "bodyid/silhouette.hpp"
#include "support/helpers.hpp"

using namespace bodyid;
using testsupport::single_bone_model;

TEST_CASE("rasterize_mask draws the capsule footprint") {
  // vertical bone of length 1 m, radius 0.1 m, scale 50 px/m -> a stadium
  // 50 px tall with radius 5 px
  const BodyModel m = single_bone_model(1.0, 0.1, 16);
  Camera cam;
  cam.scale = 50.0;
  cam.trans = Vec2(112, 80);
  const Mask mask = rasterize_mask(m, ShapeParams{VecX::Zero(2)}, PoseParams::rest(2), cam, 224);

  const double r = 5.0, len = 50.0;
  const double area = 2.0 * r * len + kPi * r * r;
  const double perimeter = 2.0 * len + 2.0 * kPi * r;
  const double count = static_cast<double>(mask.foreground_count());
  CHECK(count > area - perimeter);
  CHECK(count < area + perimeter);

  SECTION("translation shifts the mask column-for-column") {
    Camera shifted = cam;
    shifted.trans += Vec2(5, 0);
    const Mask moved =
        rasterize_mask(m, ShapeParams{VecX::Zero(2)}, PoseParams::rest(2), shifted, 224);
    for (int y = 0; y < 224; ++y)
      for (int x = 0; x < 224 - 5; ++x) CHECK(moved.at(x + 5, y) == mask.at(x, y));
  }
}

TEST_CASE("rasterize_mask error cases") {
  BodyModel m = single_bone_model(1.0, 0.1, 8);
  SECTION("zero radius is degenerate") {
    m.base_radii(0) = 0.0;
    Camera cam;
    cam.scale = 50.0;
    cam.trans = Vec2(112, 80);
    CHECK_THROWS_AS(rasterize_mask(m, ShapeParams{VecX::Zero(2)}, PoseParams::rest(2), cam, 224),
                    DataError);
  }
  SECTION("body out of frame") {
    Camera cam;
    cam.scale = 50.0;
    cam.trans = Vec2(-4000, -4000);
    CHECK_THROWS_AS(rasterize_mask(m, ShapeParams{VecX::Zero(2)}, PoseParams::rest(2), cam, 224),
                    DataError);
  }
}

TEST_CASE("sample_silhouette_cloud") {
  SECTION("single foreground pixel is forced") {
    Mask mask;
    mask.width = 8;
    mask.height = 8;
    mask.bits.assign(64, 0);
    mask.set(3, 4);
    const PointCloud2D cloud = sample_silhouette_cloud(mask, 5, 99);
    REQUIRE(cloud.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(cloud.points(i, 0) == 3.5);
      CHECK(cloud.points(i, 1) == 4.5);
    }
  }
  SECTION("samples are foreground pixel centers and seeded") {
    const BodyModel m = single_bone_model(1.0, 0.12, 16);
    Camera cam;
    cam.scale = 60.0;
    cam.trans = Vec2(112, 80);
    const Mask mask =
        rasterize_mask(m, ShapeParams{VecX::Zero(2)}, PoseParams::rest(2), cam, 224);
    const PointCloud2D a = sample_silhouette_cloud(mask, 200, 7);
    const PointCloud2D b = sample_silhouette_cloud(mask, 200, 7);
    CHECK(MatX(a.points) == MatX(b.points));
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const int x = static_cast<int>(a.points(i, 0));
      const int y = static_cast<int>(a.points(i, 1));
      CHECK(a.points(i, 0) == x + 0.5);
      CHECK(a.points(i, 1) == y + 0.5);
      CHECK(mask.at(x, y));
    }
  }
  SECTION("empty mask is an error") {
    Mask mask;
    mask.width = 4;
    mask.height = 4;
    mask.bits.assign(16, 0);
    CHECK_THROWS_AS(sample_silhouette_cloud(mask, 3, 1), DataError);
  }
}

TEST_CASE("adaptive_sample_vertices caps per-cell multiplicity") {
  SECTION("hand layout: four points in one cell, 2x2 grid, k=1") {
    Points2 pts(5, 2);
    pts << 1, 1, 1.1, 1, 1, 1.1, 1.2, 1.2,  // all in the low-left cell
        9, 9;                               // far corner
    const PointCloud2D out = adaptive_sample_vertices(pts, 2, 1);
    REQUIRE(out.size() == 2);
    CHECK(out.points(0, 0) == 1.0);
    CHECK(out.points(1, 0) == 9.0);
  }
  SECTION("distinct cells pass through") {
    Points2 pts(4, 2);
    pts << 0, 0, 10, 0, 0, 10, 10, 10;
    const PointCloud2D out = adaptive_sample_vertices(pts, 2, 1);
    CHECK(MatX(out.points) == MatX(pts));
  }
  SECTION("per-cell count never exceeds k and order is by original index") {
    Rng rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const Points2 pts = testsupport::random_cloud(rng, 200);
      const int grid = 1 + static_cast<int>(rng.uniform_index(8));
      const int k = 1 + static_cast<int>(rng.uniform_index(3));
      const std::vector<int> kept = adaptive_sample_indices(pts, grid, k);
      CHECK(std::is_sorted(kept.begin(), kept.end()));
      // recount occupancy on the kept set's own grid
      Points2 sub(static_cast<Eigen::Index>(kept.size()), 2);
      for (std::size_t i = 0; i < kept.size(); ++i)
        sub.row(static_cast<Eigen::Index>(i)) = pts.row(kept[i]);
      const double min_x = sub.col(0).minCoeff(), max_x = sub.col(0).maxCoeff();
      const double min_y = sub.col(1).minCoeff(), max_y = sub.col(1).maxCoeff();
      const double w = (max_x - min_x) / grid, h = (max_y - min_y) / grid;
      std::map<std::pair<int, int>, int> cells;
      for (Eigen::Index i = 0; i < sub.rows(); ++i) {
        const int cx = w > 0 ? std::min(grid - 1, static_cast<int>((sub(i, 0) - min_x) / w)) : 0;
        const int cy = h > 0 ? std::min(grid - 1, static_cast<int>((sub(i, 1) - min_y) / h)) : 0;
        ++cells[{cx, cy}];
      }
      for (const auto& [cell, count] : cells) CHECK(count <= k);
    }
  }
  SECTION("idempotent: applying twice equals once") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
      const Points2 pts = testsupport::random_cloud(rng, 120, 0.0, 30.0);
      const PointCloud2D once = adaptive_sample_vertices(pts, 3, 1);
      const PointCloud2D twice = adaptive_sample_vertices(once.points, 3, 1);
      CHECK(MatX(once.points) == MatX(twice.points));
    }
  }
}

TEST_CASE("degrade_cloud") {
  PointCloud2D cloud;
  cloud.points.resize(3, 2);
  cloud.points << 10.5, 20.5, 100.5, 50.5, 223.5, 223.5;

  SECTION("s=224 with sigma0=0 is the identity on pixel centers") {
    const PointCloud2D out = degrade_cloud(cloud, 224.0, 0.0, 1);
    CHECK(MatX(out.points) == MatX(cloud.points));
  }
  SECTION("sigma follows sigma0 * (224/s - 1)") {
    // s=112, sigma0=0.5 -> sigma = 0.5; verify statistically
    Rng seed_rng(2);
    double sq_sum = 0.0;
    int n = 0;
    PointCloud2D big;
    big.points = Points2::Constant(4000, 2, 112.0);
    const PointCloud2D out = degrade_cloud(big, 112.0, 0.5, 77);
    for (Eigen::Index i = 0; i < out.points.rows(); ++i)
      for (int a = 0; a < 2; ++a) {
        // recover the pre-quantization displacement up to the grid pitch
        const double d = out.points(i, a) - 112.0;
        sq_sum += d * d;
        ++n;
      }
    // variance of jitter (0.25) plus quantization variance (pitch^2/12 = 1/3)
    const double expected = 0.25 + 4.0 / 12.0;
    CHECK(sq_sum / n == Catch::Approx(expected).epsilon(0.15));
  }
  SECTION("outputs lie on the s-grid") {
    Rng rng(4);
    PointCloud2D in;
    in.points = testsupport::random_cloud(rng, 200);
    const double s = 80.0;
    const PointCloud2D out = degrade_cloud(in, s, 1.0, 5);
    const double pitch = 224.0 / s;
    for (Eigen::Index i = 0; i < out.points.rows(); ++i)
      for (int a = 0; a < 2; ++a) {
        const double cells = out.points(i, a) / pitch - 0.5;
        CHECK(std::abs(cells - std::round(cells)) < 1e-9);
      }
  }
  SECTION("out-of-range s is a configuration error") {
    CHECK_THROWS_AS(degrade_cloud(cloud, 47.9, 0.5, 1), ConfigError);
    CHECK_THROWS_AS(degrade_cloud(cloud, 225.0, 0.5, 1), ConfigError);
  }
}

TEST_CASE("mask and cloud files round trip") {
  const BodyModel m = single_bone_model(1.0, 0.1, 8);
  Camera cam;
  cam.scale = 50.0;
  cam.trans = Vec2(112, 80);
  const Mask mask = rasterize_mask(m, ShapeParams{VecX::Zero(2)}, PoseParams::rest(2), cam, 224);
  const auto dir = std::filesystem::temp_directory_path() / "bodyid_test_silhouette";
  std::filesystem::create_directories(dir);
  const std::string pgm = (dir / "mask.pgm").string();
  write_mask_pgm(mask, pgm);
  const Mask back = read_mask_pgm(pgm);
  CHECK(back.width == mask.width);
  CHECK(back.bits == mask.bits);

  const PointCloud2D cloud = sample_silhouette_cloud(mask, 50, 3);
  const std::string csv = (dir / "cloud.csv").string();
  write_cloud_csv(cloud, csv);
  const PointCloud2D cloud_back = read_cloud_csv(csv);
  CHECK(MatX(cloud_back.points) == MatX(cloud.points));
}
