#include "doctest.h"
#include "oracles.hpp"
#include "ocrpipe/augment.hpp"

#include <cmath>
#include <set>

using namespace ocrpipe;

namespace {

LineImage random_line(std::uint64_t seed, Eigen::Index h = 48, Eigen::Index w = 160) {
  Rng rng(seed);
  Raster8 img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<std::uint8_t>(rng.index(256));
  return LineImage(img);
}

bool in_range_same_shape(const LineImage& a, const LineImage& b) {
  return a.height() == b.height() && a.width() == b.width();
}

}  // namespace

TEST_SUITE("augment") {

TEST_CASE("zero strength is the identity") {
  const LineImage img = random_line(1);
  Rng rng(99);
  CHECK(distort_highres(img, {30.0, 0.0}, rng) == img);
  CHECK(distort_lowres(img, {8, 0.0}, rng) == img);
  CHECK(add_gaussian_noise(img, {0.0, 0.0, 0.0}, rng) == img);
  CHECK(random_brightness_contrast(img, {0.0, 0.0}, rng) == img);
  BlotchParams none;
  none.amount = 0.0;
  CHECK(add_blotches(img, none, rng) == img);
}

TEST_CASE("outputs keep the input shape") {
  const LineImage img = random_line(2, 48, 120);
  Rng rng(4);
  const std::vector<AugmentOp> ops{HiResDistortParams{}, LoResDistortParams{}, NoiseParams{},
                                   BrightnessContrastParams{}, BlotchParams{}};
  for (const auto& op : ops) CHECK(in_range_same_shape(apply_op(img, op, rng), img));
}

TEST_CASE("distort_highres field peaks at maxdelta") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto f = highres_displacement(24, 60, {5.0, 12.0}, rng);
    CHECK(std::abs(f.dy.abs().maxCoeff() - 12.0) < 1e-6);
    CHECK(std::abs(f.dx.abs().maxCoeff() - 12.0) < 1e-6);
  }
  Rng rng(1);
  const LineImage line = random_line(3, 48, 800);
  CHECK(in_range_same_shape(distort_highres(line, {30.0, 12.0}, rng), line));
}

TEST_CASE("distort_lowres grid stays in bounds and ordered") {
  const Eigen::Index h = 48, w = 400;
  const LoResDistortParams p{8, 0.5};
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    const auto g = lowres_grid(h, w, p, rng);
    REQUIRE(g.x.minCoeff() >= 0.0);
    REQUIRE(g.x.maxCoeff() <= double(w - 1));
    REQUIRE(g.y.minCoeff() >= 0.0);
    REQUIRE(g.y.maxCoeff() <= double(h - 1));
    for (Eigen::Index i = 0; i <= 8; ++i) {
      for (Eigen::Index j = 0; j < 8; ++j) {
        REQUIRE(g.x(i, j + 1) > g.x(i, j));
        REQUIRE(g.y(j + 1, i) > g.y(j, i));
      }
    }
    REQUIRE(g.x(0, 0) == 0.0);
    REQUIRE(g.y(8, 8) == double(h - 1));
    REQUIRE(g.x(8, 8) == double(w - 1));
  }
}

TEST_CASE("distort_lowres with one step keeps the corners") {
  const LineImage img = random_line(7, 30, 50);
  Rng rng(3);
  const LineImage out = distort_lowres(img, {1, 0.9}, rng);
  CHECK(out(0, 0) == img(0, 0));
  CHECK(out(0, 49) == img(0, 49));
  CHECK(out(29, 0) == img(29, 0));
  CHECK(out(29, 49) == img(29, 49));
}

TEST_CASE("gaussian noise mean tracks mu") {
  const LineImage flat = LineImage::filled(48, 1000, 128);
  Rng rng(17);
  const LineImage out = add_gaussian_noise(flat, {15.0, 10.0, 50.0}, rng);
  const double shift = out.pixels().cast<double>().mean() - 128.0;
  CHECK(std::abs(shift - 15.0) < 0.5);
}

TEST_CASE("brightness/contrast parameter ranges") {
  CHECK_NOTHROW(validate(AugmentOp{BrightnessContrastParams{0.4, 0.7}}));
  CHECK_NOTHROW(validate(AugmentOp{BrightnessContrastParams{0.2, 0.9}}));
  CHECK_THROWS(validate(AugmentOp{BrightnessContrastParams{-0.1, 0.5}}));
  BlotchParams b;
  b.amount = 0.0007;
  for (double s : {9.0, 12.0, 15.0}) {
    b.scale = s;
    CHECK_NOTHROW(validate(AugmentOp{b}));
  }
}

TEST_CASE("a lone seed grows to a disk of diameter scale") {
  const Eigen::Index n = 100;
  const double amount = 1.0 / double(n * n);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 200 && checked < 5; ++seed) {
    // replay the seed draws to locate the seeds
    Rng replay(seed);
    std::vector<Eigen::Index> seeds;
    for (Eigen::Index i = 0; i < n * n; ++i) {
      if (replay.uniform01() < amount) seeds.push_back(i);
    }
    if (seeds.size() != 1) continue;
    const Eigen::Index cy = seeds[0] / n, cx = seeds[0] % n;
    if (cy < 22 || cx < 22 || cy >= n - 22 || cx >= n - 22) continue;  // keep mirrored mass negligible
    Rng rng(seed);
    const auto m = blob_mask(n, n, amount, 9.0, rng);
    for (Eigen::Index y = 0; y < n; ++y) {
      for (Eigen::Index x = 0; x < n; ++x) {
        const double d2 = double((y - cy) * (y - cy) + (x - cx) * (x - cx));
        REQUIRE(m(y, x) == (d2 <= 4.5 * 4.5));
      }
    }
    ++checked;
  }
  CHECK(checked == 5);
}

TEST_CASE("blotch density is near amount * blob area") {
  const BlotchParams p;  // 0.0009, scale 9
  const double area = M_PI * (p.scale / 2) * (p.scale / 2);
  const double expected = p.amount * area;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    const auto masks = blotch_masks(100, 1000, p, rng);
    const double fg = double(masks.foreground.count()) / 1e5;
    const double bg = double(masks.background.count()) / 1e5;
    CHECK(fg > 0.5 * expected);
    CHECK(fg < 1.5 * expected);
    CHECK(bg > 0.5 * expected);
    CHECK(bg < 1.5 * expected);
  }
}

TEST_CASE("blotches paint the 0.75 / 0.05 quantiles") {
  Raster8 img(48, 200);
  for (Eigen::Index y = 0; y < 48; ++y) img.row(y).setConstant(y < 18 ? 30 : 220);
  const int q05 = oracle::quantile(img, 0.05), q75 = oracle::quantile(img, 0.75);
  BlotchParams p;
  p.amount = 0.002;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng a(seed), b(seed);
    const LineImage out = add_blotches(LineImage(img), p, a);
    const auto masks = blotch_masks(48, 200, p, b);
    CHECK(masks.background.count() > 0);
    for (Eigen::Index y = 0; y < 48; ++y) {
      for (Eigen::Index x = 0; x < 200; ++x) {
        const int expect = masks.background(y, x) ? q05 : masks.foreground(y, x) ? q75 : img(y, x);
        REQUIRE(int(out(y, x)) == expect);
      }
    }
  }
}

TEST_CASE("augmented counts") {
  CHECK(augmented_count(2807, 100) == 2807);
  CHECK(augmented_count(10000, 200) == 20000);
  CHECK(augmented_count(10, 0) == 0);
  CHECK(augmented_count(3, 50) == 2);
  CHECK(augmented_count(7, 200) == 14);
}

TEST_CASE("apply_plan") {
  std::vector<LineImage> lines;
  for (std::uint64_t i = 0; i < 6; ++i) lines.push_back(random_line(100 + i, 32, 80));
  AugmentationPlan plan{{LoResDistortParams{8, 0.5}, BlotchParams{}, BrightnessContrastParams{0.2, 0.9}}, 200.0, 0};

  const auto one = apply_plan(lines, plan, 42, 1);
  const auto four = apply_plan(lines, plan, 42, 4);
  CHECK(one.lines.size() == 18);
  CHECK(one.lines == four.lines);
  CHECK(one.source == four.source);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(one.lines[i] == lines[i]);
    CHECK(one.source[i] == i);
  }
  CHECK(apply_plan(lines, plan, 43, 1).lines != one.lines);

  plan.ratio = 0;
  CHECK(apply_plan(lines, plan, 42).lines == lines);
  CHECK_THROWS(apply_plan({}, plan, 1));
}

TEST_CASE("plan JSON round trip") {
  BlotchParams b;
  b.amount = 0.0007;
  b.scale = 12;
  const AugmentationPlan plan{{HiResDistortParams{30, 12}, LoResDistortParams{8, 0.5}, NoiseParams{15, 10, 50},
                               BrightnessContrastParams{0.4, 0.7}, b},
                              200.0,
                              77};
  const auto j = plan_to_json(plan);
  CHECK(plan_from_json(j) == plan);
  CHECK(j["ops"][1]["op"] == "distort_lowres");
  CHECK(plan_from_json(nlohmann::json::parse(R"({"ratio": 100, "ops": [{"op": "blotches"}]})")).ops.front() ==
        AugmentOp{BlotchParams{}});
  CHECK_THROWS(plan_from_json(nlohmann::json::parse(R"({"ops": [{"op": "swirl"}]})")));
  CHECK_THROWS(plan_from_json(nlohmann::json::parse(R"({"ratio": -1})")));
}

}  // TEST_SUITE
