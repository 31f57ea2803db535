#include <doctest.h>

#include <cmath>

#include "zsd/geometry.hpp"
#include "zsd/rng.hpp"

using namespace zsd;

TEST_CASE("iou basics") {
  const Box a{10.0, 10.0, 4.0, 6.0};
  CHECK(iou(a, a) == doctest::Approx(1.0));

  const Box far{100.0, 100.0, 4.0, 6.0};
  CHECK(iou(a, far) == 0.0);

  // unit squares overlapping in half: intersection 0.5, union 1.5
  const Box u1{0.5, 0.5, 1.0, 1.0};
  const Box u2{1.0, 0.5, 1.0, 1.0};
  CHECK(iou(u1, u2) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("iou is symmetric and bounded by the area ratio") {
  Rng rng(5);
  std::uniform_real_distribution<double> center(0.0, 50.0);
  std::uniform_real_distribution<double> extent(2.0, 30.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Box a{center(rng), center(rng), extent(rng), extent(rng)};
    const Box b{center(rng), center(rng), extent(rng), extent(rng)};
    const double ab = iou(a, b);
    CHECK(ab == iou(b, a));
    const double bound = std::min(box_area(a), box_area(b)) /
                         std::max(box_area(a), box_area(b));
    CHECK(ab <= bound + 1e-12);
  }
}

TEST_CASE("offset encoding examples") {
  const Box p{0.0, 0.0, 10.0, 10.0};

  SUBCASE("identical boxes give zero offsets") {
    const Offsets t = encode_offsets(p, p);
    CHECK(t.tx == 0.0);
    CHECK(t.ty == 0.0);
    CHECK(t.tw == 0.0);
    CHECK(t.th == 0.0);
  }
  SUBCASE("width ratio of e gives tw = 1") {
    const Box g{0.0, 0.0, 10.0 * std::exp(1.0), 10.0};
    CHECK(encode_offsets(p, g).tw == doctest::Approx(1.0));
  }
  SUBCASE("shifted center gives a width-normalized offset") {
    const Box g{2.0, 0.0, 10.0, 10.0};
    CHECK(encode_offsets(p, g).tx == doctest::Approx(0.2));
  }
}

TEST_CASE("offset decoding examples") {
  const Box p{0.0, 0.0, 10.0, 10.0};

  SUBCASE("zero offsets return the proposal") {
    const Box d = decode_offsets(p, {});
    CHECK(d.x == p.x);
    CHECK(d.y == p.y);
    CHECK(d.w == p.w);
    CHECK(d.h == p.h);
  }
  SUBCASE("tx of 0.2 moves the center by two units") {
    CHECK(decode_offsets(p, {0.2, 0.0, 0.0, 0.0}).x == doctest::Approx(2.0));
  }
  SUBCASE("size offsets are clamped at |4|") {
    const Box d = decode_offsets(p, {0.0, 0.0, 9.0, -9.0});
    CHECK(d.w == doctest::Approx(10.0 * std::exp(4.0)));
    CHECK(d.h == doctest::Approx(10.0 * std::exp(-4.0)));
  }
}

TEST_CASE("decode after encode recovers the ground truth") {
  Rng rng(97);
  std::uniform_real_distribution<double> center(-50.0, 50.0);
  std::uniform_real_distribution<double> extent(2.0, 40.0);
  for (int trial = 0; trial < 10000; ++trial) {
    const Box p{center(rng), center(rng), extent(rng), extent(rng)};
    const Box g{center(rng), center(rng), extent(rng), extent(rng)};
    const Box d = decode_offsets(p, encode_offsets(p, g));
    CHECK(std::abs(d.x - g.x) < 1e-9);
    CHECK(std::abs(d.y - g.y) < 1e-9);
    CHECK(std::abs(d.w - g.w) < 1e-9);
    CHECK(std::abs(d.h - g.h) < 1e-9);
  }
}

TEST_CASE("nms basics") {
  SUBCASE("single detection is kept") {
    const ScoredBox one[] = {{{0, 0, 2, 2}, 0.7}};
    CHECK(nms(one, 0.5) == std::vector<std::size_t>{0});
  }
  SUBCASE("the higher of two identical boxes survives") {
    const ScoredBox pair[] = {{{0, 0, 2, 2}, 0.8}, {{0, 0, 2, 2}, 0.9}};
    CHECK(nms(pair, 0.5) == std::vector<std::size_t>{1});
  }
  SUBCASE("threshold 1.0 keeps everything (strict comparison)") {
    const ScoredBox pair[] = {{{0, 0, 2, 2}, 0.9}, {{0, 0, 2, 2}, 0.8}};
    CHECK(nms(pair, 1.0).size() == 2);
  }
  SUBCASE("score ties keep the lower input index first") {
    const ScoredBox pair[] = {{{0, 0, 2, 2}, 0.9}, {{100, 100, 2, 2}, 0.9}};
    CHECK(nms(pair, 0.5) == std::vector<std::size_t>{0, 1});
  }
}

TEST_CASE("nms keeps a score-sorted subset with bounded pairwise iou") {
  Rng rng(123);
  std::uniform_real_distribution<double> center(0.0, 20.0);
  std::uniform_real_distribution<double> extent(2.0, 10.0);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<ScoredBox> boxes;
    const std::size_t n = 1 + rng() % 12;
    for (std::size_t i = 0; i < n; ++i)
      boxes.push_back({{center(rng), center(rng), extent(rng), extent(rng)}, score(rng)});
    const double threshold = 0.3;
    const auto kept = nms(boxes, threshold);

    for (std::size_t i = 1; i < kept.size(); ++i)
      CHECK(boxes[kept[i - 1]].score >= boxes[kept[i]].score);
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j)
        CHECK(iou(boxes[kept[i]].box, boxes[kept[j]].box) <= threshold);
  }
}
