#include <gtest/gtest.h>

#include <set>

#include "dglseg/input_sim.hpp"

using namespace dglseg;

namespace {

std::vector<Pixel> block(int r0, int c0, int r1, int c1) {
  std::vector<Pixel> out;
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) out.push_back({r, c});
  return out;
}

// 40x30: region 1 = left half, region 2 = right half except a 6x6 square of region 3.
RegionAnnotation three_regions() {
  std::vector<int> labels(40 * 30);
  for (int r = 0; r < 30; ++r)
    for (int c = 0; c < 40; ++c) {
      int v = c < 20 ? 1 : 2;
      if (r >= 10 && r < 16 && c >= 28 && c < 34) v = 3;
      labels[r * 40 + c] = v;
    }
  return RegionAnnotation::from_labels(40, 30, labels);
}

}  // namespace

TEST(RegionAnnotation, RemapsWithWarning) {
  std::vector<std::string> warnings;
  const WarningSink sink = [&](std::string_view m) { warnings.emplace_back(m); };
  const auto a = RegionAnnotation::from_labels(2, 2, {7, 3, 0, 7}, sink);
  EXPECT_EQ(a.regions(), 2);
  EXPECT_EQ(a.label_field().labels, (std::vector<int>{1, 2, 0, 1}));
  EXPECT_EQ(warnings.size(), 1u);
  warnings.clear();
  const auto b = RegionAnnotation::from_labels(2, 1, {1, 2}, sink);
  EXPECT_EQ(b.regions(), 2);
  EXPECT_TRUE(warnings.empty());
  EXPECT_THROW(RegionAnnotation::from_labels(2, 1, {0, 0}), Error);
}

TEST(TightBbox, Examples) {
  const std::vector<Pixel> two{{2, 3}, {5, 9}};
  EXPECT_EQ(tight_bbox(two), (BoundingBox{2, 3, 5, 9}));
  const std::vector<Pixel> one{{4, 4}};
  EXPECT_EQ(tight_bbox(one), (BoundingBox{4, 4, 4, 4}));
  const auto full = block(0, 0, 9, 6);
  EXPECT_EQ(tight_bbox(full), (BoundingBox{0, 0, 9, 6}));
  EXPECT_THROW(tight_bbox(std::vector<Pixel>{}), Error);
}

TEST(SampleFraction, FullSetAndFloorRule) {
  Rng rng(1);
  const auto all = block(0, 0, 9, 19);
  auto s = sample_fraction(all, 100, rng);
  std::sort(s.begin(), s.end());
  EXPECT_EQ(s, all);
  const auto half = sample_fraction(all, 50, rng);
  EXPECT_EQ(half.size(), 100u);
  const std::set<Pixel> pool(all.begin(), all.end()), got(half.begin(), half.end());
  EXPECT_EQ(got.size(), half.size());
  for (const auto& p : half) EXPECT_TRUE(pool.contains(p));
  EXPECT_EQ(sample_fraction(block(0, 0, 0, 2), 1, rng).size(), 1u);
  EXPECT_THROW(sample_fraction(all, 0, rng), Error);
  EXPECT_THROW(sample_fraction(all, 101, rng), Error);
}

TEST(SampleFraction, DeterministicGivenSeed) {
  const auto all = block(0, 0, 30, 30);
  Rng a(42), b(42);
  EXPECT_EQ(sample_fraction(all, 30, a), sample_fraction(all, 30, b));
}

TEST(PerturbBbox, ZeroIsIdentity) {
  Rng rng(3);
  const BoundingBox box{10, 20, 40, 60};
  EXPECT_EQ(perturb_bbox(box, 0, rng, 100, 100), box);
}

TEST(PerturbBbox, CornerRangeMatchesHalfWidth) {
  Rng rng(5);
  const BoundingBox box{100, 100, 200, 200};
  int lo = 1000, hi = -1;
  for (int t = 0; t < 10000; ++t) {
    const auto b = perturb_bbox(box, 10, rng, 400, 400);
    lo = std::min(lo, b.r1);
    hi = std::max(hi, b.r1);
  }
  EXPECT_EQ(lo, 95);
  EXPECT_EQ(hi, 105);
}

TEST(PerturbBbox, ClampedInsideImage) {
  Rng rng(6);
  const BoundingBox box{0, 0, 49, 79};
  for (int t = 0; t < 10000; ++t) {
    const auto b = perturb_bbox(box, 80, rng, 80, 50);
    ASSERT_GE(b.r1, 0);
    ASSERT_GE(b.c1, 0);
    ASSERT_LT(b.r2, 50);
    ASSERT_LT(b.c2, 80);
    ASSERT_LE(b.r1, b.r2);
    ASSERT_LE(b.c1, b.c2);
  }
}

TEST(SeedSquare, CenteringAndClipping) {
  const auto sq = seed_square({100, 100}, 50, 500, 500);
  EXPECT_EQ(sq.size(), 2500u);
  EXPECT_EQ(sq.front(), (Pixel{75, 75}));
  EXPECT_EQ(sq.back(), (Pixel{124, 124}));
  EXPECT_EQ(seed_square({0, 0}, 50, 500, 500).size(), 625u);
  // Odd side is symmetric.
  const auto odd = seed_square({10, 10}, 5, 50, 50);
  EXPECT_EQ(odd.front(), (Pixel{8, 8}));
  EXPECT_EQ(odd.back(), (Pixel{12, 12}));
}

TEST(SeedSquares, UnionBoundAndClampWarning) {
  Rng rng(8);
  const auto region = block(10, 10, 40, 40);
  const auto set = seed_squares(region, 7, 9, rng, 100, 100);
  EXPECT_LE(set.size(), 7u * 81u);
  EXPECT_GE(set.size(), 81u);
  std::vector<std::string> warnings;
  const auto tiny = seed_squares(block(0, 0, 0, 1), 5, 3, rng, 100, 100,
                                 [&](std::string_view m) { warnings.emplace_back(m); });
  EXPECT_EQ(warnings.size(), 1u);
  EXPECT_FALSE(tiny.empty());
}

TEST(ParseRegime, RoundTripsDescriptors) {
  for (const char* text : {"gt:50", "bb:25", "seeds:15:50", "bbpert:10:100", "manual"}) {
    EXPECT_EQ(describe(parse_regime(text)), text);
  }
  EXPECT_EQ(describe(parse_regime("gt")), "gt:100");
  EXPECT_THROW(parse_regime("gt:abc"), Error);
  EXPECT_THROW(parse_regime("nope:1"), Error);
  EXPECT_THROW(parse_regime("gt:0"), Error);
  EXPECT_THROW(parse_regime("seeds:0:50"), Error);
  EXPECT_THROW(parse_regime("bbpert:-1"), Error);
}

TEST(TrainingSets, FullGroundTruthIsExact) {
  const auto a = three_regions();
  const auto sets = training_sets(a, parse_regime("gt:100", 1));
  ASSERT_EQ(sets.size(), 3u);
  for (int i = 1; i <= 3; ++i) {
    EXPECT_EQ(sets[i - 1].label(), i);
    auto expected = a.region_pixels(i);
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(sets[i - 1].pixels(), expected);
  }
}

TEST(TrainingSets, GtFractionStaysInsideRegion) {
  const auto a = three_regions();
  const auto sets = training_sets(a, parse_regime("gt:30", 4));
  for (const auto& s : sets)
    for (const auto& p : s.pixels()) EXPECT_EQ(a.label_field()(p.row, p.col), s.label());
}

TEST(TrainingSets, BoxesMixOtherRegions) {
  const auto a = three_regions();
  const auto sets = training_sets(a, parse_regime("bb:100", 2));
  int foreign = 0;
  for (const auto& p : sets[1].pixels()) foreign += a.label_field()(p.row, p.col) != 2;
  EXPECT_EQ(foreign, 36);  // region 2's box encloses all of region 3
}

TEST(TrainingSets, DeterministicAndMonotoneInFraction) {
  const auto a = three_regions();
  for (const char* regime : {"gt:40", "bb:40", "seeds:3:5", "bbpert:10:60"}) {
    const auto x = training_sets(a, parse_regime(regime, 9));
    const auto y = training_sets(a, parse_regime(regime, 9));
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_EQ(x[k].pixels(), y[k].pixels()) << regime;
  }
  const auto s75 = training_sets(a, parse_regime("gt:75", 3));
  const auto s50 = training_sets(a, parse_regime("gt:50", 3));
  for (std::size_t k = 0; k < s75.size(); ++k) EXPECT_GE(s75[k].size(), s50[k].size());
}

TEST(TrainingSets, AllPixelsInsideImage) {
  const auto a = three_regions();
  for (const char* regime : {"seeds:5:50", "bbpert:15:100", "bb:10"}) {
    for (const auto& s : training_sets(a, parse_regime(regime, 5)))
      for (const auto& p : s.pixels()) {
        EXPECT_GE(p.row, 0);
        EXPECT_LT(p.row, 30);
        EXPECT_GE(p.col, 0);
        EXPECT_LT(p.col, 40);
      }
  }
}

TEST(TrainingSets, ManualPassthrough) {
  const auto a = three_regions();
  InputRegime r;
  r.kind = ManualInput{{PixelSet(1, {{0, 0}}, InputSource::Manual, 40, 30),
                        PixelSet(2, {{0, 39}}, InputSource::Manual, 40, 30)}};
  const auto sets = training_sets(a, r);
  ASSERT_EQ(sets.size(), 2u);
  EXPECT_EQ(sets[1].pixels().front(), (Pixel{0, 39}));
}
