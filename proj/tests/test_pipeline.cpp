#include <gtest/gtest.h>

#include <random>

#include "dglseg/metrics.hpp"
#include "dglseg/pipeline.hpp"
#include "oracles.hpp"

using namespace dglseg;

namespace {

// 64x64 gray image: left half draws intensity 0.25 (cell 0) w.p. 0.9 else 0.75
// (cell 1); right half the reverse.
struct TwoRegion {
  Image image;
  std::vector<int> gt;
};

TwoRegion two_region(std::uint64_t seed, int size = 64) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution major(0.9);
  TwoRegion s{Image(size, size, 1), std::vector<int>(static_cast<std::size_t>(size) * size)};
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const bool left = c < size / 2;
      const bool dark = left == major(rng);
      s.image.at(Pixel{r, c})[0] = dark ? 0.25 : 0.75;
      s.gt[static_cast<std::size_t>(r) * size + c] = left ? 1 : 2;
    }
  return s;
}

std::vector<PixelSet> full_gt_sets(const std::vector<int>& gt, int w, int h, int regions) {
  std::vector<std::vector<Pixel>> px(regions);
  for (std::size_t p = 0; p < gt.size(); ++p)
    px[gt[p] - 1].push_back({static_cast<int>(p) / w, static_cast<int>(p) % w});
  std::vector<PixelSet> sets;
  for (int i = 0; i < regions; ++i) sets.emplace_back(i + 1, px[i], InputSource::GtFraction, w, h);
  return sets;
}

SegmentConfig gray_config(int k) {
  SegmentConfig c;
  c.spec = QuantizationSpec::gray(2);
  c.slic.superpixels = k;
  return c;
}

}  // namespace

TEST(Segment, TwoRegionSyntheticAccuracy) {
  double sum = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = two_region(seed);
    const auto sets = full_gt_sets(s.gt, 64, 64, 2);
    const auto res = segment(s.image, sets, gray_config(64));
    sum += oracle::plain_accuracy(res.pixel_labels, s.gt);
  }
  EXPECT_GE(sum / 10, 0.95);
}

TEST(Segment, IdenticalTrainingSetsLabelEverythingOne) {
  const auto s = two_region(3);
  std::vector<Pixel> same{{0, 0}, {0, 40}, {5, 5}, {9, 50}};
  const std::vector<PixelSet> sets{PixelSet(1, same, InputSource::Manual, 64, 64),
                                   PixelSet(2, same, InputSource::Manual, 64, 64),
                                   PixelSet(3, same, InputSource::Manual, 64, 64)};
  const auto res = segment(s.image, sets, gray_config(16));
  for (int l : res.superpixel_labels) EXPECT_EQ(l, 1);
}

TEST(Segment, DisjointPointMassesFollowTheData) {
  // Region 2's distribution is a point mass on the bright cell; every pixel is bright.
  Image img(16, 16, 1, std::vector<double>(256, 0.9));
  Image train = img;
  train.at(Pixel{0, 0})[0] = 0.1;
  const std::vector<PixelSet> sets{PixelSet(1, {{0, 0}}, InputSource::Manual, 16, 16),
                                   PixelSet(2, {{5, 5}, {6, 6}}, InputSource::Manual, 16, 16)};
  auto cfg = gray_config(4);
  const auto partition = compute_superpixels(img, cfg);
  const auto res = segment(train, partition, sets, cfg);
  for (std::size_t k = 0; k < res.superpixel_labels.size(); ++k) {
    std::vector<std::uint32_t> sample;
    for (auto p : partition.members(static_cast<int>(k))) sample.push_back(train.at(p)[0] > 0.5 ? 1u : 0u);
    EXPECT_EQ(res.superpixel_labels[k], oracle::direct_decision({{1, 0}, {0, 1}}, sample));
  }
  EXPECT_EQ(res.superpixel_labels.back(), 2);
}

TEST(Segment, LabelFieldDerivesFromSuperpixels) {
  const auto s = two_region(4);
  const auto sets = full_gt_sets(s.gt, 64, 64, 2);
  auto res = segment(s.image, sets, gray_config(32));
  auto check = [&] {
    for (std::size_t p = 0; p < res.pixel_labels.size(); ++p)
      ASSERT_EQ(res.pixel_labels[p], res.superpixel_labels[res.partition.id_at(p)]);
    for (int l : res.superpixel_labels) {
      ASSERT_GE(l, 1);
      ASSERT_LE(l, 2);
    }
  };
  check();
  relabel_superpixel(res, 0, 2);
  relabel_superpixel(res, 3, 1);
  relabel_superpixel(res, 0, 1);
  check();
  EXPECT_EQ(res.superpixel_labels[0], 1);  // last write wins
}

TEST(Segment, IdempotentAndOrderIndependent) {
  const auto s = two_region(5);
  const auto sets = full_gt_sets(s.gt, 64, 64, 2);
  auto cfg = gray_config(48);
  const auto a = segment(s.image, sets, cfg);
  const auto b = segment(s.image, sets, cfg);
  EXPECT_EQ(a.superpixel_labels, b.superpixel_labels);
  cfg.threads = 4;
  EXPECT_EQ(segment(s.image, sets, cfg).superpixel_labels, a.superpixel_labels);
  const std::vector<PixelSet> reversed{sets[1], sets[0]};
  EXPECT_EQ(segment(s.image, reversed, cfg).superpixel_labels, a.superpixel_labels);
}

TEST(Segment, InputErrors) {
  const auto s = two_region(6, 16);
  const std::vector<PixelSet> one{PixelSet(1, {{0, 0}}, InputSource::Manual, 16, 16)};
  EXPECT_THROW(segment(s.image, one, gray_config(4)), Error);
  const std::vector<PixelSet> gap{PixelSet(1, {{0, 0}}, InputSource::Manual, 16, 16),
                                  PixelSet(3, {{1, 1}}, InputSource::Manual, 16, 16)};
  EXPECT_THROW(segment(s.image, gap, gray_config(4)), Error);
  auto cfg = gray_config(4);
  cfg.memory_budget_bytes = 16;
  const auto two = full_gt_sets(s.gt, 16, 16, 2);
  try {
    segment(s.image, two, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Configuration);
  }
}

TEST(Relabel, SameLabelOnlyChargesClicks) {
  const auto s = two_region(7);
  const auto sets = full_gt_sets(s.gt, 64, 64, 2);
  const auto res = segment(s.image, sets, gray_config(32));
  const auto again = relabeled(res, 2, res.superpixel_labels[2]);
  EXPECT_EQ(again.pixel_labels, res.pixel_labels);
  EXPECT_EQ(again.clicks, res.clicks + 2);
  EXPECT_TRUE(again.overridden[2]);
  EXPECT_THROW(relabeled(res, -1, 1), Error);
  EXPECT_THROW(relabeled(res, res.partition.count(), 1), Error);
  EXPECT_THROW(relabeled(res, 0, 3), Error);
}

TEST(Relabel, FixingAMislabelledSuperpixelRaisesAccuracy) {
  const auto s = two_region(8);
  const auto sets = full_gt_sets(s.gt, 64, 64, 2);
  auto res = segment(s.image, sets, gray_config(64));
  const LabelField gt{64, 64, s.gt};
  // Force an error, then correct it.
  const int k = 0;
  relabel_superpixel(res, k, s.gt[res.partition.members(k).front()] == 1 ? 2 : 1);
  const double before = pixel_accuracy(res.label_field(), gt);
  relabel_superpixel(res, k, s.gt[res.partition.members(k).front()]);
  EXPECT_GT(pixel_accuracy(res.label_field(), gt), before);
}
