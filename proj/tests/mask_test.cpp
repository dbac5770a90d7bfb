#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace statetrack;
using statetrack::testing::box_mask;
using statetrack::testing::random_mask;

namespace {

BinaryMask from_bits(FrameSize size, std::vector<std::uint8_t> bits) { return BinaryMask(size, std::move(bits)); }

}  // namespace

TEST(Rle, EncodesEmptyAndFull) {
  EXPECT_EQ(encode_rle(BinaryMask({2, 2})).runs, (std::vector<std::uint32_t>{4}));
  EXPECT_EQ(encode_rle(BinaryMask::full({2, 2})).runs, (std::vector<std::uint32_t>{0, 4}));
}

TEST(Rle, EncodesRowMajorPattern) {
  EXPECT_EQ(encode_rle(from_bits({3, 1}, {0, 1, 0})).runs, (std::vector<std::uint32_t>{1, 1, 1}));
  EXPECT_EQ(to_rle_text(from_bits({2, 2}, {0, 1, 1, 0})), "2,2:1,2,1");
}

TEST(Rle, Decodes) {
  EXPECT_EQ(decode_rle({{2, 2}, {4}}), BinaryMask({2, 2}));
  EXPECT_EQ(decode_rle({{2, 2}, {0, 4}}), BinaryMask::full({2, 2}));
  EXPECT_EQ(decode_rle({{4, 1}, {2, 2}}), from_bits({4, 1}, {0, 0, 1, 1}));
}

TEST(Rle, RejectsRunSumMismatch) {
  EXPECT_THROW(decode_rle({{2, 2}, {3}}), ValidationError);
  EXPECT_THROW(decode_rle({{2, 2}, {2, 3}}), ValidationError);
}

TEST(Rle, TextRoundTripAndMalformedText) {
  const auto m = from_bits({3, 2}, {1, 1, 0, 0, 1, 1});
  EXPECT_EQ(mask_from_rle_text(to_rle_text(m)), m);
  for (const char* bad : {"", "3,2", "3:1,2", "3,2:", "3,2:1,,5", "x,2:6", "3,2:1 5", "0,2:0", "3,2:-1,7"}) {
    EXPECT_THROW(mask_from_rle_text(bad), ValidationError) << bad;
  }
}

TEST(Rle, RandomRoundTrip) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const FrameSize size{1 + static_cast<int>(rng() % 17), 1 + static_cast<int>(rng() % 13)};
    const auto m = random_mask(rng, size, 0.05 + 0.9 * (static_cast<double>(rng() % 100) / 100.0));
    const auto rle = encode_rle(m);
    EXPECT_EQ(decode_rle(rle), m);
    for (std::size_t k = 1; k < rle.runs.size(); ++k) EXPECT_GT(rle.runs[k], 0u);
  }
}

TEST(Measures, Iou) {
  const FrameSize s{4, 4};
  const auto left = box_mask(s, 0, 0, 2, 4);
  EXPECT_DOUBLE_EQ(iou(left, left), 1.0);
  EXPECT_DOUBLE_EQ(iou(left, box_mask(s, 2, 0, 4, 4)), 0.0);
  EXPECT_DOUBLE_EQ(iou(left, BinaryMask::full(s)), 0.5);
  EXPECT_DOUBLE_EQ(iou(BinaryMask(s), BinaryMask(s)), 1.0);
  EXPECT_THROW(iou(left, BinaryMask({4, 3})), ValidationError);
}

TEST(Measures, Cover) {
  const FrameSize s{8, 8};
  const auto a = box_mask(s, 0, 0, 4, 2);  // area 8
  EXPECT_DOUBLE_EQ(cover(a, BinaryMask::full(s)), 1.0);
  EXPECT_DOUBLE_EQ(cover(a, box_mask(s, 0, 4, 8, 8)), 0.0);
  EXPECT_DOUBLE_EQ(cover(a, box_mask(s, 0, 0, 2, 1)), 0.25);
  EXPECT_THROW(cover(BinaryMask(s), a), ValidationError);
}

TEST(Measures, AreaFraction) {
  EXPECT_DOUBLE_EQ(area_fraction(BinaryMask::full({5, 3})), 1.0);
  EXPECT_DOUBLE_EQ(area_fraction(BinaryMask({5, 3})), 0.0);
  BinaryMask one({25, 25});
  one.set(3, 4);
  EXPECT_DOUBLE_EQ(area_fraction(one), 1.0 / 625.0);
}

TEST(Measures, SetAlgebra) {
  const FrameSize s{6, 6};
  const auto a = box_mask(s, 0, 0, 4, 4);
  const auto b = box_mask(s, 2, 2, 6, 6);
  EXPECT_EQ((a & b), box_mask(s, 2, 2, 4, 4));
  EXPECT_EQ((a | b).area(), 28u);
  EXPECT_EQ((a - b).area(), 12u);
  EXPECT_EQ(intersection_area(a, b), 4u);
  EXPECT_EQ(union_area(a, b), 28u);
}

TEST(Dilate, MatchesBruteForceSquare) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const FrameSize s{1 + static_cast<int>(rng() % 20), 1 + static_cast<int>(rng() % 20)};
    const auto m = random_mask(rng, s, 0.05);
    const int r = static_cast<int>(rng() % 5);
    BinaryMask expect(s);
    for (int y = 0; y < s.height; ++y) {
      for (int x = 0; x < s.width; ++x) {
        bool hit = false;
        for (int dy = -r; dy <= r && !hit; ++dy) {
          for (int dx = -r; dx <= r && !hit; ++dx) {
            const int xx = x + dx, yy = y + dy;
            hit = xx >= 0 && yy >= 0 && xx < s.width && yy < s.height && m.at(xx, yy);
          }
        }
        expect.set(x, y, hit);
      }
    }
    EXPECT_EQ(dilate(m, r), expect) << "trial " << trial;
  }
}

TEST(Hash, GoldenSingleTruePixel) {
  // sha256sum of the 7-byte string "1,1:0,1"
  EXPECT_EQ(mask_hash(BinaryMask::full({1, 1})).hex(),
            "6553ce9be3ddb613de6dfe64f3f1c88d30cb2c4802c086e8ba10ac8d5fa91719");
  EXPECT_EQ(to_rle_text(BinaryMask::full({1, 1})), "1,1:0,1");
}

TEST(Hash, EqualMasksEqualDigestsOnePixelDiffers) {
  const FrameSize s{9, 7};
  auto a = box_mask(s, 1, 1, 5, 5);
  BinaryMask b(s);
  for (int y = 1; y < 5; ++y) {
    for (int x = 1; x < 5; ++x) b.set(x, y);
  }
  EXPECT_EQ(mask_hash(a), mask_hash(b));
  b.set(8, 6);
  EXPECT_NE(mask_hash(a), mask_hash(b));
  EXPECT_EQ(mask_hash(a).hex().size(), 64u);
}

TEST(Hash, DependsOnFrameSize) {
  EXPECT_NE(mask_hash(BinaryMask({4, 1})), mask_hash(BinaryMask({2, 2})));
}
