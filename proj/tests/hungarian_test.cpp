#include <gtest/gtest.h>

#include <random>

#include "test_support.hpp"

using namespace statetrack;

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

TEST(Hungarian, IdentityFavoring) {
  const auto a = hungarian({{0, 1}, {1, 0}});
  EXPECT_EQ(a.pairs, (Pairs{{0, 0}, {1, 1}}));
  EXPECT_EQ(a.total, 0.0);
}

TEST(Hungarian, AllOnesPicksLexicographicallySmallest) {
  const auto a = hungarian({{1, 1, 1}, {1, 1, 1}});
  EXPECT_EQ(a.pairs, (Pairs{{0, 0}, {1, 1}}));
  EXPECT_EQ(a.total, 2.0);
  const auto t = hungarian({{1, 1}, {1, 1}, {1, 1}});
  EXPECT_EQ(t.pairs, (Pairs{{0, 0}, {1, 1}}));
}

TEST(Hungarian, AntiDiagonal) {
  const auto a = hungarian({{1, 0}, {0, 1}});
  EXPECT_EQ(a.pairs, (Pairs{{0, 1}, {1, 0}}));
}

TEST(Hungarian, EmptyMatrix) {
  EXPECT_TRUE(hungarian(CostMatrix(0, 0)).pairs.empty());
  EXPECT_TRUE(hungarian(CostMatrix(3, 0)).pairs.empty());
  EXPECT_TRUE(hungarian(CostMatrix(0, 2)).pairs.empty());
}

TEST(Hungarian, RaggedRowsRejected) {
  EXPECT_THROW(hungarian({{0, 1}, {1}}), ValidationError);
}

TEST(Hungarian, TallMatrixMatchesEveryColumn) {
  const auto a = hungarian({{5, 9}, {1, 7}, {8, 2}});
  EXPECT_EQ(a.pairs, (Pairs{{1, 0}, {2, 1}}));
  EXPECT_EQ(a.total, 3.0);
}

TEST(Hungarian, PermutationOracle3x3) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    CostMatrix c(3, 3);
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) c(i, j) = static_cast<double>(rng() % 2);
    }
    const auto a = hungarian(c);
    EXPECT_EQ(a.total, statetrack::testing::brute_force_assignment(c));
    EXPECT_EQ(a.pairs.size(), 3u);
  }
}

TEST(Hungarian, LexicographicAmongTies) {
  // Both {(0,1),(1,0)} and {(0,0),(1,1)} cost 1; the second is smaller.
  const auto a = hungarian({{0.5, 0}, {1, 0.5}});
  EXPECT_EQ(a.pairs, (Pairs{{0, 0}, {1, 1}}));
}
