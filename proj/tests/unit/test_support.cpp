#include <gtest/gtest.h>

#include <atomic>
#include <set>

#include "relcomp/parallel.hpp"
#include "relcomp/random.hpp"
#include "relcomp/stats.hpp"
#include "relcomp/types.hpp"

using namespace relcomp;

TEST(Random, DeriveSeedSeparatesLabelsAndIndices) {
  EXPECT_EQ(derive_seed(1, "a", 0), derive_seed(1, "a", 0));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "b", 0));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(2, "a", 0));
}

TEST(Random, StreamsAreReproducible) {
  Rng a = Rng::stream(7, "x"), b = Rng::stream(7, "x");
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Random, UniformAndNormalMoments) {
  Rng rng(3);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Random, PermutationAndDistinctSamples) {
  Rng rng(5);
  auto p = rng.permutation(50);
  std::set<Index> seen(p.begin(), p.end());
  EXPECT_EQ(seen.size(), 50u);
  auto s = rng.sample_distinct(100, 30);
  std::set<Index> ss(s.begin(), s.end());
  EXPECT_EQ(ss.size(), 30u);
  for (Index v : s) EXPECT_LT(v, 100);
  EXPECT_THROW(rng.sample_distinct(3, 4), Error);
  EXPECT_THROW(rng.below(0), Error);
}

TEST(Stats, RanksWithTies) {
  const std::vector<double> xs{3.0, 1.0, 1.0, 2.0};
  const auto r = average_ranks(xs);
  EXPECT_DOUBLE_EQ(r[0], 4.0);
  EXPECT_DOUBLE_EQ(r[1], 1.5);
  EXPECT_DOUBLE_EQ(r[2], 1.5);
  EXPECT_DOUBLE_EQ(r[3], 3.0);
  const auto rt = average_ranks(std::vector<double>{1.0, 1.01, 2.0}, 0.05);
  EXPECT_DOUBLE_EQ(rt[0], 1.5);
  EXPECT_DOUBLE_EQ(rt[1], 1.5);
}

TEST(Stats, SpearmanAndPearson) {
  const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 8, 16, 32}, z{5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman(x, y), 1.0, 1e-12);
  EXPECT_NEAR(spearman(x, z), -1.0, 1e-12);
  EXPECT_NEAR(pearson(x, z), -1.0, 1e-12);
  EXPECT_EQ(spearman(x, std::vector<double>(5, 1.0)), 0.0);
}

TEST(Stats, RocAucAgainstPairCount) {
  Rng rng(9);
  std::vector<double> s;
  std::vector<int> l;
  for (int i = 0; i < 200; ++i) {
    l.push_back(static_cast<int>(rng.below(2)));
    s.push_back(std::floor(rng.uniform() * 10) + l.back());
  }
  double wins = 0, total = 0;
  for (size_t i = 0; i < s.size(); ++i)
    for (size_t j = 0; j < s.size(); ++j)
      if (l[i] == 1 && l[j] == 0) {
        total += 1;
        wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  EXPECT_NEAR(roc_auc(s, l), wins / total, 1e-12);
  EXPECT_THROW(roc_auc(std::vector<double>{1, 2}, std::vector<int>{1, 1}), Error);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, 4, [&](Index i) { hits[static_cast<size_t>(i)]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsLowestIndexFailure) {
  try {
    parallel_for(100, 3, [](Index i) {
      if (i == 17 || i == 60) throw Error(ErrorCode::invalid_argument, std::to_string(i));
    });
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("17"), std::string::npos);
  }
}

TEST(Errors, MessagesCarryKebabCode) {
  const Error e(ErrorCode::rank_deficient_design, "x");
  EXPECT_EQ(std::string(e.what()), "rank-deficient-design: x");
  EXPECT_TRUE(is_numerical(ErrorCode::divergence));
  EXPECT_FALSE(is_numerical(ErrorCode::schema_violation));
}
