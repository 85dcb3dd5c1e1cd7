#include <gtest/gtest.h>

#include <algorithm>
#include <iostream>
#include <numeric>
#include <set>

#include "relcomp/dict_learning.hpp"
#include "relcomp/random.hpp"

using namespace relcomp;

namespace {

// Largest number of learned/truth pairs at |cos| >= thr over all injective
// assignments (learned_count <= truth_count).
Index brute_force_matches(const Matrix& learned, const Matrix& truth, double thr) {
  const Matrix c = (learned.transpose() * truth).cwiseAbs();
  std::vector<Index> perm(static_cast<size_t>(truth.cols()));
  std::iota(perm.begin(), perm.end(), Index{0});
  Index best = 0;
  do {
    Index k = 0;
    for (Index l = 0; l < learned.cols(); ++l) k += c(l, perm[l]) >= thr;
    best = std::max(best, k);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Matrix unit_columns(Matrix m) {
  m.colwise().normalize();
  return m;
}

}  // namespace

TEST(Omp, StandardBasisExact) {
  const Matrix d = Matrix::Identity(4, 4);
  Vector x = Vector::Zero(4);
  x[0] = 3;
  x[1] = 0.5;
  const auto r = omp_sparse_code(d, x, {2, 0.0});
  EXPECT_EQ(r.code.support_size(), 2);
  EXPECT_DOUBLE_EQ(r.code[0], 3.0);
  EXPECT_DOUBLE_EQ(r.code[1], 0.5);
  EXPECT_EQ(omp_sparse_code(d, Vector::Zero(4), {2, 0.0}).code.support_size(), 0);
}

TEST(Omp, TieBreaksToLowestIndex) {
  const Matrix d = Matrix::Identity(3, 3);
  const auto r = omp_sparse_code(d, Vector::Ones(3), {1, 0.0});
  EXPECT_EQ(r.code.entries().begin()->first, 0);
}

TEST(Omp, ResidualNonIncreasing) {
  const auto dict = make_dictionary(64, 128, DictionaryKind::gaussian_normalized, 1);
  Rng rng(2);
  for (int t = 0; t < 50; ++t) {
    const auto r = omp_sparse_code(dict.atoms(), rng.normal_vector(64), {20, 0.0});
    for (size_t i = 1; i < r.residual_norms.size(); ++i) ASSERT_LE(r.residual_norms[i], r.residual_norms[i - 1] + 1e-12);
  }
}

TEST(Omp, ExactSupportRecovery) {
  const auto dict = make_dictionary(128, 256, DictionaryKind::gaussian_normalized, 3);
  Rng rng(4);
  int exact = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto pick = rng.sample_distinct(256, 3);
    SparseCode code(256);
    for (Index i : pick) code.set(i, rng.uniform(0.5, 1.5) * (rng.bernoulli(0.5) ? 1 : -1));
    const auto r = omp_sparse_code(dict.atoms(), encode(dict, code), {3, 0.0});
    bool same = r.code.support_size() == 3;
    for (Index i : pick) same = same && r.code.entries().count(i);
    exact += same;
  }
  EXPECT_GE(exact, 990);
}

TEST(Ksvd, RecoversOneSparseOrthonormalDictionary) {
  const auto truth = make_dictionary(16, 16, DictionaryKind::orthogonal_subset, 5);
  Rng rng(6);
  Matrix x(16, 800);
  for (Index s = 0; s < 800; ++s) x.col(s) = truth.atom(rng.below(16)) * rng.uniform(0.5, 2.0) * (rng.bernoulli(0.5) ? 1 : -1);
  KsvdOptions o;
  o.atom_count = 16;
  o.sparsity = 1;
  o.iterations = 20;
  o.seed = 7;
  const auto learned = fit_dictionary_ksvd(x, o);
  EXPECT_DOUBLE_EQ(match_atoms(learned, truth, 0.99).recovery_rate, 1.0);
}

TEST(Ksvd, LossNonIncreasingAndUnitAtoms) {
  const auto truth = make_dictionary(32, 48, DictionaryKind::gaussian_normalized, 8);
  Rng rng(9);
  Matrix x(32, 1000);
  for (Index s = 0; s < 1000; ++s) x.col(s) = encode(truth, sample_code(48, 0.06, Amplitude::constant(), rng));
  KsvdOptions o;
  o.atom_count = 48;
  o.sparsity = 4;
  o.iterations = 15;
  o.seed = 10;
  const auto d = fit_dictionary_ksvd(x, o);
  ASSERT_EQ(d.loss_history.size(), 15u);
  for (size_t i = 1; i < d.loss_history.size(); ++i) EXPECT_LE(d.loss_history[i], d.loss_history[i - 1] + 1e-9);
  for (Index j = 0; j < d.count(); ++j) {
    EXPECT_NEAR(d.atoms.col(j).norm(), 1.0, 1e-6);
    Index first = 0;
    while (d.atoms(first, j) == 0.0) ++first;
    EXPECT_GT(d.atoms(first, j), 0.0);
  }
}

TEST(Ksvd, ZeroIterationsAndDeterminism) {
  Rng rng(11);
  const Matrix x = rng.normal_matrix(8, 40);
  KsvdOptions o;
  o.atom_count = 6;
  o.iterations = 0;
  o.seed = 1;
  const auto a = fit_dictionary_ksvd(x, o);
  EXPECT_TRUE(a.loss_history.empty());
  // Each seeded atom is a normalized sample, up to the sign convention.
  for (Index j = 0; j < 6; ++j) {
    double best = 0;
    for (Index s = 0; s < 40; ++s) best = std::max(best, std::abs(a.atoms.col(j).dot(x.col(s).normalized())));
    EXPECT_NEAR(best, 1.0, 1e-12);
  }
  o.iterations = 5;
  const auto b1 = fit_dictionary_ksvd(x, o);
  o.threads = 3;
  const auto b3 = fit_dictionary_ksvd(x, o);
  EXPECT_EQ(b1.atoms, b3.atoms);
  EXPECT_THROW(fit_dictionary_ksvd(Matrix::Zero(4, 10), o), Error);
  o.atom_count = 50;
  EXPECT_THROW(fit_dictionary_ksvd(x, o), Error);
}

TEST(Sae, GradientCheckPasses) {
  for (Index width : {1, 4, 16})
    for (double l1 : {0.0, 1e-3, 0.1})
      for (std::uint64_t seed : {1u, 2u, 3u}) EXPECT_LE(sae_gradient_check(width, l1, seed), 1e-5) << width << " " << l1;
}

TEST(Sae, PerturbedGradientIsCaught) {
  EXPECT_GT(sae_gradient_check(8, 1e-3, 1, 0.05), 1e-2);
}

TEST(Sae, IdentityLikeDataReconstructs) {
  const Index dim = 8;
  Rng rng(12);
  Matrix x = Matrix::Zero(dim, 2048);
  for (Index s = 0; s < x.cols(); ++s) x(rng.below(dim), s) = 1.0;
  SaeOptions o;
  o.width = dim;
  o.l1_weight = 0.0;
  o.seed = 13;
  const auto d = fit_dictionary_sae(x, o);
  EXPECT_LE(d.final_loss, 1e-4);
  for (size_t i = 1; i < d.loss_history.size(); ++i) EXPECT_LE(d.loss_history[i], d.loss_history[i - 1] * (1 + 1e-9) + 1e-12);
}

TEST(Sae, ZeroDataGivesZeroLoss) {
  SaeOptions o;
  o.width = 4;
  o.epochs = 3;
  const auto d = fit_dictionary_sae(Matrix::Zero(6, 64), o);
  EXPECT_EQ(d.final_loss, 0.0);
}

TEST(Match, IdentityAndOrthogonalCases) {
  const auto truth = make_dictionary(16, 8, DictionaryKind::orthogonal_subset, 14);
  Matrix learned(16, 8);
  const auto perm = Rng(15).permutation(8);
  for (Index j = 0; j < 8; ++j) learned.col(j) = (j % 2 ? -1.0 : 1.0) * truth.atom(perm[j]);
  const auto m = match_atoms(learned, truth.atoms());
  EXPECT_DOUBLE_EQ(m.recovery_rate, 1.0);
  for (const auto& [l, e] : m.assignment) EXPECT_NEAR(e.cosine, 1.0, 1e-12);
  const Matrix ortho = make_dictionary(16, 16, DictionaryKind::orthogonal_subset, 14).atoms().rightCols(8);
  EXPECT_EQ(match_atoms(ortho, truth.atoms()).recovery_rate, 0.0);
  EXPECT_THROW(match_atoms(Matrix::Identity(3, 3), truth.atoms()), Error);
}

TEST(Match, GreedyAgainstExhaustiveAssignment) {
  // Learned sets as a learner would produce them: noisy copies of distinct
  // truth atoms mixed with spurious directions.
  int agree = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    Rng rng(derive_seed(s, "match"));
    const Index dim = 8, truth_count = 8, learned_count = 6 + static_cast<Index>(s % 3);
    const Matrix truth = unit_columns(rng.normal_matrix(dim, truth_count));
    const auto source = rng.permutation(truth_count);
    Matrix learned(dim, learned_count);
    for (Index j = 0; j < learned_count; ++j) {
      if (rng.bernoulli(0.75)) {
        learned.col(j) = truth.col(source[j]) + rng.uniform(0.0, 0.6) * rng.unit_vector(dim);
      } else {
        learned.col(j) = rng.unit_vector(dim);
      }
    }
    learned = unit_columns(learned);
    const auto greedy = match_atoms(learned, truth, 0.9);
    const Index opt = brute_force_matches(learned, truth, 0.9);
    ASSERT_LE(static_cast<Index>(greedy.assignment.size()), opt);
    agree += static_cast<Index>(greedy.assignment.size()) == opt;
    std::set<Index> used;
    for (const auto& [li, e] : greedy.assignment) {
      EXPECT_TRUE(used.insert(e.truth).second);
      EXPECT_GE(e.cosine, 0.9);
      EXPECT_LE(e.cosine, 1.0);
    }
  }
  std::cout << "greedy matched the exhaustive optimum on " << agree << "/200 instances\n";
  EXPECT_GE(agree, 190);
}

TEST(Match, InvariantUnderPermutationAndSign) {
  Rng rng(16);
  const Matrix truth = unit_columns(rng.normal_matrix(10, 12));
  const Matrix learned = unit_columns(truth + 0.2 * rng.normal_matrix(10, 12));
  Matrix shuffled(10, 12);
  const auto p = rng.permutation(12);
  for (Index j = 0; j < 12; ++j) shuffled.col(j) = (rng.bernoulli(0.5) ? -1.0 : 1.0) * learned.col(p[j]);
  EXPECT_DOUBLE_EQ(match_atoms(learned, truth).recovery_rate, match_atoms(shuffled, truth).recovery_rate);
}
