#include <gtest/gtest.h>

#include <iostream>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "relcomp/binding.hpp"
#include "relcomp/random.hpp"

using namespace relcomp;

namespace {

// Direct O(n²) circular convolution.
Vector convolve_direct(const Vector& x, const Vector& y) {
  const Index n = x.size();
  Vector r = Vector::Zero(n);
  for (Index k = 0; k < n; ++k)
    for (Index j = 0; j < n; ++j) r[k] += x[j] * y[(k - j + n) % n];
  return r;
}

Vector basis(Index n, Index i) {
  Vector v = Vector::Zero(n);
  v[i] = 1.0;
  return v;
}

}  // namespace

TEST(Binding, RandomOrthogonal) {
  EXPECT_NEAR(std::abs(make_random_orthogonal(1, 3).values(0, 0)), 1.0, 1e-15);
  const auto q = make_random_orthogonal(64, 3);
  EXPECT_LE((q.values.transpose() * q.values - Matrix::Identity(64, 64)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_NEAR(std::abs(Eigen::FullPivLU<Matrix>(q.values).determinant()), 1.0, 1e-6);
  Rng rng(1);
  const Vector x = rng.normal_vector(64);
  EXPECT_NEAR((q.values * x).norm(), x.norm(), 1e-10);
}

TEST(Binding, LowRankSingularValues) {
  const auto l = make_low_rank(32, 4, 5);
  const Vector s = Eigen::JacobiSVD<Matrix>(l.values).singularValues();
  for (Index i = 4; i < 32; ++i) EXPECT_LE(s[i], 1e-9);
  EXPECT_GT(s[3], 1e-6);
  const auto full = make_low_rank(16, 16, 6);
  EXPECT_GT(Eigen::JacobiSVD<Matrix>(full.values).singularValues()[15], 1e-9);
  const auto r1 = make_low_rank(8, 1, 7);
  Rng rng(2);
  const Vector a = r1.values * rng.normal_vector(8), b = r1.values * rng.normal_vector(8);
  EXPECT_NEAR(std::abs(a.normalized().dot(b.normalized())), 1.0, 1e-12);
  const auto flat = make_flat_low_rank(32, 8, 8);
  const Vector fs = Eigen::JacobiSVD<Matrix>(flat.values).singularValues();
  for (Index i = 0; i < 8; ++i) EXPECT_NEAR(fs[i], 1.0, 1e-10);
  for (Index i = 8; i < 32; ++i) EXPECT_LE(fs[i], 1e-10);
}

TEST(Binding, AdditivePairOrder) {
  AdditivePair ident{Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  const Vector x = basis(2, 0), y = basis(2, 1);
  EXPECT_EQ(bind_pair_additive(ident, x, y), x + y);
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  AdditivePair pair{Matrix::Identity(2, 2), rot};
  EXPECT_LE(bind_pair_additive(pair, x, y).norm(), 1e-15);
  EXPECT_EQ(bind_pair_additive(pair, y, x), Vector((Vector(2) << 0, 2).finished()));

  Rng rng(3);
  AdditivePair r{make_random_orthogonal(16, 1).values, make_random_orthogonal(16, 2).values};
  for (int t = 0; t < 10; ++t) {
    const Vector a = rng.normal_vector(16), b = rng.normal_vector(16), c = rng.normal_vector(16);
    EXPECT_GT((bind_pair_additive(r, a, b) - bind_pair_additive(r, b, a)).norm(), 1e-9);
    EXPECT_LE((bind_pair_additive(r, a + c, b) - bind_pair_additive(r, a, b) - bind_pair_additive(r, c, Vector::Zero(16))).norm(), 1e-10);
  }
}

TEST(Binding, SlotsAndReadback) {
  Rng rng(4);
  const Vector x = rng.normal_vector(8), y = rng.normal_vector(8);
  EXPECT_EQ(bind_slots(x, {}), x);
  EXPECT_LE((bind_slots(x, {{Matrix::Identity(8, 8), y}}) - (x + y)).norm(), 1e-15);

  const auto dict = make_dictionary(32, 32, DictionaryKind::orthogonal_subset, 9);
  const Matrix a = make_random_orthogonal(32, 10).values;
  const auto code = sample_code(32, 0.3, Amplitude::uniform_between(0.5, 1.5), rng);
  const Vector back = unbind_readback(a * encode(dict, code), a, dict);
  for (Index i = 0; i < 32; ++i) EXPECT_NEAR(back[i], code[i], 1e-10);
  const Vector xr = encode(dict, code);
  const Vector plain = unbind_readback(xr, Matrix::Identity(32, 32), dict);
  const auto rb = readback(dict, xr);
  for (Index i = 0; i < 32; ++i) EXPECT_NEAR(plain[i], rb[i], 1e-15);
}

TEST(Binding, AdditiveCrossTermsWithinCombinedCoherence) {
  const Index n = 256;
  const auto dict = make_dictionary(n, n, DictionaryKind::orthogonal_subset, 12);
  const Matrix a = make_random_orthogonal(n, 13).values, b = make_random_orthogonal(n, 14).values;
  Matrix both(n, 2 * n);
  both << a * dict.atoms(), b * dict.atoms();
  const double mu = mutual_coherence(both);
  Rng rng(15);
  const auto cx = sample_code(n, 0.02, Amplitude::constant(), rng);
  const auto cy = sample_code(n, 0.02, Amplitude::constant(), rng);
  const Vector r = bind_pair_additive({a, b}, encode(dict, cx), encode(dict, cy));
  const Vector est = unbind_readback(r, a, dict);
  for (Index i = 0; i < n; ++i) EXPECT_LE(std::abs(est[i] - cx[i]), mu * cy.l1_norm() + 1e-10);
}

TEST(Binding, TreeBinding) {
  TreeSpec leaf({TreeSpec::kNoParent});
  leaf.set_payload(0, basis(2, 0));
  EXPECT_EQ(bind_tree({Matrix::Identity(2, 2), Matrix::Identity(2, 2)}, leaf).at(0), basis(2, 0));

  TreeSpec t({TreeSpec::kNoParent, 0, 0});
  t.set_payload(1, basis(2, 0));
  t.set_payload(2, basis(2, 1));
  const auto out = bind_tree({Matrix::Identity(2, 2), 2.0 * Matrix::Identity(2, 2)}, t);
  EXPECT_EQ(out.at(0), Vector((Vector(2) << 1, 2).finished()));

  TreeSpec full = TreeSpec::complete_binary(3);
  const Index n = 32;
  Index next = 0;
  for (Index i = 0; i < full.node_count(); ++i)
    if (full.is_leaf(i)) full.set_payload(i, basis(n, next++));
  const auto reps = bind_tree({make_random_orthogonal(n, 1).values, make_random_orthogonal(n, 2).values}, full);
  ASSERT_EQ(static_cast<Index>(reps.size()), full.node_count());
  double min_dist = 1e9;
  for (const auto& [i, vi] : reps)
    for (const auto& [j, vj] : reps)
      if (i < j) min_dist = std::min(min_dist, (vi - vj).norm());
  EXPECT_GT(min_dist, 1e-6);
}

TEST(Binding, OuterProduct) {
  const Vector x = basis(2, 0), y = 2.0 * basis(2, 1);
  Matrix expect(2, 2);
  expect << 0, 2, 0, 0;
  EXPECT_EQ(bind_outer(x, y), expect);
  Rng rng(5);
  const Vector a = rng.normal_vector(6), b = rng.normal_vector(6), c = rng.normal_vector(6);
  EXPECT_GT((bind_outer(a, b) - bind_outer(b, a)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_LE((bind_outer(a + c, b) - bind_outer(a, b) - bind_outer(c, b)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((unbind_outer(bind_outer(a, b), b) - a).norm() / a.norm(), 1e-10);
  EXPECT_THROW(unbind_outer(bind_outer(a, b), Vector::Zero(6)), Error);

  const Matrix q = make_random_orthogonal(6, 3).values;
  const Vector y1 = q.col(0), y2 = q.col(1);
  const Matrix r = bind_outer(a, y1) + bind_outer(c, y2);
  EXPECT_LE((unbind_outer(r, y1) - a).norm(), 1e-12);
}

TEST(Binding, HrrMatchesDirectConvolution) {
  Rng rng(6);
  for (Index n : {1, 7, 64, 100}) {
    const Vector x = rng.normal_vector(n), y = rng.normal_vector(n);
    EXPECT_LE((bind_hrr(x, y) - convolve_direct(x, y)).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((bind_hrr(x, y) - bind_hrr(y, x)).cwiseAbs().maxCoeff(), 1e-12);
  }
  const Vector y = rng.normal_vector(8);
  EXPECT_LE((bind_hrr(basis(8, 0), y) - y).cwiseAbs().maxCoeff(), 1e-12);
  const Vector shifted = bind_hrr(basis(8, 1), y);
  for (Index i = 0; i < 8; ++i) EXPECT_NEAR(shifted[(i + 1) % 8], y[i], 1e-12);
}

TEST(Binding, HrrUnbinding) {
  Rng rng(7);
  const Vector x = rng.normal_vector(64), y = rng.normal_vector(64);
  const Vector r = bind_hrr(x, y);
  EXPECT_LE((unbind_hrr(r, y, HrrUnbindMode::exact_spectral) - x).norm() / x.norm(), 1e-9);
  const Vector d0 = basis(64, 0);
  EXPECT_LE((unbind_hrr(r, d0, HrrUnbindMode::exact_spectral) - r).norm(), 1e-12);
  EXPECT_LE((unbind_hrr(r, d0, HrrUnbindMode::correlation) - r).norm(), 1e-12);
  EXPECT_THROW(unbind_hrr(r, Vector::Ones(64), HrrUnbindMode::exact_spectral), Error);

  // Correlation unbinding: the largest per-coordinate error relative to ‖x‖
  // shrinks with dimension (the relative L2 error stays near 1).
  std::vector<double> errs;
  for (Index n : {64, 256, 1024}) {
    double e = 0;
    for (int t = 0; t < 20; ++t) {
      const Vector a = rng.normal_vector(n), b = rng.unit_vector(n);
      const Vector est = unbind_hrr(bind_hrr(a, b), b, HrrUnbindMode::correlation);
      e += (est - a).cwiseAbs().maxCoeff() / a.norm();
    }
    errs.push_back(e / 20);
    std::cout << "hrr correlation unbind n=" << n << " max-coordinate relative error " << errs.back() << "\n";
  }
  EXPECT_GT(errs[0], errs[1]);
  EXPECT_GT(errs[1], errs[2]);
}

TEST(Binding, BinaryExamples) {
  const auto p = cyclic_shift_permutation(4);
  const auto x = BinaryVector::from_string("1010"), y = BinaryVector::from_string("0011");
  EXPECT_EQ(apply_permutation(p, y).to_string(), "1001");
  const auto r = bind_binary(x, y, p);
  EXPECT_EQ(r.to_string(), "0011");
  EXPECT_EQ(unbind_binary(r, y, BinarySide::second, p), x);
  EXPECT_EQ(unbind_binary(r, x, BinarySide::first, p), y);
  EXPECT_EQ(bind_binary(x, BinaryVector::zeros(4), p), x);
  EXPECT_EQ(unbind_binary(x, BinaryVector::zeros(4), BinarySide::second, p), x);
  EXPECT_THROW(BinaryVector::from_string("10a"), Error);
}

TEST(Binding, BinarySelfBindingIsNonzero) {
  const auto p = cyclic_shift_permutation(64);
  int nonzero = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto v = BinaryVector::random(64, s);
    nonzero += !bind_binary(v, v, p).is_zero();
  }
  EXPECT_EQ(nonzero, 20);
}

TEST(Binding, BinaryRoundTripRandomized) {
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto x = BinaryVector::random(256, derive_seed(s, "x"));
    const auto y = BinaryVector::random(256, derive_seed(s, "y"));
    const auto p = random_permutation(256, derive_seed(s, "p"));
    const auto r = bind_binary(x, y, p);
    ASSERT_EQ(unbind_binary(r, y, BinarySide::second, p), x);
    ASSERT_EQ(unbind_binary(r, x, BinarySide::first, p), y);
  }
}

TEST(Binding, PermutationValidation) {
  EXPECT_THROW(check_permutation({0, 0, 1}, 3), Error);
  EXPECT_THROW(check_permutation({0, 1}, 3), Error);
  const auto p = random_permutation(16, 3);
  const auto v = BinaryVector::random(16, 4);
  EXPECT_EQ(apply_inverse_permutation(p, apply_permutation(p, v)), v);
}

TEST(Binding, SpecValidation) {
  BindingSpec ok{AdditivePair{Matrix::Identity(3, 3), Matrix::Identity(3, 3)}, 3};
  EXPECT_NO_THROW(ok.validate());
  BindingSpec bad{AdditivePair{Matrix::Identity(3, 3), Matrix::Identity(2, 2)}, 3};
  EXPECT_THROW(bad.validate(), Error);
}
