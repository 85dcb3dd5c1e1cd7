#include <gtest/gtest.h>

#include <cmath>

#include "relcomp/feature_space.hpp"
#include "relcomp/random.hpp"
#include "relcomp/steering_lab.hpp"
#include "relcomp/studies.hpp"

using namespace relcomp;

namespace {

ScenarioParams params(double c1, double c2, LabelRule rule = LabelRule::threshold) {
  ScenarioParams p;
  p.n = 32;
  p.c1 = c1;
  p.c2 = c2;
  p.rule = rule;
  return p;
}

}  // namespace

TEST(Scenario, RotationInTwoDimensions) {
  ScenarioParams p;
  p.n = 2;
  Matrix rot(2, 2);
  rot << 0, -1, 1, 0;
  const auto scn = make_scenario(p, Vector::Unit(2, 0), rot);
  EXPECT_EQ(scn.v_av, 0.0);
  EXPECT_THROW(make_scenario(p, Vector::Ones(2), rot), Error);
}

TEST(Scenario, RedrawKeepsVFarFromAv) {
  ScenarioParams p;
  p.n = 128;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto scn = make_scenario(p, s);
    ASSERT_LE(std::abs(scn.v_av), 0.1);
    ASSERT_NEAR(scn.v.norm(), 1.0, 1e-9);
    ASSERT_LE((scn.a.transpose() * scn.a - Matrix::Identity(128, 128)).norm(), 1e-9);
  }
}

TEST(Labeled, NoFlagsMeansNoLabelsAndNoSpanComponent) {
  auto p = params(1, 1);
  p.q1 = p.q2 = 0;
  const auto scn = make_scenario(p, 1);
  const auto d = generate_labeled(scn, 200, 2);
  for (Index s = 0; s < 200; ++s) {
    EXPECT_EQ(d.labels[s], 0);
    EXPECT_LE(std::abs(d.t.col(s).dot(scn.v)), 1e-12);
    EXPECT_LE(std::abs(d.t.col(s).dot(scn.av)), 1e-12);
  }
}

TEST(Labeled, CurrentFlagWithoutNoise) {
  auto p = params(1, 1);
  p.q1 = 1;
  p.q2 = 0;
  p.sigma = 0;
  const auto scn = make_scenario(p, 3);
  const auto d = generate_labeled(scn, 5, 4);
  EXPECT_NEAR(d.t.col(0).dot(scn.v), 1.0, 1e-12);
  EXPECT_NEAR(d.t.col(0).dot(scn.av), scn.v_av, 1e-12);
}

TEST(Labeled, OrRateWithinThreeStandardErrors) {
  auto p = params(1, 0.8);
  p.theta = 0.8 * 0.99;
  const auto scn = make_scenario(p, 5);
  const Index count = 20000;
  const auto d = generate_labeled(scn, count, 6);
  double rate = 0;
  for (int l : d.labels) rate += l;
  rate /= count;
  EXPECT_NEAR(rate, 0.75, 3 * std::sqrt(0.75 * 0.25 / count));
}

TEST(Probe, SeparableDataAndLabelFlip) {
  auto p = params(1, 1);
  p.sigma = 0.01;
  p.theta = 1.5;  // both flags needed
  const auto scn = make_scenario(p, 7);
  auto d = generate_labeled(scn, 2000, 8);
  const auto probe = fit_probe(d, 1e-3);
  EXPECT_GE(probe.train_accuracy, 0.99);
  for (auto& l : d.labels) l = 1 - l;
  const auto flipped = fit_probe(d, 1e-3);
  EXPECT_LE(probe.weight.normalized().dot(flipped.weight.normalized()), -0.99);
}

TEST(Probe, OrLabelsHideScorerWeights) {
  for (auto [c1, c2] : {std::pair{1.0, 0.0}, std::pair{0.3, 1.0}, std::pair{1.0, 1.0}}) {
    const auto scn = make_scenario(params(c1, c2, LabelRule::any_flag), 9);
    const auto d = generate_labeled(scn, 8000, 10);
    const auto dec = decompose_direction(scn, fit_probe(d, 1000.0).weight);
    EXPECT_GT(dec.c1, 0);
    EXPECT_GT(dec.c2, 0);
    EXPECT_NEAR(dec.c1 / dec.c2, 1.0, 0.2) << c1 << " " << c2;
  }
}

TEST(Probe, RejectsSingleClass) {
  auto p = params(1, 1);
  p.q1 = p.q2 = 0;
  const auto scn = make_scenario(p, 11);
  EXPECT_THROW(fit_probe(generate_labeled(scn, 50, 12), 1.0), Error);
}

TEST(Steer, IdentityAndProjectionRemoval) {
  Rng rng(13);
  const Vector t = rng.normal_vector(16);
  const Vector d = rng.unit_vector(16);
  EXPECT_EQ(steer(t, d, 0.0), t);
  EXPECT_LE(std::abs(steer(t, d, t.dot(d)).dot(d)), 1e-10);
  EXPECT_THROW(steer(t, 2 * d, 1.0), Error);
}

TEST(Decompose, ExactCombinations) {
  Matrix rot = Matrix::Zero(4, 4);
  rot(1, 0) = 1;
  rot(0, 1) = -1;
  rot(2, 3) = 1;
  rot(3, 2) = -1;
  auto p = params(1, 1);
  p.n = 4;
  const auto scn = make_scenario(p, Vector::Unit(4, 0), rot);
  auto d = decompose_direction(scn, scn.v);
  EXPECT_NEAR(d.c1, 1, 1e-12);
  EXPECT_NEAR(d.c2, 0, 1e-12);
  d = decompose_direction(scn, 3 * scn.v + 2 * scn.av);
  EXPECT_NEAR(d.c1, 3, 1e-10);
  EXPECT_NEAR(d.c2, 2, 1e-10);
  EXPECT_NEAR(d.residual_norm, 0, 1e-10);
  EXPECT_NEAR(decompose_direction(scn, Vector::Unit(4, 2)).residual_norm, 1, 1e-12);
}

TEST(Sweep, ArgmaxAgreesWithExhaustiveEvaluation) {
  const auto scn = make_scenario(params(1, 0.4), 14);
  const auto data = generate_labeled(scn, 500, 15);
  const auto probe = fit_probe(data, 10.0);
  const auto grid = make_grid(21, -2, 2);
  const auto res = steering_sweep(scn, data, probe, grid, {});
  // Independent: with α fixed, reduction is proportional to ⟨d, ∇s⟩.
  const Vector grad = scn.scorer_gradient();
  double top = -1e300;
  for (const auto& [a, b] : grid) {
    const Vector d = a * scn.v + b * scn.av;
    if (d.norm() > 1e-12) top = std::max(top, d.normalized().dot(grad));
  }
  EXPECT_NEAR(res.best.direction.dot(grad), top, 1e-12);
  EXPECT_NEAR(res.best.direction.dot(grad.normalized()), 1.0, 1e-12);
  EXPECT_LE(res.max_identity_error, 1e-10);
  EXPECT_NEAR(res.best.direction.norm(), 1.0, 1e-9);
}

TEST(Sweep, ProjectionPolicyIdentityHolds) {
  const auto scn = make_scenario(params(0.7, 1.3), 16);
  const auto data = generate_labeled(scn, 300, 17);
  SweepOptions o;
  o.policy = AlphaPolicy::projection;
  o.threads = 3;
  const auto res = steering_sweep(scn, data, fit_probe(data, 10.0), make_grid(9, -1, 1), o);
  EXPECT_LE(res.max_identity_error, 1e-10);
  int invalid = 0;
  for (const auto& c : res.cells) invalid += !c.valid;
  EXPECT_EQ(invalid, 1);
}

TEST(Sweep, SymmetricWeightsAgreeWithProbe) {
  SteerStudyParams sp;
  sp.scenario.c1 = sp.scenario.c2 = 1.0;
  const auto st = run_steer_study(sp, 1, 1);
  EXPECT_GE(st.sweep.discrepancy.cosine, 0.99);
  EXPECT_GT(st.sweep.discrepancy.probe_c1, 0);
  EXPECT_GT(st.sweep.discrepancy.probe_c2, 0);
}
