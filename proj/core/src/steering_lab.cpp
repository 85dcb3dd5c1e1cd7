#include "relcomp/steering_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "relcomp/feature_space.hpp"
#include "relcomp/parallel.hpp"
#include "relcomp/random.hpp"

namespace relcomp {
namespace {

void check_params(const ScenarioParams& p) {
  require(p.n >= 2, ErrorCode::invalid_dimensions, "scenario needs n >= 2");
  require(p.q1 >= 0 && p.q1 <= 1 && p.q2 >= 0 && p.q2 <= 1, ErrorCode::invalid_probability,
          "flag probabilities must lie in [0, 1]");
  require(p.sigma >= 0, ErrorCode::invalid_argument, "noise scale must be nonnegative");
}

// Orthonormal basis of span{v, Av}; one column when the two are parallel.
Matrix span_basis(const SteeringScenario& scn) {
  Vector e1 = scn.v.normalized();
  Vector e2 = scn.av - e1.dot(scn.av) * e1;
  const double n2 = e2.norm();
  if (n2 <= 1e-12) return e1;
  Matrix b(scn.dim(), 2);
  b.col(0) = e1;
  b.col(1) = e2 / n2;
  return b;
}

}  // namespace

double SteeringScenario::score(const Vector& t) const {
  return params.c1 * t.dot(v) + params.c2 * t.dot(av);
}

SteeringScenario make_scenario(const ScenarioParams& params, Vector v, Matrix a) {
  check_params(params);
  require(v.size() == params.n && a.rows() == params.n && a.cols() == params.n, ErrorCode::dimension_mismatch,
          "v and A must match n");
  require(std::abs(v.norm() - 1.0) <= 1e-9, ErrorCode::non_unit_direction, "v must be a unit vector");
  SteeringScenario scn;
  scn.params = params;
  scn.v = std::move(v);
  scn.a = std::move(a);
  scn.av = scn.a * scn.v;
  scn.v_av = scn.v.dot(scn.av);
  return scn;
}

SteeringScenario make_scenario(const ScenarioParams& params, std::uint64_t seed) {
  check_params(params);
  Rng rng(derive_seed(seed, "steer/v"));
  Vector v = rng.unit_vector(params.n);
  for (std::uint64_t draw = 0; draw < 1000; ++draw) {
    Matrix a = haar_orthogonal(params.n, derive_seed(seed, "steer/A", draw));
    if (std::abs(v.dot(a * v)) <= 0.1) return make_scenario(params, std::move(v), std::move(a));
  }
  throw Error(ErrorCode::construction_failure, "no orthogonal A with |<v, Av>| <= 0.1 in 1000 draws");
}

LabeledData generate_labeled(const SteeringScenario& scn, Index count, std::uint64_t seed) {
  require(count >= 1, ErrorCode::invalid_argument, "need at least one sample");
  const auto& p = scn.params;
  const Index n = scn.dim();
  const Matrix basis = span_basis(scn);
  Rng rng(derive_seed(seed, "steer/data"));
  LabeledData d;
  d.t.resize(n, count);
  d.background.resize(n, count);
  d.labels.reserve(static_cast<std::size_t>(count));
  d.flags.reserve(static_cast<std::size_t>(count));
  for (Index s = 0; s < count; ++s) {
    const int cur = rng.bernoulli(p.q1) ? 1 : 0;
    const int prev = rng.bernoulli(p.q2) ? 1 : 0;
    Vector g = p.sigma * rng.normal_vector(n);
    g -= basis * (basis.transpose() * g);
    // A second pass removes what rounding left in the span.
    g -= basis * (basis.transpose() * g);
    d.background.col(s) = g;
    d.t.col(s) = g + cur * scn.v + prev * scn.av;
    const bool label = p.rule == LabelRule::any_flag ? (cur || prev) : (p.c1 * cur + p.c2 * prev >= p.theta);
    d.labels.push_back(label ? 1 : 0);
    d.flags.emplace_back(cur, prev);
  }
  return d;
}

ProbeModel fit_probe(const LabeledData& data, double lambda) {
  const Index count = data.t.cols();
  require(static_cast<Index>(data.labels.size()) == count, ErrorCode::length_mismatch, "labels differ in count from samples");
  require(lambda >= 0, ErrorCode::invalid_argument, "regularization must be nonnegative");
  Index pos = 0;
  for (int l : data.labels) pos += l != 0;
  require(pos > 0 && pos < count, ErrorCode::single_class_data, "probe data must contain both labels");

  Vector y(count);
  for (Index s = 0; s < count; ++s) y[s] = data.labels[static_cast<std::size_t>(s)] ? 1.0 : -1.0;
  const Vector mean_t = data.t.rowwise().mean();
  const double mean_y = y.mean();
  const Matrix xc = data.t.colwise() - mean_t;
  const Vector yc = y.array() - mean_y;

  Matrix gram = xc * xc.transpose();
  gram.diagonal().array() += lambda;
  const Eigen::LDLT<Matrix> ldlt(gram);
  ProbeModel probe;
  probe.weight = ldlt.solve(xc * yc);
  require(ldlt.info() == Eigen::Success && probe.weight.allFinite(), ErrorCode::rank_deficient_design,
          "probe normal equations are singular; increase the regularization");
  probe.bias = mean_y - mean_t.dot(probe.weight);
  Index correct = 0;
  for (Index s = 0; s < count; ++s)
    correct += (probe.decision(data.t.col(s)) >= 0.0) == (data.labels[static_cast<std::size_t>(s)] != 0);
  probe.train_accuracy = static_cast<double>(correct) / static_cast<double>(count);
  return probe;
}

Vector steer(const Vector& t, const Vector& direction, double alpha) {
  require(t.size() == direction.size(), ErrorCode::dimension_mismatch, "direction length differs from t");
  require(std::abs(direction.norm() - 1.0) <= 1e-6, ErrorCode::non_unit_direction, "steering direction must be unit norm");
  return t - alpha * direction;
}

Decomposition decompose_direction(const SteeringScenario& scn, const Vector& w) {
  require(w.size() == scn.dim(), ErrorCode::dimension_mismatch, "w length differs from scenario dim");
  Matrix b(scn.dim(), 2);
  b.col(0) = scn.v;
  b.col(1) = scn.av;
  const Eigen::ColPivHouseholderQR<Matrix> qr(b);
  Decomposition d;
  if (qr.rank() == 2) {
    const Vector c = qr.solve(w);
    d.c1 = c[0];
    d.c2 = c[1];
  } else {
    d.c1 = scn.v.dot(w);
  }
  d.residual_norm = (w - d.c1 * scn.v - d.c2 * scn.av).norm();
  return d;
}

std::vector<std::pair<double, double>> make_grid(Index points_per_axis, double lo, double hi) {
  require(points_per_axis >= 1, ErrorCode::invalid_argument, "grid needs at least one point per axis");
  std::vector<std::pair<double, double>> grid;
  const double step = points_per_axis > 1 ? (hi - lo) / static_cast<double>(points_per_axis - 1) : 0.0;
  for (Index i = 0; i < points_per_axis; ++i)
    for (Index j = 0; j < points_per_axis; ++j)
      grid.emplace_back(lo + step * static_cast<double>(i), lo + step * static_cast<double>(j));
  return grid;
}

SweepResult steering_sweep(const SteeringScenario& scn, const LabeledData& data, const ProbeModel& probe,
                           const std::vector<std::pair<double, double>>& grid, const SweepOptions& opts) {
  require(!grid.empty(), ErrorCode::invalid_argument, "steering grid is empty");
  require(probe.weight.size() == scn.dim(), ErrorCode::dimension_mismatch, "probe dim differs from scenario");
  std::vector<Index> positives;
  for (Index s = 0; s < static_cast<Index>(data.labels.size()); ++s)
    if (data.labels[static_cast<std::size_t>(s)]) positives.push_back(s);
  require(!positives.empty(), ErrorCode::empty_positive_set, "no positive-label samples to steer");

  const auto& p = scn.params;
  const Vector grad = scn.scorer_gradient();
  const double grad_norm = grad.norm();
  const auto np = static_cast<double>(positives.size());

  SweepResult res;
  res.cells.resize(grid.size());
  parallel_for(static_cast<Index>(grid.size()), opts.threads, [&](Index k) {
    GridCell& cell = res.cells[static_cast<std::size_t>(k)];
    cell.c1_hat = grid[static_cast<std::size_t>(k)].first;
    cell.c2_hat = grid[static_cast<std::size_t>(k)].second;
    Vector d = cell.c1_hat * scn.v + cell.c2_hat * scn.av;
    const double dn = d.norm();
    if (dn <= 1e-12) return;
    d /= dn;
    cell.valid = true;
    const double dv = d.dot(scn.v);
    const double dav = d.dot(scn.av);
    // Part of a unit intervention that does not move the scorer.
    const double off_gradient = grad_norm > 0 ? (d - d.dot(grad) / (grad_norm * grad_norm) * grad).norm() : 1.0;
    double reduction = 0.0, side = 0.0;
    for (Index s : positives) {
      const Vector t = data.t.col(s);
      const double alpha = opts.policy == AlphaPolicy::fixed ? opts.alpha : t.dot(d);
      const double before = scn.score(t);
      const double after = scn.score(steer(t, d, alpha));
      const double predicted = before - alpha * (p.c1 * dv + p.c2 * dav);
      cell.identity_error = std::max(cell.identity_error, std::abs(after - predicted));
      reduction += before - after;
      side += std::abs(alpha) * off_gradient;
    }
    cell.mean_reduction = reduction / np;
    cell.side_effect_norm = side / np;
  });

  // Best reduction; near-equal reductions (parallel grid directions) resolve
  // to the lowest grid index.
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& c : res.cells)
    if (c.valid) top = std::max(top, c.mean_reduction);
  const double slack = 1e-12 * std::max(1.0, std::abs(top));
  for (Index k = 0; k < static_cast<Index>(res.cells.size()); ++k) {
    const auto& c = res.cells[static_cast<std::size_t>(k)];
    if (c.valid && c.mean_reduction >= top - slack) {
      res.best_index = k;
      break;
    }
  }
  for (const auto& c : res.cells) res.max_identity_error = std::max(res.max_identity_error, c.identity_error);
  require(res.best_index >= 0, ErrorCode::invalid_argument, "grid has no nonzero direction");

  const GridCell& best = res.cells[static_cast<std::size_t>(res.best_index)];
  res.best.direction = (best.c1_hat * scn.v + best.c2_hat * scn.av).normalized();
  const Decomposition bd = decompose_direction(scn, res.best.direction);
  res.best.c1_hat = bd.c1;
  res.best.c2_hat = bd.c2;
  res.best.score_reduction = best.mean_reduction;
  res.best.side_effect_norm = best.side_effect_norm;

  const double pn = probe.weight.norm();
  require(pn > 0, ErrorCode::degenerate_data, "probe weight is zero");
  res.probe_direction = probe.weight / pn;
  const Decomposition pd = decompose_direction(scn, probe.weight);
  Discrepancy& disc = res.discrepancy;
  disc.cosine = res.best.direction.dot(res.probe_direction);
  disc.probe_c1 = pd.c1;
  disc.probe_c2 = pd.c2;
  disc.scorer_c1 = p.c1;
  disc.scorer_c2 = p.c2;
  const Eigen::Vector2d pm(pd.c1, pd.c2), sm(p.c1, p.c2);
  disc.mixture_gap = (pm.norm() > 0 && sm.norm() > 0) ? (pm.normalized() - sm.normalized()).norm() : 0.0;
  return res;
}

}  // namespace relcomp
