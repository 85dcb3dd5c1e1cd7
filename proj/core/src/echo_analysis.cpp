#include "relcomp/echo_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <tuple>

#include "relcomp/binding.hpp"
#include "relcomp/parallel.hpp"
#include "relcomp/random.hpp"

namespace relcomp {

EchoSamples generate_pair_samples(const FeatureDictionary& dict, const Matrix& a, Index sample_count,
                                  double presence_prob, std::uint64_t seed) {
  require(a.rows() == dict.dim() && a.cols() == dict.dim(), ErrorCode::dimension_mismatch,
          "binding matrix must be dim x dim");
  require(presence_prob >= 0.0 && presence_prob <= 1.0, ErrorCode::invalid_probability,
          "presence probability must lie in [0, 1]");
  require(sample_count >= 0, ErrorCode::invalid_argument, "sample count must be nonnegative");
  Rng rng(derive_seed(seed, "echo/codes"));
  const Matrix av = a * dict.atoms();
  EchoSamples out;
  out.z = Matrix::Zero(dict.dim(), sample_count);
  out.x_codes.reserve(static_cast<std::size_t>(sample_count));
  out.y_codes.reserve(static_cast<std::size_t>(sample_count));
  for (Index s = 0; s < sample_count; ++s) {
    SparseCode x = sample_code(dict.count(), presence_prob, Amplitude::constant(), rng);
    SparseCode y = sample_code(dict.count(), presence_prob, Amplitude::constant(), rng);
    for (const auto& [i, c] : x.entries()) out.z.col(s) += c * dict.atom(i);
    for (const auto& [i, c] : y.entries()) out.z.col(s) += c * av.col(i);
    out.x_codes.push_back(std::move(x));
    out.y_codes.push_back(std::move(y));
  }
  return out;
}

Matrix echo_extended_atoms(const FeatureDictionary& dict, const Matrix& a) {
  require(a.rows() == dict.dim() && a.cols() == dict.dim(), ErrorCode::dimension_mismatch,
          "binding matrix must be dim x dim");
  Matrix ext(dict.dim(), 2 * dict.count());
  ext.leftCols(dict.count()) = dict.atoms();
  ext.rightCols(dict.count()) = a * dict.atoms();
  return ext;
}

ProcrustesResult orthogonal_procrustes(const Matrix& sources, const Matrix& targets) {
  require(sources.rows() == targets.rows() && sources.cols() == targets.cols(), ErrorCode::dimension_mismatch,
          "sources and targets differ in shape");
  require(sources.cols() >= 1 && sources.rows() >= 1, ErrorCode::invalid_argument, "need at least one pair");
  const Matrix cross = targets * sources.transpose();
  const Eigen::BDCSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ProcrustesResult out;
  out.w = svd.matrixU() * svd.matrixV().transpose();
  out.residual = (out.w * sources - targets).squaredNorm();
  return out;
}

ProcrustesResult orthogonal_procrustes(const std::vector<Vector>& sources, const std::vector<Vector>& targets) {
  require(sources.size() == targets.size(), ErrorCode::dimension_mismatch, "sources and targets differ in count");
  require(!sources.empty(), ErrorCode::invalid_argument, "need at least one pair");
  const Index n = sources.front().size();
  Matrix s(n, static_cast<Index>(sources.size()));
  Matrix t(n, static_cast<Index>(targets.size()));
  for (std::size_t i = 0; i < sources.size(); ++i) {
    require(sources[i].size() == n && targets[i].size() == n, ErrorCode::dimension_mismatch, "vector dims differ");
    s.col(static_cast<Index>(i)) = sources[i];
    t.col(static_cast<Index>(i)) = targets[i];
  }
  return orthogonal_procrustes(s, t);
}

Index default_hypothesis_size(Index dim) { return std::max<Index>(8, dim / 16); }

namespace {

struct Link {
  Index src;
  Index dst;
  int sign;
};
using Hypothesis = std::vector<Link>;

// Procrustes on the span of the linked atoms, using only their Gram matrix.
struct GramFit {
  Matrix w;  // r x r
  Vector residuals;   // per link
  bool ok = false;
};

GramFit gram_procrustes(const Matrix& gram, const Hypothesis& hyp) {
  const auto h = static_cast<Index>(hyp.size());
  std::vector<Index> idx;
  std::vector<double> sgn;
  for (const auto& l : hyp) { idx.push_back(l.src); sgn.push_back(1.0); }
  for (const auto& l : hyp) { idx.push_back(l.dst); sgn.push_back(l.sign); }
  Matrix g(2 * h, 2 * h);
  for (Index i = 0; i < 2 * h; ++i)
    for (Index j = 0; j < 2 * h; ++j)
      g(i, j) = sgn[static_cast<std::size_t>(i)] * sgn[static_cast<std::size_t>(j)] *
                gram(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);

  const Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  GramFit fit;
  if (eig.info() != Eigen::Success) return fit;
  const Vector lam = eig.eigenvalues();
  const double cut = 1e-10 * std::max(lam.maxCoeff(), 1e-300);
  std::vector<Index> keep;
  for (Index i = 0; i < lam.size(); ++i)
    if (lam[i] > cut) keep.push_back(i);
  const auto r = static_cast<Index>(keep.size());
  Matrix coords(r, 2 * h);  // coordinates of each atom in an orthonormal basis of the span
  for (Index k = 0; k < r; ++k) {
    const Index e = keep[static_cast<std::size_t>(k)];
    coords.row(k) = std::sqrt(lam[e]) * eig.eigenvectors().col(e).transpose();
  }
  const Matrix src = coords.leftCols(h);
  const Matrix dst = coords.rightCols(h);
  const Eigen::JacobiSVD<Matrix> svd(dst * src.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  fit.w = svd.matrixU() * svd.matrixV().transpose();
  fit.residuals = (fit.w * src - dst).colwise().norm().transpose();
  fit.ok = fit.residuals.allFinite();
  return fit;
}

bool within(const GramFit& fit, double tol) { return fit.ok && fit.residuals.maxCoeff() <= tol; }

// Full-space W: Procrustes rotation on the span of the linked atoms,
// identity on its orthogonal complement.
Matrix span_procrustes(const Matrix& atoms, const Hypothesis& hyp) {
  const Index n = atoms.rows();
  const auto h = static_cast<Index>(hyp.size());
  Matrix src(n, h), dst(n, h);
  for (Index i = 0; i < h; ++i) {
    const auto& l = hyp[static_cast<std::size_t>(i)];
    src.col(i) = atoms.col(l.src);
    dst.col(i) = l.sign * atoms.col(l.dst);
  }
  Matrix stacked(n, 2 * h);
  stacked << src, dst;
  Eigen::ColPivHouseholderQR<Matrix> qr(stacked);
  qr.setThreshold(1e-10);
  const Index r = qr.rank();
  const Matrix q = qr.householderQ() * Matrix::Identity(n, r);
  const Matrix s = q.transpose() * src;
  const Matrix t = q.transpose() * dst;
  const Eigen::JacobiSVD<Matrix> svd(t * s.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix w = svd.matrixU() * svd.matrixV().transpose();
  return q * w * q.transpose() + (Matrix::Identity(n, n) - q * q.transpose());
}

struct Grower {
  const Matrix& gram;
  Index k_atoms;
  double tol;
  double eps;
  Index max_pairs;
  static constexpr int kSeedPairs = 4;

  bool compat(const Link& x, const Link& y) const {
    if (x.src == y.src || x.src == y.dst || x.dst == y.src || x.dst == y.dst) return false;
    return std::abs(gram(x.src, y.src) - x.sign * y.sign * gram(x.dst, y.dst)) <= eps;
  }

  Hypothesis grow(Index a, Index b, int tau) const {
    Hypothesis hyp{{a, b, tau}};
    std::vector<bool> used(static_cast<std::size_t>(k_atoms), false);
    used[static_cast<std::size_t>(a)] = used[static_cast<std::size_t>(b)] = true;

    // Greedy clique among links consistent with the anchor link.
    std::vector<Link> cand;
    for (Index c = 0; c < k_atoms; ++c) {
      if (used[static_cast<std::size_t>(c)]) continue;
      for (Index d = 0; d < k_atoms; ++d) {
        if (d == c || used[static_cast<std::size_t>(d)]) continue;
        for (int t : {1, -1}) {
          const Link l{c, d, t};
          if (compat(hyp.front(), l)) cand.push_back(l);
        }
      }
    }
    while (!cand.empty() && static_cast<int>(hyp.size()) < kSeedPairs) {
      const std::size_t nc = cand.size();
      std::vector<Index> src(nc), dst(nc);
      std::vector<double> sgn(nc);
      for (std::size_t i = 0; i < nc; ++i) {
        src[i] = cand[i].src;
        dst[i] = cand[i].dst;
        sgn[i] = cand[i].sign;
      }
      // compat() over all pairs, flattened for speed; gram is symmetric.
      std::vector<long> support(nc, 0);
      const double* g = gram.data();
      for (std::size_t i = 0; i < nc; ++i) {
        const double* gs = g + src[i] * k_atoms;
        const double* gd = g + dst[i] * k_atoms;
        const Index si = src[i], di = dst[i];
        long count = 0;
        for (std::size_t j = i + 1; j < nc; ++j) {
          const bool ok = std::abs(gs[src[j]] - sgn[i] * sgn[j] * gd[dst[j]]) <= eps && si != src[j] && si != dst[j] &&
                          di != src[j] && di != dst[j];
          count += ok;
          support[j] += ok;
        }
        support[i] += count;
      }
      const std::size_t best =
          static_cast<std::size_t>(std::max_element(support.begin(), support.end()) - support.begin());
      const Link pick = cand[best];
      hyp.push_back(pick);
      used[static_cast<std::size_t>(pick.src)] = used[static_cast<std::size_t>(pick.dst)] = true;
      std::vector<Link> next;
      for (const auto& l : cand)
        if (compat(pick, l)) next.push_back(l);
      cand = std::move(next);
    }
    while (hyp.size() > 1 && !within(gram_procrustes(gram, hyp), tol)) hyp.pop_back();

    // Aggregated growth: add the link whose Gram profile against all current
    // links agrees best, while every Procrustes residual stays within tol.
    while (static_cast<Index>(hyp.size()) < max_pairs) {
      std::vector<Index> free;
      for (Index i = 0; i < k_atoms; ++i)
        if (!used[static_cast<std::size_t>(i)]) free.push_back(i);
      if (free.size() < 2) break;
      const auto f = static_cast<Index>(free.size());
      const auto h = static_cast<Index>(hyp.size());
      Matrix ga(f, h), gb(f, h);
      for (Index i = 0; i < f; ++i)
        for (Index k = 0; k < h; ++k) {
          const auto& l = hyp[static_cast<std::size_t>(k)];
          ga(i, k) = gram(free[static_cast<std::size_t>(i)], l.src);
          gb(i, k) = l.sign * gram(free[static_cast<std::size_t>(i)], l.dst);
        }
      const Vector na = ga.rowwise().squaredNorm();
      const Vector nb = gb.rowwise().squaredNorm();
      const Matrix cross = ga * gb.transpose();
      double best_cost = std::numeric_limits<double>::infinity();
      Link best{-1, -1, 1};
      for (Index i = 0; i < f; ++i)
        for (Index j = 0; j < f; ++j) {
          if (i == j) continue;
          for (int t : {1, -1}) {
            const double cost = na[i] + nb[j] - 2.0 * t * cross(i, j);
            if (cost < best_cost) {
              best_cost = cost;
              best = {free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)], t};
            }
          }
        }
      if (best.src < 0 || best_cost > eps * eps * static_cast<double>(h)) break;
      hyp.push_back(best);
      if (!within(gram_procrustes(gram, hyp), tol)) {
        hyp.pop_back();
        break;
      }
      used[static_cast<std::size_t>(best.src)] = used[static_cast<std::size_t>(best.dst)] = true;
    }
    return hyp;
  }
};

}  // namespace

EchoReport detect_echo_pairs(const Matrix& atoms, const EchoOptions& opts) {
  const Index n = atoms.rows();
  const Index k_atoms = atoms.cols();
  const Index h_min = opts.hypothesis_size > 0 ? opts.hypothesis_size : default_hypothesis_size(n);
  require(k_atoms >= 2 * h_min, ErrorCode::insufficient_atoms,
          "need at least " + std::to_string(2 * h_min) + " atoms, got " + std::to_string(k_atoms));
  require(opts.inlier_tol > 0 && opts.trials >= 1, ErrorCode::invalid_argument, "bad echo detector settings");
  require_finite(atoms, "atoms");

  Matrix unit = atoms;
  for (Index j = 0; j < k_atoms; ++j) {
    const double nrm = unit.col(j).norm();
    require(nrm > 0, ErrorCode::degenerate_data, "atom " + std::to_string(j) + " is zero");
    unit.col(j) /= nrm;
  }
  const Matrix gram = unit.transpose() * unit;
  const double eps = opts.gram_tol > 0 ? opts.gram_tol : 2.5 * opts.inlier_tol / std::sqrt(static_cast<double>(n));
  const Index max_pairs = k_atoms / 2;
  const Grower grower{gram, k_atoms, opts.inlier_tol, eps, max_pairs};

  Rng rng(derive_seed(opts.seed, "echo/anchors"));
  const auto anchors = rng.permutation(k_atoms);
  const Index trials = std::min<Index>(opts.trials, k_atoms);

  std::vector<Hypothesis> found(static_cast<std::size_t>(trials));
  auto run_trial = [&](Index t) {
    const Index a = anchors[static_cast<std::size_t>(t)];
    Hypothesis best;
    for (Index b = 0; b < k_atoms && static_cast<Index>(best.size()) < max_pairs; ++b) {
      if (b == a) continue;
      for (int tau : {1, -1}) {
        Hypothesis hyp = grower.grow(a, b, tau);
        if (hyp.size() > best.size()) best = std::move(hyp);
      }
    }
    found[static_cast<std::size_t>(t)] = static_cast<Index>(best.size()) >= h_min ? std::move(best) : Hypothesis{};
  };

  // Trials run in blocks; stopping only after a full block and choosing by
  // (size, trial index) keeps the outcome independent of the thread count.
  const Index block = std::max(opts.threads, 1);
  Index best_trial = -1;
  for (Index start = 0; start < trials; start += block) {
    const Index len = std::min(block, trials - start);
    parallel_for(len, opts.threads, [&](Index i) { run_trial(start + i); });
    for (Index t = start; t < start + len; ++t)
      if (!found[static_cast<std::size_t>(t)].empty() &&
          (best_trial < 0 || found[static_cast<std::size_t>(t)].size() > found[static_cast<std::size_t>(best_trial)].size()))
        best_trial = t;
    if (best_trial >= 0 && static_cast<Index>(found[static_cast<std::size_t>(best_trial)].size()) >= max_pairs) break;
  }

  EchoReport rep;
  rep.atom_count = k_atoms;
  rep.w = Matrix::Identity(n, n);
  if (best_trial < 0) return rep;
  const Hypothesis& hyp = found[static_cast<std::size_t>(best_trial)];
  rep.hypothesis_size = static_cast<Index>(hyp.size());

  auto inliers_under = [&](const Matrix& w) {
    // r² = ‖Wu‖² + ‖v‖² - 2|⟨v, Wu⟩| with unit atoms; sign follows the inner product.
    const Matrix c = unit.transpose() * (w * unit);  // c(v, u) = ⟨v, W u⟩
    std::vector<EchoPair> out;
    for (Index u = 0; u < k_atoms; ++u)
      for (Index v = 0; v < k_atoms; ++v) {
        if (u == v) continue;
        const double r = std::sqrt(std::max(0.0, 2.0 - 2.0 * std::abs(c(v, u))));
        if (r <= opts.inlier_tol) out.push_back({u, v, c(v, u) >= 0 ? 1 : -1, r});
      }
    return out;
  };

  const Matrix w1 = span_procrustes(unit, hyp);
  const auto first = inliers_under(w1);
  Hypothesis all;
  for (const auto& p : first) all.push_back({p.source, p.target, p.sign});
  rep.w = all.empty() ? w1 : span_procrustes(unit, all);
  auto inl = inliers_under(rep.w);
  rep.inlier_count = static_cast<Index>(inl.size());

  std::stable_sort(inl.begin(), inl.end(), [](const EchoPair& x, const EchoPair& y) {
    if (x.residual != y.residual) return x.residual < y.residual;
    if (x.source != y.source) return x.source < y.source;
    return x.target < y.target;
  });
  std::vector<bool> taken(static_cast<std::size_t>(k_atoms), false);
  for (const auto& p : inl) {
    if (taken[static_cast<std::size_t>(p.source)] || taken[static_cast<std::size_t>(p.target)]) continue;
    taken[static_cast<std::size_t>(p.source)] = taken[static_cast<std::size_t>(p.target)] = true;
    rep.pairs.push_back(p);
  }
  return rep;
}

EchoReport detect_echo_pairs(const LearnedDictionary& learned, const EchoOptions& opts) {
  return detect_echo_pairs(learned.atoms, opts);
}

double alignment_error(const Matrix& w, const Matrix& a, const Matrix& truth_atoms) {
  require(w.rows() == a.rows() && w.cols() == a.cols() && truth_atoms.rows() == a.cols(), ErrorCode::dimension_mismatch,
          "alignment inputs disagree in shape");
  const Matrix av = a * truth_atoms;
  const double denom = av.norm();
  require(denom > 0, ErrorCode::degenerate_data, "truth atoms vanish under A");
  double best = std::numeric_limits<double>::infinity();
  for (bool transposed : {false, true}) {
    const Matrix wv = transposed ? Matrix(w.transpose() * truth_atoms) : Matrix(w * truth_atoms);
    best = std::min({best, (wv - av).norm() / denom, (wv + av).norm() / denom});
  }
  return best;
}

void attach_truth(EchoReport& report, const Matrix& a, const Matrix& truth_atoms) {
  report.alignment_error = alignment_error(report.w, a, truth_atoms);
  report.multiplicity_factor = truth_atoms.cols() == 0 ? 0.0
                                                       : static_cast<double>(report.pairs.size()) /
                                                             static_cast<double>(truth_atoms.cols());
}

Vector project_outer(const TensorProjection& proj, const Vector& x, const Vector& y) {
  require(x.size() == y.size(), ErrorCode::dimension_mismatch, "factors differ in dimension");
  if (std::holds_alternative<HrrProjection>(proj)) return bind_hrr(x, y);
  const Matrix& pi = std::get<MatrixProjection>(proj).pi;
  const Index n = x.size();
  require(pi.cols() == n * n, ErrorCode::dimension_mismatch,
          "projection needs " + std::to_string(n * n) + " columns, has " + std::to_string(pi.cols()));
  Vector flat(n * n);
  for (Index i = 0; i < n; ++i) flat.segment(i * n, n) = x[i] * y;
  return pi * flat;
}

std::vector<Vector> enumerate_tensor_features(const FeatureDictionary& dict, const TensorProjection& proj) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(dict.count() * dict.count()));
  for (Index i = 0; i < dict.count(); ++i)
    for (Index j = 0; j < dict.count(); ++j) out.push_back(project_outer(proj, dict.atom(i), dict.atom(j)));
  return out;
}

MultiplicitySummary multiplicity_report(const MatchReport& match, const EchoReport& echo, const FeatureDictionary& truth) {
  const Index m = truth.count();
  MultiplicitySummary s;
  s.learned_count = match.learned_count;
  s.truth_count = m;
  s.extended_truth_count = 2 * m;

  std::vector<bool> hit(static_cast<std::size_t>(2 * m), false);
  for (const auto& [l, e] : match.assignment)
    if (e.truth >= 0 && e.truth < 2 * m) hit[static_cast<std::size_t>(e.truth)] = true;
  Index plain = 0, echoed = 0;
  for (Index i = 0; i < 2 * m; ++i) {
    if (hit[static_cast<std::size_t>(i)]) (i < m ? plain : echoed) += 1;
    else s.dark_atoms.push_back(i);
  }
  s.plain_recovery = static_cast<double>(plain) / static_cast<double>(m);
  s.echo_recovery = static_cast<double>(echoed) / static_cast<double>(m);
  s.multiplicity_factor = static_cast<double>(echo.pairs.size()) / static_cast<double>(m);

  for (const auto& p : echo.pairs) {
    const auto x = match.assignment.find(p.source);
    const auto y = match.assignment.find(p.target);
    if (x == match.assignment.end() || y == match.assignment.end()) continue;
    const Index tx = x->second.truth, ty = y->second.truth;
    if (std::max(tx, ty) - std::min(tx, ty) == m && std::min(tx, ty) < m) ++s.consistent_pairs;
  }
  return s;
}

}  // namespace relcomp
