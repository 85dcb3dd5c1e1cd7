#include "relcomp/dict_learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

#include "relcomp/parallel.hpp"
#include "relcomp/random.hpp"

namespace relcomp {

std::string to_string(LearnMethod m) { return m == LearnMethod::ksvd ? "ksvd" : "sae"; }

void canonicalize_signs(Matrix& atoms) {
  for (Index j = 0; j < atoms.cols(); ++j) {
    for (Index i = 0; i < atoms.rows(); ++i) {
      if (atoms(i, j) != 0.0) {
        if (atoms(i, j) < 0.0) atoms.col(j) = -atoms.col(j);
        break;
      }
    }
  }
}

OmpResult omp_gram(const Matrix& gram, const Vector& dtx, double x_norm2, const OmpStop& stop) {
  const Index k_atoms = gram.rows();
  require(gram.cols() == k_atoms && dtx.size() == k_atoms, ErrorCode::dimension_mismatch,
          "Gram matrix and correlations disagree in size");
  const Index limit = stop.max_support <= 0 ? k_atoms : std::min(stop.max_support, k_atoms);

  OmpResult out{SparseCode(k_atoms), {}};
  double r2 = std::max(x_norm2, 0.0);
  out.residual_norms.push_back(std::sqrt(r2));

  std::vector<Index> support;
  std::vector<bool> in_support(static_cast<std::size_t>(k_atoms), false);
  Vector coef;
  Vector corr = dtx;
  const double floor = 1e-14 * std::sqrt(std::max(x_norm2, 1e-300));

  while (static_cast<Index>(support.size()) < limit && std::sqrt(r2) > stop.residual_tol) {
    Index best = -1;
    double best_val = floor;
    for (Index i = 0; i < k_atoms; ++i) {
      if (in_support[static_cast<std::size_t>(i)]) continue;
      const double c = std::abs(corr[i]);
      if (c > best_val) {
        best_val = c;
        best = i;
      }
    }
    if (best < 0) break;

    support.push_back(best);
    const auto s = static_cast<Index>(support.size());
    Matrix gss(s, s);
    Vector b(s);
    for (Index p = 0; p < s; ++p) {
      b[p] = dtx[support[static_cast<std::size_t>(p)]];
      for (Index q = 0; q < s; ++q) gss(p, q) = gram(support[static_cast<std::size_t>(p)], support[static_cast<std::size_t>(q)]);
    }
    const Eigen::LDLT<Matrix> ldlt(gss);
    const Vector trial = ldlt.solve(b);
    const double trial_r2 = std::max(x_norm2 - b.dot(trial), 0.0);
    // A (numerically) dependent atom cannot lower the residual: stop there.
    if (ldlt.info() != Eigen::Success || !trial.allFinite() || ldlt.rcond() < 1e-12 || trial_r2 > r2) {
      support.pop_back();
      break;
    }
    in_support[static_cast<std::size_t>(best)] = true;
    coef = trial;
    r2 = trial_r2;
    out.residual_norms.push_back(std::sqrt(r2));
    corr = dtx;
    for (Index p = 0; p < s; ++p) corr -= coef[p] * gram.col(support[static_cast<std::size_t>(p)]);
  }
  for (std::size_t p = 0; p < support.size(); ++p) out.code.set(support[p], coef[static_cast<Index>(p)]);
  return out;
}

OmpResult omp_sparse_code(const Matrix& atoms, const Vector& x, const OmpStop& stop) {
  require(x.size() == atoms.rows(), ErrorCode::dimension_mismatch, "vector length differs from atom length");
  for (Index j = 0; j < atoms.cols(); ++j)
    require(std::abs(atoms.col(j).norm() - 1.0) <= 1e-6, ErrorCode::invalid_argument,
            "atom " + std::to_string(j) + " is not unit norm");
  const Matrix gram = atoms.transpose() * atoms;
  return omp_gram(gram, atoms.transpose() * x, x.squaredNorm(), stop);
}

namespace {

using Code = std::vector<std::pair<Index, double>>;

Vector reconstruct(const Matrix& d, const Code& code) {
  Vector r = Vector::Zero(d.rows());
  for (const auto& [j, a] : code) r += a * d.col(j);
  return r;
}

}  // namespace

LearnedDictionary fit_dictionary_ksvd(const Matrix& samples, const KsvdOptions& opts) {
  const Index n = samples.rows();
  const Index count = samples.cols();
  const Index k_atoms = opts.atom_count;
  require(n >= 1 && k_atoms >= 1, ErrorCode::invalid_dimensions, "need dim >= 1 and atom-count >= 1");
  require(opts.sparsity >= 1, ErrorCode::invalid_argument, "sparsity must be positive");
  require(opts.iterations >= 0, ErrorCode::invalid_argument, "iterations must be nonnegative");
  require(count >= k_atoms, ErrorCode::invalid_argument,
          "need at least atom-count samples (" + std::to_string(k_atoms) + "), got " + std::to_string(count));
  require_finite(samples, "samples");

  const Vector norms2 = samples.colwise().squaredNorm().transpose();
  std::vector<Index> nonzero;
  for (Index i = 0; i < count; ++i)
    if (norms2[i] > 0.0) nonzero.push_back(i);
  require(!nonzero.empty(), ErrorCode::degenerate_data, "all samples are zero");

  // Seeding picks distinct nonzero samples, the first uniformly and each
  // later one with probability proportional to the energy it keeps after
  // projection onto its closest chosen atom (k-means++ for lines).
  Rng rng(derive_seed(opts.seed, "ksvd/init"));
  Matrix d(n, k_atoms);
  Vector left(count);
  for (Index i = 0; i < count; ++i) left[i] = norms2[i];
  Index seeded = 0;
  for (; seeded < k_atoms; ++seeded) {
    const double total = left.sum();
    if (!(total > 1e-12 * norms2.sum())) break;
    Index s = 0;
    if (seeded == 0) {
      s = nonzero[static_cast<std::size_t>(rng.below(static_cast<Index>(nonzero.size())))];
    } else {
      double target = rng.uniform() * total;
      s = count - 1;
      for (Index i = 0; i < count; ++i) {
        target -= left[i];
        if (target < 0.0 && left[i] > 0.0) {
          s = i;
          break;
        }
      }
      while (left[s] <= 0.0) --s;
    }
    d.col(seeded) = samples.col(s) / std::sqrt(norms2[s]);
    const Vector proj = d.col(seeded).transpose() * samples;
    for (Index i = 0; i < count; ++i) left[i] = std::max(0.0, std::min(left[i], norms2[i] - proj[i] * proj[i]));
    left[s] = 0.0;
  }
  for (Index j = seeded; j < k_atoms; ++j) d.col(j) = rng.unit_vector(n);

  const OmpStop stop{opts.sparsity, opts.residual_tol};
  std::vector<Code> codes(static_cast<std::size_t>(count));
  Matrix resid = samples;
  bool coded = false;

  auto sparse_code_all = [&] {
    const Matrix gram = d.transpose() * d;
    const Matrix dtx = d.transpose() * samples;
    parallel_for(count, opts.threads, [&](Index i) {
      const auto res = omp_gram(gram, dtx.col(i), norms2[i], stop);
      Code fresh;
      for (const auto& [j, a] : res.code.entries()) fresh.emplace_back(j, a);
      const Vector r = samples.col(i) - reconstruct(d, fresh);
      // Keep the previous code when the greedy one is worse under the current atoms.
      if (!coded || r.squaredNorm() <= resid.col(i).squaredNorm()) {
        codes[static_cast<std::size_t>(i)] = std::move(fresh);
        resid.col(i) = r;
      }
    });
    coded = true;
  };

  LearnedDictionary out;
  out.method = LearnMethod::ksvd;
  out.seed = opts.seed;
  out.iterations = opts.iterations;
  out.hyperparameters = {{"atom_count", static_cast<double>(k_atoms)},
                         {"sparsity", static_cast<double>(opts.sparsity)},
                         {"residual_tol", opts.residual_tol},
                         {"iterations", static_cast<double>(opts.iterations)},
                         {"power_iterations", static_cast<double>(opts.power_iterations)}};

  for (int it = 0; it < opts.iterations; ++it) {
    sparse_code_all();

    // users[j] lists (sample, slot in that sample's code).
    std::vector<std::vector<std::pair<Index, std::size_t>>> users(static_cast<std::size_t>(k_atoms));
    for (Index i = 0; i < count; ++i) {
      const auto& c = codes[static_cast<std::size_t>(i)];
      for (std::size_t s = 0; s < c.size(); ++s) users[static_cast<std::size_t>(c[s].first)].emplace_back(i, s);
    }

    std::vector<Index> unused;
    for (Index j = 0; j < k_atoms; ++j) {
      const auto& u = users[static_cast<std::size_t>(j)];
      if (u.empty()) {
        unused.push_back(j);
        continue;
      }
      const auto nu = static_cast<Index>(u.size());
      Matrix e(n, nu);
      for (Index c = 0; c < nu; ++c) {
        const auto [i, slot] = u[static_cast<std::size_t>(c)];
        e.col(c) = resid.col(i) + codes[static_cast<std::size_t>(i)][slot].second * d.col(j);
      }
      // Rank-1 refit by power iteration on E Eᵀ from the current atom; the
      // captured energy ‖Eᵀd‖ cannot decrease, so neither can the fit.
      Vector atom = d.col(j);
      for (int p = 0; p < opts.power_iterations; ++p) {
        const Vector v = e * (e.transpose() * atom);
        const double nv = v.norm();
        if (!(nv > 0.0)) break;
        atom = v / nv;
      }
      const Vector g = e.transpose() * atom;
      d.col(j) = atom;
      for (Index c = 0; c < nu; ++c) {
        const auto [i, slot] = u[static_cast<std::size_t>(c)];
        codes[static_cast<std::size_t>(i)][slot].second = g[c];
        resid.col(i) = e.col(c) - g[c] * atom;
      }
    }

    if (!unused.empty()) {
      // Re-seed idle atoms with the residuals of the worst-fit samples. Their
      // codes do not use these atoms, so the loss is unchanged.
      const Vector err = resid.colwise().squaredNorm().transpose();
      std::vector<Index> order(static_cast<std::size_t>(count));
      std::iota(order.begin(), order.end(), Index{0});
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return err[a] > err[b]; });
      std::size_t next = 0;
      for (Index j : unused) {
        if (next < order.size() && err[order[next]] > 0.0) {
          const Index s = order[next++];
          d.col(j) = resid.col(s) / std::sqrt(err[s]);
        } else {
          d.col(j) = rng.unit_vector(n);
        }
      }
    }

    const double loss = resid.squaredNorm() / static_cast<double>(count);
    require(std::isfinite(loss), ErrorCode::divergence, "ksvd loss became non-finite");
    out.loss_history.push_back(loss);
  }

  if (opts.iterations == 0) {
    sparse_code_all();
    out.final_loss = resid.squaredNorm() / static_cast<double>(count);
  } else {
    out.final_loss = out.loss_history.back();
  }
  canonicalize_signs(d);
  out.atoms = std::move(d);
  return out;
}

MatchReport match_atoms(const Matrix& learned, const Matrix& truth, double threshold) {
  require(learned.rows() == truth.rows(), ErrorCode::dimension_mismatch, "learned and truth atoms differ in dimension");
  MatchReport rep;
  rep.threshold = threshold;
  rep.truth_count = truth.cols();
  rep.learned_count = learned.cols();

  const Matrix cos = (learned.transpose() * truth).cwiseAbs();
  std::vector<std::tuple<double, Index, Index>> cand;
  for (Index l = 0; l < cos.rows(); ++l)
    for (Index t = 0; t < cos.cols(); ++t)
      if (cos(l, t) >= threshold) cand.emplace_back(std::min(cos(l, t), 1.0), l, t);
  std::stable_sort(cand.begin(), cand.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });

  std::vector<bool> used_l(static_cast<std::size_t>(learned.cols()), false);
  std::vector<bool> used_t(static_cast<std::size_t>(truth.cols()), false);
  for (const auto& [c, l, t] : cand) {
    if (used_l[static_cast<std::size_t>(l)] || used_t[static_cast<std::size_t>(t)]) continue;
    used_l[static_cast<std::size_t>(l)] = used_t[static_cast<std::size_t>(t)] = true;
    rep.assignment[l] = {t, c};
  }
  for (Index l = 0; l < learned.cols(); ++l)
    if (!used_l[static_cast<std::size_t>(l)]) rep.unmatched_learned.push_back(l);
  for (Index t = 0; t < truth.cols(); ++t)
    if (!used_t[static_cast<std::size_t>(t)]) rep.unmatched_truth.push_back(t);
  rep.recovery_rate = truth.cols() == 0 ? 0.0
                                        : static_cast<double>(rep.assignment.size()) / static_cast<double>(truth.cols());
  return rep;
}

MatchReport match_atoms(const LearnedDictionary& learned, const FeatureDictionary& truth, double threshold) {
  return match_atoms(learned.atoms, truth.atoms(), threshold);
}

}  // namespace relcomp
