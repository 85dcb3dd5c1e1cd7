#include <algorithm>
#include <cmath>
#include <string>

#include "relcomp/dict_learning.hpp"
#include "relcomp/random.hpp"

namespace relcomp {
namespace {

struct SaeParams {
  Matrix we;  // width x dim
  Vector be;
  Matrix wd;  // dim x width
  Vector bd;
};

struct SaeGrads {
  Matrix we;
  Vector be;
  Matrix wd;
  Vector bd;
};

double sae_loss(const SaeParams& p, const Matrix& x, double l1_weight) {
  const Matrix pre = (p.we * x).colwise() + p.be;
  const Matrix h = pre.cwiseMax(0.0);
  const Matrix xh = (p.wd * h).colwise() + p.bd;
  const auto b = static_cast<double>(x.cols());
  return (xh - x).squaredNorm() / (b * static_cast<double>(x.rows())) +
         l1_weight * h.sum() / (b * static_cast<double>(h.rows()));
}

// Loss and gradients for one batch (columns of x).
double sae_loss_and_grads(const SaeParams& p, const Matrix& x, double l1_weight, SaeGrads& g) {
  const auto n = static_cast<double>(x.rows());
  const auto w = static_cast<double>(p.we.rows());
  const auto b = static_cast<double>(x.cols());
  const Matrix pre = (p.we * x).colwise() + p.be;
  const Matrix h = pre.cwiseMax(0.0);
  const Matrix diff = ((p.wd * h).colwise() + p.bd) - x;
  const double loss = diff.squaredNorm() / (b * n) + l1_weight * h.sum() / (b * w);

  const Matrix dxh = (2.0 / (b * n)) * diff;
  g.wd = dxh * h.transpose();
  g.bd = dxh.rowwise().sum();
  Matrix dpre = (p.wd.transpose() * dxh).array() + l1_weight / (b * w);
  dpre = dpre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  g.we = dpre * x.transpose();
  g.be = dpre.rowwise().sum();
  return loss;
}

void normalize_columns(Matrix& m) {
  for (Index j = 0; j < m.cols(); ++j) {
    const double nrm = m.col(j).norm();
    if (nrm > 0.0) m.col(j) /= nrm;
  }
}

SaeParams init_params(Index dim, Index width, Rng& rng) {
  SaeParams p;
  p.wd.resize(dim, width);
  for (Index j = 0; j < width; ++j) p.wd.col(j) = rng.unit_vector(dim);
  p.we = p.wd.transpose();
  p.be = Vector::Zero(width);
  p.bd = Vector::Zero(dim);
  return p;
}

struct Adam {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;

  template <typename M>
  void step(M& param, const M& grad, M& m, M& v) const {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

LearnedDictionary fit_dictionary_sae(const Matrix& samples, const SaeOptions& opts) {
  const Index n = samples.rows();
  const Index count = samples.cols();
  require(opts.width >= 1, ErrorCode::invalid_argument, "width must be at least 1");
  require(n >= 1 && count >= 1, ErrorCode::invalid_dimensions, "need at least one nonempty sample");
  require(opts.batch >= 1 && opts.epochs >= 0 && opts.step_size > 0 && opts.l1_weight >= 0,
          ErrorCode::invalid_argument, "bad SAE optimizer settings");
  require_finite(samples, "samples");

  Rng init_rng(derive_seed(opts.seed, "sae/init"));
  SaeParams p = init_params(n, opts.width, init_rng);
  SaeGrads g;
  SaeParams m1{Matrix::Zero(opts.width, n), Vector::Zero(opts.width), Matrix::Zero(n, opts.width), Vector::Zero(n)};
  SaeParams m2 = m1;
  Adam adam{opts.step_size};

  LearnedDictionary out;
  out.method = LearnMethod::sae;
  out.seed = opts.seed;
  out.iterations = opts.epochs;
  out.hyperparameters = {{"width", static_cast<double>(opts.width)},
                         {"l1_weight", opts.l1_weight},
                         {"step_size", opts.step_size},
                         {"epochs", static_cast<double>(opts.epochs)},
                         {"batch", static_cast<double>(opts.batch)}};

  Matrix batch;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Rng shuffle(derive_seed(opts.seed, "sae/shuffle", static_cast<std::uint64_t>(epoch)));
    const auto order = shuffle.permutation(count);
    double weighted = 0.0;
    for (Index start = 0; start < count; start += opts.batch) {
      const Index len = std::min(opts.batch, count - start);
      batch.resize(n, len);
      for (Index c = 0; c < len; ++c) batch.col(c) = samples.col(order[static_cast<std::size_t>(start + c)]);
      const double loss = sae_loss_and_grads(p, batch, opts.l1_weight, g);
      require(std::isfinite(loss), ErrorCode::divergence, "SAE loss became non-finite in epoch " + std::to_string(epoch));
      weighted += loss * static_cast<double>(len);
      ++adam.t;
      adam.step(p.we, g.we, m1.we, m2.we);
      adam.step(p.be, g.be, m1.be, m2.be);
      adam.step(p.wd, g.wd, m1.wd, m2.wd);
      adam.step(p.bd, g.bd, m1.bd, m2.bd);
      normalize_columns(p.wd);
    }
    out.loss_history.push_back(weighted / static_cast<double>(count));
  }
  out.final_loss = opts.epochs > 0 ? out.loss_history.back() : sae_loss(p, samples, opts.l1_weight);
  require(std::isfinite(out.final_loss), ErrorCode::divergence, "SAE loss is non-finite");

  out.atoms = p.wd;
  normalize_columns(out.atoms);
  canonicalize_signs(out.atoms);
  return out;
}

double sae_gradient_check(Index width, double l1_weight, std::uint64_t seed, double perturbation) {
  require(width >= 1 && width <= 16, ErrorCode::invalid_argument, "gradient check width must lie in [1, 16]");
  const Index dim = 6;
  const Index batch = 5;
  const double h = 1e-5;

  // Resample until no pre-activation sits within reach of the ReLU kink and
  // every hidden unit fires on some sample (otherwise its encoder gradient
  // is identically zero).
  SaeParams p;
  Matrix x;
  for (std::uint64_t attempt = 0;; ++attempt) {
    Rng rng(derive_seed(seed, "sae/gradcheck", attempt));
    x = rng.normal_matrix(dim, batch);
    p.we = rng.normal_matrix(width, dim) * 0.5;
    p.be = rng.normal_vector(width) * 0.1;
    p.wd = rng.normal_matrix(dim, width) * 0.5;
    p.bd = rng.normal_vector(dim) * 0.1;
    const Matrix pre = (p.we * x).colwise() + p.be;
    if (pre.cwiseAbs().minCoeff() > 1e-2 && (pre.rowwise().maxCoeff().array() > 0).all()) break;
    require(attempt < 1000, ErrorCode::construction_failure, "could not draw a kink-free instance");
  }

  SaeGrads g;
  sae_loss_and_grads(p, x, l1_weight, g);
  g.we *= 1.0 + perturbation;

  double worst = 0.0;
  auto check = [&](auto& param, const auto& grad) {
    for (Index i = 0; i < param.size(); ++i) {
      const double keep = param.data()[i];
      param.data()[i] = keep + h;
      const double up = sae_loss(p, x, l1_weight);
      param.data()[i] = keep - h;
      const double down = sae_loss(p, x, l1_weight);
      param.data()[i] = keep;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = grad.data()[i];
      const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
      worst = std::max(worst, std::abs(numeric - analytic) / scale);
    }
  };
  check(p.we, g.we);
  check(p.be, g.be);
  check(p.wd, g.wd);
  check(p.bd, g.bd);
  return worst;
}

}  // namespace relcomp
