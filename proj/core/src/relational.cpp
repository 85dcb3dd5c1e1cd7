#include "relcomp/relational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "relcomp/feature_space.hpp"
#include "relcomp/random.hpp"

namespace relcomp {
namespace {

void require_dim(const Vector& v, Index n, const char* what) {
  require(v.size() == n, ErrorCode::dimension_mismatch,
          std::string(what) + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(n));
}

}  // namespace

void TokenSequence::validate() const {
  require(tokens.size() == positions.size(), ErrorCode::length_mismatch, "tokens and positions differ in count");
  const Index n = dim();
  for (const auto& t : tokens) require_dim(t, n, "token");
  for (const auto& p : positions) require_dim(p, n, "position");
  for (std::size_t i = 0; i < positions.size(); ++i)
    for (std::size_t j = i + 1; j < positions.size(); ++j)
      require((positions[i] - positions[j]).norm() > 1e-6, ErrorCode::invalid_argument,
              "positions " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
}

Vector lre_apply(const RelationModel& rel, const Vector& t_j) {
  require(rel.a.rows() == rel.a.cols() && rel.b.size() == rel.a.rows(), ErrorCode::dimension_mismatch,
          "relation model has inconsistent shapes");
  require_dim(t_j, rel.a.cols(), "t_j");
  return rel.a * t_j + rel.b;
}

RelationModel lre_fit(const std::vector<std::pair<Vector, Vector>>& pairs) {
  require(!pairs.empty(), ErrorCode::rank_deficient_design, "no pairs to fit");
  const Index n = pairs.front().first.size();
  const auto count = static_cast<Index>(pairs.size());
  require(count >= n + 1, ErrorCode::rank_deficient_design,
          "need at least dim + 1 = " + std::to_string(n + 1) + " pairs, got " + std::to_string(count));

  // Rows of z are [t_j, 1]; rows of y are t_i.
  Matrix z(count, n + 1);
  Matrix y(count, n);
  for (Index k = 0; k < count; ++k) {
    const auto& [src, dst] = pairs[static_cast<std::size_t>(k)];
    require_dim(src, n, "source token");
    require_dim(dst, n, "target token");
    z.row(k).head(n) = src.transpose();
    z(k, n) = 1.0;
    y.row(k) = dst.transpose();
  }
  Eigen::ColPivHouseholderQR<Matrix> qr(z);
  qr.setThreshold(1e-10);
  require(qr.rank() == n + 1, ErrorCode::rank_deficient_design, "design matrix is rank deficient");

  const Matrix gram = z.transpose() * z;
  const Eigen::LDLT<Matrix> ldlt(gram);
  require(ldlt.info() == Eigen::Success, ErrorCode::rank_deficient_design, "normal equations are singular");
  const Matrix coef = ldlt.solve(z.transpose() * y);  // (n + 1) x n

  RelationModel rel;
  rel.a = coef.topRows(n).transpose();
  rel.b = coef.row(n).transpose();
  rel.residual = (z * coef - y).squaredNorm();
  return rel;
}

Vector bind_positional(const Vector& t_i, const Matrix& a_r, const Vector& p_j) {
  const Index n = t_i.size();
  require(a_r.rows() == n && a_r.cols() == n, ErrorCode::dimension_mismatch, "A_r must be dim x dim");
  require_dim(p_j, n, "position");
  return t_i + a_r * p_j;
}

IdMatch id_match(const IdSubspace& sub, const Vector& t_i, const Vector& t_j) {
  require_dim(t_i, sub.a_id.cols(), "t_i");
  require_dim(t_j, sub.a_id.cols(), "t_j");
  const double d = (sub.a_id * (t_i - t_j)).norm();
  return {d <= sub.tau, d};
}

Index tree_distance(const TreeSpec& tree, Index i, Index j) {
  tree.check_node(i);
  tree.check_node(j);
  Index steps = 0;
  Index di = tree.depth(i);
  Index dj = tree.depth(j);
  while (di > dj) { i = tree.parent(i); --di; ++steps; }
  while (dj > di) { j = tree.parent(j); --dj; ++steps; }
  while (i != j) {
    i = tree.parent(i);
    j = tree.parent(j);
    steps += 2;
  }
  return steps;
}

std::vector<Vector> make_positions(Index count, Index dim, std::uint64_t seed) {
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  if (count <= dim) {
    const Matrix q = haar_orthogonal(dim, seed);
    for (Index k = 0; k < count; ++k) out.emplace_back(q.col(k));
  } else {
    Rng rng(seed);
    for (Index k = 0; k < count; ++k) out.push_back(rng.unit_vector(dim));
  }
  return out;
}

TokenSequence embed_tree_pythagorean(const TreeSpec& tree, Index dim, std::uint64_t seed) {
  const Index n = tree.node_count();
  require(dim >= std::max<Index>(n - 1, 1), ErrorCode::insufficient_dimension,
          "dim " + std::to_string(dim) + " is below the edge count " + std::to_string(n - 1));
  const Matrix basis = haar_orthogonal(dim, derive_seed(seed, "pythagorean/basis"));

  // Axis index for the edge above node u: nodes other than the root, in order.
  std::vector<Index> axis(static_cast<std::size_t>(n), -1);
  Index next = 0;
  for (Index u = 0; u < n; ++u)
    if (u != tree.root()) axis[static_cast<std::size_t>(u)] = next++;

  TokenSequence seq;
  seq.tokens.assign(static_cast<std::size_t>(n), Vector::Zero(dim));
  // Preorder walk: a node's token is its parent's token plus its own axis.
  auto order = tree.postorder();
  std::reverse(order.begin(), order.end());
  for (Index u : order) {
    if (u == tree.root()) continue;
    const Index p = tree.parent(u);
    seq.tokens[static_cast<std::size_t>(u)] =
        seq.tokens[static_cast<std::size_t>(p)] + basis.col(axis[static_cast<std::size_t>(u)]);
  }
  seq.positions = make_positions(n, dim, derive_seed(seed, "pythagorean/positions"));
  return seq;
}

std::pair<std::vector<double>, std::vector<double>> probe_distance_pairs(const Matrix& m, const LabeledSequence& s) {
  const Index k = s.seq.size();
  std::vector<Vector> proj;
  proj.reserve(static_cast<std::size_t>(k));
  for (const auto& t : s.seq.tokens) proj.push_back(m * t);
  std::vector<double> pred, truth;
  for (Index i = 0; i < k; ++i)
    for (Index j = i + 1; j < k; ++j) {
      pred.push_back((proj[static_cast<std::size_t>(i)] - proj[static_cast<std::size_t>(j)]).squaredNorm());
      truth.push_back(static_cast<double>(tree_distance(s.tree, i, j)));
    }
  return {pred, truth};
}

namespace {

struct PairSet {
  Matrix deltas;  // dim x pairs
  Vector dist;
};

PairSet collect_pairs(const std::vector<LabeledSequence>& data, Index dim) {
  Index total = 0;
  for (const auto& s : data) total += s.seq.size() * (s.seq.size() - 1) / 2;
  PairSet ps{Matrix(dim, total), Vector(total)};
  Index c = 0;
  for (const auto& s : data) {
    require(s.tree.node_count() == s.seq.size(), ErrorCode::length_mismatch, "tree size differs from token count");
    for (Index i = 0; i < s.seq.size(); ++i)
      for (Index j = i + 1; j < s.seq.size(); ++j) {
        require_dim(s.seq.tokens[static_cast<std::size_t>(i)], dim, "token");
        ps.deltas.col(c) = s.seq.tokens[static_cast<std::size_t>(i)] - s.seq.tokens[static_cast<std::size_t>(j)];
        ps.dist[c] = static_cast<double>(tree_distance(s.tree, i, j));
        ++c;
      }
  }
  return ps;
}

double pair_loss(const Matrix& m, const PairSet& ps) {
  if (ps.dist.size() == 0) return 0.0;
  const Matrix proj = m * ps.deltas;
  return (proj.colwise().squaredNorm().transpose() - ps.dist).cwiseAbs().mean();
}

}  // namespace

double structural_probe_loss(const StructuralProbe& probe, const std::vector<LabeledSequence>& data) {
  require(!data.empty(), ErrorCode::invalid_argument, "no labeled sequences");
  return pair_loss(probe.m, collect_pairs(data, data.front().seq.dim()));
}

StructuralProbe fit_structural_probe(const std::vector<LabeledSequence>& data, const ProbeOptions& opts) {
  require(!data.empty(), ErrorCode::invalid_argument, "no labeled sequences");
  const Index dim = data.front().seq.dim();
  const Index rank = opts.rank == 0 ? dim : opts.rank;
  require(rank >= 1 && rank <= dim, ErrorCode::invalid_rank, "probe rank must lie in [1, dim]");
  require(opts.epochs >= 0 && opts.step_size > 0, ErrorCode::invalid_argument, "bad probe optimizer settings");
  const PairSet ps = collect_pairs(data, dim);
  const auto pairs = static_cast<double>(std::max<Index>(ps.dist.size(), 1));

  Rng rng(derive_seed(opts.seed, "structural-probe/init"));
  Matrix m = rng.normal_matrix(rank, dim) / std::sqrt(static_cast<double>(dim));

  StructuralProbe best{m, std::numeric_limits<double>::infinity(), {}};
  Matrix mom = Matrix::Zero(rank, dim), vel = Matrix::Zero(rank, dim);
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  for (int epoch = 0;; ++epoch) {
    const Matrix proj = m * ps.deltas;
    const Vector err = proj.colwise().squaredNorm().transpose() - ps.dist;
    const double loss = ps.dist.size() == 0 ? 0.0 : err.cwiseAbs().mean();
    require(std::isfinite(loss), ErrorCode::divergence, "probe loss became non-finite at epoch " + std::to_string(epoch));
    best.loss_history.push_back(loss);
    if (loss < best.final_loss) {
      best.final_loss = loss;
      best.m = m;
    }
    if (epoch == opts.epochs) break;
    // d/dM |‖Mδ‖² - d| = sign(err) 2 (Mδ) δᵀ
    Vector w(err.size());
    for (Index c = 0; c < err.size(); ++c) w[c] = err[c] > 0 ? 1.0 : (err[c] < 0 ? -1.0 : 0.0);
    const Matrix grad = (2.0 / pairs) * (proj * w.asDiagonal()) * ps.deltas.transpose();
    mom = b1 * mom + (1 - b1) * grad;
    vel = b2 * vel + (1 - b2) * grad.cwiseAbs2();
    const double t = epoch + 1;
    const double step = opts.step_size / (1.0 + epoch / 100.0);
    const double c1 = 1 - std::pow(b1, t), c2 = 1 - std::pow(b2, t);
    m.array() -= step * (mom.array() / c1) / ((vel.array() / c2).sqrt() + eps);
  }
  return best;
}

std::vector<Vector> token_differences(const TokenSequence& seq, PairPolicy policy,
                                      const std::vector<std::pair<Index, Index>>& labeled) {
  const Index k = seq.size();
  require(k >= 2, ErrorCode::too_few_tokens, "need at least two tokens");
  auto tok = [&](Index i) -> const Vector& {
    require(i >= 0 && i < k, ErrorCode::invalid_argument, "pair index out of range");
    return seq.tokens[static_cast<std::size_t>(i)];
  };
  std::vector<Vector> out;
  switch (policy) {
    case PairPolicy::adjacent:
      for (Index i = 0; i + 1 < k; ++i) out.push_back(tok(i) - tok(i + 1));
      break;
    case PairPolicy::all_pairs:
      for (Index i = 0; i < k; ++i)
        for (Index j = i + 1; j < k; ++j) out.push_back(tok(i) - tok(j));
      break;
    case PairPolicy::labeled:
      for (const auto& [i, j] : labeled) out.push_back(tok(i) - tok(j));
      break;
  }
  return out;
}

RelationDataset make_relation_dataset(Index dim, Index relation_count, Index sequence_count, Index tokens_per_sequence,
                                      double noise, std::uint64_t seed) {
  require(dim >= 1 && relation_count >= 1 && sequence_count >= 1, ErrorCode::invalid_dimensions,
          "relation dataset sizes must be positive");
  require(tokens_per_sequence >= 2 && tokens_per_sequence % 2 == 0, ErrorCode::too_few_tokens,
          "tokens per sequence must be even and at least 2");
  RelationDataset ds;
  ds.relations = make_dictionary(dim, relation_count, DictionaryKind::gaussian_normalized,
                                 derive_seed(seed, "relations/atoms")).atoms();
  Rng rng(derive_seed(seed, "relations/tokens"));
  for (Index s = 0; s < sequence_count; ++s) {
    TokenSequence seq;
    std::vector<std::pair<Index, Index>> labels;
    // Token 2q + 1 is derived from token 2q through a hidden relation.
    for (Index q = 0; q < tokens_per_sequence / 2; ++q) {
      Vector head = rng.normal_vector(dim) / std::sqrt(static_cast<double>(dim));
      const Index rel = rng.below(relation_count);
      Vector tail = head + ds.relations.col(rel) + noise / std::sqrt(static_cast<double>(dim)) * rng.normal_vector(dim);
      seq.tokens.push_back(std::move(head));
      seq.tokens.push_back(std::move(tail));
      labels.emplace_back(2 * q + 1, 2 * q);
    }
    seq.positions = make_positions(tokens_per_sequence, dim, derive_seed(seed, "relations/positions", static_cast<std::uint64_t>(s)));
    ds.sequences.push_back(std::move(seq));
    ds.labeled_pairs.push_back(std::move(labels));
  }
  return ds;
}

IdDataset make_id_dataset(Index dim, Index id_rank, Index pair_count, double content_scale, std::uint64_t seed) {
  require(id_rank >= 1 && id_rank <= dim, ErrorCode::invalid_rank, "ID rank must lie in [1, dim]");
  const Matrix q = haar_orthogonal(dim, derive_seed(seed, "id/basis"));
  const Matrix id_basis = q.leftCols(id_rank);
  const Matrix content_basis = q.rightCols(dim - id_rank);
  IdDataset ds;
  ds.sub.a_id = id_basis.transpose();
  ds.sub.tau = 0.5;
  Rng rng(derive_seed(seed, "id/pairs"));
  const double jitter = 0.05;
  auto token = [&](const Vector& id) {
    Vector t = id_basis * id;
    if (dim > id_rank) t += content_scale * content_basis * rng.normal_vector(dim - id_rank);
    return Vector(t + jitter / std::sqrt(static_cast<double>(dim)) * rng.normal_vector(dim));
  };
  for (Index k = 0; k < pair_count; ++k) {
    const bool bound = rng.bernoulli(0.5);
    const Vector id_i = rng.normal_vector(id_rank);
    const Vector id_j = bound ? id_i : rng.normal_vector(id_rank);
    Vector t_i = token(id_i);
    Vector t_j = token(id_j);
    ds.pairs.emplace_back(std::move(t_i), std::move(t_j));
    ds.labels.push_back(bound ? 1 : 0);
  }
  return ds;
}

}  // namespace relcomp
