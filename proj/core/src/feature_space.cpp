#include "relcomp/feature_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "relcomp/random.hpp"

namespace relcomp {

FeatureDictionary::FeatureDictionary(Matrix atoms) : atoms_(std::move(atoms)) {
  require(atoms_.rows() >= 1 && atoms_.cols() >= 1, ErrorCode::invalid_dimensions,
          "dictionary needs dim >= 1 and count >= 1");
  require_finite(atoms_, "dictionary");
  for (Index i = 0; i < atoms_.cols(); ++i) {
    require(std::abs(atoms_.col(i).norm() - 1.0) <= 1e-9, ErrorCode::invalid_argument,
            "atom " + std::to_string(i) + " is not unit norm");
  }
  coherence_ = mutual_coherence(atoms_);
}

SparseCode SparseCode::dense(const Vector& values) {
  SparseCode code(values.size());
  for (Index i = 0; i < values.size(); ++i) code.entries_[i] = values[i];
  return code;
}

double SparseCode::operator[](Index i) const {
  const auto it = entries_.find(i);
  return it == entries_.end() ? 0.0 : it->second;
}

void SparseCode::set(Index i, double value) {
  require(i >= 0 && i < length_, ErrorCode::invalid_argument, "code index out of range");
  require(std::isfinite(value), ErrorCode::non_finite, "code coefficient is not finite");
  entries_[i] = value;
}

Vector SparseCode::to_dense() const {
  Vector v = Vector::Zero(length_);
  for (const auto& [i, a] : entries_) v[i] = a;
  return v;
}

double SparseCode::l1_norm() const {
  double s = 0.0;
  for (const auto& [i, a] : entries_) s += std::abs(a);
  return s;
}

Matrix haar_orthogonal(Index dim, std::uint64_t seed) {
  require(dim >= 1, ErrorCode::invalid_dimensions, "orthogonal matrix needs dim >= 1");
  Rng rng(seed);
  const Matrix z = rng.normal_matrix(dim, dim);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < dim; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

FeatureDictionary make_dictionary(Index dim, Index count, DictionaryKind kind, std::uint64_t seed) {
  require(dim >= 1 && count >= 1, ErrorCode::invalid_dimensions, "dictionary needs dim >= 1 and count >= 1");
  if (kind == DictionaryKind::orthogonal_subset) {
    require(count <= dim, ErrorCode::invalid_dimensions, "orthogonal-subset needs count <= dim");
    return FeatureDictionary(haar_orthogonal(dim, seed).leftCols(count));
  }
  Rng rng(seed);
  Matrix atoms(dim, count);
  for (Index i = 0; i < count; ++i) atoms.col(i) = rng.unit_vector(dim);
  return FeatureDictionary(std::move(atoms));
}

double mutual_coherence(const Matrix& unit_columns) {
  const Index m = unit_columns.cols();
  if (m < 2) return 0.0;
  const Matrix gram = unit_columns.transpose() * unit_columns;
  double best = 0.0;
  for (Index j = 1; j < m; ++j)
    for (Index i = 0; i < j; ++i) best = std::max(best, std::abs(gram(i, j)));
  return std::min(best, 1.0);
}

double mutual_coherence(const FeatureDictionary& dict) { return dict.coherence(); }

SparseCode sample_code(Index length, double presence_prob, const Amplitude& amplitude, Rng& rng) {
  require(presence_prob >= 0.0 && presence_prob <= 1.0, ErrorCode::invalid_probability,
          "presence probability must lie in [0, 1]");
  SparseCode code(length);
  for (Index i = 0; i < length; ++i) {
    if (!rng.bernoulli(presence_prob)) continue;
    const double a = amplitude.kind == Amplitude::Kind::constant_one
                         ? 1.0
                         : rng.uniform(amplitude.lo, amplitude.hi);
    code.set(i, a);
  }
  return code;
}

SparseCode sample_code(const FeatureDictionary& dict, double presence_prob, const Amplitude& amplitude,
                       std::uint64_t seed) {
  Rng rng(seed);
  return sample_code(dict.count(), presence_prob, amplitude, rng);
}

Vector encode(const FeatureDictionary& dict, const SparseCode& code) {
  require(code.length() == dict.count(), ErrorCode::length_mismatch, "code length differs from atom count");
  Vector x = Vector::Zero(dict.dim());
  for (const auto& [i, a] : code.entries()) x += a * dict.atom(i);
  return x;
}

SparseCode readback(const FeatureDictionary& dict, const Vector& x) {
  require(x.size() == dict.dim(), ErrorCode::length_mismatch, "vector length differs from dictionary dim");
  Vector a(dict.count());
  for (Index i = 0; i < dict.count(); ++i) a[i] = dict.atom(i).dot(x);
  return SparseCode::dense(a);
}

ReadbackMetrics readback_error(const SparseCode& truth, const SparseCode& estimate, double active_threshold) {
  require(truth.length() == estimate.length(), ErrorCode::length_mismatch, "codes differ in length");
  ReadbackMetrics out;
  const Index m = truth.length();
  if (m == 0) return out;
  double sq = 0.0;
  Index est_active = 0, truth_active = 0, both = 0;
  for (Index i = 0; i < m; ++i) {
    const double t = truth[i];
    const double e = estimate[i];
    const double err = std::abs(t - e);
    out.max_abs_error = std::max(out.max_abs_error, err);
    sq += err * err;
    const bool ea = std::abs(e) >= active_threshold;
    const bool ta = std::abs(t) >= active_threshold;
    est_active += ea;
    truth_active += ta;
    both += ea && ta;
  }
  out.mse = sq / static_cast<double>(m);
  out.precision = est_active == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(est_active);
  out.recall = truth_active == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(truth_active);
  return out;
}

}  // namespace relcomp
