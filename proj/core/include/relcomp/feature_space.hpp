#pragma once

#include <cstdint>
#include <map>

#include "relcomp/types.hpp"

namespace relcomp {

enum class DictionaryKind { gaussian_normalized, orthogonal_subset };

// Ground-truth atoms stored as the columns of an n x m matrix.
class FeatureDictionary {
 public:
  // Checks unit norms (within 1e-9) and caches the coherence.
  explicit FeatureDictionary(Matrix atoms);

  Index dim() const { return atoms_.rows(); }
  Index count() const { return atoms_.cols(); }
  const Matrix& atoms() const { return atoms_; }
  auto atom(Index i) const { return atoms_.col(i); }
  double coherence() const { return coherence_; }

 private:
  Matrix atoms_;
  double coherence_ = 0.0;
};

class SparseCode {
 public:
  SparseCode() = default;
  explicit SparseCode(Index length) : length_(length) {}
  static SparseCode dense(const Vector& values);

  Index length() const { return length_; }
  const std::map<Index, double>& entries() const { return entries_; }
  Index support_size() const { return static_cast<Index>(entries_.size()); }

  double operator[](Index i) const;
  void set(Index i, double value);
  Vector to_dense() const;
  double l1_norm() const;

  friend bool operator==(const SparseCode&, const SparseCode&) = default;

 private:
  Index length_ = 0;
  std::map<Index, double> entries_;
};

struct Amplitude {
  enum class Kind { constant_one, uniform } kind = Kind::constant_one;
  double lo = 1.0;
  double hi = 1.0;

  static Amplitude constant() { return {}; }
  static Amplitude uniform_between(double lo, double hi) { return {Kind::uniform, lo, hi}; }
};

struct ReadbackMetrics {
  double max_abs_error = 0.0;
  double mse = 0.0;
  double precision = 1.0;
  double recall = 1.0;
};

// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
// signs of diag(R) folded into Q.
Matrix haar_orthogonal(Index dim, std::uint64_t seed);

FeatureDictionary make_dictionary(Index dim, Index count, DictionaryKind kind, std::uint64_t seed);
double mutual_coherence(const Matrix& unit_columns);
double mutual_coherence(const FeatureDictionary& dict);

class Rng;
SparseCode sample_code(Index length, double presence_prob, const Amplitude& amplitude, Rng& rng);
SparseCode sample_code(const FeatureDictionary& dict, double presence_prob, const Amplitude& amplitude,
                       std::uint64_t seed);

Vector encode(const FeatureDictionary& dict, const SparseCode& code);
SparseCode readback(const FeatureDictionary& dict, const Vector& x);
ReadbackMetrics readback_error(const SparseCode& truth, const SparseCode& estimate, double active_threshold);

}  // namespace relcomp
