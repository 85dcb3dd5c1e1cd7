#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "relcomp/dict_learning.hpp"
#include "relcomp/feature_space.hpp"

namespace relcomp {

struct EchoSamples {
  Matrix z;  // dim x sample-count
  std::vector<SparseCode> x_codes;
  std::vector<SparseCode> y_codes;
};

// z = encode(x) + A encode(y) with independent Bernoulli codes.
EchoSamples generate_pair_samples(const FeatureDictionary& dict, const Matrix& a, Index sample_count,
                                  double presence_prob, std::uint64_t seed);

// [V, A V]: columns 0..m-1 are the plain atoms, m..2m-1 their echoes.
Matrix echo_extended_atoms(const FeatureDictionary& dict, const Matrix& a);

struct ProcrustesResult {
  Matrix w;
  double residual = 0.0;  // sum of squared errors ‖W s - t‖²
};

// Orthogonal W minimizing Σ‖W sᵢ - tᵢ‖² over column pairs, from the SVD of
// the cross-covariance T Sᵀ.
ProcrustesResult orthogonal_procrustes(const Matrix& sources, const Matrix& targets);
ProcrustesResult orthogonal_procrustes(const std::vector<Vector>& sources, const std::vector<Vector>& targets);

struct EchoPair {
  Index source = 0;  // W maps this atom ...
  Index target = 0;  // ... onto sign · this one
  int sign = 1;
  double residual = 0.0;
};

struct EchoReport {
  std::vector<EchoPair> pairs;
  Matrix w;
  Index inlier_count = 0;
  Index hypothesis_size = 0;
  std::optional<double> alignment_error;
  double multiplicity_factor = 0.0;
  Index atom_count = 0;
};

struct EchoOptions {
  Index hypothesis_size = 0;  // 0: max(8, dim / 16)
  int trials = 200;           // anchor atoms tried, capped at the atom count
  double inlier_tol = 0.15;
  double gram_tol = 0.0;      // 0: 2.5 · inlier_tol / sqrt(dim)
  std::uint64_t seed = 0;
  int threads = 1;
};

Index default_hypothesis_size(Index dim);

// Searches for one orthogonal W pairing atoms as W u ≈ ±w. Each trial takes
// an anchor atom and, for every partner and sign, grows a set of pairs whose
// Gram entries agree (⟨u_a, u_c⟩ ≈ ±⟨w_b, w_d⟩), first by greedy clique
// search and then by adding the best Gram-consistent pair while every
// Procrustes residual stays within inlier_tol. Hypotheses smaller than
// hypothesis_size are discarded. The largest one (lowest trial on ties) is
// refit, inliers are recounted under that W, and pairs are chosen greedily
// by ascending residual without reusing atoms.
EchoReport detect_echo_pairs(const Matrix& atoms, const EchoOptions& opts);
EchoReport detect_echo_pairs(const LearnedDictionary& learned, const EchoOptions& opts);

// min over W vs Wᵀ and a global sign of ‖(W' - A) V‖_F / ‖A V‖_F, where the
// columns of V are the truth atoms the comparison is restricted to.
double alignment_error(const Matrix& w, const Matrix& a, const Matrix& truth_atoms);

// Fills alignment_error and multiplicity_factor (pairs / truth atom count).
void attach_truth(EchoReport& report, const Matrix& a, const Matrix& truth_atoms);

struct HrrProjection {};
struct MatrixProjection {
  Matrix pi;  // out-dim x dim², applied to the row-major flattening of v wᵀ
};
using TensorProjection = std::variant<HrrProjection, MatrixProjection>;

Vector project_outer(const TensorProjection& proj, const Vector& x, const Vector& y);
// π(vᵢ vⱼᵀ) for all ordered (i, j) in row-major order.
std::vector<Vector> enumerate_tensor_features(const FeatureDictionary& dict, const TensorProjection& proj);

struct MultiplicitySummary {
  Index learned_count = 0;
  Index truth_count = 0;           // m plain atoms
  Index extended_truth_count = 0;  // 2m
  double plain_recovery = 0.0;     // fraction of vᵢ matched
  double echo_recovery = 0.0;      // fraction of Avᵢ matched
  double multiplicity_factor = 0.0;
  // Detected pairs whose atoms match some (vᵢ, Avᵢ) in either orientation.
  Index consistent_pairs = 0;
  // Extended-truth indices (i < m: vᵢ, else A v_{i-m}) no learned atom matched.
  std::vector<Index> dark_atoms;
};

// `match` must be computed against echo_extended_atoms(truth, A).
MultiplicitySummary multiplicity_report(const MatchReport& match, const EchoReport& echo, const FeatureDictionary& truth);

}  // namespace relcomp
