#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "relcomp/feature_space.hpp"

namespace relcomp {

enum class LearnMethod { ksvd, sae };

struct LearnedDictionary {
  Matrix atoms;  // dim x atom-count, unit columns
  LearnMethod method = LearnMethod::ksvd;
  int iterations = 0;
  std::vector<double> loss_history;
  double final_loss = 0.0;
  std::uint64_t seed = 0;
  std::map<std::string, double> hyperparameters;

  Index dim() const { return atoms.rows(); }
  Index count() const { return atoms.cols(); }
};

std::string to_string(LearnMethod m);

struct OmpStop {
  Index max_support = 0;      // 0 means no support limit
  double residual_tol = 0.0;  // stop once ‖residual‖ <= residual_tol
};

struct OmpResult {
  SparseCode code;
  // ‖residual‖ before the first selection and after each one.
  std::vector<double> residual_norms;
};

// Greedy pursuit: add the atom with the largest |correlation| to the
// residual (lowest index on ties), refit all coefficients on the support by
// least squares, repeat until a stop condition holds.
OmpResult omp_sparse_code(const Matrix& atoms, const Vector& x, const OmpStop& stop);

// Same pursuit driven by a precomputed Gram matrix DᵀD, correlations Dᵀx
// and ‖x‖²; the building block of the batch coder.
OmpResult omp_gram(const Matrix& gram, const Vector& dtx, double x_norm2, const OmpStop& stop);

struct KsvdOptions {
  Index atom_count = 0;
  Index sparsity = 3;
  double residual_tol = 1e-9;
  int iterations = 30;
  int power_iterations = 4;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Samples are the columns of `samples`.
LearnedDictionary fit_dictionary_ksvd(const Matrix& samples, const KsvdOptions& opts);

struct SaeOptions {
  Index width = 0;
  double l1_weight = 1e-3;
  double step_size = 1e-3;
  int epochs = 200;
  Index batch = 256;
  std::uint64_t seed = 0;
};

// One hidden ReLU layer, linear decoder. Loss per batch is
// mean((x̂ - x)²) + l1_weight · mean(h), trained with Adam; decoder
// columns are renormalized to unit length after every step.
LearnedDictionary fit_dictionary_sae(const Matrix& samples, const SaeOptions& opts);

// Max relative error between analytic and central-difference gradients on
// a random instance with dim <= 8. `perturbation` scales the analytic
// encoder gradient by (1 + perturbation) as a negative control.
double sae_gradient_check(Index width, double l1_weight, std::uint64_t seed, double perturbation = 0.0);

struct MatchReport {
  struct Entry {
    Index truth = 0;
    double cosine = 0.0;  // absolute value
  };
  std::map<Index, Entry> assignment;  // learned index -> truth match
  std::vector<Index> unmatched_learned;
  std::vector<Index> unmatched_truth;
  double recovery_rate = 0.0;
  double threshold = 0.9;
  Index truth_count = 0;
  Index learned_count = 0;
};

// Greedy matching on descending |cosine|; each atom on either side is used
// at most once and pairs below threshold are left unmatched.
MatchReport match_atoms(const Matrix& learned, const Matrix& truth, double threshold = 0.9);
MatchReport match_atoms(const LearnedDictionary& learned, const FeatureDictionary& truth, double threshold = 0.9);

// Flips each column so that its first nonzero coordinate is nonnegative.
void canonicalize_signs(Matrix& atoms);

}  // namespace relcomp
