#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "relcomp/feature_space.hpp"

namespace relcomp {

enum class Mechanism { slots, additive_pair, hrr, outer };

std::string to_string(Mechanism m);
Mechanism mechanism_from_string(const std::string& s);

// k constituents per sample for every mechanism:
//   slots          r = Σ_s A_s y_s, Haar A_s (flat rank-r A_s when rank < n)
//   additive_pair  r = A x + B y, k ignored; A flat rank-r, B Haar
//   hrr            r = Σ_s role_s ⊛ y_s, read back by correlation
//   outer          r = Σ_s y_s key_sᵀ, read back with unbind_outer
struct BenchGrid {
  Mechanism mechanism = Mechanism::slots;
  std::vector<Index> n{256};
  std::vector<Index> m{256};
  std::vector<Index> k{1};
  std::vector<Index> rank{0};  // 0 means full rank (n)
  std::vector<double> p{0.01};
  std::vector<std::uint64_t> seeds{0};
  Index samples_per_cell = 50;
  DictionaryKind dictionary = DictionaryKind::gaussian_normalized;
  double active_threshold = 0.5;
  // Share of atoms placed inside A's row space for low-rank additive cells.
  double aligned_fraction = 0.25;
  std::uint64_t master_seed = 0;
  int threads = 1;

  void validate() const;
};

struct BenchCell {
  Mechanism mechanism = Mechanism::slots;
  Index n = 0, m = 0, k = 0, rank = 0;
  double p = 0.0;
  Index seed_count = 0;
  double mae_mean = 0.0;
  double mae_std = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double recall_std = 0.0;
  double norm_growth = 0.0;
  // additive_pair only: recall of the A-side code over all atoms and over
  // atoms with ‖A vᵢ‖ >= 0.9.
  std::optional<double> a_side_recall;
  std::optional<double> stratified_recall;
  std::string error;  // non-empty when the cell failed
};

std::vector<BenchCell> run_capacity(const BenchGrid& grid);

struct MonotonicityCheck {
  std::string parameter;  // "k" or "m"
  std::string group;      // the fixed parameters, e.g. "n=256 m=256 rank=256 p=0.01"
  std::vector<double> values;
  std::vector<double> means;
  bool non_decreasing = true;
};

// Groups cells that differ only in `parameter` and checks the seed-averaged
// MAE is non-decreasing along it.
std::vector<MonotonicityCheck> monotonicity_checks(const std::vector<BenchCell>& cells, const std::string& parameter);

inline constexpr const char* kCapacityCsvHeader =
    "mechanism,n,m,k,rank,p,seed_count,mae_mean,mae_std,precision,recall,norm_growth";

struct CapacitySummary {
  std::string csv;
  std::string json;
};

CapacitySummary summarize(const std::vector<BenchCell>& cells);

}  // namespace relcomp
