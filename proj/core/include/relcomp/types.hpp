#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace relcomp {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Representations (x, y, r, token vectors) are plain dense vectors; the
// finiteness invariant is checked at the module boundaries that accept them.
using RepresentationVector = Vector;

enum class ErrorCode {
  invalid_argument,
  invalid_dimensions,
  length_mismatch,
  dimension_mismatch,
  invalid_probability,
  invalid_rank,
  non_finite,
  degenerate_cue,
  singular_spectrum,
  malformed_tree,
  invalid_node,
  insufficient_dimension,
  rank_deficient_design,
  divergence,
  degenerate_data,
  too_few_tokens,
  single_class_data,
  non_unit_direction,
  empty_positive_set,
  construction_failure,
  insufficient_atoms,
  parse_error,
  schema_violation,
  malformed_header,
  bad_token,
  count_mismatch,
  io_failure,
};

std::string_view to_string(ErrorCode code);

// True for failures that come from the numbers rather than the inputs'
// shape: divergence, degenerate data, singular spectra and the like.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

void require_finite(const Vector& v, std::string_view what);
void require_finite(const Matrix& m, std::string_view what);

}  // namespace relcomp
