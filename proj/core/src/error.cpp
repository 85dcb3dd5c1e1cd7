#include "relcomp/types.hpp"

namespace relcomp {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_dimensions: return "invalid-dimensions";
    case ErrorCode::length_mismatch: return "length-mismatch";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::invalid_probability: return "invalid-probability";
    case ErrorCode::invalid_rank: return "invalid-rank";
    case ErrorCode::non_finite: return "non-finite";
    case ErrorCode::degenerate_cue: return "degenerate-cue";
    case ErrorCode::singular_spectrum: return "singular-spectrum";
    case ErrorCode::malformed_tree: return "malformed-tree";
    case ErrorCode::invalid_node: return "invalid-node";
    case ErrorCode::insufficient_dimension: return "insufficient-dimension";
    case ErrorCode::rank_deficient_design: return "rank-deficient-design";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::degenerate_data: return "degenerate-data";
    case ErrorCode::too_few_tokens: return "too-few-tokens";
    case ErrorCode::single_class_data: return "single-class-data";
    case ErrorCode::non_unit_direction: return "non-unit-direction";
    case ErrorCode::empty_positive_set: return "empty-positive-set";
    case ErrorCode::construction_failure: return "construction-failure";
    case ErrorCode::insufficient_atoms: return "insufficient-atoms";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::schema_violation: return "schema-violation";
    case ErrorCode::malformed_header: return "malformed-header";
    case ErrorCode::bad_token: return "bad-token";
    case ErrorCode::count_mismatch: return "count-mismatch";
    case ErrorCode::io_failure: return "io-failure";
  }
  return "unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::non_finite:
    case ErrorCode::degenerate_cue:
    case ErrorCode::singular_spectrum:
    case ErrorCode::rank_deficient_design:
    case ErrorCode::divergence:
    case ErrorCode::degenerate_data:
    case ErrorCode::single_class_data:
    case ErrorCode::empty_positive_set:
    case ErrorCode::construction_failure:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void require_finite(const Vector& v, std::string_view what) {
  require(v.allFinite(), ErrorCode::non_finite, std::string(what) + " has non-finite entries");
}

void require_finite(const Matrix& m, std::string_view what) {
  require(m.allFinite(), ErrorCode::non_finite, std::string(what) + " has non-finite entries");
}

}  // namespace relcomp
