#pragma once

#include <cstdint>
#include <map>
#include <variant>
#include <vector>

#include "relcomp/feature_space.hpp"
#include "relcomp/tree.hpp"

namespace relcomp {

enum class MatrixKind { orthogonal, low_rank, general };

struct SquareMatrix {
  Matrix values;
  MatrixKind kind = MatrixKind::general;
  Index rank = 0;  // meaningful for low_rank

  Index side() const { return values.rows(); }
};

SquareMatrix make_random_orthogonal(Index dim, std::uint64_t seed);
// Product of Gaussian factors, scaled so the largest singular value is 1.
SquareMatrix make_low_rank(Index dim, Index rank, std::uint64_t seed);
// Partial isometry U Vᵀ with Haar factors: all nonzero singular values are 1.
SquareMatrix make_flat_low_rank(Index dim, Index rank, std::uint64_t seed);

class BinaryVector {
 public:
  BinaryVector() = default;
  explicit BinaryVector(std::vector<std::uint8_t> bits);
  static BinaryVector zeros(Index n) { return BinaryVector(std::vector<std::uint8_t>(static_cast<std::size_t>(n), 0)); }
  // Parses a string of '0'/'1' characters.
  static BinaryVector from_string(std::string_view bits);
  static BinaryVector random(Index n, std::uint64_t seed);

  Index size() const { return static_cast<Index>(bits_.size()); }
  std::uint8_t operator[](Index i) const { return bits_[static_cast<std::size_t>(i)]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }
  std::string to_string() const;
  bool is_zero() const;

  friend bool operator==(const BinaryVector&, const BinaryVector&) = default;

 private:
  std::vector<std::uint8_t> bits_;
};

// A permutation acts as out[i] = in[p[i]].
using Permutation = std::vector<Index>;

// Cyclic shift by one position: out[i] = in[(i - 1) mod n].
Permutation cyclic_shift_permutation(Index n);
Permutation random_permutation(Index n, std::uint64_t seed);
void check_permutation(const Permutation& p, Index n);
BinaryVector apply_permutation(const Permutation& p, const BinaryVector& v);
BinaryVector apply_inverse_permutation(const Permutation& p, const BinaryVector& v);

struct AdditivePair {
  Matrix a;
  Matrix b;
};
struct SlotBinding {
  std::vector<Matrix> slots;
};
struct TreeBinding {
  Matrix m1;
  Matrix m2;
};
struct OuterProductBinding {};
struct HrrBinding {};
struct BinaryBinding {
  Permutation p;
};

struct BindingSpec {
  std::variant<AdditivePair, SlotBinding, TreeBinding, OuterProductBinding, HrrBinding, BinaryBinding> mechanism;
  Index dim = 0;

  // Throws dimension-mismatch or invalid-argument when matrices are not
  // dim x dim or the permutation is not a bijection.
  void validate() const;
};

Vector bind_pair_additive(const AdditivePair& spec, const Vector& x, const Vector& y);
Vector bind_slots(const Vector& x, const std::vector<std::pair<Matrix, Vector>>& slots);
Vector unbind_readback(const Vector& r, const Matrix& a, const FeatureDictionary& dict);
std::map<Index, Vector> bind_tree(const TreeBinding& spec, const TreeSpec& tree);

Matrix bind_outer(const Vector& x, const Vector& y);
Vector unbind_outer(const Matrix& r, const Vector& y);

enum class HrrUnbindMode { correlation, exact_spectral };

// Circular convolution (x * y)_k = sum_j x_j y_{(k - j) mod n}, via FFT.
Vector bind_hrr(const Vector& x, const Vector& y);
Vector unbind_hrr(const Vector& r, const Vector& y, HrrUnbindMode mode);
// y†_j = y_{(-j) mod n}.
Vector involution(const Vector& y);

BinaryVector bind_binary(const BinaryVector& x, const BinaryVector& y, const Permutation& p);

enum class BinarySide { first, second };
// side = second: `known` is y and the result is x = r xor P(y).
// side = first: `known` is x and the result is y = P⁻¹(r xor x).
BinaryVector unbind_binary(const BinaryVector& r, const BinaryVector& known, BinarySide side, const Permutation& p);

}  // namespace relcomp
