#include "relcomp/binding.hpp"

#include <complex>
#include <string>
#include <unsupported/Eigen/FFT>

#include "relcomp/random.hpp"

namespace relcomp {
namespace {

void require_dim(const Vector& v, Index n, const char* what) {
  require(v.size() == n, ErrorCode::dimension_mismatch,
          std::string(what) + " has length " + std::to_string(v.size()) + ", expected " + std::to_string(n));
}

void require_square(const Matrix& m, Index n, const char* what) {
  require(m.rows() == n && m.cols() == n, ErrorCode::dimension_mismatch,
          std::string(what) + " must be " + std::to_string(n) + "x" + std::to_string(n));
}

using Spectrum = std::vector<std::complex<double>>;

// Eigen's kissfft crashes on length 1, where the DFT is the identity.
Spectrum forward(const Vector& v) {
  if (v.size() == 1) return {v[0]};
  Eigen::FFT<double> fft;
  std::vector<double> in(v.data(), v.data() + v.size());
  Spectrum out;
  fft.fwd(out, in);
  return out;
}

Vector inverse(const Spectrum& s) {
  if (s.size() == 1) return Vector::Constant(1, s[0].real());
  Eigen::FFT<double> fft;
  std::vector<double> out;
  fft.inv(out, s);
  return Eigen::Map<const Vector>(out.data(), static_cast<Index>(out.size()));
}

}  // namespace

SquareMatrix make_random_orthogonal(Index dim, std::uint64_t seed) {
  return {haar_orthogonal(dim, seed), MatrixKind::orthogonal, dim};
}

SquareMatrix make_low_rank(Index dim, Index rank, std::uint64_t seed) {
  require(dim >= 1 && rank >= 1 && rank <= dim, ErrorCode::invalid_rank, "rank must lie in [1, dim]");
  Rng rng(seed);
  const Matrix left = rng.normal_matrix(dim, rank);
  const Matrix right = rng.normal_matrix(rank, dim);
  Matrix a = left * right;
  const double sigma1 = Eigen::JacobiSVD<Matrix>(a).singularValues()[0];
  require(sigma1 > 0, ErrorCode::degenerate_data, "low-rank factors produced a zero matrix");
  a /= sigma1;
  return {std::move(a), MatrixKind::low_rank, rank};
}

SquareMatrix make_flat_low_rank(Index dim, Index rank, std::uint64_t seed) {
  require(dim >= 1 && rank >= 1 && rank <= dim, ErrorCode::invalid_rank, "rank must lie in [1, dim]");
  const Matrix u = haar_orthogonal(dim, derive_seed(seed, "flat-low-rank/u"));
  const Matrix v = haar_orthogonal(dim, derive_seed(seed, "flat-low-rank/v"));
  Matrix a = u.leftCols(rank) * v.leftCols(rank).transpose();
  return {std::move(a), MatrixKind::low_rank, rank};
}

BinaryVector::BinaryVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto b : bits_) require(b <= 1, ErrorCode::invalid_argument, "binary vector entries must be 0 or 1");
}

BinaryVector BinaryVector::from_string(std::string_view bits) {
  std::vector<std::uint8_t> out;
  out.reserve(bits.size());
  for (char c : bits) {
    require(c == '0' || c == '1', ErrorCode::bad_token, "binary string contains '" + std::string(1, c) + "'");
    out.push_back(static_cast<std::uint8_t>(c - '0'));
  }
  return BinaryVector(std::move(out));
}

BinaryVector BinaryVector::random(Index n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(n));
  for (auto& b : out) b = static_cast<std::uint8_t>(rng.next_u64() >> 63);
  return BinaryVector(std::move(out));
}

std::string BinaryVector::to_string() const {
  std::string s;
  s.reserve(bits_.size());
  for (auto b : bits_) s.push_back(static_cast<char>('0' + b));
  return s;
}

bool BinaryVector::is_zero() const {
  for (auto b : bits_)
    if (b) return false;
  return true;
}

Permutation cyclic_shift_permutation(Index n) {
  Permutation p(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = (i + n - 1) % n;
  return p;
}

Permutation random_permutation(Index n, std::uint64_t seed) {
  Rng rng(seed);
  return rng.permutation(n);
}

void check_permutation(const Permutation& p, Index n) {
  require(static_cast<Index>(p.size()) == n, ErrorCode::length_mismatch, "permutation length differs from vector length");
  std::vector<bool> seen(p.size(), false);
  for (Index v : p) {
    require(v >= 0 && v < n && !seen[static_cast<std::size_t>(v)], ErrorCode::invalid_argument,
            "permutation is not a bijection");
    seen[static_cast<std::size_t>(v)] = true;
  }
}

BinaryVector apply_permutation(const Permutation& p, const BinaryVector& v) {
  check_permutation(p, v.size());
  std::vector<std::uint8_t> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = v[p[i]];
  return BinaryVector(std::move(out));
}

BinaryVector apply_inverse_permutation(const Permutation& p, const BinaryVector& v) {
  check_permutation(p, v.size());
  std::vector<std::uint8_t> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(p[i])] = v[static_cast<Index>(i)];
  return BinaryVector(std::move(out));
}

void BindingSpec::validate() const {
  require(dim >= 1, ErrorCode::invalid_dimensions, "binding dim must be positive");
  std::visit(
      [this](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, AdditivePair>) {
          require_square(m.a, dim, "A");
          require_square(m.b, dim, "B");
        } else if constexpr (std::is_same_v<T, SlotBinding>) {
          for (const auto& s : m.slots) require_square(s, dim, "slot matrix");
        } else if constexpr (std::is_same_v<T, TreeBinding>) {
          require_square(m.m1, dim, "M1");
          require_square(m.m2, dim, "M2");
        } else if constexpr (std::is_same_v<T, BinaryBinding>) {
          check_permutation(m.p, dim);
        }
      },
      mechanism);
}

Vector bind_pair_additive(const AdditivePair& spec, const Vector& x, const Vector& y) {
  const Index n = spec.a.rows();
  require_square(spec.a, n, "A");
  require_square(spec.b, n, "B");
  require_dim(x, n, "x");
  require_dim(y, n, "y");
  return spec.a * x + spec.b * y;
}

Vector bind_slots(const Vector& x, const std::vector<std::pair<Matrix, Vector>>& slots) {
  Vector r = x;
  for (const auto& [a, y] : slots) {
    require_square(a, x.size(), "slot matrix");
    require_dim(y, x.size(), "slot filler");
    r += a * y;
  }
  return r;
}

Vector unbind_readback(const Vector& r, const Matrix& a, const FeatureDictionary& dict) {
  require_square(a, dict.dim(), "A");
  require_dim(r, dict.dim(), "r");
  // <r, A v_i> = <Aᵀ r, v_i>
  return dict.atoms().transpose() * (a.transpose() * r);
}

std::map<Index, Vector> bind_tree(const TreeBinding& spec, const TreeSpec& tree) {
  tree.require_leaf_payloads();
  const Index n = spec.m1.rows();
  require_square(spec.m1, n, "M1");
  require_square(spec.m2, n, "M2");
  std::map<Index, Vector> rep;
  for (Index u : tree.postorder()) {
    if (tree.is_leaf(u)) {
      const Vector& v = tree.payload().at(u);
      require_dim(v, n, "leaf payload");
      rep[u] = v;
      continue;
    }
    Vector r = Vector::Zero(n);
    if (auto c = tree.child(u, ChildRole::left)) r += spec.m1 * rep.at(*c);
    if (auto c = tree.child(u, ChildRole::right)) r += spec.m2 * rep.at(*c);
    rep[u] = std::move(r);
  }
  return rep;
}

Matrix bind_outer(const Vector& x, const Vector& y) {
  require_dim(y, x.size(), "y");
  return x * y.transpose();
}

Vector unbind_outer(const Matrix& r, const Vector& y) {
  require(r.cols() == y.size(), ErrorCode::dimension_mismatch, "cue length differs from matrix columns");
  const double norm2 = y.squaredNorm();
  require(std::sqrt(norm2) > 1e-12, ErrorCode::degenerate_cue, "cue vector has (near) zero norm");
  return r * y / norm2;
}

Vector bind_hrr(const Vector& x, const Vector& y) {
  require_dim(y, x.size(), "y");
  require(x.size() >= 1, ErrorCode::invalid_dimensions, "empty vectors");
  const Spectrum fx = forward(x);
  const Spectrum fy = forward(y);
  Spectrum prod(fx.size());
  for (std::size_t k = 0; k < fx.size(); ++k) prod[k] = fx[k] * fy[k];
  return inverse(prod);
}

Vector involution(const Vector& y) {
  const Index n = y.size();
  Vector out(n);
  for (Index j = 0; j < n; ++j) out[j] = y[(n - j) % n];
  return out;
}

Vector unbind_hrr(const Vector& r, const Vector& y, HrrUnbindMode mode) {
  require_dim(y, r.size(), "y");
  if (mode == HrrUnbindMode::correlation) return bind_hrr(r, involution(y));
  const Spectrum fr = forward(r);
  const Spectrum fy = forward(y);
  Spectrum quot(fr.size());
  for (std::size_t k = 0; k < fr.size(); ++k) {
    require(std::abs(fy[k]) > 1e-9, ErrorCode::singular_spectrum,
            "Fourier coefficient " + std::to_string(k) + " of the cue is (near) zero");
    quot[k] = fr[k] / fy[k];
  }
  return inverse(quot);
}

BinaryVector bind_binary(const BinaryVector& x, const BinaryVector& y, const Permutation& p) {
  require(x.size() == y.size(), ErrorCode::length_mismatch, "binary vectors differ in length");
  const BinaryVector py = apply_permutation(p, y);
  std::vector<std::uint8_t> out(static_cast<std::size_t>(x.size()));
  for (Index i = 0; i < x.size(); ++i) out[static_cast<std::size_t>(i)] = x[i] ^ py[i];
  return BinaryVector(std::move(out));
}

BinaryVector unbind_binary(const BinaryVector& r, const BinaryVector& known, BinarySide side, const Permutation& p) {
  require(r.size() == known.size(), ErrorCode::length_mismatch, "binary vectors differ in length");
  if (side == BinarySide::second) {
    const BinaryVector py = apply_permutation(p, known);
    std::vector<std::uint8_t> out(static_cast<std::size_t>(r.size()));
    for (Index i = 0; i < r.size(); ++i) out[static_cast<std::size_t>(i)] = r[i] ^ py[i];
    return BinaryVector(std::move(out));
  }
  std::vector<std::uint8_t> z(static_cast<std::size_t>(r.size()));
  for (Index i = 0; i < r.size(); ++i) z[static_cast<std::size_t>(i)] = r[i] ^ known[i];
  return apply_inverse_permutation(p, BinaryVector(std::move(z)));
}

}  // namespace relcomp
