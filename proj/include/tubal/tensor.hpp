#pragma once

// Dense third-order tensors and the t-product algebra.
//
// Storage layout: entry (i, j, k) lives at offset i + n1 * (j + n2 * k), so each
// frontal slice A(:, :, k) is a contiguous column-major n1 x n2 matrix and the
// frontal-slice index varies slowest. All indices in the C++ API are 0-based;
// the 1-based entry A_ijk of the mathematical notation is element
// (i - 1, j - 1, k - 1). Text formats that carry indices (mask files) use the
// 1-based convention.
//
// The mode-3 DFT is unnormalized in the forward direction and scaled by 1/n3 in
// the inverse direction, i.e. fft(A, [], 3) / ifft(A, [], 3).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include "tubal/detail/svd.hpp"
#include "tubal/error.hpp"

namespace tubal {

struct Dims {
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t n3 = 0;

  constexpr std::size_t size() const noexcept { return n1 * n2 * n3; }
  constexpr std::size_t slice_size() const noexcept { return n1 * n2; }
  friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(const Dims& d) {
  return std::to_string(d.n1) + "x" + std::to_string(d.n2) + "x" + std::to_string(d.n3);
}

template <typename T>
class BasicTensor3 {
 public:
  using value_type = T;
  using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
  using SliceMap = Eigen::Map<Matrix>;
  using ConstSliceMap = Eigen::Map<const Matrix>;

  BasicTensor3() = default;

  explicit BasicTensor3(Dims dims) : dims_(dims), data_(checked(dims).size(), T{}) {}

  BasicTensor3(Dims dims, std::vector<T> data) : dims_(checked(dims)), data_(std::move(data)) {
    if (data_.size() != dims_.size()) {
      throw Error(Errc::dimension_mismatch, "data length " + std::to_string(data_.size()) +
                                                " does not match dims " + to_string(dims_));
    }
  }

  BasicTensor3(std::size_t n1, std::size_t n2, std::size_t n3) : BasicTensor3(Dims{n1, n2, n3}) {}

  const Dims& dims() const noexcept { return dims_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  std::size_t offset(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return i + dims_.n1 * (j + dims_.n2 * k);
  }

  T& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
    return data_[offset(i, j, k)];
  }
  const T& operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return data_[offset(i, j, k)];
  }
  T& operator[](std::size_t linear) noexcept { return data_[linear]; }
  const T& operator[](std::size_t linear) const noexcept { return data_[linear]; }

  /// Frontal slice k as a column-major n1 x n2 matrix view.
  SliceMap slice(std::size_t k) {
    return SliceMap(data_.data() + k * dims_.slice_size(), static_cast<Eigen::Index>(dims_.n1),
                    static_cast<Eigen::Index>(dims_.n2));
  }
  ConstSliceMap slice(std::size_t k) const {
    return ConstSliceMap(data_.data() + k * dims_.slice_size(),
                         static_cast<Eigen::Index>(dims_.n1), static_cast<Eigen::Index>(dims_.n2));
  }

  BasicTensor3& operator+=(const BasicTensor3& o) {
    require_same(o);
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] += o.data_[n];
    return *this;
  }
  BasicTensor3& operator-=(const BasicTensor3& o) {
    require_same(o);
    for (std::size_t n = 0; n < data_.size(); ++n) data_[n] -= o.data_[n];
    return *this;
  }
  BasicTensor3& operator*=(T c) {
    for (auto& x : data_) x *= c;
    return *this;
  }

  friend BasicTensor3 operator+(BasicTensor3 a, const BasicTensor3& b) { return a += b; }
  friend BasicTensor3 operator-(BasicTensor3 a, const BasicTensor3& b) { return a -= b; }
  friend BasicTensor3 operator*(BasicTensor3 a, T c) { return a *= c; }
  friend BasicTensor3 operator*(T c, BasicTensor3 a) { return a *= c; }
  friend BasicTensor3 operator-(BasicTensor3 a) { return a *= T(-1); }

  friend bool operator==(const BasicTensor3&, const BasicTensor3&) = default;

  void require_same(const BasicTensor3& o) const {
    if (!(o.dims_ == dims_)) {
      throw Error(Errc::dimension_mismatch,
                  "operands have dims " + to_string(dims_) + " and " + to_string(o.dims_));
    }
  }

 private:
  static Dims checked(Dims d) {
    if (d.n1 == 0 || d.n2 == 0 || d.n3 == 0) {
      throw Error(Errc::dimension_mismatch, "tensor dims must be positive, got " + to_string(d));
    }
    return d;
  }

  Dims dims_{};
  std::vector<T> data_;
};

/// Real third-order tensor.
using Tensor3 = BasicTensor3<double>;
/// Mode-3 Fourier transform of a Tensor3; slice(k) is the k-th spectral slice.
using SpectralTensor3 = BasicTensor3<std::complex<double>>;

/// Relative tolerance on the imaginary residue left after an inverse DFT.
inline constexpr double kImaginaryResidueTol = 1e-10;

template <typename T>
double frobenius(const BasicTensor3<T>& a) {
  double s = 0.0;
  for (const auto& x : a.data()) s += std::norm(x);
  return std::sqrt(s);
}

namespace detail {

/// Number of leading spectral slices (0-based 0..n3/2) that determine the rest
/// by conjugate symmetry.
constexpr std::size_t half_spectrum(std::size_t n3) noexcept { return n3 / 2 + 1; }

/// Slices 0 and (for even n3) n3/2 are their own conjugate mirror.
constexpr bool self_conjugate(std::size_t k, std::size_t n3) noexcept {
  return k == 0 || 2 * k == n3;
}

/// Fill slices k > n3/2 from their mirrors n3 - k.
inline void fill_conjugate_mirror(SpectralTensor3& a) {
  const auto n3 = a.dims().n3;
  for (std::size_t k = half_spectrum(n3); k < n3; ++k) a.slice(k) = a.slice(n3 - k).conjugate();
}

}  // namespace detail

inline SpectralTensor3 dft_mode3(const Tensor3& a) {
  const Dims d = a.dims();
  SpectralTensor3 out(d);
  const std::size_t stride = d.slice_size();
  if (d.n3 == 1) {
    for (std::size_t n = 0; n < a.size(); ++n) out[n] = a[n];
    return out;
  }
  Eigen::FFT<double> fft;
  std::vector<double> tube(d.n3);
  std::vector<std::complex<double>> spec(d.n3);
  for (std::size_t o = 0; o < stride; ++o) {
    for (std::size_t k = 0; k < d.n3; ++k) tube[k] = a[o + k * stride];
    fft.fwd(spec, tube);
    for (std::size_t k = 0; k < d.n3; ++k) out[o + k * stride] = spec[k];
  }
  return out;
}

/// Inverse of dft_mode3. Throws ImaginaryResidueTooLarge when the spectral input
/// is not conjugate symmetric enough to come from a real tensor.
inline Tensor3 idft_mode3(const SpectralTensor3& a) {
  const Dims d = a.dims();
  Tensor3 out(d);
  const std::size_t stride = d.slice_size();
  const double tol = kImaginaryResidueTol * frobenius(a);
  double residue = 0.0;
  if (d.n3 == 1) {
    for (std::size_t n = 0; n < a.size(); ++n) {
      out[n] = a[n].real();
      residue = std::max(residue, std::abs(a[n].imag()));
    }
  } else {
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec(d.n3);
    std::vector<std::complex<double>> tube(d.n3);
    for (std::size_t o = 0; o < stride; ++o) {
      for (std::size_t k = 0; k < d.n3; ++k) spec[k] = a[o + k * stride];
      fft.inv(tube, spec);
      for (std::size_t k = 0; k < d.n3; ++k) {
        out[o + k * stride] = tube[k].real();
        residue = std::max(residue, std::abs(tube[k].imag()));
      }
    }
  }
  if (residue > tol) {
    throw Error(Errc::imaginary_residue_too_large,
                "imaginary residue " + std::to_string(residue) + " exceeds " + std::to_string(tol));
  }
  return out;
}

/// t-product C = A * B, evaluated as slice-wise products in the Fourier domain.
inline Tensor3 t_product(const Tensor3& a, const Tensor3& b) {
  const Dims da = a.dims();
  const Dims db = b.dims();
  if (da.n2 != db.n1 || da.n3 != db.n3) {
    throw Error(Errc::dimension_mismatch,
                "t_product of " + to_string(da) + " and " + to_string(db));
  }
  const SpectralTensor3 fa = dft_mode3(a);
  const SpectralTensor3 fb = dft_mode3(b);
  SpectralTensor3 fc(Dims{da.n1, db.n2, da.n3});
  for (std::size_t k = 0; k < detail::half_spectrum(da.n3); ++k) {
    fc.slice(k).noalias() = fa.slice(k) * fb.slice(k);
  }
  detail::fill_conjugate_mirror(fc);
  return idft_mode3(fc);
}

/// Conjugate transpose: slice 0 transposed, slice k >= 1 taken from slice n3 - k transposed.
inline Tensor3 conj_transpose(const Tensor3& a) {
  const Dims d = a.dims();
  Tensor3 out(Dims{d.n2, d.n1, d.n3});
  for (std::size_t k = 0; k < d.n3; ++k) {
    const std::size_t src = (k == 0) ? 0 : d.n3 - k;
    out.slice(k) = a.slice(src).transpose();
  }
  return out;
}

/// n x n x n3 identity: first frontal slice is the identity matrix, the rest zero.
inline Tensor3 identity_tensor(std::size_t n, std::size_t n3) {
  Tensor3 out(n, n, n3);
  for (std::size_t i = 0; i < n; ++i) out(i, i, 0) = 1.0;
  return out;
}

inline double inner_product(const Tensor3& a, const Tensor3& b) {
  a.require_same(b);
  return std::inner_product(a.data().begin(), a.data().end(), b.data().begin(), 0.0);
}

/// (1/n3) * sum_k Re <A_k, B_k> over spectral slices; equals inner_product of
/// the spatial tensors.
inline double spectral_inner_product(const SpectralTensor3& a, const SpectralTensor3& b) {
  a.require_same(b);
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += (std::conj(a[n]) * b[n]).real();
  return s / static_cast<double>(a.dims().n3);
}

enum class NormKind { l1, linf, fro };

inline double norm(const Tensor3& a, NormKind kind) {
  switch (kind) {
    case NormKind::l1: {
      double s = 0.0;
      for (double x : a.data()) s += std::abs(x);
      return s;
    }
    case NormKind::linf: {
      double m = 0.0;
      for (double x : a.data()) m = std::max(m, std::abs(x));
      return m;
    }
    case NormKind::fro:
      return frobenius(a);
  }
  return 0.0;
}

/// Largest singular value over all spectral slices (the spectral norm of the
/// block-diagonal form).
inline double spectral_norm(const Tensor3& a) {
  const SpectralTensor3 fa = dft_mode3(a);
  double best = 0.0;
  for (std::size_t k = 0; k < detail::half_spectrum(a.dims().n3); ++k) {
    const auto svd = detail::thin_svd(fa.slice(k), false);
    if (svd.s.size() > 0) best = std::max(best, svd.s(0));
  }
  return best;
}

enum class BasisKind { column, tube, unit };

/// Standard tensor bases. Indices are 0-based.
///   column: n1 x 1 x n3, entry (i, 0, 0) = 1
///   tube:   1 x 1 x n3,  entry (0, 0, k) = 1
///   unit:   n1 x n2 x n3, entry (i, j, k) = 1
struct BasisSpec {
  BasisKind kind = BasisKind::unit;
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;
  Dims ambient{};

  static BasisSpec column(std::size_t i, Dims ambient) { return {BasisKind::column, i, 0, 0, ambient}; }
  static BasisSpec tube(std::size_t k, Dims ambient) { return {BasisKind::tube, 0, 0, k, ambient}; }
  static BasisSpec unit(std::size_t i, std::size_t j, std::size_t k, Dims ambient) {
    return {BasisKind::unit, i, j, k, ambient};
  }
};

inline Tensor3 basis(const BasisSpec& spec) {
  const Dims& d = spec.ambient;
  auto out_of_range = [&](const std::string& what) {
    return Error(Errc::index_out_of_bounds, what + " outside ambient dims " + to_string(d));
  };
  switch (spec.kind) {
    case BasisKind::column: {
      if (spec.i >= d.n1) throw out_of_range("column index " + std::to_string(spec.i));
      Tensor3 out(d.n1, 1, d.n3);
      out(spec.i, 0, 0) = 1.0;
      return out;
    }
    case BasisKind::tube: {
      if (spec.k >= d.n3) throw out_of_range("tube index " + std::to_string(spec.k));
      Tensor3 out(1, 1, d.n3);
      out(0, 0, spec.k) = 1.0;
      return out;
    }
    case BasisKind::unit: {
      if (spec.i >= d.n1 || spec.j >= d.n2 || spec.k >= d.n3) {
        throw out_of_range("unit index (" + std::to_string(spec.i) + "," + std::to_string(spec.j) +
                           "," + std::to_string(spec.k) + ")");
      }
      Tensor3 out(d);
      out(spec.i, spec.j, spec.k) = 1.0;
      return out;
    }
  }
  throw out_of_range("basis kind");
}

/// True iff Q^H * Q and Q * Q^H are both within `tol` (Frobenius) of the identity.
inline bool is_orthogonal(const Tensor3& q, double tol) {
  const Dims d = q.dims();
  if (d.n1 != d.n2) {
    throw Error(Errc::dimension_mismatch, "is_orthogonal needs square slices, got " + to_string(d));
  }
  const Tensor3 id = identity_tensor(d.n1, d.n3);
  const Tensor3 qh = conj_transpose(q);
  return frobenius(t_product(qh, q) - id) <= tol && frobenius(t_product(q, qh) - id) <= tol;
}

/// True iff every off-diagonal entry of every frontal slice is at most `tol` in magnitude.
inline bool is_f_diagonal(const Tensor3& s, double tol) {
  const Dims d = s.dims();
  for (std::size_t k = 0; k < d.n3; ++k)
    for (std::size_t j = 0; j < d.n2; ++j)
      for (std::size_t i = 0; i < d.n1; ++i)
        if (i != j && std::abs(s(i, j, k)) > tol) return false;
  return true;
}

inline bool all_finite(const Tensor3& a) {
  return std::all_of(a.data().begin(), a.data().end(), [](double x) { return std::isfinite(x); });
}

}  // namespace tubal
