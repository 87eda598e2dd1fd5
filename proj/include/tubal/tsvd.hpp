#pragma once

// t-SVD, tubal ranks, the tubal nuclear norm and its proximal operator.
//
// Every routine factorizes only the spectral slices k = 0..n3/2; the remaining
// slices are conjugate mirrors of those when the input is real. Slices 0 and
// (even n3) n3/2 are real matrices and are factorized with a real SVD so the
// factors come back real after the inverse transform.
//
// Prox threshold. With TNN(L) = (1/n3) sum_k ||L_k||_* and the Parseval identity
// ||L||_F^2 = (1/n3) sum_k ||L_k||_F^2 (hats on spectral slices dropped),
//
//   TNN(L) + 1/(2 tau) ||L - G||_F^2 = (1/n3) sum_k [ ||L_k||_* + 1/(2 tau) ||L_k - G_k||_F^2 ].
//
// The 1/n3 factors cancel and the slices decouple, so the minimizer is the
// matrix singular value soft-thresholding of each G_k at level exactly tau.

#include <algorithm>
#include <complex>
#include <cstddef>
#include <vector>

#include "tubal/detail/svd.hpp"
#include "tubal/error.hpp"
#include "tubal/tensor.hpp"

namespace tubal {

/// Relative cutoff (times the largest spectral singular value) below which a
/// singular value counts as zero.
inline constexpr double kDefaultRankThreshold = 1e-8;

struct TSvdFactors {
  Tensor3 u;  // n1 x p x n3
  Tensor3 s;  // p x p x n3, f-diagonal
  Tensor3 v;  // n2 x p x n3
  /// Singular values of every spectral slice, each list nonincreasing.
  std::vector<std::vector<double>> spectral_singulars;

  Tensor3 reconstruct() const { return t_product(t_product(u, s), conj_transpose(v)); }
};

struct RankReport {
  std::vector<std::size_t> multi_rank;
  std::size_t tubal_rank = 0;
  double threshold = kDefaultRankThreshold;
};

struct SvtOptions {
  /// Factorize only half of the spectrum and mirror the rest.
  bool conjugate_symmetry = true;
};

namespace detail {

using Complex = std::complex<double>;

inline ThinSvd<Complex> spectral_slice_svd(const SpectralTensor3& f, std::size_t k, bool vectors,
                                           bool real_if_possible = true) {
  if (real_if_possible && self_conjugate(k, f.dims().n3)) {
    const Eigen::MatrixXd re = f.slice(k).real();
    auto r = thin_svd(re, vectors);
    ThinSvd<Complex> out;
    out.s = std::move(r.s);
    if (vectors) {
      out.u = r.u.cast<Complex>();
      out.v = r.v.cast<Complex>();
    }
    return out;
  }
  return thin_svd(f.slice(k), vectors);
}

inline std::vector<std::vector<double>> spectral_singular_values(const SpectralTensor3& f) {
  const std::size_t n3 = f.dims().n3;
  std::vector<std::vector<double>> out(n3);
  for (std::size_t k = 0; k < half_spectrum(n3); ++k) {
    const auto svd = spectral_slice_svd(f, k, false);
    out[k].assign(svd.s.data(), svd.s.data() + svd.s.size());
  }
  for (std::size_t k = half_spectrum(n3); k < n3; ++k) out[k] = out[n3 - k];
  return out;
}

inline TSvdFactors tsvd_truncated(const Tensor3& a, std::size_t p) {
  const Dims d = a.dims();
  const SpectralTensor3 f = dft_mode3(a);
  SpectralTensor3 fu(Dims{d.n1, p, d.n3});
  SpectralTensor3 fs(Dims{p, p, d.n3});
  SpectralTensor3 fv(Dims{d.n2, p, d.n3});
  std::vector<std::vector<double>> singulars(d.n3);

  for (std::size_t k = 0; k < half_spectrum(d.n3); ++k) {
    const auto svd = spectral_slice_svd(f, k, true);
    const auto cols = static_cast<Eigen::Index>(p);
    fu.slice(k) = svd.u.leftCols(cols);
    fv.slice(k) = svd.v.leftCols(cols);
    fs.slice(k).setZero();
    for (Eigen::Index i = 0; i < cols; ++i) fs.slice(k)(i, i) = svd.s(i);
    singulars[k].assign(svd.s.data(), svd.s.data() + svd.s.size());
  }
  for (std::size_t k = half_spectrum(d.n3); k < d.n3; ++k) singulars[k] = singulars[d.n3 - k];
  fill_conjugate_mirror(fu);
  fill_conjugate_mirror(fs);
  fill_conjugate_mirror(fv);
  return TSvdFactors{idft_mode3(fu), idft_mode3(fs), idft_mode3(fv), std::move(singulars)};
}

struct ProxOutput {
  Tensor3 value;
  double tnn = 0.0;  // tubal nuclear norm of `value`
};

/// Soft-threshold the singular values of every spectral slice of `g` at `tau`.
inline ProxOutput prox_tnn_impl(const Tensor3& g, double tau, const SvtOptions& opts) {
  const Dims d = g.dims();
  const SpectralTensor3 f = dft_mode3(g);
  SpectralTensor3 out(d);
  const std::size_t computed = opts.conjugate_symmetry ? half_spectrum(d.n3) : d.n3;
  double nuclear = 0.0;
  for (std::size_t k = 0; k < computed; ++k) {
    const auto svd = spectral_slice_svd(f, k, true, opts.conjugate_symmetry);
    Eigen::Index keep = 0;
    while (keep < svd.s.size() && svd.s(keep) > tau) ++keep;
    double slice_norm = 0.0;
    if (keep > 0) {
      const Eigen::VectorXd shrunk = svd.s.head(keep).array() - tau;
      slice_norm = shrunk.sum();
      out.slice(k).noalias() =
          svd.u.leftCols(keep) * shrunk.cast<Complex>().asDiagonal() * svd.v.leftCols(keep).adjoint();
    }
    const bool mirrored = opts.conjugate_symmetry && !self_conjugate(k, d.n3);
    nuclear += mirrored ? 2.0 * slice_norm : slice_norm;
  }
  if (opts.conjugate_symmetry) fill_conjugate_mirror(out);
  return {idft_mode3(out), nuclear / static_cast<double>(d.n3)};
}

}  // namespace detail

/// Full t-SVD A = U * S * V^H with p = min(n1, n2) tubal columns.
inline TSvdFactors tsvd(const Tensor3& a) {
  return detail::tsvd_truncated(a, std::min(a.dims().n1, a.dims().n2));
}

/// Skinny t-SVD keeping the leading r columns of every spectral slice.
inline TSvdFactors tsvd_skinny(const Tensor3& a, std::size_t r) {
  const std::size_t cap = std::min(a.dims().n1, a.dims().n2);
  if (r < 1 || r > cap) {
    throw Error(Errc::invalid_rank,
                "rank " + std::to_string(r) + " outside [1, " + std::to_string(cap) + "]");
  }
  return detail::tsvd_truncated(a, r);
}

/// Per-slice ranks counted against `threshold` times the largest spectral
/// singular value; the tubal rank is their maximum.
inline RankReport tubal_ranks(const Tensor3& a, double threshold = kDefaultRankThreshold) {
  if (!(threshold >= 0.0)) {
    throw Error(Errc::invalid_config, "rank threshold must be nonnegative");
  }
  const auto singulars = detail::spectral_singular_values(dft_mode3(a));
  double top = 0.0;
  for (const auto& s : singulars)
    if (!s.empty()) top = std::max(top, s.front());

  RankReport report;
  report.threshold = threshold;
  report.multi_rank.assign(singulars.size(), 0);
  if (top == 0.0) return report;
  const double cut = threshold * top;
  for (std::size_t k = 0; k < singulars.size(); ++k) {
    report.multi_rank[k] = static_cast<std::size_t>(
        std::count_if(singulars[k].begin(), singulars[k].end(), [cut](double x) { return x > cut; }));
  }
  report.tubal_rank = *std::max_element(report.multi_rank.begin(), report.multi_rank.end());
  return report;
}

/// Tubal nuclear norm: the average nuclear norm of the spectral slices.
inline double tnn(const Tensor3& a, const SvtOptions& opts = {}) {
  const Dims d = a.dims();
  const SpectralTensor3 f = dft_mode3(a);
  double total = 0.0;
  if (opts.conjugate_symmetry) {
    for (std::size_t k = 0; k < detail::half_spectrum(d.n3); ++k) {
      const double s = detail::spectral_slice_svd(f, k, false).s.sum();
      total += detail::self_conjugate(k, d.n3) ? s : 2.0 * s;
    }
  } else {
    for (std::size_t k = 0; k < d.n3; ++k) total += detail::thin_svd(f.slice(k), false).s.sum();
  }
  return total / static_cast<double>(d.n3);
}

/// argmin_L tnn(L) + 1/(2 tau) ||L - g||_F^2.
inline Tensor3 prox_tnn(const Tensor3& g, double tau, const SvtOptions& opts = {}) {
  if (!(tau >= 0.0)) throw Error(Errc::invalid_config, "prox threshold must be nonnegative");
  return detail::prox_tnn_impl(g, tau, opts).value;
}

/// Best tubal-rank-r approximation: keep the top r singular values of every spectral slice.
inline Tensor3 truncate_tubal(const Tensor3& a, std::size_t r) {
  const Dims d = a.dims();
  const std::size_t cap = std::min(d.n1, d.n2);
  if (r < 1 || r > cap) {
    throw Error(Errc::invalid_rank,
                "rank " + std::to_string(r) + " outside [1, " + std::to_string(cap) + "]");
  }
  const SpectralTensor3 f = dft_mode3(a);
  SpectralTensor3 out(d);
  const auto keep = static_cast<Eigen::Index>(r);
  for (std::size_t k = 0; k < detail::half_spectrum(d.n3); ++k) {
    const auto svd = detail::spectral_slice_svd(f, k, true);
    out.slice(k).noalias() = svd.u.leftCols(keep) *
                             svd.s.head(keep).cast<detail::Complex>().asDiagonal() *
                             svd.v.leftCols(keep).adjoint();
  }
  detail::fill_conjugate_mirror(out);
  return idft_mode3(out);
}

}  // namespace tubal
