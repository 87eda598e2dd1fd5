#pragma once

// Observation masks, entrywise and tangent-space projections, incoherence
// diagnostics and entrywise shrinkage.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "tubal/error.hpp"
#include "tubal/tensor.hpp"
#include "tubal/tsvd.hpp"

namespace tubal {

enum class SamplingModel { uniform_without_replacement, bernoulli };

constexpr std::string_view to_string(SamplingModel m) noexcept {
  return m == SamplingModel::bernoulli ? "bernoulli" : "uniform_without_replacement";
}

inline SamplingModel parse_sampling_model(std::string_view s) {
  if (s == "bernoulli") return SamplingModel::bernoulli;
  if (s == "uniform_without_replacement" || s == "uniform") {
    return SamplingModel::uniform_without_replacement;
  }
  throw Error(Errc::unsupported_format, "unknown sampling model '" + std::string(s) + "'");
}

/// The observed index set. Indices are stored as sorted linear offsets into the
/// Tensor3 layout.
class ObservationMask {
 public:
  ObservationMask() = default;

  ObservationMask(Dims dims, std::vector<std::size_t> indices, SamplingModel model, double rate,
                  std::uint64_t seed)
      : dims_(dims), indices_(std::move(indices)), model_(model), rate_(rate), seed_(seed) {
    std::sort(indices_.begin(), indices_.end());
    if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
      throw Error(Errc::invalid_spec, "duplicate index in observation mask");
    }
    if (!indices_.empty() && indices_.back() >= dims_.size()) {
      throw Error(Errc::index_out_of_bounds, "mask index outside dims " + to_string(dims_));
    }
    build_lookup();
  }

  static ObservationMask full(Dims dims) {
    std::vector<std::size_t> all(dims.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return ObservationMask(dims, std::move(all), SamplingModel::uniform_without_replacement, 1.0, 0);
  }

  const Dims& dims() const noexcept { return dims_; }
  std::span<const std::size_t> indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }
  SamplingModel model() const noexcept { return model_; }
  double rate() const noexcept { return rate_; }
  std::uint64_t seed() const noexcept { return seed_; }
  bool is_full() const noexcept { return indices_.size() == dims_.size(); }

  bool contains(std::size_t linear) const {
    if (!bitmap_.empty()) return bitmap_[linear];
    return sparse_.contains(linear);
  }
  bool contains(std::size_t i, std::size_t j, std::size_t k) const {
    return contains(i + dims_.n1 * (j + dims_.n2 * k));
  }

  /// Indices not in the mask, in increasing order.
  std::vector<std::size_t> complement_indices() const {
    std::vector<std::size_t> out;
    out.reserve(dims_.size() - indices_.size());
    auto it = indices_.begin();
    for (std::size_t n = 0; n < dims_.size(); ++n) {
      if (it != indices_.end() && *it == n) {
        ++it;
      } else {
        out.push_back(n);
      }
    }
    return out;
  }

  friend bool operator==(const ObservationMask& a, const ObservationMask& b) {
    return a.dims_ == b.dims_ && a.indices_ == b.indices_ && a.model_ == b.model_ &&
           a.rate_ == b.rate_ && a.seed_ == b.seed_;
  }

 private:
  // Dense bitmap above 1% density, hash set below.
  void build_lookup() {
    const std::size_t total = dims_.size();
    if (total > 0 && indices_.size() * 100 > total) {
      bitmap_.assign(total, false);
      for (auto n : indices_) bitmap_[n] = true;
    } else {
      sparse_.insert(indices_.begin(), indices_.end());
    }
  }

  Dims dims_{};
  std::vector<std::size_t> indices_;
  SamplingModel model_ = SamplingModel::uniform_without_replacement;
  double rate_ = 1.0;
  std::uint64_t seed_ = 0;
  std::vector<bool> bitmap_;
  std::unordered_set<std::size_t> sparse_;
};

/// Draw an observation set. Uniform sampling picks exactly round(rate * N)
/// entries; Bernoulli keeps each entry independently with probability `rate`.
inline ObservationMask sample_mask(Dims dims, double rate, SamplingModel model, std::uint64_t seed) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw Error(Errc::invalid_rate, "observation rate must lie in (0, 1], got " + std::to_string(rate));
  }
  const std::size_t total = dims.size();
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picked;
  if (model == SamplingModel::uniform_without_replacement) {
    const auto m = static_cast<std::size_t>(std::llround(rate * static_cast<double>(total)));
    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), std::size_t{0});
    picked.reserve(m);
    std::sample(all.begin(), all.end(), std::back_inserter(picked), m, rng);
  } else {
    std::bernoulli_distribution keep(rate);
    for (std::size_t n = 0; n < total; ++n)
      if (keep(rng)) picked.push_back(n);
  }
  return ObservationMask(dims, std::move(picked), model, rate, seed);
}

inline void require_mask_dims(const Tensor3& a, const ObservationMask& m) {
  if (!(a.dims() == m.dims())) {
    throw Error(Errc::dimension_mismatch,
                "tensor dims " + to_string(a.dims()) + " do not match mask dims " + to_string(m.dims()));
  }
}

/// P_Omega(a), or P_Omega-perp(a) when `complement` is set.
inline Tensor3 project_omega(const Tensor3& a, const ObservationMask& m, bool complement = false) {
  require_mask_dims(a, m);
  if (complement) {
    Tensor3 out = a;
    for (auto n : m.indices()) out[n] = 0.0;
    return out;
  }
  Tensor3 out(a.dims());
  for (auto n : m.indices()) out[n] = a[n];
  return out;
}

/// Tangent space at a tensor with skinny t-SVD factors U (n1 x r x n3) and V (n2 x r x n3).
class TangentSpace {
 public:
  static constexpr double kOrthonormalTol = 1e-8;

  TangentSpace(Tensor3 u, Tensor3 v) : u_(std::move(u)), v_(std::move(v)) {
    if (u_.dims().n2 != v_.dims().n2 || u_.dims().n3 != v_.dims().n3) {
      throw Error(Errc::dimension_mismatch,
                  "tangent factors " + to_string(u_.dims()) + " and " + to_string(v_.dims()));
    }
    const SpectralTensor3 fu = dft_mode3(u_);
    const SpectralTensor3 fv = dft_mode3(v_);
    require_orthonormal(fu, "U");
    require_orthonormal(fv, "V");
    pu_ = outer(fu);
    pv_ = outer(fv);
  }

  /// Tangent space of `l0` from its rank-r skinny t-SVD.
  static TangentSpace at(const Tensor3& l0, std::size_t r) {
    auto f = tsvd_skinny(l0, r);
    return TangentSpace(std::move(f.u), std::move(f.v));
  }

  const Tensor3& u() const noexcept { return u_; }
  const Tensor3& v() const noexcept { return v_; }
  std::size_t rank() const noexcept { return u_.dims().n2; }
  Dims ambient() const noexcept { return {u_.dims().n1, v_.dims().n1, u_.dims().n3}; }

  /// P_T(Z) = U*U^H*Z + Z*V*V^H - U*U^H*Z*V*V^H, or
  /// P_T-perp(Z) = (I - U*U^H) * Z * (I - V*V^H), evaluated slice-wise in the Fourier domain.
  Tensor3 project(const Tensor3& z, bool perp) const {
    if (!(z.dims() == ambient())) {
      throw Error(Errc::dimension_mismatch,
                  "tensor dims " + to_string(z.dims()) + " vs tangent space " + to_string(ambient()));
    }
    const std::size_t n3 = z.dims().n3;
    const SpectralTensor3 fz = dft_mode3(z);
    SpectralTensor3 out(z.dims());
    for (std::size_t k = 0; k < detail::half_spectrum(n3); ++k) {
      const auto zk = fz.slice(k);
      if (perp) {
        const Eigen::MatrixXcd w = zk - pu_.slice(k) * zk;
        out.slice(k) = w - w * pv_.slice(k);
      } else {
        const Eigen::MatrixXcd left = pu_.slice(k) * zk;
        out.slice(k) = left + zk * pv_.slice(k) - left * pv_.slice(k);
      }
    }
    detail::fill_conjugate_mirror(out);
    return idft_mode3(out);
  }

 private:
  static void require_orthonormal(const SpectralTensor3& f, const char* name) {
    // ||Q^H * Q - I||_F^2 = (1/n3) sum_k ||Q_k^H Q_k - I||_F^2
    const std::size_t n3 = f.dims().n3;
    const auto r = static_cast<Eigen::Index>(f.dims().n2);
    double err = 0.0;
    for (std::size_t k = 0; k < n3; ++k) {
      err += (f.slice(k).adjoint() * f.slice(k) - Eigen::MatrixXcd::Identity(r, r)).squaredNorm();
    }
    err = std::sqrt(err / static_cast<double>(n3));
    if (err > kOrthonormalTol) {
      throw Error(Errc::invalid_spec, std::string("tangent factor ") + name +
                                          " lacks orthonormal tubal columns (error " +
                                          std::to_string(err) + ")");
    }
  }

  static SpectralTensor3 outer(const SpectralTensor3& f) {
    const Dims d = f.dims();
    SpectralTensor3 out(Dims{d.n1, d.n1, d.n3});
    for (std::size_t k = 0; k < d.n3; ++k) out.slice(k).noalias() = f.slice(k) * f.slice(k).adjoint();
    return out;
  }

  Tensor3 u_;
  Tensor3 v_;
  SpectralTensor3 pu_;  // spectral slices of U * U^H
  SpectralTensor3 pv_;  // spectral slices of V * V^H
};

inline Tensor3 project_tangent(const Tensor3& z, const TangentSpace& t, bool perp = false) {
  return t.project(z, perp);
}

struct IncoherenceReport {
  double mu_u = 0.0;
  double mu_v = 0.0;
  double mu_joint = 0.0;
  /// max(mu_u, mu_v, mu_joint)
  double mu = 0.0;
  std::size_t rank = 0;
};

/// Smallest mu satisfying each of the three incoherence conditions for `l0`.
/// The rank comes from tubal_ranks at `rank_threshold` unless overridden.
inline IncoherenceReport incoherence(const Tensor3& l0, double rank_threshold = kDefaultRankThreshold,
                                     std::optional<std::size_t> rank_override = std::nullopt) {
  if (norm(l0, NormKind::linf) == 0.0) {
    throw Error(Errc::zero_tensor, "incoherence of the zero tensor is undefined");
  }
  const std::size_t r = rank_override ? *rank_override : tubal_ranks(l0, rank_threshold).tubal_rank;
  const auto f = tsvd_skinny(l0, r);
  const Dims d = l0.dims();

  // U^H * e_i is U^H(:, i, :), whose Frobenius norm is that of the horizontal slice U(i, :, :).
  auto max_row_energy = [](const Tensor3& q) {
    const Dims qd = q.dims();
    std::vector<double> rows(qd.n1, 0.0);
    for (std::size_t k = 0; k < qd.n3; ++k)
      for (std::size_t j = 0; j < qd.n2; ++j)
        for (std::size_t i = 0; i < qd.n1; ++i) rows[i] += q(i, j, k) * q(i, j, k);
    return *std::max_element(rows.begin(), rows.end());
  };

  const double rd = static_cast<double>(r);
  IncoherenceReport rep;
  rep.rank = r;
  rep.mu_u = static_cast<double>(d.n1) / rd * max_row_energy(f.u);
  rep.mu_v = static_cast<double>(d.n2) / rd * max_row_energy(f.v);
  const double joint = norm(t_product(f.u, conj_transpose(f.v)), NormKind::linf);
  rep.mu_joint = static_cast<double>(d.size()) / rd * joint * joint;
  rep.mu = std::max({rep.mu_u, rep.mu_v, rep.mu_joint});
  return rep;
}

inline double shrink(double x, double tau) noexcept {
  const double m = std::abs(x) - tau;
  return m > 0.0 ? std::copysign(m, x) : 0.0;
}

/// Entrywise sign(x) * max(|x| - tau, 0).
inline Tensor3 soft_threshold(const Tensor3& a, double tau) {
  if (!(tau >= 0.0)) throw Error(Errc::invalid_config, "shrinkage threshold must be nonnegative");
  Tensor3 out = a;
  for (auto& x : out.data()) x = shrink(x, tau);
  return out;
}

/// Shrink only the entries in `mask`; the rest pass through untouched.
inline Tensor3 soft_threshold(const Tensor3& a, double tau, const ObservationMask& mask) {
  if (!(tau >= 0.0)) throw Error(Errc::invalid_config, "shrinkage threshold must be nonnegative");
  require_mask_dims(a, mask);
  Tensor3 out = a;
  for (auto n : mask.indices()) out[n] = shrink(out[n], tau);
  return out;
}

}  // namespace tubal
