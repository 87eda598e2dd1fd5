#pragma once

// ADMM for robust tensor completion
//
//   min_{L,E} TNN(L) + lambda * ||P_Omega(E)||_1   s.t.  X = L + E,
//
// the equality form of P_Omega(L + E) = P_Omega(X) in which E absorbs the
// unobserved entries. Tensor completion and tensor robust PCA run through the
// same engine.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tubal/error.hpp"
#include "tubal/sampling.hpp"
#include "tubal/tensor.hpp"
#include "tubal/tsvd.hpp"

namespace tubal {

enum class Problem { rtc, trpca };

/// lambda = 1/sqrt(rho * max(n1, n2) * n3) for RTC and 1/sqrt(max(n1, n2) * n3) for TRPCA.
inline double default_lambda(Dims dims, double rate, Problem problem) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw Error(Errc::invalid_rate, "observation rate must lie in (0, 1], got " + std::to_string(rate));
  }
  const double big = static_cast<double>(std::max(dims.n1, dims.n2)) * static_cast<double>(dims.n3);
  return problem == Problem::rtc ? 1.0 / std::sqrt(rate * big) : 1.0 / std::sqrt(big);
}

struct AdmmConfig {
  /// Weight of the l1 term; the theory-driven default is used when unset.
  std::optional<double> lambda;
  double mu0 = 1e-4;
  double mu_max = 1e8;
  double growth = 1.1;
  double eps = 1e-6;
  std::size_t max_iters = 500;
  bool record_history = false;
  /// Divide the stopping residuals by max(1, ||X||_inf).
  bool relative_residual_stop = false;
  SvtOptions svt{};

  void validate() const {
    auto bad = [](const std::string& what) { return Error(Errc::invalid_config, what); };
    if (lambda && !(*lambda > 0.0)) throw bad("lambda must be positive");
    if (!(mu0 > 0.0 && mu0 < mu_max)) throw bad("need 0 < mu0 < mu_max");
    if (!(growth > 1.0)) throw bad("penalty growth must exceed 1");
    if (!(eps > 0.0)) throw bad("eps must be positive");
    if (max_iters == 0) throw bad("max_iters must be positive");
  }

  /// Penalty at iteration k (0-based): min(mu0 * growth^k, mu_max).
  double mu_at(std::size_t k) const {
    return std::min(mu0 * std::pow(growth, static_cast<double>(k)), mu_max);
  }
};

/// The three l-infinity quantities of the stopping test.
struct Residuals {
  double l_change = 0.0;
  double e_change = 0.0;
  double feasibility = 0.0;

  double max() const { return std::max({l_change, e_change, feasibility}); }
};

struct RecoveryResult {
  Tensor3 l;
  Tensor3 e;
  bool converged = false;
  std::size_t iters = 0;
  Residuals residuals;
  double lambda = 0.0;
  /// TNN(L) + lambda * ||P_Omega(E)||_1 per iteration (when recorded).
  std::vector<double> objective_history;
  std::vector<double> mu_history;
  double wall_seconds = 0.0;
};

namespace detail {

enum class SparseMode {
  shrink,  // l1 prox on Omega
  pinned,  // E = 0 on Omega (tensor completion)
};

/// Iterate the ADMM updates from L = E = Y = 0.
inline RecoveryResult run_admm(const Tensor3& x_in, const ObservationMask& mask, const AdmmConfig& cfg,
                               double lambda, SparseMode mode) {
  cfg.validate();
  require_mask_dims(x_in, mask);
  const auto start = std::chrono::steady_clock::now();

  const Tensor3 x = project_omega(x_in, mask);
  const Dims d = x.dims();
  const std::vector<bool> observed = [&] {
    std::vector<bool> o(d.size(), false);
    for (auto n : mask.indices()) o[n] = true;
    return o;
  }();
  const double scale = cfg.relative_residual_stop ? std::max(1.0, norm(x, NormKind::linf)) : 1.0;

  RecoveryResult res;
  res.lambda = lambda;
  res.l = Tensor3(d);
  res.e = Tensor3(d);
  Tensor3 y(d);
  Tensor3 g(d);

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    const double mu = cfg.mu_at(it);
    const double inv_mu = 1.0 / mu;

    // L-step: prox of TNN at X - E - Y/mu with threshold 1/mu.
    for (std::size_t n = 0; n < d.size(); ++n) g[n] = x[n] - res.e[n] - y[n] * inv_mu;
    auto prox = prox_tnn_impl(g, inv_mu, cfg.svt);
    Tensor3& l_next = prox.value;

    // E-step on Omega (l1 prox or pinned) and off Omega (exact slack).
    Tensor3 e_next(d);
    const double tau = lambda * inv_mu;
    double l1_observed = 0.0;
    for (std::size_t n = 0; n < d.size(); ++n) {
      const double t = x[n] - l_next[n] - y[n] * inv_mu;
      if (!observed[n]) {
        e_next[n] = t;
      } else if (mode == SparseMode::shrink) {
        e_next[n] = shrink(t, tau);
        l1_observed += std::abs(e_next[n]);
      }
    }

    Residuals r;
    for (std::size_t n = 0; n < d.size(); ++n) {
      const double gap = l_next[n] + e_next[n] - x[n];
      y[n] += mu * gap;
      r.l_change = std::max(r.l_change, std::abs(l_next[n] - res.l[n]));
      r.e_change = std::max(r.e_change, std::abs(e_next[n] - res.e[n]));
      r.feasibility = std::max(r.feasibility, std::abs(gap));
    }
    res.l = std::move(l_next);
    res.e = std::move(e_next);
    res.residuals = r;
    res.iters = it + 1;

    if (!all_finite(res.l) || !all_finite(res.e) || !all_finite(y)) {
      throw Error(Errc::non_finite_iterate,
                  "non-finite iterate at iteration " + std::to_string(it + 1) + " (mu=" +
                      std::to_string(mu) + ", lambda=" + std::to_string(lambda) + ")");
    }
    if (cfg.record_history) {
      res.objective_history.push_back(prox.tnn + lambda * l1_observed);
      res.mu_history.push_back(mu);
    }
    if (r.max() / scale <= cfg.eps) {
      res.converged = true;
      break;
    }
  }
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

inline double observed_fraction(const ObservationMask& m) {
  return static_cast<double>(m.size()) / static_cast<double>(m.dims().size());
}

}  // namespace detail

/// Robust tensor completion. Entries of `x` outside the mask are ignored. The
/// default lambda uses the observed fraction |Omega| / (n1 n2 n3) as rho.
inline RecoveryResult solve_rtc(const Tensor3& x, const ObservationMask& mask, const AdmmConfig& cfg = {}) {
  require_mask_dims(x, mask);
  if (mask.size() == 0) throw Error(Errc::empty_set, "observation mask is empty");
  const double lambda =
      cfg.lambda ? *cfg.lambda : default_lambda(x.dims(), detail::observed_fraction(mask), Problem::rtc);
  return detail::run_admm(x, mask, cfg, lambda, detail::SparseMode::shrink);
}

/// Tensor completion: the sparse term is held at zero on the observed entries.
inline RecoveryResult solve_tc(const Tensor3& x, const ObservationMask& mask, const AdmmConfig& cfg = {}) {
  require_mask_dims(x, mask);
  if (mask.size() == 0) throw Error(Errc::empty_set, "observation mask is empty");
  return detail::run_admm(x, mask, cfg, cfg.lambda.value_or(0.0), detail::SparseMode::pinned);
}

/// Tensor robust PCA: every entry observed.
inline RecoveryResult solve_trpca(const Tensor3& x, const AdmmConfig& cfg = {}) {
  AdmmConfig c = cfg;
  if (!c.lambda) c.lambda = default_lambda(x.dims(), 1.0, Problem::trpca);
  return solve_rtc(x, ObservationMask::full(x.dims()), c);
}

}  // namespace tubal
