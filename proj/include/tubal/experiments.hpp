#pragma once

// Synthetic recovery experiments: instance generation, metrics, recovery
// tables, phase-transition grids and Monte-Carlo checks of the sampling lemmas.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numeric>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "tubal/error.hpp"
#include "tubal/sampling.hpp"
#include "tubal/solver.hpp"
#include "tubal/tensor.hpp"
#include "tubal/tsvd.hpp"

namespace tubal {

enum class FactorDist {
  gaussian,   // N(0, 1)
  uniform,    // U[0, 1)
  bernoulli,  // {0, 1} with probability 1/2
};

/// Where corrupted entries are drawn from.
enum class CorruptionSupport {
  observed,     // a gamma fraction of the observed entries
  all_entries,  // a gamma fraction of all n1 n2 n3 entries
};

struct SyntheticSpec {
  Dims dims{};
  std::size_t rank = 1;
  double rho = 1.0;
  double gamma = 0.0;
  double corruption_std = 1.0;
  FactorDist factor_dist = FactorDist::gaussian;
  SamplingModel sampling = SamplingModel::uniform_without_replacement;
  CorruptionSupport support = CorruptionSupport::observed;
  std::uint64_t seed = 0;

  static SyntheticSpec cube(std::size_t n, std::size_t r, double rho, double gamma, std::uint64_t seed) {
    SyntheticSpec s;
    s.dims = {n, n, n};
    s.rank = r;
    s.rho = rho;
    s.gamma = gamma;
    s.seed = seed;
    return s;
  }

  void validate() const {
    auto bad = [](const std::string& what) { return Error(Errc::invalid_spec, what); };
    if (dims.size() == 0) throw bad("dims must be positive");
    if (rank < 1 || rank > std::min(dims.n1, dims.n2)) throw bad("rank outside [1, min(n1, n2)]");
    if (!(rho > 0.0 && rho <= 1.0)) throw bad("rho must lie in (0, 1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw bad("gamma must lie in [0, 1]");
    if (!(corruption_std >= 0.0)) throw bad("corruption std must be nonnegative");
  }
};

struct SyntheticInstance {
  Tensor3 l0;
  /// P_Omega(L0 + E0)
  Tensor3 x;
  ObservationMask mask;
  /// Sorted linear offsets of the corrupted entries.
  std::vector<std::size_t> corruption_support;
};

namespace detail {

/// splitmix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                                    std::uint64_t c = 0) noexcept {
  return mix_seed(mix_seed(mix_seed(mix_seed(base) ^ a) ^ b) ^ c);
}

inline Tensor3 random_tensor(Dims d, FactorDist dist, std::mt19937_64& rng) {
  Tensor3 t(d);
  switch (dist) {
    case FactorDist::gaussian: {
      std::normal_distribution<double> g(0.0, 1.0);
      for (auto& x : t.data()) x = g(rng);
      break;
    }
    case FactorDist::uniform: {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      for (auto& x : t.data()) x = u(rng);
      break;
    }
    case FactorDist::bernoulli: {
      std::bernoulli_distribution b(0.5);
      for (auto& x : t.data()) x = b(rng) ? 1.0 : 0.0;
      break;
    }
  }
  return t;
}

/// Run fn(0..count-1) on up to `jobs` threads. Results must be keyed by index.
inline void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace detail

/// Worker count from TUBAL_JOBS, else 1.
inline std::size_t default_jobs() {
  if (const char* env = std::getenv("TUBAL_JOBS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

/// L0 = P * W with P: n1 x r x n3 and W: r x n2 x n3, then observation and
/// additive Gaussian corruption. Draw order is fixed: P, W, mask, support, noise.
inline SyntheticInstance gen_instance(const SyntheticSpec& spec) {
  spec.validate();
  const Dims d = spec.dims;
  std::mt19937_64 rng(spec.seed);
  const Tensor3 p = detail::random_tensor({d.n1, spec.rank, d.n3}, spec.factor_dist, rng);
  const Tensor3 w = detail::random_tensor({spec.rank, d.n2, d.n3}, spec.factor_dist, rng);

  SyntheticInstance inst;
  inst.l0 = t_product(p, w);
  inst.mask = sample_mask(d, spec.rho, spec.sampling, detail::derive_seed(spec.seed, 1));

  std::vector<std::size_t> pool;
  if (spec.support == CorruptionSupport::observed) {
    pool.assign(inst.mask.indices().begin(), inst.mask.indices().end());
  } else {
    pool.resize(d.size());
    std::iota(pool.begin(), pool.end(), std::size_t{0});
  }
  const auto count = static_cast<std::size_t>(std::llround(spec.gamma * static_cast<double>(pool.size())));
  std::sample(pool.begin(), pool.end(), std::back_inserter(inst.corruption_support), count, rng);

  Tensor3 noisy = inst.l0;
  std::normal_distribution<double> noise(0.0, spec.corruption_std);
  for (auto n : inst.corruption_support) noisy[n] += noise(rng);
  inst.x = project_omega(noisy, inst.mask);
  return inst;
}

/// ||L - L0||_F / ||L0||_F
inline double rel_error(const Tensor3& l, const Tensor3& l0) {
  const double ref = frobenius(l0);
  if (ref == 0.0) throw Error(Errc::zero_reference, "reference tensor is zero");
  return frobenius(l - l0) / ref;
}

/// Root mean square deviation over the entries outside `observed`.
inline double rmse(const Tensor3& l, const Tensor3& x, const ObservationMask& observed) {
  l.require_same(x);
  require_mask_dims(l, observed);
  const auto missing = observed.complement_indices();
  if (missing.empty()) throw Error(Errc::empty_set, "no unobserved entries");
  double s = 0.0;
  for (auto n : missing) s += (l[n] - x[n]) * (l[n] - x[n]);
  return std::sqrt(s / static_cast<double>(missing.size()));
}

/// 10 log10(peak^2 / mse), mse over all entries.
inline double psnr(const Tensor3& l, const Tensor3& ref, double peak) {
  l.require_same(ref);
  double s = 0.0;
  for (std::size_t n = 0; n < l.size(); ++n) s += (l[n] - ref[n]) * (l[n] - ref[n]);
  if (s == 0.0) throw Error(Errc::identical_inputs, "PSNR of identical tensors is infinite");
  const double mse = s / static_cast<double>(l.size());
  return 10.0 * std::log10(peak * peak / mse);
}

inline constexpr double kDefaultSuccessTol = 1e-3;

struct TrialResult {
  double rel_error = 0.0;
  std::size_t recovered_rank = 0;
  bool success = false;
  bool converged = false;
  std::size_t iters = 0;
  double wall_seconds = 0.0;
};

/// Generate, solve with the default lambda, and score one instance.
inline TrialResult run_trial(const SyntheticSpec& spec, const AdmmConfig& cfg = {},
                             double success_tol = kDefaultSuccessTol) {
  const auto inst = gen_instance(spec);
  const auto res = solve_rtc(inst.x, inst.mask, cfg);
  TrialResult t;
  t.rel_error = rel_error(res.l, inst.l0);
  t.recovered_rank = tubal_ranks(res.l).tubal_rank;
  t.success = t.rel_error <= success_tol;
  t.converged = res.converged;
  t.iters = res.iters;
  t.wall_seconds = res.wall_seconds;
  return t;
}

struct TableRow {
  SyntheticSpec spec;
  std::size_t recovered_rank = 0;
  /// Median over seeds.
  double rel_error = 0.0;
  std::vector<TrialResult> trials;
};

struct TableOptions {
  /// Seeds per scenario: spec.seed, spec.seed + 1, ...
  std::size_t seeds = 1;
  std::size_t jobs = 1;
  AdmmConfig solver{};
};

/// One row per scenario reporting the median relative error over seeds and
/// the recovered tubal rank of the median run.
inline std::vector<TableRow> run_recovery_table(std::span<const SyntheticSpec> scenarios,
                                                const TableOptions& opts = {}) {
  const std::size_t seeds = std::max<std::size_t>(1, opts.seeds);
  std::vector<TrialResult> flat(scenarios.size() * seeds);
  detail::parallel_for(flat.size(), opts.jobs, [&](std::size_t idx) {
    SyntheticSpec s = scenarios[idx / seeds];
    s.seed += idx % seeds;
    flat[idx] = run_trial(s, opts.solver);
  });

  std::vector<TableRow> rows;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    TableRow row;
    row.spec = scenarios[i];
    row.trials.assign(flat.begin() + static_cast<std::ptrdiff_t>(i * seeds),
                      flat.begin() + static_cast<std::ptrdiff_t>((i + 1) * seeds));
    std::vector<TrialResult> sorted = row.trials;
    std::sort(sorted.begin(), sorted.end(),
              [](const TrialResult& a, const TrialResult& b) { return a.rel_error < b.rel_error; });
    std::vector<double> errs;
    for (const auto& t : row.trials) errs.push_back(t.rel_error);
    row.rel_error = detail::median(errs);
    row.recovered_rank = sorted[(sorted.size() - 1) / 2].recovered_rank;
    rows.push_back(std::move(row));
  }
  return rows;
}

struct PhaseGridRequest {
  Dims dims{40, 40, 40};
  std::vector<std::size_t> ranks;
  std::vector<double> gammas;
  double rho = 0.9;
  std::size_t trials = 10;
  double success_tol = kDefaultSuccessTol;
  std::uint64_t base_seed = 0;
  std::size_t jobs = 1;
  AdmmConfig solver{};
};

struct PhaseGrid {
  std::vector<std::size_t> ranks;
  std::vector<double> gammas;
  double rho = 0.0;
  std::size_t trials = 0;
  /// Row-major |ranks| x |gammas| success fractions.
  std::vector<double> success;

  double at(std::size_t rank_index, std::size_t gamma_index) const {
    return success[rank_index * gammas.size() + gamma_index];
  }
};

/// Seed of one phase-grid trial, a pure function of its cell and trial index.
constexpr std::uint64_t phase_trial_seed(std::uint64_t base, std::size_t rank_index, std::size_t gamma_index,
                                         std::size_t trial) noexcept {
  return detail::derive_seed(base, rank_index + 1, gamma_index + 1, trial + 1);
}

inline PhaseGrid run_phase_grid(const PhaseGridRequest& req) {
  if (req.trials < 1) throw Error(Errc::invalid_config, "phase grid needs at least one trial");
  const std::size_t nr = req.ranks.size();
  const std::size_t ng = req.gammas.size();
  std::vector<char> ok(nr * ng * req.trials, 0);
  detail::parallel_for(ok.size(), req.jobs, [&](std::size_t idx) {
    const std::size_t t = idx % req.trials;
    const std::size_t cell = idx / req.trials;
    const std::size_t ri = cell / ng;
    const std::size_t gi = cell % ng;
    SyntheticSpec s;
    s.dims = req.dims;
    s.rank = req.ranks[ri];
    s.rho = req.rho;
    s.gamma = req.gammas[gi];
    s.seed = phase_trial_seed(req.base_seed, ri, gi, t);
    ok[idx] = run_trial(s, req.solver, req.success_tol).success ? 1 : 0;
  });

  PhaseGrid grid{req.ranks, req.gammas, req.rho, req.trials, std::vector<double>(nr * ng, 0.0)};
  for (std::size_t cell = 0; cell < nr * ng; ++cell) {
    std::size_t wins = 0;
    for (std::size_t t = 0; t < req.trials; ++t) wins += static_cast<std::size_t>(ok[cell * req.trials + t]);
    grid.success[cell] = static_cast<double>(wins) / static_cast<double>(req.trials);
  }
  return grid;
}

struct Lemma1Request {
  std::size_t n = 30;
  /// Third dimension; 0 means n.
  std::size_t n3 = 0;
  std::size_t rank = 2;
  double rho = 0.5;
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::size_t power_iters = 50;
};

/// Power-iteration estimates of ||rho^-1 P_T P_Omega P_T - P_T||_op, one per
/// trial, each with a fresh random tangent space and Bernoulli mask.
inline std::vector<double> lemma1_check(const Lemma1Request& req) {
  if (req.rank >= req.n) throw Error(Errc::invalid_rank, "lemma check needs rank < n");
  if (!(req.rho > 0.0 && req.rho <= 1.0)) throw Error(Errc::invalid_rate, "rho must lie in (0, 1]");
  const std::size_t n3 = req.n3 ? req.n3 : req.n;
  const Dims d{req.n, req.n, n3};
  std::vector<double> out;
  for (std::size_t trial = 0; trial < req.trials; ++trial) {
    std::mt19937_64 rng(detail::derive_seed(req.seed, trial));
    const Tensor3 p = detail::random_tensor({d.n1, req.rank, n3}, FactorDist::gaussian, rng);
    const Tensor3 w = detail::random_tensor({req.rank, d.n2, n3}, FactorDist::gaussian, rng);
    const TangentSpace space = TangentSpace::at(t_product(p, w), req.rank);
    const ObservationMask mask = sample_mask(d, req.rho, SamplingModel::bernoulli, rng());

    auto op = [&](const Tensor3& z) {
      const Tensor3 pz = space.project(z, false);
      return space.project(project_omega(pz, mask), false) * (1.0 / req.rho) - pz;
    };

    Tensor3 z = space.project(detail::random_tensor(d, FactorDist::gaussian, rng), false);
    z *= 1.0 / frobenius(z);
    double estimate = 0.0;
    for (std::size_t it = 0; it < req.power_iters; ++it) {
      Tensor3 next = op(z);
      const double nrm = frobenius(next);
      const bool settled = estimate > 0.0 && std::abs(nrm - estimate) < 1e-6 * estimate;
      estimate = nrm;
      if (nrm == 0.0 || settled) break;
      z = std::move(next);
      z *= 1.0 / nrm;
    }
    out.push_back(estimate);
  }
  return out;
}

struct Lemma4Point {
  double rho = 0.0;
  double median = 0.0;
  std::vector<double> samples;
};

/// Spectral norm of a random sign tensor (entries +-1 with probability rho/2
/// each, 0 otherwise), normalized by sqrt(n * n3).
inline std::vector<Lemma4Point> lemma4_check(std::size_t n, std::size_t n3, std::span<const double> rhos,
                                             std::size_t draws = 10, std::uint64_t seed = 0) {
  std::vector<Lemma4Point> out;
  const double scale = std::sqrt(static_cast<double>(n) * static_cast<double>(n3));
  for (std::size_t ri = 0; ri < rhos.size(); ++ri) {
    const double rho = rhos[ri];
    if (!(rho >= 0.0 && rho <= 1.0)) throw Error(Errc::invalid_rate, "rho must lie in [0, 1]");
    Lemma4Point pt;
    pt.rho = rho;
    for (std::size_t draw = 0; draw < draws; ++draw) {
      std::mt19937_64 rng(detail::derive_seed(seed, ri, draw));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      Tensor3 m(n, n, n3);
      for (auto& x : m.data()) {
        const double v = u(rng);
        x = v < rho / 2 ? 1.0 : (v < rho ? -1.0 : 0.0);
      }
      pt.samples.push_back(spectral_norm(m) / scale);
    }
    pt.median = detail::median(pt.samples);
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace tubal
