#pragma once

// Command-line front end. run_cli() is the whole program; main() only forwards
// the process streams so tests can drive subcommands in-process.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "tubal/tubal.hpp"

#ifndef TUBAL_VERSION
#define TUBAL_VERSION "0.0.0"
#endif

namespace tubal::cli {

namespace fs = std::filesystem;

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  std::ostringstream ss;
  for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return ss.str();
}

/// Everything needed to rerun a subcommand exactly.
struct RunManifest {
  std::string subcommand;
  std::vector<std::string> argv;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<std::uint64_t> seeds;
  double wall_seconds = 0.0;
  std::vector<fs::path> outputs;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["subcommand"] = subcommand;
    j["argv"] = argv;
    j["parameters"] = parameters;
    j["seeds"] = seeds;
    j["version"] = TUBAL_VERSION;
    j["wall_seconds"] = wall_seconds;
    j["outputs"] = nlohmann::json::array();
    for (const auto& p : outputs) {
      j["outputs"].push_back({{"path", p.string()}, {"sha256", sha256_hex(io::read_file(p))}});
    }
    return j;
  }
};

struct Options {
  std::string in;
  std::string out;
  std::string mask;
  std::string truth;
  std::string sparse_out;
  std::string manifest;
  std::string preset = "paper-table1";
  std::string support = "observed";
  std::string sampling = "uniform";
  std::optional<double> lambda;
  double rho = 0.9;
  double gamma = 0.1;
  double corruption_std = 1.0;
  double eps = 1e-6;
  double tol = kDefaultSuccessTol;
  double gamma_max = 0.35;
  std::size_t gamma_steps = 8;
  std::size_t max_rank = 8;
  std::size_t rank = 2;
  std::size_t size = 40;
  std::size_t n3 = 0;
  std::size_t seeds = 3;
  std::size_t trials = 5;
  std::size_t max_iters = 500;
  std::size_t jobs = default_jobs();
  std::uint64_t seed = 0;
  int lemma = 1;
  std::vector<double> rhos;
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"Low-tubal-rank tensor recovery toolkit", "tubal"};
    app.require_subcommand(1);
    app.set_version_flag("--version", TUBAL_VERSION);
    Options o;

    auto solver_flags = [&](CLI::App* s) {
      s->add_option("--lambda", o.lambda, "l1 weight (default: theory-driven value)");
      s->add_option("--eps", o.eps, "stopping tolerance")->capture_default_str();
      s->add_option("--max-iters", o.max_iters, "iteration cap")->capture_default_str();
      s->add_option("--truth", o.truth, "ground-truth tensor for reporting relative error");
      s->add_option("--sparse-out", o.sparse_out, "write the sparse component here");
    };
    auto manifest_flag = [&](CLI::App* s) {
      s->add_option("--manifest", o.manifest, "run manifest path");
    };

    auto* rtc = app.add_subcommand("solve-rtc", "robust tensor completion");
    rtc->add_option("--in", o.in, "observed tensor (.t3d)")->required();
    rtc->add_option("--mask", o.mask, "observation mask")->required();
    rtc->add_option("--out", o.out, "recovered low-rank tensor")->required();
    solver_flags(rtc);

    auto* tc = app.add_subcommand("solve-tc", "tensor completion");
    tc->add_option("--in", o.in)->required();
    tc->add_option("--mask", o.mask)->required();
    tc->add_option("--out", o.out)->required();
    solver_flags(tc);

    auto* trpca = app.add_subcommand("solve-trpca", "tensor robust PCA");
    trpca->add_option("--in", o.in)->required();
    trpca->add_option("--out", o.out)->required();
    solver_flags(trpca);

    auto* synth = app.add_subcommand("synth", "generate a synthetic instance");
    synth->add_option("--size", o.size, "n1 = n2")->capture_default_str();
    synth->add_option("--n3", o.n3, "third dimension (default: size)");
    synth->add_option("--rank", o.rank)->capture_default_str();
    synth->add_option("--rho", o.rho)->capture_default_str();
    synth->add_option("--gamma", o.gamma)->capture_default_str();
    synth->add_option("--corruption-std", o.corruption_std)->capture_default_str();
    synth->add_option("--support", o.support, "observed|all")->capture_default_str();
    synth->add_option("--sampling", o.sampling, "uniform|bernoulli")->capture_default_str();
    synth->add_option("--seed", o.seed)->capture_default_str();
    synth->add_option("--out", o.out, "observed tensor")->required();
    synth->add_option("--mask", o.mask, "mask output")->required();
    synth->add_option("--truth", o.truth, "ground-truth output");

    auto* table = app.add_subcommand("table", "exact-recovery table");
    table->add_option("--preset", o.preset, "paper-table1|paper-table2")->capture_default_str();
    table->add_option("--size", o.size)->capture_default_str();
    table->add_option("--seeds", o.seeds, "seeds per row")->capture_default_str();
    table->add_option("--seed", o.seed, "first seed")->capture_default_str();
    table->add_option("--jobs", o.jobs)->capture_default_str();
    table->add_option("--eps", o.eps)->capture_default_str();
    table->add_option("--max-iters", o.max_iters)->capture_default_str();
    table->add_option("--out", o.out, "CSV path (default: stdout)");

    auto* grid = app.add_subcommand("phase-grid", "rank x corruption phase transition");
    grid->add_option("--size", o.size)->capture_default_str();
    grid->add_option("--rho", o.rho)->capture_default_str();
    grid->add_option("--trials", o.trials)->capture_default_str();
    grid->add_option("--rank", o.max_rank, "largest rank on the axis (ranks 1..R)")->capture_default_str();
    grid->add_option("--gamma", o.gamma_max, "largest corruption fraction")->capture_default_str();
    grid->add_option("--gamma-steps", o.gamma_steps)->capture_default_str();
    grid->add_option("--tol", o.tol, "success tolerance on relative error")->capture_default_str();
    grid->add_option("--seed", o.seed)->capture_default_str();
    grid->add_option("--jobs", o.jobs)->capture_default_str();
    grid->add_option("--eps", o.eps)->capture_default_str();
    grid->add_option("--max-iters", o.max_iters)->capture_default_str();
    grid->add_option("--out", o.out, "heatmap (.pgm); axes go to <out>.csv")->required();

    auto* lemma = app.add_subcommand("lemma-check", "Monte-Carlo sampling-operator checks");
    lemma->add_option("--lemma", o.lemma, "1: tangent-space contraction, 4: sign-tensor norm")
        ->check(CLI::IsMember({1, 4}))
        ->capture_default_str();
    lemma->add_option("--size", o.size)->capture_default_str();
    lemma->add_option("--n3", o.n3, "third dimension (default: size for 1, 10 for 4)");
    lemma->add_option("--rank", o.rank)->capture_default_str();
    lemma->add_option("--rho", o.rhos, "comma-separated rates")->delimiter(',');
    lemma->add_option("--trials", o.trials)->capture_default_str();
    lemma->add_option("--seed", o.seed)->capture_default_str();
    lemma->add_option("--out", o.out, "CSV path (default: stdout)");

    auto* image = app.add_subcommand("image-restore", "restore a partially observed, corrupted P6 image");
    image->add_option("--in", o.in)->required();
    image->add_option("--out", o.out)->required();
    image->add_option("--rho", o.rho)->capture_default_str();
    image->add_option("--gamma", o.gamma)->capture_default_str();
    image->add_option("--corruption-std", o.corruption_std)->capture_default_str();
    image->add_option("--seed", o.seed)->capture_default_str();
    solver_flags(image);

    auto* svd = app.add_subcommand("tsvd", "t-SVD factors of a tensor");
    svd->add_option("--in", o.in)->required();
    svd->add_option("--out", o.out, "output prefix: <out>.u.t3d, <out>.s.t3d, <out>.v.t3d")->required();
    svd->add_option("--rank", o.rank, "skinny rank (default: full)");

    auto* info = app.add_subcommand("info", "summary statistics of a tensor");
    info->add_option("--in", o.in)->required();

    for (auto* s : {rtc, tc, trpca, synth, table, grid, lemma, image, svd, info}) manifest_flag(s);

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      return app.exit(e, out_, err_) == 0 ? 0 : 1;
    }

    manifest_.subcommand = app.get_subcommands().front()->get_name();
    for (int i = 0; i < argc; ++i) manifest_.argv.emplace_back(argv[i]);
    const auto start = std::chrono::steady_clock::now();
    try {
      const std::string& cmd = manifest_.subcommand;
      if (cmd == "solve-rtc" || cmd == "solve-tc" || cmd == "solve-trpca") {
        cmd_solve(o, cmd);
      } else if (cmd == "synth") {
        cmd_synth(o);
      } else if (cmd == "table") {
        cmd_table(o);
      } else if (cmd == "phase-grid") {
        cmd_phase_grid(o);
      } else if (cmd == "lemma-check") {
        cmd_lemma(o);
      } else if (cmd == "image-restore") {
        cmd_image(o);
      } else if (cmd == "tsvd") {
        cmd_tsvd(o, svd->count("--rank") > 0);
      } else {
        cmd_info(o);
      }
      manifest_.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      write_manifest(o);
    } catch (const Error& e) {
      err_ << "error: " << e.what() << '\n';
      return is_numerical(e.code()) ? 2 : 1;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      return 1;
    }
    return 0;
  }

 private:
  AdmmConfig solver_config(const Options& o) const {
    AdmmConfig cfg;
    cfg.lambda = o.lambda;
    cfg.eps = o.eps;
    cfg.max_iters = o.max_iters;
    return cfg;
  }

  void record_output(const fs::path& p) { manifest_.outputs.push_back(p); }

  void emit_text(const Options& o, const std::string& text) {
    if (o.out.empty()) {
      out_ << text;
    } else {
      io::write_atomic(o.out, text);
      record_output(o.out);
    }
  }

  void write_manifest(const Options& o) {
    fs::path path = o.manifest;
    if (path.empty()) {
      path = manifest_.outputs.empty() ? fs::path("tubal-" + manifest_.subcommand + ".manifest.json")
                                       : fs::path(manifest_.outputs.front().string() + ".manifest.json");
    }
    io::write_atomic(path, manifest_.to_json().dump(2) + "\n");
  }

  void report_result(const RecoveryResult& r, const Options& o) {
    out_ << "converged = " << (r.converged ? "true" : "false") << ", iterations = " << r.iters
         << ", residuals = (" << r.residuals.l_change << ", " << r.residuals.e_change << ", "
         << r.residuals.feasibility << ")\n";
    out_ << "tubal_rank(L) = " << tubal_ranks(r.l).tubal_rank << "\n";
    if (!o.truth.empty()) {
      out_ << "rel_error = " << rel_error(r.l, io::read_tensor(o.truth)) << "\n";
    }
  }

  void cmd_solve(const Options& o, const std::string& cmd) {
    const Tensor3 x = io::read_tensor(o.in);
    AdmmConfig cfg = solver_config(o);
    RecoveryResult r;
    if (cmd == "solve-trpca") {
      const bool chosen = !cfg.lambda;
      if (chosen) cfg.lambda = default_lambda(x.dims(), 1.0, Problem::trpca);
      out_ << "lambda = " << *cfg.lambda << (chosen ? " (default)" : "") << "\n";
      r = solve_trpca(x, cfg);
    } else {
      const ObservationMask m = io::read_mask(o.mask);
      require_mask_dims(x, m);
      if (cmd == "solve-rtc") {
        const bool chosen = !cfg.lambda;
        if (chosen) {
          cfg.lambda = default_lambda(x.dims(), static_cast<double>(m.size()) / static_cast<double>(x.size()),
                                      Problem::rtc);
        }
        out_ << "lambda = " << *cfg.lambda << (chosen ? " (default)" : "") << "\n";
        r = solve_rtc(x, m, cfg);
      } else {
        r = solve_tc(x, m, cfg);
      }
    }
    manifest_.parameters = {{"lambda", r.lambda}, {"eps", cfg.eps}, {"max_iters", cfg.max_iters},
                            {"in", o.in}, {"mask", o.mask}};
    io::write_tensor(o.out, r.l);
    record_output(o.out);
    if (!o.sparse_out.empty()) {
      io::write_tensor(o.sparse_out, r.e);
      record_output(o.sparse_out);
    }
    report_result(r, o);
  }

  void cmd_synth(const Options& o) {
    SyntheticSpec s;
    s.dims = {o.size, o.size, o.n3 ? o.n3 : o.size};
    s.rank = o.rank;
    s.rho = o.rho;
    s.gamma = o.gamma;
    s.corruption_std = o.corruption_std;
    s.sampling = parse_sampling_model(o.sampling);
    if (o.support == "observed") {
      s.support = CorruptionSupport::observed;
    } else if (o.support == "all") {
      s.support = CorruptionSupport::all_entries;
    } else {
      throw Error(Errc::invalid_spec, "--support must be 'observed' or 'all'");
    }
    s.seed = o.seed;
    const auto inst = gen_instance(s);
    io::write_tensor(o.out, inst.x);
    record_output(o.out);
    io::write_mask(o.mask, inst.mask);
    record_output(o.mask);
    if (!o.truth.empty()) {
      io::write_tensor(o.truth, inst.l0);
      record_output(o.truth);
    }
    manifest_.seeds = {o.seed};
    manifest_.parameters = {{"dims", {s.dims.n1, s.dims.n2, s.dims.n3}},
                            {"rank", s.rank},
                            {"rho", s.rho},
                            {"gamma", s.gamma},
                            {"corruption_std", s.corruption_std},
                            {"support", o.support},
                            {"sampling", o.sampling}};
    out_ << "observed " << inst.mask.size() << " of " << s.dims.size() << " entries, "
         << inst.corruption_support.size() << " corrupted\n";
  }

  void cmd_table(const Options& o) {
    std::vector<SyntheticSpec> scenarios;
    const std::size_t n = o.size;
    auto scaled_rank = [n](double frac) {
      return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(frac * static_cast<double>(n))));
    };
    const bool table2 = o.preset == "paper-table2";
    if (!table2 && o.preset != "paper-table1") {
      throw Error(Errc::invalid_spec, "unknown preset '" + o.preset + "'");
    }
    for (const auto& [frac, rho, gamma] : {std::tuple{0.05, 0.9, 0.1}, std::tuple{0.1, 0.8, 0.2}}) {
      auto s = SyntheticSpec::cube(n, scaled_rank(frac), rho, gamma, o.seed);
      if (table2) {
        for (double sd : {1.0 / static_cast<double>(n), 1.0, static_cast<double>(n)}) {
          s.corruption_std = sd;
          scenarios.push_back(s);
        }
      } else {
        scenarios.push_back(s);
      }
    }
    TableOptions opts;
    opts.seeds = o.seeds;
    opts.jobs = o.jobs;
    opts.solver = solver_config(o);
    const auto rows = run_recovery_table(scenarios, opts);

    std::ostringstream csv;
    csv << (table2 ? "n,r,corruption_std,rank,rel_error\n" : "n,r,rank,rel_error\n");
    for (const auto& row : rows) {
      csv << row.spec.dims.n1 << ',' << row.spec.rank << ',';
      if (table2) csv << io::format_double(row.spec.corruption_std) << ',';
      csv << row.recovered_rank << ',' << std::scientific << std::setprecision(3) << row.rel_error
          << std::defaultfloat << '\n';
    }
    for (std::size_t s = 0; s < o.seeds; ++s) manifest_.seeds.push_back(o.seed + s);
    manifest_.parameters = {{"preset", o.preset}, {"size", n}, {"seeds", o.seeds}, {"eps", o.eps},
                            {"max_iters", o.max_iters}, {"jobs", o.jobs}};
    emit_text(o, csv.str());
  }

  void cmd_phase_grid(const Options& o) {
    PhaseGridRequest req;
    req.dims = {o.size, o.size, o.size};
    for (std::size_t r = 1; r <= o.max_rank; ++r) req.ranks.push_back(r);
    const std::size_t steps = std::max<std::size_t>(1, o.gamma_steps);
    for (std::size_t g = 0; g < steps; ++g) {
      req.gammas.push_back(steps == 1 ? 0.0 : o.gamma_max * static_cast<double>(g) / static_cast<double>(steps - 1));
    }
    req.rho = o.rho;
    req.trials = o.trials;
    req.success_tol = o.tol;
    req.base_seed = o.seed;
    req.jobs = o.jobs;
    req.solver = solver_config(o);
    const PhaseGrid g = run_phase_grid(req);
    io::emit_heatmap(g, o.out);
    record_output(o.out);
    record_output(o.out + ".csv");
    manifest_.seeds = {o.seed};
    manifest_.parameters = {{"size", o.size}, {"rho", o.rho}, {"trials", o.trials}, {"ranks", req.ranks},
                            {"gammas", req.gammas}, {"tol", o.tol}, {"jobs", o.jobs}};
    out_ << io::encode_grid_csv(g);
  }

  void cmd_lemma(const Options& o) {
    std::ostringstream csv;
    manifest_.seeds = {o.seed};
    if (o.lemma == 1) {
      const std::vector<double> rhos = o.rhos.empty() ? std::vector<double>{0.3, 0.5, 0.8} : o.rhos;
      csv << "rho,trial,deviation\n";
      for (double rho : rhos) {
        Lemma1Request req;
        req.n = o.size;
        req.n3 = o.n3;
        req.rank = o.rank;
        req.rho = rho;
        req.trials = o.trials;
        req.seed = o.seed;
        const auto est = lemma1_check(req);
        for (std::size_t t = 0; t < est.size(); ++t) csv << io::format_double(rho) << ',' << t << ',' << est[t] << '\n';
      }
      manifest_.parameters = {{"lemma", 1}, {"size", o.size}, {"n3", o.n3 ? o.n3 : o.size},
                              {"rank", o.rank}, {"rhos", rhos}, {"trials", o.trials}};
    } else {
      const std::vector<double> rhos =
          o.rhos.empty() ? std::vector<double>{0.0, 0.02, 0.05, 0.1, 0.2, 0.4} : o.rhos;
      const std::size_t n3 = o.n3 ? o.n3 : 10;
      const auto pts = lemma4_check(o.size, n3, rhos, o.trials, o.seed);
      csv << "rho,median,min,max\n";
      for (const auto& p : pts) {
        csv << io::format_double(p.rho) << ',' << p.median << ','
            << *std::min_element(p.samples.begin(), p.samples.end()) << ','
            << *std::max_element(p.samples.begin(), p.samples.end()) << '\n';
      }
      manifest_.parameters = {{"lemma", 4}, {"size", o.size}, {"n3", n3}, {"rhos", rhos}, {"draws", o.trials}};
    }
    emit_text(o, csv.str());
  }

  void cmd_image(const Options& o) {
    const Tensor3 img = io::read_ppm(o.in);
    const Dims d = img.dims();
    std::mt19937_64 rng(o.seed);
    const ObservationMask m = sample_mask(d, o.rho, SamplingModel::uniform_without_replacement, rng());
    std::vector<std::size_t> support;
    const auto count = static_cast<std::size_t>(std::llround(o.gamma * static_cast<double>(m.size())));
    std::sample(m.indices().begin(), m.indices().end(), std::back_inserter(support), count, rng);
    Tensor3 x = project_omega(img, m);
    std::normal_distribution<double> noise(0.0, o.corruption_std);
    for (auto n : support) x[n] += noise(rng);

    AdmmConfig cfg = solver_config(o);
    const RecoveryResult r = solve_rtc(x, m, cfg);
    io::write_ppm(o.out, r.l);
    record_output(o.out);
    manifest_.seeds = {o.seed};
    manifest_.parameters = {{"rho", o.rho}, {"gamma", o.gamma}, {"corruption_std", o.corruption_std},
                            {"lambda", r.lambda}};
    out_ << "lambda = " << r.lambda << (o.lambda ? "" : " (default)") << "\n";
    out_ << "psnr(observed) = " << psnr(x, img, 1.0) << " dB, psnr(restored) = " << psnr(r.l, img, 1.0)
         << " dB\n";
    report_result(r, o);
  }

  void cmd_tsvd(const Options& o, bool skinny) {
    const Tensor3 a = io::read_tensor(o.in);
    const TSvdFactors f = skinny ? tsvd_skinny(a, o.rank) : tsvd(a);
    const std::string prefix = o.out;
    for (const auto& [suffix, t] : {std::pair{".u.t3d", &f.u}, {".s.t3d", &f.s}, {".v.t3d", &f.v}}) {
      io::write_tensor(prefix + suffix, *t);
      record_output(prefix + suffix);
    }
    const RankReport rr = tubal_ranks(a);
    out_ << "dims = " << to_string(a.dims()) << ", tubal_rank = " << rr.tubal_rank << "\n";
    manifest_.parameters = {{"in", o.in}, {"skinny", skinny}, {"rank", skinny ? o.rank : 0}};
  }

  void cmd_info(const Options& o) {
    const Tensor3 a = io::read_tensor(o.in);
    const RankReport rr = tubal_ranks(a);
    out_ << "dims = " << to_string(a.dims()) << "\n";
    out_ << "tubal_rank = " << rr.tubal_rank << " (threshold " << rr.threshold << ")\n";
    out_ << "multi_rank =";
    for (auto r : rr.multi_rank) out_ << ' ' << r;
    out_ << "\n";
    out_ << "tnn = " << tnn(a) << "\n";
    out_ << "spectral_norm = " << spectral_norm(a) << "\n";
    out_ << "fro = " << norm(a, NormKind::fro) << ", l1 = " << norm(a, NormKind::l1)
         << ", linf = " << norm(a, NormKind::linf) << "\n";
    if (rr.tubal_rank > 0) {
      const IncoherenceReport inc = incoherence(a);
      out_ << "incoherence: mu_u = " << inc.mu_u << ", mu_v = " << inc.mu_v << ", mu_joint = " << inc.mu_joint
           << ", mu = " << inc.mu << " (r = " << inc.rank << ")\n";
    } else {
      out_ << "incoherence: undefined for the zero tensor\n";
    }
    manifest_.parameters = {{"in", o.in}};
  }

  std::ostream& out_;
  std::ostream& err_;
  RunManifest manifest_;
};

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  return Runner(out, err).run(argc, argv);
}

}  // namespace tubal::cli
