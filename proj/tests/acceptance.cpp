// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Every tolerance is fixed here, not tuned at run time. An optional
// argv[1] selects a single criterion number.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "teamlq/bounds.hpp"
#include "teamlq/cli.hpp"
#include "teamlq/diagnostics.hpp"
#include "teamlq/io.hpp"
#include "teamlq/pbp.hpp"
#include "teamlq/team.hpp"
#include "testutil.hpp"

using namespace teamlq;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20260808;

struct Checker {
  int checks = 0;
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    ++checks;
    if (!ok) failures.push_back(what);
  }
  template <typename... Args>
  void expectf(bool ok, const char* fmt, Args... args) {
    ++checks;
    if (!ok) {
      char buf[512];
      std::snprintf(buf, sizeof(buf), fmt, args...);
      failures.push_back(buf);
    }
  }
};

double combined_se(const EstimateWithError& a, const EstimateWithError& b) {
  return std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
}

// The fixed full-rank spec used by the gap and truncation criteria.
TeamSpec gap_spec() {
  TeamSpec spec;
  spec.m = 2;
  spec.obs_dims = {1, 1};
  spec.Q.resize(2, 2);
  spec.Q << 2, 1, 1, 2;
  spec.W.resize(4, 4);
  spec.W << 1.0, 0.4, 0.2, -0.3,
           -0.2, 0.9, 0.3, 0.4,
            0.8, -0.5, 1.1, 0.2,
            0.3, 0.7, -0.4, 0.9;
  return spec;
}

// --- criterion 1 -----------------------------------------------------------
// solve_linear against a projected-gradient minimization of the same
// quadratic assembled independently from instance matrices.
void c01_linear_solver_oracle(Checker& ck) {
  Rng rng(Rng::derive(kSeed, 1));
  for (int rep = 0; rep < 50; ++rep) {
    const TeamSpec spec = testutil::random_spec(rng, 3, 2);
    const int n = spec.l() + 3;
    const ProblemInstance inst =
        build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
    const int lbar = spec.total_obs();
    Eigen::MatrixXd M(lbar, lbar);
    Eigen::VectorXd b(lbar);
    for (int i = 0; i < spec.m; ++i) {
      const int oi = spec.obs_offset(i);
      b.segment(oi, spec.obs_dims[i]) = inst.H(i) * inst.S().row(i).transpose();
      for (int j = 0; j < spec.m; ++j)
        M.block(oi, spec.obs_offset(j), spec.obs_dims[i], spec.obs_dims[j]) =
            spec.Q(i, j) * (inst.H(i) * inst.H(j).transpose());
    }
    const Eigen::VectorXd oracle = testutil::gradient_descent_minimize(M, b);
    const Eigen::VectorXd direct = solve_linear(spec).stacked();
    const double gamma_err = (oracle - direct).cwiseAbs().maxCoeff();
    auto value = [&](const Eigen::VectorXd& g) {
      return 0.5 * g.dot(M * g) + g.dot(b) + expected_q(spec);
    };
    const double obj_err = std::fabs(value(oracle) - value(direct));
    ck.expectf(gamma_err <= 1e-6, "rep %d: gamma error %.3e > 1e-6", rep, gamma_err);
    ck.expectf(obj_err <= 1e-8, "rep %d: objective error %.3e > 1e-8", rep, obj_err);
  }
}

// --- criterion 2 -----------------------------------------------------------
void c02_gaussian_closed_form_vs_mc(Checker& ck) {
  Rng rng(Rng::derive(kSeed, 2));
  for (int rep = 0; rep < 20; ++rep) {
    const TeamSpec spec = testutil::random_spec(rng, 3, 2);
    const double jg = gaussian_cost(spec);
    const Eigen::VectorXd gamma = solve_linear(spec).stacked();

    // closed form is bit-identical across n and across R draws
    for (const int n : {spec.l(), 4 * spec.l(), 16 * spec.l()}) {
      for (int draw = 0; draw < 5; ++draw) {
        const ProblemInstance inst =
            build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
        (void)inst;
        const double again = gaussian_cost(spec);
        const Eigen::VectorXd gagain = solve_linear(spec).stacked();
        ck.expectf(std::memcmp(&jg, &again, sizeof(double)) == 0,
                   "rep %d: gaussian_cost changed bits at n=%d", rep, n);
        ck.expectf(gagain == gamma, "rep %d: gains changed bits at n=%d", rep, n);
      }
    }

    const int n = 4 * spec.l();
    const ProblemInstance inst =
        build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
    const NoiseModel noise(NoiseFamily::gaussian, n);
    const auto est =
        mc_cost(inst, solve_linear(spec), noise, 1000000, Rng::derive(kSeed, 2, rep), 2);
    ck.expectf(std::fabs(est.value - jg) <= 4.0 * est.std_error,
               "rep %d: |mc - closed| = %.3e > 4 se = %.3e", rep,
               std::fabs(est.value - jg), 4.0 * est.std_error);
  }
}

// --- criterion 3 -----------------------------------------------------------
void c03_moment_only_dependence(Checker& ck) {
  Rng rng(Rng::derive(kSeed, 3));
  const NoiseFamily families[] = {NoiseFamily::exp_product, NoiseFamily::laplace_product,
                                  NoiseFamily::uniform_cube_product,
                                  NoiseFamily::uniform_ball};
  for (int rep = 0; rep < 3; ++rep) {
    const TeamSpec spec = testutil::random_spec(rng, 3, 2);
    const double jg = gaussian_cost(spec);
    const int n = 2 * spec.l() + 1;
    const ProblemInstance inst =
        build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
    const LinearPolicy policy = solve_linear(spec);
    for (const NoiseFamily family : families) {
      const NoiseModel noise(family, n);
      const auto est = mc_cost(inst, policy, noise, 1000000,
                               Rng::derive(kSeed, 3, rep, static_cast<int>(family)), 2);
      ck.expectf(std::fabs(est.value - jg) <= 5.0 * est.std_error,
                 "rep %d %s: |mc - J_G| = %.3e > 5 se = %.3e", rep,
                 NoiseModel::family_name(family).c_str(),
                 std::fabs(est.value - jg), 5.0 * est.std_error);
    }
  }
}

// --- criterion 4 -----------------------------------------------------------
void c04_cost_nonnegativity(Checker& ck) {
  Rng rng(Rng::derive(kSeed, 4));
  double min_cost = 1e300;
  const auto& catalog = NoiseModel::catalog();
  for (int rep = 0; rep < 100; ++rep) {
    const TeamSpec spec = testutil::random_spec(rng, 3, 2);
    const int n = spec.l() + 2;
    const ProblemInstance inst =
        build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
    const NoiseModel noise(catalog[rep % catalog.size()], n);
    Eigen::VectorXd u(spec.m), xi(n);
    for (int k = 0; k < 1000; ++k) {
      for (int i = 0; i < spec.m; ++i) u[i] = 4.0 * rng.normal();
      noise.sample_into(std::span<double>(xi.data(), n), rng);
      min_cost = std::min(min_cost, cost(inst, u, xi));
    }
  }
  ck.expectf(min_cost >= -1e-9, "min cost %.3e < -1e-9 over 1e5 triples", min_cost);
}

// --- criterion 5 -----------------------------------------------------------
void c05_gap_decay(Checker& ck) {
  const TeamSpec spec = gap_spec();
  const double jg = gaussian_cost(spec);
  GapSweepOptions opts;
  opts.pbp.bins = 64;
  opts.pbp.samples = 200000;
  opts.eval_samples = 200000;
  const auto rows =
      gap_sweep(spec, NoiseFamily::exp_product, {4, 16, 64, 256}, opts, kSeed, 2);
  for (const auto& r : rows) {
    ck.expectf(r.pbp_converged, "n=%d: pbp did not converge", r.n);
    const double comb = combined_se(r.j_linear, r.j_pbp);
    ck.expectf(r.gap >= -3.0 * comb, "n=%d: gap %.5f < -3 combined se %.5f", r.n,
               r.gap, 3.0 * comb);
  }
  ck.expectf(rows.back().gap <= rows.front().gap,
             "gap(256)=%.5f > gap(4)=%.5f", rows.back().gap, rows.front().gap);
  ck.expectf(rows.back().gap <= 0.05 * jg, "gap(256)=%.5f > 0.05 J_G=%.5f",
             rows.back().gap, 0.05 * jg);
}

// --- criterion 6 -----------------------------------------------------------
void c06_pbp_recovers_linear(Checker& ck) {
  Rng rng(Rng::derive(kSeed, 6));
  for (int rep = 0; rep < 3; ++rep) {
    const TeamSpec spec = testutil::random_spec(rng, 3, 2);
    bool has2 = false;
    for (int d : spec.obs_dims) has2 |= (d == 2);
    const LinearPolicy linear = solve_linear(spec);
    const int n = spec.l() + 4;
    const ProblemInstance inst =
        build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
    const NoiseModel noise(NoiseFamily::gaussian, n);
    PbpConfig cfg;
    cfg.bins = has2 ? 24 : 64;
    cfg.samples = has2 ? 4000000 : 1000000;
    const PbpResult res = pbp_solve(inst, noise, cfg, Rng::derive(kSeed, 6, rep));
    ck.expectf(res.converged, "rep %d: pbp did not converge", rep);
    for (int p = 0; p < spec.m; ++p) {
      const Eigen::MatrixXd wp = spec.w_block(p);
      for (int c = 0; c < res.policy.cell_count(p); ++c) {
        const auto center = res.policy.cell_center(p, c);
        bool central = true;
        double want = 0.0;
        for (int d = 0; d < spec.obs_dims[p]; ++d) {
          if (std::fabs(center[d]) > 1.645 * wp.row(d).norm()) central = false;
          want += linear.gains[p][d] * center[d];
        }
        if (!central) continue;
        const double got = res.policy.players[p].values[c];
        ck.expectf(std::fabs(got - want) <= 0.05 * (1.0 + std::fabs(want)),
                   "rep %d player %d cell %d: |%.4f - %.4f| > 5%% band", rep, p, c,
                   got, want);
      }
    }
  }
}

// --- criterion 7 -----------------------------------------------------------
void c07_clt_trend(Checker& ck) {
  std::vector<DensityReport> reps;
  for (const int n : {8, 64, 512}) {
    const NoiseModel noise(NoiseFamily::uniform_cube_product, n);
    reps.push_back(density_report(noise, 2, 1000000, Rng::derive(kSeed, 7, n), 2));
  }
  for (size_t k = 1; k < reps.size(); ++k) {
    ck.expectf(reps[k].tv_estimate < reps[k - 1].tv_estimate,
               "tv(%d)=%.5f !< tv(%d)=%.5f", reps[k].n, reps[k].tv_estimate,
               reps[k - 1].n, reps[k - 1].tv_estimate);
    ck.expectf(reps[k].grid_sup_ratio_err < reps[k - 1].grid_sup_ratio_err,
               "ratio(%d)=%.5f !< ratio(%d)=%.5f", reps[k].n,
               reps[k].grid_sup_ratio_err, reps[k - 1].n,
               reps[k - 1].grid_sup_ratio_err);
  }
  ck.expectf(reps.back().tv_estimate < 0.05, "tv(512)=%.5f >= 0.05",
             reps.back().tv_estimate);
}

// --- criterion 8 -----------------------------------------------------------
void c08_tau_correctness(Checker& ck) {
  Rng rng(Rng::derive(kSeed, 8));
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 1 + static_cast<int>(rng.uniform01() * 20);
    const int r = 1 + static_cast<int>(rng.uniform01() * 4);
    const int l = r + d;
    const double t = 10.0 * rng.uniform01();
    const double closed = tail_weight(l, r, t);
    const double quad = testutil::chi_tail_quadrature(d, std::sqrt(0.75) * t);
    ck.expectf(std::fabs(closed - quad) < 1e-10,
               "l=%d r=%d t=%.4f: |closed - quad| = %.3e", l, r, t,
               std::fabs(closed - quad));
  }
  ck.expect(tail_weight(4, 4, 3.3) == 0.0, "tau != 0 at l == r");
  ck.expect(tail_weight(5, 2, 0.0) == 1.0, "tau != 1 at t == 0, l > r");
}

// --- criterion 9 -----------------------------------------------------------
void c09_truncated_monotonicity(Checker& ck) {
  const TeamSpec spec = gap_spec();
  const double jg = gaussian_cost(spec);
  PbpConfig cfg;
  cfg.bins = 128;
  cfg.samples = 200000;
  std::vector<EstimateWithError> vs;
  for (const double t : {0.5, 1.0, 2.0, 4.0, 100.0})
    vs.push_back(truncated_gaussian_value(spec, t, cfg, Rng::derive(kSeed, 9)));
  for (size_t k = 1; k < vs.size(); ++k) {
    const double comb = combined_se(vs[k - 1], vs[k]);
    ck.expectf(vs[k].value >= vs[k - 1].value - 3.0 * comb,
               "v[%zu]=%.5f < v[%zu]=%.5f - 3 se", k, vs[k].value, k - 1,
               vs[k - 1].value);
  }
  ck.expectf(std::fabs(vs.back().value - jg) <= 4.0 * vs.back().std_error,
             "|v(100) - J_G| = %.5f > 4 se = %.5f", std::fabs(vs.back().value - jg),
             4.0 * vs.back().std_error);
}

// --- criterion 10 ----------------------------------------------------------
void c10_envelope_budget_stability(Checker& ck) {
  auto lgamma_ld = [](long double x) {
    long double acc = 0.0L;
    while (x > 1.0L + 1e-9L) {
      x -= 1.0L;
      acc += std::log(x);
    }
    if (std::fabs(static_cast<double>(x - 0.5L)) < 1e-9)
      return acc + 0.5L * std::log(static_cast<long double>(M_PI));
    return acc;
  };
  for (int d = 1; d <= 50; ++d) {
    const int l = 2, n = l + d;
    for (const double a : {0.5, 1.0, 2.5}) {
      for (const double b : {-3.0, 0.0, 4.0}) {
        const long double ref =
            static_cast<long double>(b) +
            d * std::log(static_cast<long double>(a) /
                         std::sqrt(static_cast<long double>(M_PI))) +
            lgamma_ld(0.5L * d) - std::log(2.0L) -
            lgamma_ld(static_cast<long double>(d));
        const double got = envelope_budget(a, b, n, l);
        const double tol = 1e-9 * std::max(1.0, std::fabs(static_cast<double>(ref)));
        ck.expectf(std::fabs(got - static_cast<double>(ref)) <= tol,
                   "d=%d a=%.2f b=%.1f: |%.12g - %.12g| > 1e-9 rel", d, a, b, got,
                   static_cast<double>(ref));
      }
    }
  }
  for (const std::int64_t n : {1000LL, 31623LL, 1000000LL}) {
    const double v = envelope_budget(1.0, 0.0, n, 2);
    ck.expectf(std::isfinite(v), "budget overflowed at n=%lld",
               static_cast<long long>(n));
  }
}

// --- criterion 11 ----------------------------------------------------------
std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void c11_reproducibility(Checker& ck) {
  const fs::path dir = fs::temp_directory_path() / "teamlq_acceptance_c11";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const fs::path cfg_path = dir / "config.json";
  {
    std::ofstream cfg(cfg_path);
    cfg << R"({"subcommand": "gap-sweep", "seed": 424242,
      "noise_family": "exp_product", "n_list": [4, 16],
      "pbp": {"bins": 32, "samples": 20000},
      "eval_samples": 20000,
      "spec": {"m": 2, "obs_dims": [1, 1], "Q": [[2, 1], [1, 2]],
        "W": [[1.0, 0.4, 0.2, -0.3], [-0.2, 0.9, 0.3, 0.4],
              [0.8, -0.5, 1.1, 0.2], [0.3, 0.7, -0.4, 0.9]]}})";
  }
  auto run_once = [&](const std::string& sub, int workers) {
    CliOptions opts;
    opts.config_path = cfg_path.string();
    opts.out_dir = (dir / sub).string();
    opts.workers = workers;
    return teamlq::run(opts);
  };
  ck.expect(run_once("a", 1) == 0, "first run failed");
  ck.expect(run_once("b", 1) == 0, "second run failed");
  ck.expect(run_once("c", 8) == 0, "8-worker run failed");
  const std::string a = read_bytes(dir / "a" / "gap_sweep.csv");
  const std::string b = read_bytes(dir / "b" / "gap_sweep.csv");
  const std::string c = read_bytes(dir / "c" / "gap_sweep.csv");
  ck.expect(!a.empty(), "csv output missing");
  ck.expect(a == b, "re-run produced different csv bytes");
  ck.expect(a == c, "8-worker run produced different csv bytes");
  const std::string sa = read_bytes(dir / "a" / "gap_sweep.svg");
  const std::string sc = read_bytes(dir / "c" / "gap_sweep.svg");
  ck.expect(!sa.empty() && sa == sc, "svg output not reproducible");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Checker&)> fn;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria = {
      {1, "linear solver matches projected-gradient oracle (50 specs)",
       c01_linear_solver_oracle},
      {2, "gaussian closed form vs MC; bit-identical across n and R",
       c02_gaussian_closed_form_vs_mc},
      {3, "linear cost is moment-only across non-gaussian families",
       c03_moment_only_dependence},
      {4, "cost nonnegativity over 1e5 random triples", c04_cost_nonnegativity},
      {5, "optimality gap decays on the exp_product sweep", c05_gap_decay},
      {6, "pbp recovers the gaussian linear optimum on the grid",
       c06_pbp_recovers_linear},
      {7, "projection CLT trend for cube noise (tv and ratio)", c07_clt_trend},
      {8, "tau closed form vs adaptive quadrature (100 cases)", c08_tau_correctness},
      {9, "truncated value nondecreasing, v(100) matches J_G",
       c09_truncated_monotonicity},
      {10, "envelope budget matches extended precision, no overflow",
       c10_envelope_budget_stability},
      {11, "gap-sweep CSV bytes identical across runs and workers",
       c11_reproducibility},
  };

  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  int failed = 0;
  for (const auto& crit : criteria) {
    if (only != 0 && crit.id != only) continue;
    Checker ck;
    const auto start = std::chrono::steady_clock::now();
    std::string error;
    try {
      crit.fn(ck);
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool ok = error.empty() && ck.failures.empty();
    std::printf("criterion %02d %s  %s  [%d checks, %.1fs]\n", crit.id,
                ok ? "PASS" : "FAIL", crit.name, ck.checks, secs);
    if (!error.empty()) std::printf("    exception: %s\n", error.c_str());
    for (size_t i = 0; i < ck.failures.size() && i < 5; ++i)
      std::printf("    %s\n", ck.failures[i].c_str());
    if (ck.failures.size() > 5)
      std::printf("    ... and %zu more\n", ck.failures.size() - 5);
    if (!ok) ++failed;
    std::fflush(stdout);
  }
  if (failed) std::printf("%d criteria FAILED\n", failed);
  return failed == 0 ? 0 : 1;
}
