#include "teamlq/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "teamlq/bounds.hpp"
#include "teamlq/diagnostics.hpp"
#include "teamlq/errors.hpp"
#include "teamlq/io.hpp"
#include "teamlq/pbp.hpp"
#include "teamlq/team.hpp"

namespace teamlq {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void config_fail(const std::string& field, const std::string& what) {
  throw SpecError("config." + field + ": " + what);
}

const json& need(const json& j, const std::string& field) {
  if (!j.contains(field)) config_fail(field, "missing");
  return j.at(field);
}

double need_number(const json& j, const std::string& field) {
  const json& v = need(j, field);
  if (!v.is_number()) config_fail(field, "must be a number");
  return v.get<double>();
}

std::int64_t int_or(const json& j, const std::string& field, std::int64_t dflt) {
  if (!j.contains(field)) return dflt;
  if (!j.at(field).is_number_integer()) config_fail(field, "must be an integer");
  return j.at(field).get<std::int64_t>();
}

double num_or(const json& j, const std::string& field, double dflt) {
  if (!j.contains(field)) return dflt;
  if (!j.at(field).is_number()) config_fail(field, "must be a number");
  return j.at(field).get<double>();
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) config_fail(field, "must be an array of rows");
  const size_t cols = j.at(0).is_array() ? j.at(0).size() : 0;
  if (cols == 0) config_fail(field, "rows must be non-empty arrays");
  Eigen::MatrixXd out(j.size(), cols);
  for (size_t r = 0; r < j.size(); ++r) {
    const json& row = j.at(r);
    if (!row.is_array() || row.size() != cols)
      config_fail(field, "rows must all have the same length");
    for (size_t c = 0; c < cols; ++c) {
      if (!row.at(c).is_number()) config_fail(field, "entries must be numbers");
      out(r, c) = row.at(c).get<double>();
    }
  }
  return out;
}

TeamSpec parse_spec(const json& cfg) {
  json spec_json;
  if (cfg.contains("spec_file")) {
    std::ifstream in(cfg.at("spec_file").get<std::string>());
    if (!in) config_fail("spec_file", "cannot open");
    in >> spec_json;
  } else if (cfg.contains("spec")) {
    spec_json = cfg.at("spec");
  } else {
    config_fail("spec", "missing (provide spec or spec_file)");
  }
  TeamSpec spec;
  if (!spec_json.contains("m") || !spec_json.at("m").is_number_integer())
    config_fail("spec.m", "must be an integer");
  spec.m = spec_json.at("m").get<int>();
  const json& dims = need(spec_json, "obs_dims");
  if (!dims.is_array()) config_fail("spec.obs_dims", "must be an array");
  for (const auto& d : dims) {
    if (!d.is_number_integer()) config_fail("spec.obs_dims", "entries must be integers");
    spec.obs_dims.push_back(d.get<int>());
  }
  spec.Q = parse_matrix(need(spec_json, "Q"), "spec.Q");
  spec.W = parse_matrix(need(spec_json, "W"), "spec.W");
  try {
    spec.validate();
  } catch (const SpecError& e) {
    throw SpecError(std::string("config.") + e.what());
  }
  return spec;
}

PbpConfig parse_pbp(const json& cfg) {
  PbpConfig pbp;
  if (!cfg.contains("pbp")) return pbp;
  const json& j = cfg.at("pbp");
  pbp.bins = static_cast<int>(int_or(j, "bins", pbp.bins));
  pbp.samples = int_or(j, "samples", pbp.samples);
  pbp.max_iters = static_cast<int>(int_or(j, "max_iters", pbp.max_iters));
  pbp.damping = num_or(j, "damping", pbp.damping);
  pbp.tol = num_or(j, "tol", pbp.tol);
  try {
    pbp.validate();
  } catch (const SpecError& e) {
    throw SpecError(std::string("config.") + e.what());
  }
  return pbp;
}

BoundConstants parse_constants(const json& cfg) {
  BoundConstants consts;
  if (!cfg.contains("constants")) return consts;
  const json& j = cfg.at("constants");
  if (j.contains("C")) {
    consts.C = need_number(j, "C");
    consts.illustrative = false;
  }
  consts.c1 = num_or(j, "c1", consts.c1);
  consts.c2 = num_or(j, "c2", consts.c2);
  consts.c3 = num_or(j, "c3", consts.c3);
  consts.c4 = num_or(j, "c4", consts.c4);
  return consts;
}

std::vector<int> parse_n_list(const json& cfg) {
  const json& j = need(cfg, "n_list");
  if (!j.is_array() || j.empty()) config_fail("n_list", "must be a non-empty array");
  std::vector<int> out;
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<int>() <= 0)
      config_fail("n_list", "entries must be positive integers");
    out.push_back(v.get<int>());
  }
  return out;
}

NoiseFamily parse_family(const json& cfg) {
  const json& j = need(cfg, "noise_family");
  if (!j.is_string()) config_fail("noise_family", "must be a string");
  return NoiseModel::family_from_string(j.get<std::string>());
}

json constants_json(const BoundConstants& c) {
  return json{{"C", c.C},         {"c1", c.c1},
              {"c2", c.c2},       {"c3", c.c3},
              {"c4", c.c4},       {"illustrative", c.illustrative}};
}

json estimate_json(const EstimateWithError& e) {
  return json{{"value", e.value}, {"std_error", e.std_error}, {"samples", e.samples}};
}

struct RunContext {
  json cfg;
  std::uint64_t seed = 0;
  int workers = 1;
  fs::path out_dir;

  std::string emit_path(const std::string& name) const {
    return (out_dir / name).string();
  }
  void announce(const std::string& path, const std::string& what) const {
    std::cout << "wrote " << path << " (" << what << ")\n";
  }
};

void write_json_file(const RunContext& ctx, const std::string& name, const json& doc,
                     const std::string& what) {
  const std::string path = ctx.emit_path(name);
  std::ofstream out(path);
  if (!out) throw SpecError("config.out_dir: cannot write " + path);
  out << doc.dump(2) << '\n';
  ctx.announce(path, what);
}

int cmd_validate_spec(const RunContext& ctx) {
  const TeamSpec spec = parse_spec(ctx.cfg);
  std::cout << "spec ok: m=" << spec.m << " l=" << spec.l()
            << " gaussian_cost=" << format_double(gaussian_cost(spec)) << '\n';
  return 0;
}

int cmd_solve_linear(const RunContext& ctx) {
  const TeamSpec spec = parse_spec(ctx.cfg);
  const LinearPolicy policy = solve_linear(spec);
  json gains = json::array();
  for (const auto& g : policy.gains) {
    json v = json::array();
    for (int k = 0; k < g.size(); ++k) v.push_back(g[k]);
    gains.push_back(v);
  }
  const json doc{{"gains", gains}, {"gaussian_cost", gaussian_cost(spec)}};
  write_json_file(ctx, "policy_linear.json", doc, "linear policy");
  return 0;
}

int cmd_sample_instance(const RunContext& ctx) {
  const TeamSpec spec = parse_spec(ctx.cfg);
  const int n = static_cast<int>(int_or(ctx.cfg, "n", 0));
  if (n < spec.l()) config_fail("n", "must be at least l");
  Rng rng(Rng::derive(ctx.seed, seeds::kInstance, static_cast<std::uint64_t>(n)));
  const ProblemInstance inst =
      build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
  const std::string path = ctx.emit_path("instance.txt");
  save_instance(inst, path);
  ctx.announce(path, "instance n=" + std::to_string(n));
  return 0;
}

int cmd_solve_pbp(const RunContext& ctx) {
  const TeamSpec spec = parse_spec(ctx.cfg);
  const int n = static_cast<int>(int_or(ctx.cfg, "n", 0));
  if (n < spec.l()) config_fail("n", "must be at least l");
  const NoiseFamily family = parse_family(ctx.cfg);
  const PbpConfig pbp = parse_pbp(ctx.cfg);
  const std::int64_t eval_samples = int_or(ctx.cfg, "eval_samples", 200000);

  Rng rng(Rng::derive(ctx.seed, seeds::kInstance, static_cast<std::uint64_t>(n)));
  const ProblemInstance inst =
      build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
  const NoiseModel noise(family, n);
  const PbpResult res = pbp_solve(inst, noise, pbp, Rng::derive(ctx.seed, 2));

  const std::string policy_path = ctx.emit_path("policy_pbp.txt");
  save_policy(res.policy, policy_path);
  ctx.announce(policy_path, "tabulated policy, " + std::to_string(res.iterations) +
                                " sweeps");

  const LinearPolicy linear = solve_linear(spec);
  const PairedCost pc = mc_cost_paired(inst, linear, res.policy, noise, eval_samples,
                                       Rng::derive(ctx.seed, 3), ctx.workers);
  const std::string csv_path = ctx.emit_path("costs.csv");
  {
    CsvWriter csv(csv_path);
    csv.row({"n", "seed", "policy_kind", "value", "stderr", "samples"});
    csv.row({CsvWriter::num(static_cast<std::int64_t>(n)), std::to_string(ctx.seed),
             "linear", CsvWriter::num(pc.first.value),
             CsvWriter::num(pc.first.std_error), CsvWriter::num(pc.first.samples)});
    csv.row({CsvWriter::num(static_cast<std::int64_t>(n)), std::to_string(ctx.seed),
             "pbp", CsvWriter::num(pc.second.value),
             CsvWriter::num(pc.second.std_error), CsvWriter::num(pc.second.samples)});
  }
  ctx.announce(csv_path, "2 cost rows");
  return 0;
}

int cmd_gap_sweep(const RunContext& ctx) {
  const TeamSpec spec = parse_spec(ctx.cfg);
  const NoiseFamily family = parse_family(ctx.cfg);
  GapSweepOptions opts;
  opts.pbp = parse_pbp(ctx.cfg);
  opts.eval_samples = int_or(ctx.cfg, "eval_samples", 200000);
  opts.consts = parse_constants(ctx.cfg);
  const std::vector<int> n_list = parse_n_list(ctx.cfg);

  const auto rows = gap_sweep(spec, family, n_list, opts, ctx.seed, ctx.workers);

  const std::string csv_path = ctx.emit_path("gap_sweep.csv");
  {
    CsvWriter csv(csv_path);
    csv.row({"n", "seed", "J_linear", "J_linear_se", "J_pbp", "J_pbp_se", "gap",
             "bound_upper", "bound_lower", "bound_valid"});
    for (const auto& r : rows)
      csv.row({CsvWriter::num(static_cast<std::int64_t>(r.n)),
               std::to_string(r.row_seed), CsvWriter::num(r.j_linear.value),
               CsvWriter::num(r.j_linear.std_error), CsvWriter::num(r.j_pbp.value),
               CsvWriter::num(r.j_pbp.std_error), CsvWriter::num(r.gap),
               CsvWriter::num(r.bounds.upper), CsvWriter::num(r.bounds.lower),
               r.bounds.valid ? "1" : "0"});
  }
  ctx.announce(csv_path, std::to_string(rows.size()) + " rows");

  ChartSeries gap_series{"gap", {}}, lin_series{"J_linear", {}},
      pbp_series{"J_pbp", {}};
  for (const auto& r : rows) {
    gap_series.points.emplace_back(r.n, r.gap);
    lin_series.points.emplace_back(r.n, r.j_linear.value);
    pbp_series.points.emplace_back(r.n, r.j_pbp.value);
  }
  const std::string svg_path = ctx.emit_path("gap_sweep.svg");
  write_svg_line_chart(svg_path, "optimality gap vs noise dimension", "n", "cost",
                       {lin_series, pbp_series, gap_series}, true);
  ctx.announce(svg_path, "chart");
  return 0;
}

int cmd_clt_diagnostics(const RunContext& ctx) {
  const NoiseFamily family = parse_family(ctx.cfg);
  const int l = static_cast<int>(int_or(ctx.cfg, "l", 2));
  const std::int64_t samples = int_or(ctx.cfg, "samples", 1000000);
  const std::vector<int> n_list = parse_n_list(ctx.cfg);

  std::vector<DensityReport> reports;
  for (size_t i = 0; i < n_list.size(); ++i) {
    const NoiseModel noise(family, n_list[i]);
    reports.push_back(density_report(
        noise, l, samples,
        Rng::derive(ctx.seed, seeds::kDensity, static_cast<std::uint64_t>(n_list[i]),
                    static_cast<std::uint64_t>(i)),
        ctx.workers));
  }

  const std::string csv_path = ctx.emit_path("clt_diagnostics.csv");
  {
    CsvWriter csv(csv_path);
    csv.row({"n", "l", "samples", "bandwidth", "grid_sup_ratio_err", "tv_estimate"});
    for (const auto& r : reports)
      csv.row({CsvWriter::num(static_cast<std::int64_t>(r.n)),
               CsvWriter::num(static_cast<std::int64_t>(r.l)),
               CsvWriter::num(r.samples), CsvWriter::num(r.bandwidth),
               CsvWriter::num(r.grid_sup_ratio_err), CsvWriter::num(r.tv_estimate)});
  }
  ctx.announce(csv_path, std::to_string(reports.size()) + " rows");

  ChartSeries tv{"tv_estimate", {}}, ratio{"grid_sup_ratio_err", {}};
  for (const auto& r : reports) {
    tv.points.emplace_back(r.n, r.tv_estimate);
    ratio.points.emplace_back(r.n, r.grid_sup_ratio_err);
  }
  const std::string svg_path = ctx.emit_path("clt_diagnostics.svg");
  write_svg_line_chart(svg_path, "projection CLT diagnostics", "n", "deviation",
                       {tv, ratio}, true);
  ctx.announce(svg_path, "chart");
  return 0;
}

int cmd_bounds(const RunContext& ctx) {
  const TeamSpec spec = parse_spec(ctx.cfg);
  const BoundConstants consts = parse_constants(ctx.cfg);
  const std::vector<int> n_list = parse_n_list(ctx.cfg);
  const std::int64_t mc_samples = int_or(ctx.cfg, "mc_samples", 200000);
  const LinearPolicy linear = solve_linear(spec);

  json per_n = json::array();
  for (size_t i = 0; i < n_list.size(); ++i) {
    const int n = n_list[i];
    const GapBoundReport rep = explicit_gap_bound(
        spec, n, consts, linear, mc_samples,
        Rng::derive(ctx.seed, seeds::kBoundMc, static_cast<std::uint64_t>(n),
                    static_cast<std::uint64_t>(i)),
        ctx.workers);
    per_n.push_back(json{{"n", rep.n},
                         {"tau", rep.tau},
                         {"rank_w", rep.rank_w},
                         {"sigma_min", rep.sigma_min},
                         {"leading_term", rep.leading_term},
                         {"truncation_term", estimate_json(rep.truncation_term)},
                         {"probability", rep.probability},
                         {"valid", rep.valid}});
  }

  json envelope = json::object();
  if (ctx.cfg.contains("noise_family")) {
    const NoiseFamily family = parse_family(ctx.cfg);
    const int n_env = n_list.back();
    if (n_env > spec.l()) {
      const NoiseModel noise(family, n_env);
      const TailEnvelope env = noise.tail_envelope();
      // The ambient envelope exp(-env.a ||x|| + env.b) enters the projection
      // budget with decay a*sqrt(2) where a = env.a / sqrt(2). The budget is
      // the largest ambient log offset that still yields the projected
      // envelope exp(-a ||x|| + b_target) on R^l; the premise flag records
      // whether this family's actual offset stays within it.
      const double a = env.a / std::sqrt(2.0);
      const double b_target = num_or(ctx.cfg, "envelope_b", 0.0);
      const double budget = envelope_budget(a, b_target, n_env, spec.l());
      const double a_prime =
          num_or(ctx.cfg, "a_prime", std::min(a, 1.0));
      const double b_prime = num_or(
          ctx.cfg, "b_prime",
          std::max(b_target, 0.5 - 0.5 * spec.l() * std::log(2.0 * M_PI)) +
              std::log(2.0));
      envelope = json{{"family", NoiseModel::family_name(family)},
                      {"n", n_env},
                      {"ambient_a_sqrt2", env.a},
                      {"ambient_b", env.b},
                      {"projected_a", a},
                      {"projected_b_target", b_target},
                      {"budget_b_n", budget},
                      {"premise_holds", env.b <= budget},
                      {"uniform_bound", uniform_density_bound(consts, spec.l(),
                                                              n_env, a_prime,
                                                              b_prime)}};
    }
  }

  const json doc{{"constants", constants_json(consts)},
                 {"l", spec.l()},
                 {"gaussian_cost", gaussian_cost(spec)},
                 {"per_n", per_n},
                 {"envelope", envelope}};
  write_json_file(ctx, "bounds.json", doc, std::to_string(n_list.size()) +
                                               " bound records");
  return 0;
}

int cmd_tail_mass(const RunContext& ctx) {
  const TeamSpec spec = parse_spec(ctx.cfg);
  const int n = static_cast<int>(int_or(ctx.cfg, "n", 0));
  if (n < spec.l()) config_fail("n", "must be at least l");
  const NoiseFamily family = parse_family(ctx.cfg);
  const std::int64_t samples = int_or(ctx.cfg, "samples", 200000);
  const json& kj = need(ctx.cfg, "k_list");
  if (!kj.is_array() || kj.empty()) config_fail("k_list", "must be a non-empty array");
  std::vector<double> k_list;
  for (const auto& v : kj) {
    if (!v.is_number() || v.get<double>() < 0.0)
      config_fail("k_list", "entries must be nonnegative numbers");
    k_list.push_back(v.get<double>());
  }

  Rng rng(Rng::derive(ctx.seed, seeds::kInstance, static_cast<std::uint64_t>(n)));
  const ProblemInstance inst =
      build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
  const NoiseModel noise(family, n);

  std::string policy_kind = "linear";
  if (ctx.cfg.contains("policy")) policy_kind = ctx.cfg.at("policy").get<std::string>();
  const LinearPolicy linear = solve_linear(spec);
  TabulatedPolicy pbp_policy;
  const TeamPolicy* policy = &linear;
  if (policy_kind == "pbp") {
    const PbpResult res =
        pbp_solve(inst, noise, parse_pbp(ctx.cfg), Rng::derive(ctx.seed, 2));
    pbp_policy = res.policy;
    policy = &pbp_policy;
  } else if (policy_kind != "linear") {
    config_fail("policy", "must be 'linear' or 'pbp'");
  }

  const auto estimates = tail_mass(inst, noise, *policy, k_list, samples,
                                   Rng::derive(ctx.seed, 3), ctx.workers);

  const std::string csv_path = ctx.emit_path("tail_mass.csv");
  {
    CsvWriter csv(csv_path);
    csv.row({"n", "k", "policy_kind", "value", "stderr", "samples"});
    for (size_t i = 0; i < k_list.size(); ++i)
      csv.row({CsvWriter::num(static_cast<std::int64_t>(n)),
               CsvWriter::num(k_list[i]), policy_kind,
               CsvWriter::num(estimates[i].value),
               CsvWriter::num(estimates[i].std_error),
               CsvWriter::num(estimates[i].samples)});
  }
  ctx.announce(csv_path, std::to_string(k_list.size()) + " rows");

  ChartSeries series{"T(n,k)", {}};
  for (size_t i = 0; i < k_list.size(); ++i)
    series.points.emplace_back(k_list[i], estimates[i].value);
  const std::string svg_path = ctx.emit_path("tail_mass.svg");
  write_svg_line_chart(svg_path, "tail mass of the realized cost", "k", "T(n,k)",
                       {series}, false);
  ctx.announce(svg_path, "chart");
  return 0;
}

}  // namespace

int run(const CliOptions& options) {
  try {
    RunContext ctx;
    {
      std::ifstream in(options.config_path);
      if (!in) {
        std::cerr << "error: cannot open config " << options.config_path << '\n';
        return 1;
      }
      try {
        in >> ctx.cfg;
      } catch (const json::exception& e) {
        std::cerr << "error: config parse: " << e.what() << '\n';
        return 1;
      }
    }
    if (options.seed)
      ctx.seed = *options.seed;
    else if (ctx.cfg.contains("seed") && ctx.cfg.at("seed").is_number_unsigned())
      ctx.seed = ctx.cfg.at("seed").get<std::uint64_t>();
    else
      config_fail("seed", "missing (wall-clock seeding is not supported)");
    ctx.workers = static_cast<int>(
        options.workers ? *options.workers : int_or(ctx.cfg, "workers", 1));
    if (ctx.workers < 1) config_fail("workers", "must be >= 1");
    std::string out_dir = options.out_dir
                              ? *options.out_dir
                              : ctx.cfg.value("out_dir", std::string("out"));
    ctx.out_dir = out_dir;
    fs::create_directories(ctx.out_dir);

    const std::string sub = [&] {
      const json& j = need(ctx.cfg, "subcommand");
      if (!j.is_string()) config_fail("subcommand", "must be a string");
      return j.get<std::string>();
    }();

    if (sub == "validate-spec") return cmd_validate_spec(ctx);
    if (sub == "solve-linear") return cmd_solve_linear(ctx);
    if (sub == "solve-pbp") return cmd_solve_pbp(ctx);
    if (sub == "gap-sweep") return cmd_gap_sweep(ctx);
    if (sub == "clt-diagnostics") return cmd_clt_diagnostics(ctx);
    if (sub == "bounds") return cmd_bounds(ctx);
    if (sub == "tail-mass") return cmd_tail_mass(ctx);
    if (sub == "sample-instance") return cmd_sample_instance(ctx);
    config_fail("subcommand", "unknown '" + sub + "'");
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 1;
  } catch (const PbpNonConvergence& e) {
    std::cerr << "error: pbp: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: numeric: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace teamlq
