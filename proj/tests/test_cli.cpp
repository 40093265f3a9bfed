#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "teamlq/cli.hpp"
#include "teamlq/errors.hpp"
#include "teamlq/io.hpp"
#include "teamlq/pbp.hpp"
#include "testutil.hpp"

using namespace teamlq;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "teamlq_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kSpecJson = R"({"m": 2, "obs_dims": [1, 1],
  "Q": [[2, 1], [1, 2]],
  "W": [[1.0, 0.4, 0.2, -0.3], [-0.2, 0.9, 0.3, 0.4],
        [0.8, -0.5, 1.1, 0.2], [0.3, 0.7, -0.4, 0.9]]})";

}  // namespace

TEST_CASE("instance round-trips exactly through the text format") {
  Rng rng(1);
  const TeamSpec spec = testutil::random_spec(rng, 2, 2);
  const int n = spec.l() + 3;
  const ProblemInstance inst =
      build_instance(spec, n, sample_stiefel(n, spec.l(), rng));
  const fs::path dir = fresh_dir("roundtrip");
  const std::string path = (dir / "instance.txt").string();
  save_instance(inst, path);
  const ProblemInstance loaded = load_instance(path);
  CHECK(loaded.n == inst.n);
  CHECK(loaded.spec.Q == inst.spec.Q);
  CHECK(loaded.spec.W == inst.spec.W);
  CHECK(loaded.R.cols == inst.R.cols);
  CHECK(loaded.Z == inst.Z);  // derived blocks rebuilt from identical bits

  // identical bytes when saved twice
  const std::string path2 = (dir / "instance2.txt").string();
  save_instance(loaded, path2);
  CHECK(read_file(path) == read_file(path2));
}

TEST_CASE("instance parse errors carry line numbers") {
  const fs::path dir = fresh_dir("parse");
  const std::string path = (dir / "bad.txt").string();
  write_file(path,
             "teamlq-instance v1\nm 1\nobs_dims 1\nn 3\nQ\n1\nW\n1 0\n0 1\nR\n"
             "1 0\n0 1\nend\n");  // R has 2 rows, header says n = 3
  try {
    load_instance(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() > 0);
  }
  write_file(path, "not-an-instance\n");
  CHECK_THROWS_AS(load_instance(path), ParseError);
}

TEST_CASE("tabulated policy round-trips and rejects bad headers") {
  TabulatedPolicy policy;
  policy.players.resize(1);
  auto& t = policy.players[0];
  t.dims = 1;
  t.bins_per_axis = 4;
  t.edges = {{-2.0, -0.5, 0.0, 0.5, 2.0}};
  t.values = {5.0, 1.0, -1.0, 0.25};
  const fs::path dir = fresh_dir("policy");
  const std::string path = (dir / "policy.txt").string();
  save_policy(policy, path);
  const TabulatedPolicy loaded = load_policy(path);
  CHECK(loaded.players[0].edges == t.edges);
  CHECK(loaded.players[0].values == t.values);

  write_file(path, "teamlq-policy v1\nplayers 1\nplayer 0 dims 3 bins 4\n");
  CHECK_THROWS_AS(load_policy(path), ParseError);
}

TEST_CASE("solve-linear subcommand writes the policy json deterministically") {
  const fs::path dir = fresh_dir("solve_linear");
  const fs::path cfg = dir / "config.json";
  write_file(cfg, std::string("{\"subcommand\": \"solve-linear\", \"seed\": 7,\n"
                              " \"out_dir\": \"") +
                      (dir / "out").string() + "\", \"spec\": " + kSpecJson + "}");
  CliOptions opts;
  opts.config_path = cfg.string();
  CHECK(run(opts) == 0);
  const std::string first = read_file(dir / "out" / "policy_linear.json");
  CHECK(first.find("gains") != std::string::npos);
  CHECK(first.find("gaussian_cost") != std::string::npos);
  CHECK(run(opts) == 0);
  CHECK(read_file(dir / "out" / "policy_linear.json") == first);
}

TEST_CASE("asymmetric Q exits 1 and names the field") {
  const fs::path dir = fresh_dir("badq");
  const fs::path cfg = dir / "config.json";
  write_file(cfg, std::string("{\"subcommand\": \"validate-spec\", \"seed\": 1,\n"
                              " \"out_dir\": \"") +
                      (dir / "out").string() +
                      "\", \"spec\": {\"m\": 2, \"obs_dims\": [1, 1],"
                      " \"Q\": [[2, 1], [0.5, 2]],"
                      " \"W\": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}}");
  CliOptions opts;
  opts.config_path = cfg.string();
  CHECK(run(opts) == 1);
}

TEST_CASE("missing seed is a config error") {
  const fs::path dir = fresh_dir("noseed");
  const fs::path cfg = dir / "config.json";
  write_file(cfg, std::string("{\"subcommand\": \"solve-linear\", \"out_dir\": \"") +
                      (dir / "out").string() + "\", \"spec\": " + kSpecJson + "}");
  CliOptions opts;
  opts.config_path = cfg.string();
  CHECK(run(opts) == 1);
  opts.seed = 11;  // the --seed override supplies it
  CHECK(run(opts) == 0);
}

TEST_CASE("sample-instance emits identical bytes for identical config+seed") {
  const fs::path dir = fresh_dir("sample_instance");
  const fs::path cfg = dir / "config.json";
  write_file(cfg, std::string("{\"subcommand\": \"sample-instance\", \"seed\": 3,"
                              " \"n\": 12, \"out_dir\": \"") +
                      (dir / "a").string() + "\", \"spec\": " + kSpecJson + "}");
  CliOptions opts;
  opts.config_path = cfg.string();
  CHECK(run(opts) == 0);
  CliOptions again = opts;
  again.out_dir = (dir / "b").string();
  CHECK(run(again) == 0);
  CHECK(read_file(dir / "a" / "instance.txt") == read_file(dir / "b" / "instance.txt"));
  const ProblemInstance inst = load_instance((dir / "a" / "instance.txt").string());
  CHECK(inst.n == 12);
}

TEST_CASE("clt-diagnostics subcommand writes csv and svg") {
  const fs::path dir = fresh_dir("clt");
  const fs::path cfg = dir / "config.json";
  write_file(cfg, std::string("{\"subcommand\": \"clt-diagnostics\", \"seed\": 5,"
                              " \"noise_family\": \"uniform_cube_product\","
                              " \"l\": 2, \"samples\": 20000, \"n_list\": [4, 16],"
                              " \"out_dir\": \"") +
                      (dir / "out").string() + "\"}");
  CliOptions opts;
  opts.config_path = cfg.string();
  CHECK(run(opts) == 0);
  const std::string csv = read_file(dir / "out" / "clt_diagnostics.csv");
  CHECK(csv.find("n,l,samples,bandwidth,grid_sup_ratio_err,tv_estimate") == 0);
  CHECK(read_file(dir / "out" / "clt_diagnostics.svg").find("<svg") == 0);
}

TEST_CASE("bounds subcommand echoes constants and the illustrative flag") {
  const fs::path dir = fresh_dir("bounds");
  const fs::path cfg = dir / "config.json";
  write_file(cfg,
             std::string("{\"subcommand\": \"bounds\", \"seed\": 6,"
                         " \"n_list\": [16, 256], \"mc_samples\": 5000,"
                         " \"noise_family\": \"exp_product\", \"out_dir\": \"") +
                 (dir / "out").string() + "\", \"spec\": " + kSpecJson + "}");
  CliOptions opts;
  opts.config_path = cfg.string();
  CHECK(run(opts) == 0);
  const std::string doc = read_file(dir / "out" / "bounds.json");
  CHECK(doc.find("\"illustrative\": true") != std::string::npos);
  CHECK(doc.find("\"per_n\"") != std::string::npos);
  CHECK(doc.find("\"budget_b_n\"") != std::string::npos);
}

TEST_CASE("tail-mass subcommand writes the cost csv format") {
  const fs::path dir = fresh_dir("tailmass");
  const fs::path cfg = dir / "config.json";
  write_file(cfg, std::string("{\"subcommand\": \"tail-mass\", \"seed\": 8,"
                              " \"n\": 8, \"noise_family\": \"laplace_product\","
                              " \"k_list\": [0, 1, 2], \"samples\": 20000,"
                              " \"out_dir\": \"") +
                      (dir / "out").string() + "\", \"spec\": " + kSpecJson + "}");
  CliOptions opts;
  opts.config_path = cfg.string();
  CHECK(run(opts) == 0);
  const std::string csv = read_file(dir / "out" / "tail_mass.csv");
  CHECK(csv.find("n,k,policy_kind,value,stderr,samples") == 0);
}

TEST_CASE("unknown subcommand and missing config exit 1") {
  const fs::path dir = fresh_dir("unknown");
  const fs::path cfg = dir / "config.json";
  write_file(cfg, "{\"subcommand\": \"fit-neural-policy\", \"seed\": 1}");
  CliOptions opts;
  opts.config_path = cfg.string();
  CHECK(run(opts) == 1);
  opts.config_path = (dir / "missing.json").string();
  CHECK(run(opts) == 1);
}
