#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "catgrad/error.hpp"
#include "catgrad/experiment.hpp"

using namespace catgrad;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "catgrad_experiment_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::vector<std::string>> rows(const std::string& csv) {
  std::vector<std::vector<std::string>> out;
  std::stringstream ss(csv);
  for (std::string line; std::getline(ss, line);) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    out.push_back(cells);
  }
  return out;
}

}  // namespace

TEST_CASE("problem specs") {
  CHECK(make_problem("quad-iso:L=2,d=5").smoothness() == 2.0);
  CHECK(make_problem("quad-rank1:d=7").dim() == 7);
  const Problem s = make_problem("logistic-synth:n=50,d=20,nnz=3,seed=4");
  CHECK(s.dim() == 20);
  CHECK(s.samples() == 50);
  CHECK_THROWS_AS(make_problem("quad-iso:L=1"), ParseError);
  CHECK_THROWS_AS(make_problem("quad-iso:L=1,d=4,q=2"), ParseError);
  CHECK_THROWS_AS(make_problem("quad-iso:L=x,d=4"), ParseError);
  CHECK_THROWS_AS(make_problem("cubic:d=3"), ParseError);
  CHECK_THROWS_AS(make_problem("logistic:reg=1"), ParseError);
}

TEST_CASE("scheme specs round trip") {
  for (const char* s : {"full-gd", "fixed-t:T=4", "cat-sparse", "cat-sq", "cat-ss", "alistarh-sq",
                        "hybrid:S=200,base=cat-sq", "hybrid:S=5,base=cat-ss"}) {
    CHECK(to_string(parse_scheme(s)) == s);
  }
  CHECK(to_string(parse_scheme("hybrid")) == "hybrid:S=200,base=cat-sq");
  CHECK_THROWS_AS(parse_scheme("fixed-t"), ParseError);
  CHECK_THROWS_AS(parse_scheme("hybrid:base=full-gd"), ParseError);
  CHECK_THROWS_AS(parse_scheme("sgd"), ParseError);
}

TEST_CASE("sweep expansion") {
  CHECK(expand_sweep({"pow2"}, 10) == std::vector<std::size_t>{1, 2, 4, 8, 10});
  CHECK(expand_sweep({"1", "2", "pow2", "d"}, 8) == std::vector<std::size_t>{1, 2, 4, 8});
  CHECK(expand_sweep({"3", "d"}, 5) == std::vector<std::size_t>{3, 5});
  CHECK_THROWS_AS(expand_sweep({"0"}, 5), ParseError);
  CHECK_THROWS_AS(expand_sweep({"6"}, 5), ParseError);
}

TEST_CASE("json config overlay") {
  ExperimentConfig base;
  const auto cfg = merge_json_config(base, R"({"scheme": "cat-sq", "fpp": 32, "sweep_t": [1, "d"], "step": 0.5})");
  CHECK(cfg.scheme == "cat-sq");
  CHECK(cfg.fpp == 32);
  CHECK(cfg.sweep_t == std::vector<std::string>{"1", "d"});
  CHECK(cfg.problem == base.problem);
  CHECK(to_optimizer_config(cfg).step.index() == 1);
  CHECK_THROWS_AS(merge_json_config(base, R"({"colour": 1})"), ConfigError);
  CHECK_THROWS_AS(merge_json_config(base, R"({"fpp": "x"})"), ConfigError);
  CHECK_THROWS_AS(merge_json_config(base, "[1]"), ConfigError);
  CHECK_THROWS_AS(merge_json_config(base, "{"), ConfigError);
}

TEST_CASE("rank-one run records the worst-case measure") {
  ExperimentConfig cfg;
  cfg.problem = "quad-rank1:L=1,d=64";
  cfg.scheme = "cat-sparse";
  cfg.cost = "payload-sparse";
  cfg.fpp = 32;
  cfg.eps = 1e-6;
  cfg.seed = 7;
  cfg.out_trace = scratch("rank1.csv").string();
  cfg.out_json = scratch("rank1.json").string();
  std::ostringstream out, err;
  CHECK(run_experiment(cfg, out, err) == 0);
  const auto r = rows(slurp(cfg.out_trace));
  REQUIRE(r.size() > 2);
  CHECK(r[0] == std::vector<std::string>{"iter", "T", "measure", "step_size", "cum_cost", "cum_bits", "loss", "grad_norm_sq"});
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    CHECK(r[i][1] == "1");
    CHECK(std::stod(r[i][2]) == doctest::Approx(1.0 / 64).epsilon(1e-12));
  }
  const auto j = nlohmann::json::parse(slurp(cfg.out_json));
  CHECK(j["speedup_curve"].size() == 64);
  for (const auto& v : j["speedup_curve"]) CHECK(v.get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(j["bits_to_eps"]["cat-sparse"].is_number());
}

TEST_CASE("fixed T=1 and CAT-sparse agree under the payload model") {
  std::vector<std::string> budgets[2];
  int k = 0;
  for (const char* scheme : {"fixed-t:T=1", "cat-sparse"}) {
    ExperimentConfig cfg;
    cfg.problem = "logistic-synth:n=100,d=40,nnz=4";
    cfg.scheme = scheme;
    cfg.cost = "payload";
    cfg.iters = 100;
    cfg.out_trace = scratch(std::string("prop4_") + std::to_string(k) + ".csv").string();
    cfg.out_json = scratch("prop4.json").string();
    std::ostringstream out, err;
    CHECK(run_experiment(cfg, out, err) == 2);
    for (const auto& row : rows(slurp(cfg.out_trace))) budgets[k].push_back(row[1]);
    ++k;
  }
  CHECK(budgets[0] == budgets[1]);
}

TEST_CASE("sweeps write one trace per budget and outputs are reproducible") {
  ExperimentConfig cfg;
  cfg.problem = "quad-iso:L=1,d=8";
  cfg.cost = "payload";
  cfg.sweep_t = {"pow2"};
  cfg.out_trace = scratch("sweep.csv").string();
  cfg.out_json = scratch("sweep.json").string();
  std::ostringstream out, err;
  CHECK(run_experiment(cfg, out, err) == 0);
  for (int t : {1, 2, 4, 8}) CHECK(fs::exists(scratch("sweep_T" + std::to_string(t) + ".csv")));
  const auto j = nlohmann::json::parse(slurp(cfg.out_json));
  CHECK(j["bits_to_eps"].size() == 4);
  const std::string first = slurp(scratch("sweep_T2.csv")) + slurp(cfg.out_json);
  CHECK(run_experiment(cfg, out, err) == 0);
  CHECK(first == slurp(scratch("sweep_T2.csv")) + slurp(cfg.out_json));
}

TEST_CASE("exit codes") {
  ExperimentConfig cfg;
  cfg.out_trace = scratch("codes.csv").string();
  cfg.out_json = scratch("codes.json").string();
  std::ostringstream out, err;
  cfg.problem = "quad-iso:L=1,d=16";
  cfg.iters = 1;
  CHECK(run_experiment(cfg, out, err) == 2);
  cfg.problem = "nope";
  CHECK(run_experiment(cfg, out, err) == 1);
  CHECK(err.str().find("unknown problem") != std::string::npos);
  cfg.problem = "quad-iso:L=1,d=16";
  cfg.target = "loss";
  CHECK(run_experiment(cfg, out, err) == 1);
  cfg.target = "gap";
  cfg.iters = 10000;
  CHECK(run_experiment(cfg, out, err) == 0);
}
