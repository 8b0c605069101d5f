#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "catgrad/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Communication-aware adaptive gradient sparsification experiments"};
  app.require_subcommand(1);

  catgrad::ExperimentConfig flags;
  std::string config_path;
  std::string sweep;

  auto* run = app.add_subcommand("run", "run one optimizer (or a fixed-T sweep) and write traces");
  run->add_option("--config", config_path, "JSON config; explicit flags override its values");
  auto* o_problem = run->add_option("--problem", flags.problem, "problem spec, e.g. quad-rank1:L=1,d=64");
  auto* o_scheme = run->add_option("--scheme", flags.scheme, "full-gd | fixed-t:T=k | cat-sparse | cat-sq | cat-ss | alistarh-sq | hybrid:S=200");
  auto* o_cost = run->add_option("--cost", flags.cost, "payload-sparse | payload-sq | affine:c1=..,c0=.. | packet:c1=..,c0=..,pmax=..");
  auto* o_fpp = run->add_option("--fpp", flags.fpp, "bits per transmitted float (32 or 64)");
  auto* o_iters = run->add_option("--iters", flags.iters, "iteration cap");
  auto* o_eps = run->add_option("--eps", flags.eps, "target accuracy");
  auto* o_target = run->add_option("--target", flags.target, "grad (||grad F||^2) or gap (F - F*)");
  auto* o_seed = run->add_option("--seed", flags.seed, "random seed");
  auto* o_workers = run->add_option("--workers", flags.workers, "simulated workers (cat-ss only)");
  auto* o_batch = run->add_option("--batch", flags.batch, "minibatch size per worker, 0 = full shard");
  auto* o_step = run->add_option("--step", flags.step, "auto or a fixed step size");
  auto* o_transport = run->add_flag("--transport", flags.via_transport, "route multi-node rounds through the frame codec");
  auto* o_trace = run->add_option("--out-trace", flags.out_trace, "trace CSV path");
  auto* o_json = run->add_option("--out-json", flags.out_json, "metrics JSON path");
  auto* o_sweep = run->add_option("--sweep-t", sweep, "comma-separated fixed budgets; accepts integers, d, pow2");

  CLI11_PARSE(app, argc, argv);

  catgrad::ExperimentConfig cfg;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "error: cannot read " << config_path << '\n';
      return 1;
    }
    std::stringstream ss;
    ss << f.rdbuf();
    try {
      cfg = catgrad::merge_json_config(cfg, ss.str());
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    }
  }

  // Flags win over the config file.
  if (*o_problem) cfg.problem = flags.problem;
  if (*o_scheme) cfg.scheme = flags.scheme;
  if (*o_cost) cfg.cost = flags.cost;
  if (*o_fpp) cfg.fpp = flags.fpp;
  if (*o_iters) cfg.iters = flags.iters;
  if (*o_eps) cfg.eps = flags.eps;
  if (*o_target) cfg.target = flags.target;
  if (*o_seed) cfg.seed = flags.seed;
  if (*o_workers) cfg.workers = flags.workers;
  if (*o_batch) cfg.batch = flags.batch;
  if (*o_step) cfg.step = flags.step;
  if (*o_transport) cfg.via_transport = flags.via_transport;
  if (*o_trace) cfg.out_trace = flags.out_trace;
  if (*o_json) cfg.out_json = flags.out_json;
  if (*o_sweep) {
    cfg.sweep_t.clear();
    std::stringstream ss(sweep);
    for (std::string tok; std::getline(ss, tok, ',');) {
      if (tok == "..." || tok == "\xe2\x80\xa6") tok = "pow2";  // "1,2,4,...,d"
      cfg.sweep_t.push_back(tok);
    }
  }

  return catgrad::run_experiment(cfg, std::cout, std::cerr);
}
