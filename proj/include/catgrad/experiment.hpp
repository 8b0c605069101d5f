#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "catgrad/optimizers.hpp"

namespace catgrad {

/// Everything one `catgrad run` invocation needs.
struct ExperimentConfig {
  std::string problem = "quad-iso:L=1,d=64";
  std::string scheme = "cat-sparse";
  std::string cost = "payload";
  int fpp = 64;
  std::size_t iters = 1000;
  double eps = 1e-6;
  std::string target = "grad";  // grad | gap
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::size_t batch = 0;
  std::string step = "auto";  // auto | <gamma>
  bool via_transport = false;
  std::string out_trace = "trace.csv";
  std::string out_json = "metrics.json";
  /// Fixed-T sweep entries, e.g. {"1", "2", "pow2", "d"}. Empty runs `scheme` once.
  std::vector<std::string> sweep_t;
};

/// Overlays keys present in a JSON object onto `base`. Unknown keys raise ConfigError.
ExperimentConfig merge_json_config(const ExperimentConfig& base, const std::string& json_text);

/// Problem specs:
///   quad-iso:L=1,d=64   quad-rank1:L=1,d=64
///   logistic:path=data.svm[,reg=1e-3][,dim=N]
///   logistic-synth:n=2000,d=500,nnz=10,zipf=1.1,noise=0.05,reg=1e-4,seed=1
Problem make_problem(const std::string& spec);

/// full-gd | fixed-t:T=4 | cat-sparse | cat-sq | cat-ss | alistarh-sq | hybrid:S=200[,base=cat-sq]
SchemeConfig parse_scheme(const std::string& spec);

/// Expands sweep tokens (integers, "d", "pow2" = 1,2,4,...,d) into sorted unique budgets.
std::vector<std::size_t> expand_sweep(const std::vector<std::string>& tokens, std::size_t dim);

OptimizerConfig to_optimizer_config(const ExperimentConfig& cfg);

/// Runs the experiment and writes the trace CSV and metrics JSON (one trace per sweep entry,
/// suffixed _T<budget>). Returns 0 when every run reached its target, 2 when some hit the
/// iteration cap, 1 on error (message written to `err`).
int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace catgrad
