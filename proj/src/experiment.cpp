#include "catgrad/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <json.hpp>

#include "catgrad/error.hpp"

namespace catgrad {

namespace {

using KeyValues = std::map<std::string, std::string>;

// "head:k=v,k=v" -> (head, {k: v})
std::pair<std::string, KeyValues> split_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  std::pair<std::string, KeyValues> out{spec.substr(0, colon), {}};
  if (colon == std::string::npos) return out;
  std::size_t pos = colon + 1;
  while (pos < spec.size()) {
    auto comma = spec.find(',', pos);
    if (comma == std::string::npos) comma = spec.size();
    const std::string item = spec.substr(pos, comma - pos);
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ParseError("expected key=value in '" + spec + "'");
    out.second[item.substr(0, eq)] = item.substr(eq + 1);
    pos = comma + 1;
  }
  return out;
}

double number(const KeyValues& kv, const std::string& key, std::optional<double> fallback,
              const std::string& spec) {
  const auto it = kv.find(key);
  if (it == kv.end()) {
    if (fallback) return *fallback;
    throw ParseError("'" + spec + "' is missing " + key);
  }
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (it->second.empty() || *end != '\0') {
    throw ParseError("'" + spec + "': bad number for " + key + ": " + it->second);
  }
  return v;
}

std::size_t count(const KeyValues& kv, const std::string& key, std::optional<double> fallback,
                  const std::string& spec) {
  const double v = number(kv, key, fallback, spec);
  if (v < 0.0 || v != static_cast<double>(static_cast<std::size_t>(v))) {
    throw ParseError("'" + spec + "': " + key + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

void only_keys(const KeyValues& kv, std::set<std::string> allowed, const std::string& spec) {
  for (const auto& [k, v] : kv) {
    if (!allowed.contains(k)) throw ParseError("'" + spec + "': unknown key " + k);
  }
}

}  // namespace

Problem make_problem(const std::string& spec) {
  const auto [head, kv] = split_spec(spec);
  if (head == "quad-iso" || head == "quad-rank1") {
    only_keys(kv, {"L", "d"}, spec);
    const double L = number(kv, "L", 1.0, spec);
    const std::size_t d = count(kv, "d", std::nullopt, spec);
    return head == "quad-iso" ? Problem::isotropic_quadratic(L, d)
                              : Problem::rank_one_quadratic(L, d);
  }
  if (head == "logistic") {
    only_keys(kv, {"path", "reg", "dim"}, spec);
    const auto path = kv.find("path");
    if (path == kv.end()) throw ParseError("'" + spec + "' is missing path");
    std::optional<std::size_t> dim;
    if (kv.contains("dim")) dim = count(kv, "dim", std::nullopt, spec);
    return Problem::logistic(load_libsvm(path->second, dim), number(kv, "reg", 0.0, spec));
  }
  if (head == "logistic-synth") {
    only_keys(kv, {"n", "d", "nnz", "zipf", "noise", "reg", "seed"}, spec);
    SyntheticSpec s;
    s.samples = count(kv, "n", 2000.0, spec);
    s.features = count(kv, "d", 500.0, spec);
    s.nnz_per_row = count(kv, "nnz", 10.0, spec);
    s.zipf = number(kv, "zipf", 1.1, spec);
    s.label_noise = number(kv, "noise", 0.05, spec);
    s.seed = count(kv, "seed", 1.0, spec);
    return Problem::logistic(synthetic_sparse_dataset(s), number(kv, "reg", 1e-4, spec));
  }
  throw ParseError("unknown problem '" + head + "'");
}

SchemeConfig parse_scheme(const std::string& spec) {
  const auto [head, kv] = split_spec(spec);
  auto no_keys = [&] { only_keys(kv, {}, spec); };
  if (head == "full-gd") return no_keys(), FullGd{};
  if (head == "cat-sparse") return no_keys(), CatSparse{};
  if (head == "cat-sq") return no_keys(), CatSQ{};
  if (head == "cat-ss") return no_keys(), CatStochastic{};
  if (head == "alistarh-sq") return no_keys(), AlistarhSQ{};
  if (head == "fixed-t") {
    only_keys(kv, {"T"}, spec);
    return FixedBudget{count(kv, "T", std::nullopt, spec)};
  }
  if (head == "hybrid") {
    only_keys(kv, {"S", "base"}, spec);
    Hybrid h{count(kv, "S", 200.0, spec), Compressor::SQ};
    if (const auto it = kv.find("base"); it != kv.end()) {
      if (it->second == "cat-sq") {
        h.base = Compressor::SQ;
      } else if (it->second == "cat-sparse") {
        h.base = Compressor::TopT;
      } else if (it->second == "cat-ss") {
        h.base = Compressor::Stochastic;
      } else {
        throw ParseError("hybrid base must be cat-sparse, cat-sq or cat-ss");
      }
    }
    return h;
  }
  throw ParseError("unknown scheme '" + head + "'");
}

std::vector<std::size_t> expand_sweep(const std::vector<std::string>& tokens, std::size_t dim) {
  std::set<std::size_t> out;
  for (const std::string& t : tokens) {
    if (t == "d") {
      out.insert(dim);
    } else if (t == "pow2") {
      for (std::size_t b = 1; b < dim; b *= 2) out.insert(b);
      out.insert(dim);
    } else {
      char* end = nullptr;
      const long long v = std::strtoll(t.c_str(), &end, 10);
      if (t.empty() || *end != '\0' || v < 1 || static_cast<std::size_t>(v) > dim) {
        throw ParseError("sweep entry '" + t + "' must be an integer in [1, d], 'd' or 'pow2'");
      }
      out.insert(static_cast<std::size_t>(v));
    }
  }
  return {out.begin(), out.end()};
}

ExperimentConfig merge_json_config(const ExperimentConfig& base, const std::string& json_text) {
  ExperimentConfig cfg = base;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config JSON must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "problem") cfg.problem = value.get<std::string>();
      else if (key == "scheme") cfg.scheme = value.get<std::string>();
      else if (key == "cost") cfg.cost = value.get<std::string>();
      else if (key == "fpp") cfg.fpp = value.get<int>();
      else if (key == "iters") cfg.iters = value.get<std::size_t>();
      else if (key == "eps") cfg.eps = value.get<double>();
      else if (key == "target") cfg.target = value.get<std::string>();
      else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "workers") cfg.workers = value.get<std::size_t>();
      else if (key == "batch") cfg.batch = value.get<std::size_t>();
      else if (key == "step") cfg.step = value.is_number() ? std::to_string(value.get<double>()) : value.get<std::string>();
      else if (key == "transport") cfg.via_transport = value.get<bool>();
      else if (key == "out_trace") cfg.out_trace = value.get<std::string>();
      else if (key == "out_json") cfg.out_json = value.get<std::string>();
      else if (key == "sweep_t") {
        cfg.sweep_t.clear();
        for (const auto& e : value) {
          cfg.sweep_t.push_back(e.is_number() ? std::to_string(e.get<std::size_t>()) : e.get<std::string>());
        }
      } else {
        throw ConfigError("config JSON: unknown key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config JSON: ") + e.what());
  }
  return cfg;
}

OptimizerConfig to_optimizer_config(const ExperimentConfig& cfg) {
  OptimizerConfig oc;
  oc.scheme = parse_scheme(cfg.scheme);
  oc.cost = parse_cost_spec(cfg.cost);
  oc.fpp = precision_from_bits(cfg.fpp);
  oc.max_iters = cfg.iters;
  if (cfg.target == "grad") {
    oc.target = GradNormTarget{cfg.eps};
  } else if (cfg.target == "gap") {
    oc.target = LossGapTarget{cfg.eps, std::nullopt};
  } else {
    throw ConfigError("target must be 'grad' or 'gap'");
  }
  oc.seed = cfg.seed;
  if (cfg.step == "auto") {
    oc.step = AutoStep{};
  } else {
    char* end = nullptr;
    const double gamma = std::strtod(cfg.step.c_str(), &end);
    if (cfg.step.empty() || *end != '\0' || !(gamma > 0.0)) {
      throw ConfigError("step must be 'auto' or a positive number");
    }
    oc.step = ManualStep{gamma};
  }
  oc.workers = cfg.workers;
  oc.batch_size = cfg.batch;
  oc.via_transport = cfg.via_transport;
  oc.track_profile = true;
  return oc;
}

namespace {

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << contents;
  if (!f) throw Error("write failed for " + path);
}

}  // namespace

int run_experiment(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const OptimizerConfig base = to_optimizer_config(cfg);
    const Problem problem = make_problem(cfg.problem);
    const TargetKind kind = cfg.target == "grad" ? TargetKind::GradNormSq : TargetKind::LossGap;
    std::optional<double> reference;
    if (kind == TargetKind::LossGap) reference = reference_loss(problem);

    struct Entry {
      std::string name;
      OptimizerConfig config;
      std::string trace_path;
    };
    std::vector<Entry> entries;
    if (cfg.sweep_t.empty()) {
      entries.push_back({to_string(base.scheme), base, cfg.out_trace});
    } else {
      for (std::size_t t : expand_sweep(cfg.sweep_t, problem.dim())) {
        OptimizerConfig oc = base;
        oc.scheme = FixedBudget{t};
        entries.push_back({to_string(oc.scheme), oc, with_suffix(cfg.out_trace, "_T" + std::to_string(t))});
      }
    }

    nlohmann::ordered_json report;
    report["problem"] = cfg.problem;
    report["cost"] = cfg.cost;
    std::vector<std::pair<std::string, std::optional<double>>> bits;
    nlohmann::ordered_json runs = nlohmann::ordered_json::object();
    std::optional<ImprovementProfile> first_profile;
    int code = 0;
    for (Entry& e : entries) {
      if (reference) e.config.target = LossGapTarget{cfg.eps, reference};
      RunResult r = run(e.config, problem);
      std::ostringstream csv;
      write_trace_csv(csv, r.trace);
      write_file(e.trace_path, csv.str());
      bits.emplace_back(e.name, bits_to_accuracy(r.trace, cfg.eps, kind));
      runs[e.name] = nlohmann::ordered_json::parse(trace_summary_json(r.trace));
      if (!first_profile && r.profile) first_profile = std::move(r.profile);
      out << e.name << ": " << to_string(r.trace.status) << " after " << r.trace.iterations()
          << " iterations, cost " << r.trace.final().cum_cost << " -> " << e.trace_path << '\n';
      if (r.trace.status == RunStatus::Diverged) {
        err << e.name << ": " << r.trace.message << '\n';
        code = 1;
      } else if (r.trace.status == RunStatus::MaxIterations && code == 0) {
        code = 2;
      }
    }
    nlohmann::ordered_json metrics =
        nlohmann::ordered_json::parse(metrics_report_json(first_profile ? &*first_profile : nullptr, bits));
    for (auto& [k, v] : metrics.items()) report[k] = v;
    report["runs"] = std::move(runs);
    write_file(cfg.out_json, report.dump(2) + "\n");
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace catgrad
