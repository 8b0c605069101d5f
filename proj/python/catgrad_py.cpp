#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "catgrad/compressors.hpp"
#include "catgrad/costmodel.hpp"
#include "catgrad/error.hpp"
#include "catgrad/experiment.hpp"
#include "catgrad/optimizers.hpp"
#include "catgrad/transport.hpp"
#include "catgrad/tuner.hpp"

namespace py = pybind11;
using namespace catgrad;

namespace {

Measure measure_from(const std::string& name) {
  if (name == "alpha") return Measure::Alpha;
  if (name == "beta") return Measure::Beta;
  if (name == "omega") return Measure::Omega;
  throw ConfigError("measure must be alpha, beta or omega, got '" + name + "'");
}

CostScheme cost_scheme_from(const std::string& name) {
  if (name == "sparse") return CostScheme::Sparse;
  if (name == "sq") return CostScheme::SQ;
  throw ConfigError("scheme must be sparse or sq, got '" + name + "'");
}

CostModel bind_cost(const std::string& spec, std::size_t dim, const std::string& scheme, int fpp) {
  return parse_cost_spec(spec).bind(dim, cost_scheme_from(scheme), precision_from_bits(fpp));
}

py::dict sparse_dict(const SparseGradient& s) {
  std::vector<std::uint32_t> idx;
  std::vector<double> val;
  for (const auto& e : s.entries) {
    idx.push_back(e.index);
    val.push_back(e.value);
  }
  py::dict d;
  d["kind"] = s.kind == SparseKind::TopT ? "top-t" : "stochastic";
  d["dim"] = s.dim;
  d["indices"] = idx;
  d["values"] = val;
  return d;
}

py::dict sq_dict(const SQGradient& s) {
  std::vector<std::uint32_t> idx;
  std::vector<bool> neg;
  for (const auto& e : s.entries) {
    idx.push_back(e.index);
    neg.push_back(e.negative);
  }
  py::dict d;
  d["kind"] = "sq";
  d["dim"] = s.dim;
  d["magnitude"] = s.magnitude;
  d["indices"] = idx;
  d["negative"] = neg;
  return d;
}

py::bytes encode_frame(const std::vector<double>& g, std::size_t budget, const std::string& kind,
                       std::uint32_t iteration, std::uint16_t worker, int fpp) {
  Message msg;
  msg.iteration = iteration;
  msg.worker = worker;
  msg.fpp = precision_from_bits(fpp);
  if (kind == "top-t") {
    msg.gradient = top_t_sparsify(g, budget);
  } else if (kind == "sq") {
    msg.gradient = sparsify_quantize(g, budget);
  } else {
    throw ConfigError("kind must be top-t or sq, got '" + kind + "'");
  }
  const Frame f = frame_encode(msg);
  return {reinterpret_cast<const char*>(f.data()), f.size()};
}

py::dict decode_frame(const py::bytes& data, std::size_t dim) {
  const std::string raw = data;
  const Message msg = frame_decode({reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()}, dim);
  py::dict d = std::holds_alternative<SQGradient>(msg.gradient) ? sq_dict(std::get<SQGradient>(msg.gradient))
                                                               : sparse_dict(std::get<SparseGradient>(msg.gradient));
  d["iteration"] = msg.iteration;
  d["worker"] = msg.worker;
  d["fpp"] = bits_of(msg.fpp);
  d["dense"] = to_dense(msg.gradient);
  return d;
}

py::dict run_config(const std::string& json_text) {
  const ExperimentConfig cfg = merge_json_config(ExperimentConfig{}, json_text);
  const Problem problem = make_problem(cfg.problem);
  const RunResult r = run(to_optimizer_config(cfg), problem);
  py::list records;
  for (const auto& rec : r.trace.records) {
    py::dict row;
    row["iter"] = rec.iter;
    row["budgets"] = rec.budgets;
    row["measure"] = rec.measure;
    row["step_size"] = rec.step_size;
    row["cum_cost"] = rec.cum_cost;
    row["cum_bits"] = rec.cum_bits;
    row["loss"] = rec.loss;
    row["grad_norm_sq"] = rec.grad_norm_sq;
    records.append(row);
  }
  py::dict out;
  out["status"] = to_string(r.trace.status);
  out["message"] = r.trace.message;
  out["iterations"] = r.trace.iterations();
  out["x"] = r.x;
  out["records"] = records;
  out["reference_loss"] = r.trace.reference_loss ? py::cast(*r.trace.reference_loss) : py::none();
  return out;
}

}  // namespace

PYBIND11_MODULE(_catgrad, m) {
  m.doc() = "Communication-aware gradient compression";

  auto base = py::register_exception<Error>(m, "CatgradError", PyExc_RuntimeError);
  py::register_exception<InvalidBudget>(m, "InvalidBudget", base.ptr());
  py::register_exception<ZeroGradient>(m, "ZeroGradient", base.ptr());
  py::register_exception<CorruptFrame>(m, "CorruptFrame", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());

  m.def("top_t", [](const std::vector<double>& g, std::size_t t) { return sparse_dict(top_t_sparsify(g, t)); },
        py::arg("g"), py::arg("budget"), "Top-T sparsification.");
  m.def("sparsify_quantize", [](const std::vector<double>& g, std::size_t t) { return sq_dict(sparsify_quantize(g, t)); },
        py::arg("g"), py::arg("budget"), "Signs of the top-T coordinates plus the gradient norm.");
  m.def("optimal_probabilities", [](const std::vector<double>& g, double t) { return optimal_probabilities(g, t).p; },
        py::arg("g"), py::arg("budget"), "Variance-minimising inclusion probabilities.");

  m.def("alpha", [](const std::vector<double>& g, std::size_t t) { return ImprovementCurve(g).alpha(t); },
        py::arg("g"), py::arg("budget"));
  m.def("beta", [](const std::vector<double>& g, std::size_t t) { return ImprovementCurve(g).beta(t); },
        py::arg("g"), py::arg("budget"));
  m.def("omega", [](const std::vector<double>& g, double t) { return ImprovementCurve(g).omega(t); },
        py::arg("g"), py::arg("budget"));
  m.def("curve", [](const std::vector<double>& g, const std::string& measure) {
          return ImprovementCurve(g).sweep(measure_from(measure));
        },
        py::arg("g"), py::arg("measure") = "alpha", "Measure values for T = 1..d.");

  m.def("cost", [](const std::string& spec, std::size_t dim, std::size_t t, const std::string& scheme, int fpp) {
          return bind_cost(spec, dim, scheme, fpp).cost(t);
        },
        py::arg("spec"), py::arg("dim"), py::arg("budget"), py::arg("scheme") = "sparse", py::arg("fpp") = 64);
  m.def("payload_bits", [](std::size_t dim, std::size_t t, const std::string& scheme, int fpp) {
          return CostModel::payload(cost_scheme_from(scheme), dim, precision_from_bits(fpp)).payload_bits(t);
        },
        py::arg("dim"), py::arg("budget"), py::arg("scheme") = "sparse", py::arg("fpp") = 64);
  m.def("select_t", [](const std::vector<double>& g, const std::string& measure, const std::string& spec,
                       const std::string& scheme, int fpp) {
          const TunerResult r = select_t(ImprovementCurve(g), measure_from(measure), bind_cost(spec, g.size(), scheme, fpp));
          py::dict d;
          d["budget"] = r.budget;
          d["improvement"] = r.improvement;
          d["cost"] = r.cost;
          d["efficiency"] = r.efficiency;
          return d;
        },
        py::arg("g"), py::arg("measure") = "alpha", py::arg("cost") = "payload", py::arg("scheme") = "sparse",
        py::arg("fpp") = 64, "Budget maximising improvement per unit cost.");
  m.def("alistarh_t", [](const std::vector<double>& g) { return alistarh_t(g); }, py::arg("g"));

  m.def("encode_frame", &encode_frame, py::arg("g"), py::arg("budget"), py::arg("kind") = "top-t",
        py::arg("iteration") = 0, py::arg("worker") = 0, py::arg("fpp") = 64);
  m.def("decode_frame", &decode_frame, py::arg("data"), py::arg("dim"));

  m.def("run", &run_config, py::arg("config_json"), "Single optimizer run from a JSON config.");
  m.def("scheme_name", [](const std::string& s) { return to_string(parse_scheme(s)); }, py::arg("spec"));
}
