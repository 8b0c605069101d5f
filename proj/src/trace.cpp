#include "catgrad/trace.hpp"

#include <cstdio>
#include <ostream>

#include <json.hpp>

namespace catgrad {

const char* to_string(RunStatus s) noexcept {
  switch (s) {
    case RunStatus::TargetReached:
      return "target_reached";
    case RunStatus::MaxIterations:
      return "max_iterations";
    case RunStatus::Converged:
      return "converged";
    case RunStatus::Diverged:
      return "diverged";
  }
  return "?";
}

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(std::ostream& os, const RunTrace& trace) {
  os << "iter,T,measure,step_size,cum_cost,cum_bits,loss,grad_norm_sq\n";
  for (const auto& r : trace.records) {
    os << r.iter << ',';
    for (std::size_t k = 0; k < r.budgets.size(); ++k) os << (k ? ";" : "") << r.budgets[k];
    if (r.budgets.empty()) os << 0;
    os << ',' << fmt_double(r.measure) << ',' << fmt_double(r.step_size) << ','
       << fmt_double(r.cum_cost) << ',' << r.cum_bits << ',' << fmt_double(r.loss) << ','
       << fmt_double(r.grad_norm_sq) << '\n';
  }
}

std::string trace_summary_json(const RunTrace& trace) {
  nlohmann::ordered_json j;
  j["status"] = to_string(trace.status);
  j["iterations"] = trace.iterations();
  if (!trace.records.empty()) {
    j["final_loss"] = trace.final().loss;
    j["final_grad_norm_sq"] = trace.final().grad_norm_sq;
    j["total_cost"] = trace.final().cum_cost;
    j["total_bits"] = trace.final().cum_bits;
  }
  if (trace.reference_loss) j["reference_loss"] = *trace.reference_loss;
  if (!trace.message.empty()) j["message"] = trace.message;
  return j.dump(2);
}

}  // namespace catgrad
