#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace catgrad {

enum class RunStatus : std::uint8_t {
  TargetReached,
  MaxIterations,
  Converged,  // exact zero gradient
  Diverged,
};

const char* to_string(RunStatus s) noexcept;

/// State x^i and the step taken from it. cum_cost and cum_bits count what was spent to reach
/// x^i, so the record of the first point meeting the target holds the cost to accuracy.
/// The terminal record has an empty budgets list and zero measure and step size.
struct IterationRecord {
  std::size_t iter = 0;
  std::vector<std::size_t> budgets;  // one per worker
  double measure = 0.0;
  double step_size = 0.0;
  double cum_cost = 0.0;
  std::uint64_t cum_bits = 0;
  double loss = 0.0;
  double grad_norm_sq = 0.0;
};

struct RunTrace {
  std::vector<IterationRecord> records;
  RunStatus status = RunStatus::MaxIterations;
  std::string message;
  std::optional<double> reference_loss;

  /// Steps taken, i.e. records minus the terminal one.
  std::size_t iterations() const noexcept { return records.empty() ? 0 : records.size() - 1; }
  const IterationRecord& final() const { return records.back(); }
};

/// CSV with header iter,T,measure,step_size,cum_cost,cum_bits,loss,grad_norm_sq.
/// Multi-worker budgets are joined with ';'. Doubles use 17 significant digits.
void write_trace_csv(std::ostream& os, const RunTrace& trace);

/// JSON summary: final loss, total cost, total bits, iterations, status.
std::string trace_summary_json(const RunTrace& trace);

}  // namespace catgrad
