#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pace/engine.hpp"
#include "pace/market.hpp"
#include "pace/oracle.hpp"

namespace pace {

struct TheoreticalConstants {
  Mode mode = Mode::linear;
  double g2 = 0.0;     // G^2 = max_i E[v_i^2]
  double sigma = 0.0;  // strong convexity of the regularized dual
  double kappa = 0.0;  // 1 / min_i B_i
  double vmax = 0.0;   // ||v||_inf
  std::vector<double> epsilon;  // distance of beta*_i to its box ends
  // Linear: the single C. Quasilinear: max_i C_i, with <v_i, s> standing in
  // for ||v_i||_1 / m.
  double c = 0.0;
  std::vector<double> c_per_buyer;  // quasilinear only
  bool boundary = false;            // some epsilon_i <= 0
  bool ql_substitution = false;
};

TheoreticalConstants theoretical_constants(const MarketInstance& market,
                                           const EquilibriumSolution& solution, double delta0);

struct BoundEnvelopes {
  double beta = 0.0;     // (6 + log t) G^2 / (t sigma^2)
  double utility = 0.0;  // C (6 + log(t+1)) G^2 / ((t+1) sigma^2)
  double spend = 0.0;    // NaN for t < 3
  bool boundary = false;
};

// Evaluates the closed-form right-hand sides. With `strict`, a boundary
// equilibrium raises BoundaryEquilibrium instead of being flagged.
BoundEnvelopes bound_envelopes(const TheoreticalConstants& constants, std::size_t t,
                               bool strict = false);

struct RelativeErrorNorms {
  double avg = 0.0;
  double max = 0.0;
};

// avg = ||(x - y) / y||_1 / n, max = ||(x - y) / y||_inf.
RelativeErrorNorms relative_error_norms(std::span<const double> x, std::span<const double> y);

// max (1/t) sum_tau w_tau z_tau s.t. (1/t) sum_tau p_tau z_tau <= budget,
// z in [0, 1]^t, with w = v (linear) or w = v - p (quasilinear). Greedy
// fractional knapsack: free items first, then by w/p descending with earlier
// entries first among ties.
double hindsight_utility(std::span<const HindsightEntry> ledger, double budget, std::size_t t,
                         Mode mode = Mode::linear);

// Every epoch (n steps), every {1, 2, 5} x 10^k, and the horizon itself.
class CheckpointSchedule {
 public:
  CheckpointSchedule(std::size_t epoch_length, std::size_t horizon);
  const std::vector<std::size_t>& points() const noexcept { return points_; }
  bool contains(std::size_t t) const;
  std::size_t epoch_length() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
  std::vector<std::size_t> points_;
};

struct ErrorsAt {
  std::vector<double> xi;        // |ubar - u*| (net vs u^QLME in quasilinear mode)
  std::vector<double> xi_gross;  // |gbar - u*|
  std::vector<double> delta;     // |bbar - B|
  std::vector<double> eta;
  double gamma = 0.0;
};

struct ErrorTraceRow {
  std::size_t t = 0;
  double epoch = 0.0;
  RelativeErrorNorms beta;
  RelativeErrorNorms utility;
  RelativeErrorNorms spend;
  double beta_sq_error = 0.0;  // ||beta^{t+1} - beta*||_2^2
  double regret_mean = 0.0;
  double envy_positive_mean = 0.0;
  double envy_max = 0.0;
  double gamma = 0.0;
  BoundEnvelopes envelopes;
};

// Pathwise inequality bookkeeping across checkpoints (linear mode).
struct InequalityStats {
  std::size_t checks = 0;
  std::size_t regret_violations = 0;
  std::size_t envy_violations = 0;
  std::size_t eta_violations = 0;
  // Envy violations seen while max_k (Delta_k + eta_k) < 0, where the last
  // loosening step of the envy bound does not apply.
  std::size_t envy_violations_negative_spread = 0;
  // Violations of the per-k envy bound before that loosening,
  // rho_i <= max_{k != i} (u*_i / B_i)(1 + (Delta_k + eta_k) / B_k) - ubar_i / B_i.
  std::size_t envy_chain_violations = 0;
  // Smallest observed (rhs - lhs); negative means a violation.
  double regret_margin = 0.0;
  double envy_margin = 0.0;
  double eta_margin = 0.0;
  double envy_chain_margin = 0.0;
};

class MetricAccumulator final : public StepObserver {
 public:
  MetricAccumulator(const MarketInstance& market, EquilibriumSolution solution, double delta0,
                    CheckpointSchedule schedule, bool check_inequalities = true);

  void observe(const StepObservation& step, const PaceState& state) override;

  ErrorsAt errors_at(const PaceState& state) const;
  double regret(std::size_t buyer, const PaceState& state) const;
  double envy(std::size_t buyer, const PaceState& state) const;
  ErrorTraceRow row_at(const PaceState& state) const;

  const std::vector<ErrorTraceRow>& rows() const noexcept { return rows_; }
  const InequalityStats& inequalities() const noexcept { return stats_; }
  const TheoreticalConstants& constants() const noexcept { return constants_; }
  const EquilibriumSolution& solution() const noexcept { return solution_; }

 private:
  struct Snapshot {
    ErrorTraceRow row;
    ErrorsAt errors;
    std::vector<double> regret;  // empty without ledgers
    std::vector<double> envy;    // empty for a single buyer
    std::vector<double> own;     // ubar_ii / B_i, alongside envy
  };
  Snapshot snapshot(const PaceState& state) const;
  void check_inequalities(const Snapshot& snap);

  const MarketInstance* market_;
  EquilibriumSolution solution_;
  PriceFunction prices_;
  CheckpointSchedule schedule_;
  TheoreticalConstants constants_;
  bool check_;
  std::vector<bool> capped_;  // quasilinear beta*_i at 1
  double gamma_sum_ = 0.0;
  std::vector<double> eta_sum_;
  std::vector<ErrorTraceRow> rows_;
  InequalityStats stats_;
};

}  // namespace pace
