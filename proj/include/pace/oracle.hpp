#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pace/market.hpp"

namespace pace {

struct OracleOptions {
  double delta0 = 0.05;
  // Stop when the max-norm change of the dual-averaging iterate falls below this.
  double tolerance = 1e-10;
  std::size_t max_iters = 1'000'000;
  // Cells used when a continuum market is solved through discretize_continuum.
  std::size_t continuum_cells = 10'000;
  // Try to snap the dual-averaging iterate onto the exact equilibrium read off
  // its tie graph, accepting only KKT-certified candidates.
  bool polish = true;
};

struct SolverDiagnostics {
  std::size_t iterations = 0;
  double final_delta = 0.0;
  double objective = 0.0;
  bool polished = false;
  double tie_tolerance = 0.0;  // tie threshold that produced the polished point
};

struct EquilibriumSolution {
  Mode mode = Mode::linear;
  std::vector<double> beta;     // utility prices
  std::vector<double> utility;  // u*_i = B_i / beta_i (gross in quasilinear mode)
  std::vector<double> net_utility;  // u^QLME in quasilinear mode; equals utility when linear
  SolverDiagnostics diagnostics;
};

// F(beta) = <max_i beta_i v_i, s> - sum_i B_i log beta_i, for finite markets.
double dual_objective(const MarketInstance& market, std::span<const double> beta);

// Box the dual is minimized over: [B/(1+delta0), 1+delta0] (linear) or
// [beta_min, 1] (quasilinear).
std::pair<std::vector<double>, std::vector<double>> dual_box(const MarketInstance& market,
                                                             double delta0);

// Deterministic dual averaging with exact expected subgradients over the
// bounded dual. Finite markets only.
EquilibriumSolution solve_linear_dual(const MarketInstance& market,
                                      const OracleOptions& options = {});
EquilibriumSolution solve_quasilinear_dual(const MarketInstance& market,
                                           const OracleOptions& options = {});

// Mode dispatch; continuum markets are discretized first.
EquilibriumSolution solve_equilibrium(const MarketInstance& market,
                                      const OracleOptions& options = {});

// Builds the solution record (utilities, net utilities) from multipliers.
EquilibriumSolution make_solution(const MarketInstance& market, std::vector<double> beta);

// p*(theta) = max_i beta_i v_i(theta).
class PriceFunction {
 public:
  PriceFunction(const MarketInstance& market, std::vector<double> beta);
  double operator()(const Item& item) const;
  double at_values(std::span<const double> values) const;
  // Prices of every finite item.
  std::vector<double> finite_prices() const;

 private:
  const MarketInstance* market_;
  std::vector<double> beta_;
};

PriceFunction price_function(const EquilibriumSolution& solution, const MarketInstance& market);

struct Allocation {
  DenseMatrix x;               // x_ij in supply units; columns sum to s_j where p_j > 0
  std::vector<double> spend;   // sum_j p_j x_ij
  std::vector<double> prices;  // p_j
  bool exact = false;          // every budget constraint met by flow alone
};

// Recovers a primal allocation supported on the winner graph
// {(i, j): beta_i v_ij >= (1 - tie_tolerance) p_j} by max-flow; any item money
// the flow cannot route is split among the item's winners so items clear.
Allocation recover_allocation_best_effort(const MarketInstance& market,
                                          std::span<const double> beta,
                                          double tie_tolerance = 1e-8);

// Same, but throws PrimalRecoveryFailed unless the flow meets budgets to
// within `tolerance`.
Allocation recover_allocation(const MarketInstance& market, std::span<const double> beta,
                              double tie_tolerance = 1e-8, double tolerance = 1e-9);

struct KktReport {
  double price_consistency = 0.0;           // max_j |p_j - max_i beta_i v_ij|
  std::vector<double> budget;               // per buyer
  std::vector<double> utility;              // per buyer |<v_i, x_i> - B_i / beta_i|
  double clearance = 0.0;                   // |<p, s - sum_i x_i>|
  double winning_set = 0.0;                 // max_i <p - beta_i v_i, x_i>
  std::vector<double> complementary_slackness;  // |delta_i (1 - beta_i)|, quasilinear
  double box = 0.0;                         // violation of beta <= 1 (quasilinear)
  bool primal_recovered = false;
  double tolerance = 0.0;
  bool pass = false;

  double max_budget() const;
  double max_utility() const;
  double max_complementary_slackness() const;
};

KktReport kkt_check(const MarketInstance& market, const EquilibriumSolution& solution,
                    double tolerance = 1e-9);

// Direct minimization of F over the dual box (n <= 3), independent of the
// dual averaging path. beta_1 is scanned exhaustively at `resolution` and then
// refined by golden section; for each beta_1 the trailing coordinates are
// minimized out (a middle one by golden section, the last one exactly by a
// breakpoint sweep), which keeps the reduced objective convex.
EquilibriumSolution brute_force_grid(const MarketInstance& market, double resolution,
                                     double delta0 = 0.05);

// Finite market with `cells` equal-mass items whose values are cell averages
// (the midpoint value for linear valuations).
MarketInstance discretize_continuum(const MarketInstance& market, std::size_t cells);

}  // namespace pace
