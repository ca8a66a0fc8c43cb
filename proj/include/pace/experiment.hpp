#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pace/market.hpp"
#include "pace/metrics.hpp"
#include "pace/oracle.hpp"

namespace pace {

enum class SynthKind { uniform_random_finite, infdim_linear, complementary, identical, adversarial };

std::string_view to_string(SynthKind kind);
// Accepts the canonical names plus the short forms "uniform", "infdim" and
// "adversarial".
SynthKind parse_synth_kind(std::string_view text);

// uniform-random-finite: v_ij ~ U(0, 1), B = 1/n, s = 1/m, normalized.
// infdim-linear: continuum with v_i(theta) = c_i theta + d_i, c_i ~ U(-1, 1),
//   d_i = 1 - c_i / 2 (m is ignored).
// complementary: V = n I with n items; identical: all-ones n x m.
// adversarial-appendix: adversarial_market(n, n + 1), unnormalized.
MarketInstance generate_synthetic(SynthKind kind, std::size_t n, std::size_t m,
                                  std::uint64_t seed, Mode mode = Mode::linear);

// Valuation CSV (optional header row; the header "c,d" marks a continuum of
// linear valuations, one buyer per row), plus optional budget and supply
// files with one number per line. Missing files mean B_i = 1/n, s_j = 1/m.
MarketInstance ingest_csv_market(const std::filesystem::path& valuations,
                                 const std::optional<std::filesystem::path>& budgets,
                                 const std::optional<std::filesystem::path>& supply, Mode mode);

// Writes the valuation CSV ingest_csv_market reads back ("c,d" header for a
// continuum); budgets and supply go to their own files when paths are given.
void write_market_csv(const MarketInstance& market, const std::filesystem::path& valuations,
                      const std::optional<std::filesystem::path>& budgets = std::nullopt,
                      const std::optional<std::filesystem::path>& supply = std::nullopt);

// Shortest round-trip representation capped at 12 significant digits.
std::string format_number(double x);

enum class ArrivalKind { iid, adversarial, replay };

struct ExperimentConfig {
  double delta0 = 0.05;
  std::size_t epochs = 100;             // horizon = epochs * n unless `horizon` is set
  std::optional<std::size_t> horizon;
  std::vector<std::uint64_t> seeds{1};
  ArrivalKind arrivals = ArrivalKind::iid;
  std::filesystem::path replay_path;
  std::optional<std::filesystem::path> out_dir;
  bool track_regret = true;
  bool check_inequalities = true;
  std::size_t jobs = 1;
  OracleOptions oracle;
};

std::size_t resolve_horizon(const ExperimentConfig& config, const MarketInstance& market);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<ErrorTraceRow> rows;
  InequalityStats inequalities;
  std::vector<double> final_beta;
  std::vector<double> final_utility;  // net time-averaged utility
  std::vector<double> final_spend;
};

struct AggregateRow {
  std::size_t t = 0;
  double epoch = 0.0;
  std::vector<double> mean;    // one per trace column after t and epoch
  std::vector<double> stderr_;  // sample standard deviation / sqrt(seeds); 0 for one seed
};

struct ExperimentResult {
  EquilibriumSolution solution;
  std::vector<SeedResult> seeds;
  std::vector<AggregateRow> aggregate;
};

// Names of the numeric trace columns after t and epoch, in file order.
const std::vector<std::string>& trace_columns();
std::vector<double> trace_values(const ErrorTraceRow& row);

// One engine run with its metric accumulator against a fixed oracle solution.
SeedResult run_seed(const MarketInstance& market, const EquilibriumSolution& solution,
                    const ExperimentConfig& config, std::uint64_t seed);

std::vector<AggregateRow> aggregate(const std::vector<SeedResult>& seeds);

// Solves the oracle once, runs every seed (up to config.jobs in parallel)
// and, with an output directory, writes trace_seed_<seed>.csv,
// aggregate.csv, equilibrium.json and inequalities.csv.
ExperimentResult run_experiment(const MarketInstance& market, const ExperimentConfig& config);

// The adversarial-arrival counterexample end to end.
struct AdversarialSummary {
  std::size_t buyers = 0;
  std::size_t horizon = 0;
  double big = 0.0;
  std::size_t targeted_buyer = 0;
  std::size_t targeted_item = 0;
  double realized_utility = 0.0;     // total, not averaged
  double threshold = 0.0;            // T / (2n)
  double hindsight_utility = 0.0;    // static equilibrium of the realized items
  double closed_form_hindsight = 0.0;  // T / 2
};

AdversarialSummary run_adversarial(std::size_t buyers, double big, std::size_t horizon,
                                   double delta0 = 0.05);

// Effective worker count: PACE_JOBS when set and valid, else `requested`;
// never below 1.
std::size_t resolve_jobs(std::size_t requested);

// {"beta_star", "u_star", ["u_qlme",] ["p_star",] "mode", "diagnostics"}.
std::string equilibrium_json(const EquilibriumSolution& solution, const MarketInstance& market);
void write_equilibrium_json(const EquilibriumSolution& solution, const MarketInstance& market,
                            const std::filesystem::path& path);
EquilibriumSolution read_equilibrium_json(const std::filesystem::path& path);

}  // namespace pace
