#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "pace/item_source.hpp"
#include "pace/market.hpp"

namespace pace {

struct PaceConfig {
  double delta0 = 0.05;
  Mode mode = Mode::linear;
  std::size_t horizon = 1;
  // Defaults: (B_i + 1) / 2 for linear, (beta_min_i + 1) / 2 for quasilinear.
  std::optional<std::vector<double>> initial_beta;
  // Per-buyer (value, price) ledgers are O(n T) memory; only regret needs them.
  bool track_hindsight = true;
};

struct HindsightEntry {
  double value = 0.0;
  double price = 0.0;
};

struct PaceState {
  std::size_t t = 0;
  std::vector<double> beta;        // multipliers for the next step
  std::vector<double> avg_gross;   // dual average: time-averaged gross utility
  std::vector<double> avg_net;     // time-averaged net utility (equals avg_gross when linear)
  std::vector<double> avg_spend;   // time-averaged expenditure
  DenseMatrix cross_utility;       // [i][k] = sum_tau v_i(theta_tau) 1{k won tau}
  bool ledgers_enabled = true;
  std::vector<std::vector<HindsightEntry>> ledgers;
};

struct StepObservation {
  std::size_t t = 0;
  Item item;
  std::vector<double> values;
  std::vector<double> beta;  // multipliers used for this step's bids
  std::vector<double> bids;
  std::size_t winner = 0;
  double price = 0.0;
  std::vector<double> net_utility;
};

// bid_i = beta_i v_i(theta).
std::vector<double> bids(std::span<const double> beta, std::span<const double> values);

// Lowest index attaining the maximal bid, and that bid as the first price.
std::pair<std::size_t, double> select_winner(std::span<const double> bids);

// Receives every step, after the multiplier update (state.beta holds beta^{t+1}).
class StepObserver {
 public:
  virtual ~StepObserver() = default;
  virtual void observe(const StepObservation& step, const PaceState& state) = 0;
};

class PaceEngine final : public AllocationView {
 public:
  PaceEngine(MarketInstance market, PaceConfig config);

  // Dispatches on the configured mode.
  const StepObservation& step(const Item& item);
  const StepObservation& step_linear(const Item& item);
  const StepObservation& step_quasilinear(const Item& item);

  const PaceState& state() const noexcept { return state_; }
  const MarketInstance& market() const noexcept { return market_; }
  const PaceConfig& config() const noexcept { return config_; }
  std::span<const double> lower_bounds() const noexcept { return lower_; }
  std::span<const double> upper_bounds() const noexcept { return upper_; }

  std::size_t buyers() const override { return market_.buyers(); }
  std::size_t steps() const override { return state_.t; }
  double realized_utility(std::size_t buyer) const override;

 private:
  const StepObservation& advance(const Item& item);

  MarketInstance market_;
  PaceConfig config_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  PaceState state_;
  StepObservation obs_;
  // Compensated running sums, used once t passes kCompensatedThreshold.
  std::vector<double> sum_gross_, comp_gross_;
  std::vector<double> sum_net_, comp_net_;
  std::vector<double> sum_spend_, comp_spend_;
};

inline constexpr std::size_t kCompensatedThreshold = 1'000'000;

// Runs up to config.horizon steps; stops early and cleanly when the stream ends.
PaceState run(const MarketInstance& market, const PaceConfig& config, ArrivalStream& stream,
              std::span<StepObserver* const> observers = {});

}  // namespace pace
