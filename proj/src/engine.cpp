#include "pace/engine.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "pace/errors.hpp"

namespace pace {

std::vector<double> bids(std::span<const double> beta, std::span<const double> values) {
  if (beta.size() != values.size()) throw DimensionMismatch("beta and values differ in length");
  std::vector<double> out(beta.size());
  for (std::size_t i = 0; i < beta.size(); ++i) out[i] = beta[i] * values[i];
  return out;
}

std::pair<std::size_t, double> select_winner(std::span<const double> bids) {
  if (bids.empty()) throw InvalidMarket("auction needs at least one bid");
  std::size_t winner = 0;
  for (std::size_t i = 1; i < bids.size(); ++i) {
    if (bids[i] > bids[winner]) winner = i;
  }
  return {winner, bids[winner]};
}

namespace {

void kahan_add(double& sum, double& comp, double x) {
  const double y = x - comp;
  const double t = sum + y;
  comp = (t - sum) - y;
  sum = t;
}

}  // namespace

PaceEngine::PaceEngine(MarketInstance market, PaceConfig config)
    : market_(std::move(market)), config_(std::move(config)) {
  const std::size_t n = market_.buyers();
  if (!(config_.delta0 > 0.0)) throw Error("delta0 must be positive");
  if (config_.mode != market_.mode()) {
    throw ModeMismatch("engine mode " + std::string(to_string(config_.mode)) +
                       " does not match market mode " + std::string(to_string(market_.mode())));
  }
  lower_.resize(n);
  upper_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = market_.budgets()[i];
    if (config_.mode == Mode::linear) {
      lower_[i] = b / (1.0 + config_.delta0);
      upper_[i] = 1.0 + config_.delta0;
    } else {
      lower_[i] = market_.ql_beta_min(i);
      upper_[i] = 1.0;
    }
  }

  if (config_.initial_beta) {
    if (config_.initial_beta->size() != n) {
      throw DimensionMismatch("initial multipliers have wrong length");
    }
    state_.beta = *config_.initial_beta;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(state_.beta[i] >= lower_[i] && state_.beta[i] <= upper_[i])) {
        throw Error("initial multiplier of buyer " + std::to_string(i) + " is outside its box");
      }
    }
  } else {
    state_.beta.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      state_.beta[i] = config_.mode == Mode::linear ? (market_.budgets()[i] + 1.0) / 2.0
                                                    : (lower_[i] + 1.0) / 2.0;
    }
  }

  state_.avg_gross.assign(n, 0.0);
  state_.avg_net.assign(n, 0.0);
  state_.avg_spend.assign(n, 0.0);
  state_.cross_utility = DenseMatrix(n, n);
  state_.ledgers_enabled = config_.track_hindsight;
  if (state_.ledgers_enabled) state_.ledgers.resize(n);

  for (auto* v : {&sum_gross_, &comp_gross_, &sum_net_, &comp_net_, &sum_spend_, &comp_spend_}) {
    v->assign(n, 0.0);
  }
  obs_.values.resize(n);
  obs_.beta.resize(n);
  obs_.bids.resize(n);
  obs_.net_utility.resize(n);
}

double PaceEngine::realized_utility(std::size_t buyer) const {
  if (buyer >= market_.buyers()) throw IndexOutOfRange("buyer out of range", buyer);
  return state_.cross_utility(buyer, buyer);
}

const StepObservation& PaceEngine::step(const Item& item) { return advance(item); }

const StepObservation& PaceEngine::step_linear(const Item& item) {
  if (config_.mode != Mode::linear) throw ModeMismatch("step_linear on a quasilinear engine");
  return advance(item);
}

const StepObservation& PaceEngine::step_quasilinear(const Item& item) {
  if (config_.mode != Mode::quasilinear) {
    throw ModeMismatch("step_quasilinear on a linear engine");
  }
  return advance(item);
}

const StepObservation& PaceEngine::advance(const Item& item) {
  const std::size_t n = market_.buyers();
  const bool linear = config_.mode == Mode::linear;
  const std::size_t t = state_.t + 1;

  market_.values_at(item, obs_.values);
  obs_.t = t;
  obs_.item = item;
  obs_.beta = state_.beta;
  for (std::size_t i = 0; i < n; ++i) obs_.bids[i] = state_.beta[i] * obs_.values[i];
  const auto [winner, price] = select_winner(obs_.bids);
  obs_.winner = winner;
  obs_.price = price;

  const double w_old = static_cast<double>(t - 1) / static_cast<double>(t);
  const double w_new = 1.0 / static_cast<double>(t);
  const bool compensated = t > kCompensatedThreshold;

  for (std::size_t i = 0; i < n; ++i) {
    const bool won = i == winner;
    const double gross = won ? obs_.values[i] : 0.0;
    const double spend = won ? price : 0.0;
    const double net = linear ? gross : (won ? (1.0 - state_.beta[i]) * obs_.values[i] : 0.0);
    obs_.net_utility[i] = net;

    kahan_add(sum_gross_[i], comp_gross_[i], gross);
    kahan_add(sum_net_[i], comp_net_[i], net);
    kahan_add(sum_spend_[i], comp_spend_[i], spend);
    if (compensated) {
      state_.avg_gross[i] = sum_gross_[i] / static_cast<double>(t);
      state_.avg_net[i] = sum_net_[i] / static_cast<double>(t);
      state_.avg_spend[i] = sum_spend_[i] / static_cast<double>(t);
    } else {
      state_.avg_gross[i] = w_old * state_.avg_gross[i] + w_new * gross;
      state_.avg_net[i] = w_old * state_.avg_net[i] + w_new * net;
      state_.avg_spend[i] = w_old * state_.avg_spend[i] + w_new * spend;
    }

    state_.cross_utility(i, winner) += obs_.values[i];
    if (state_.ledgers_enabled) state_.ledgers[i].push_back({obs_.values[i], price});
  }

  // beta^{t+1}_i = clamp(B_i / gbar^t_i, lower_i, upper_i), with B_i / 0 = +inf.
  for (std::size_t i = 0; i < n; ++i) {
    const double g = state_.avg_gross[i];
    const double target =
        g > 0.0 ? market_.budgets()[i] / g : std::numeric_limits<double>::infinity();
    state_.beta[i] = std::clamp(target, lower_[i], upper_[i]);
  }
  state_.t = t;
  return obs_;
}

PaceState run(const MarketInstance& market, const PaceConfig& config, ArrivalStream& stream,
              std::span<StepObserver* const> observers) {
  if (config.horizon == 0) throw Error("horizon must be at least 1");
  PaceEngine engine(market, config);
  for (std::size_t t = 0; t < config.horizon; ++t) {
    auto item = stream.next(&engine);
    if (!item) break;
    const auto& obs = engine.step(*item);
    for (auto* observer : observers) observer->observe(obs, engine.state());
  }
  return engine.state();
}

}  // namespace pace
