#include "pace/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pace/errors.hpp"

namespace pace {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kArithmeticSlack = 1e-9;
constexpr double kBoundaryThreshold = 1e-6;

}  // namespace

TheoreticalConstants theoretical_constants(const MarketInstance& market,
                                           const EquilibriumSolution& solution, double delta0) {
  const std::size_t n = market.buyers();
  if (solution.beta.size() != n) throw DimensionMismatch("solution has wrong number of buyers");
  TheoreticalConstants c;
  c.mode = market.mode();
  const auto budgets = market.budgets();
  const double min_budget = *std::min_element(budgets.begin(), budgets.end());
  for (std::size_t i = 0; i < n; ++i) c.g2 = std::max(c.g2, market.second_moment(i));
  c.sigma = market.mode() == Mode::linear ? min_budget / ((1.0 + delta0) * (1.0 + delta0))
                                          : min_budget;
  c.kappa = 1.0 / min_budget;
  c.vmax = market.max_value();

  const auto [lo, hi] = dual_box(market, delta0);
  for (std::size_t i = 0; i < n; ++i) {
    const double eps = std::min(hi[i] - solution.beta[i], solution.beta[i] - lo[i]);
    c.epsilon.push_back(eps);
    c.boundary = c.boundary || !(eps > 0.0);
  }

  if (market.mode() == Mode::linear) {
    const double a = c.vmax / delta0;
    c.c = c.kappa * c.kappa * (a * a + (1.0 + delta0) * (1.0 + delta0));
  } else {
    c.ql_substitution = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double vi = market.max_value(i);
      const double mass = market.mean_value(i) + 2.0 * budgets[i];
      const double ci = vi * vi / (c.epsilon[i] * c.epsilon[i]) +
                        std::pow(mass, 4) / (budgets[i] * budgets[i]);
      c.c_per_buyer.push_back(ci);
      c.c = std::max(c.c, ci);
    }
  }
  return c;
}

BoundEnvelopes bound_envelopes(const TheoreticalConstants& c, std::size_t t, bool strict) {
  if (t == 0) throw Error("envelopes are defined for t >= 1");
  if (strict && c.boundary) throw BoundaryEquilibrium();
  BoundEnvelopes e;
  e.boundary = c.boundary;
  const double tt = static_cast<double>(t);
  const double s2 = c.sigma * c.sigma;
  const double lt = std::log(tt);
  e.beta = (6.0 + lt) * c.g2 / (tt * s2);
  e.utility = c.c * (6.0 + std::log(tt + 1.0)) * c.g2 / ((tt + 1.0) * s2);
  if (t >= 3) {
    const double v2 = c.vmax * c.vmax;
    e.spend = (2.0 * c.g2 / (tt * s2)) *
              (6.0 * (c.c + v2) + (c.c + 6.0 * v2) * lt + (v2 / 2.0) * lt * lt);
  } else {
    e.spend = kNan;
  }
  return e;
}

RelativeErrorNorms relative_error_norms(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionMismatch("relative error of vectors of unequal length");
  RelativeErrorNorms out;
  if (x.empty()) return out;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > 0.0)) throw ZeroReference(i);
    const double r = std::abs((x[i] - y[i]) / y[i]);
    out.avg += r;
    out.max = std::max(out.max, r);
  }
  out.avg /= static_cast<double>(x.size());
  return out;
}

double hindsight_utility(std::span<const HindsightEntry> ledger, double budget, std::size_t t,
                         Mode mode) {
  if (t == 0) return 0.0;
  if (ledger.size() < t) throw DimensionMismatch("ledger is shorter than t");
  struct Candidate {
    double ratio;
    std::size_t index;
    double weight;
    double price;
  };
  double total = 0.0;
  std::vector<Candidate> order;
  order.reserve(t);
  for (std::size_t k = 0; k < t; ++k) {
    const auto& e = ledger[k];
    const double w = mode == Mode::linear ? e.value : e.value - e.price;
    if (!(w > 0.0)) continue;
    if (e.price <= 0.0) {
      total += w;
    } else {
      order.push_back({w / e.price, k, w, e.price});
    }
  }
  std::sort(order.begin(), order.end(), [](const Candidate& a, const Candidate& b) {
    return a.ratio != b.ratio ? a.ratio > b.ratio : a.index < b.index;
  });
  double room = static_cast<double>(t) * budget;
  for (const auto& c : order) {
    if (room <= 0.0) break;
    if (c.price <= room) {
      total += c.weight;
      room -= c.price;
    } else {
      total += c.weight * room / c.price;
      room = 0.0;
    }
  }
  return total / static_cast<double>(t);
}

CheckpointSchedule::CheckpointSchedule(std::size_t epoch_length, std::size_t horizon)
    : epoch_(epoch_length) {
  if (epoch_length == 0 || horizon == 0) throw Error("checkpoint schedule needs positive lengths");
  for (std::size_t t = epoch_length; t <= horizon; t += epoch_length) points_.push_back(t);
  for (std::size_t decade = 1; decade <= horizon; decade *= 10) {
    for (std::size_t f : {1, 2, 5}) {
      if (f * decade <= horizon) points_.push_back(f * decade);
    }
    if (decade > horizon / 10) break;
  }
  points_.push_back(horizon);
  std::sort(points_.begin(), points_.end());
  points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
}

bool CheckpointSchedule::contains(std::size_t t) const {
  return std::binary_search(points_.begin(), points_.end(), t);
}

MetricAccumulator::MetricAccumulator(const MarketInstance& market, EquilibriumSolution solution,
                                     double delta0, CheckpointSchedule schedule,
                                     bool check_inequalities)
    : market_(&market),
      solution_(std::move(solution)),
      prices_(market, solution_.beta),
      schedule_(std::move(schedule)),
      constants_(theoretical_constants(market, solution_, delta0)),
      check_(check_inequalities && market.mode() == Mode::linear),
      eta_sum_(market.buyers(), 0.0) {
  for (double b : solution_.beta) {
    capped_.push_back(market.mode() == Mode::quasilinear &&
                      std::abs(b - 1.0) < kBoundaryThreshold);
  }
  const double inf = std::numeric_limits<double>::infinity();
  stats_.regret_margin = stats_.envy_margin = stats_.eta_margin = stats_.envy_chain_margin = inf;
}

void MetricAccumulator::observe(const StepObservation& step, const PaceState& state) {
  double worst = 0.0;
  for (std::size_t i = 0; i < step.beta.size(); ++i) {
    worst = std::max(worst, std::abs(step.beta[i] - solution_.beta[i]));
  }
  gamma_sum_ += worst;
  const std::size_t w = step.winner;
  eta_sum_[w] += prices_.at_values(step.values) - step.beta[w] * step.values[w];

  if (schedule_.contains(state.t)) {
    auto snap = snapshot(state);
    if (check_) check_inequalities(snap);
    rows_.push_back(std::move(snap.row));
  }
}

ErrorsAt MetricAccumulator::errors_at(const PaceState& state) const {
  const std::size_t n = market_->buyers();
  ErrorsAt e;
  if (state.t == 0) throw Error("errors are defined after the first step");
  const double t = static_cast<double>(state.t);
  e.gamma = constants_.vmax * gamma_sum_ / t;
  for (std::size_t i = 0; i < n; ++i) {
    const double gross = std::abs(state.avg_gross[i] - solution_.utility[i]);
    e.xi_gross.push_back(gross);
    if (market_->mode() == Mode::linear) {
      e.xi.push_back(gross);
    } else if (capped_[i]) {
      e.xi.push_back(std::abs(state.avg_net[i]));
    } else {
      e.xi.push_back(std::abs(state.avg_net[i] - solution_.net_utility[i]));
    }
    e.delta.push_back(std::abs(state.avg_spend[i] - market_->budgets()[i]));
    e.eta.push_back(eta_sum_[i] / t);
  }
  return e;
}

double MetricAccumulator::regret(std::size_t buyer, const PaceState& state) const {
  if (!state.ledgers_enabled) throw LedgerDisabled();
  if (buyer >= market_->buyers()) throw IndexOutOfRange("buyer out of range", buyer);
  const double best =
      hindsight_utility(state.ledgers[buyer], market_->budgets()[buyer], state.t, market_->mode());
  return std::max(best - state.avg_net[buyer], 0.0);
}

double MetricAccumulator::envy(std::size_t buyer, const PaceState& state) const {
  const std::size_t n = market_->buyers();
  if (n == 1) throw UndefinedForSingleBuyer();
  if (buyer >= n) throw IndexOutOfRange("buyer out of range", buyer);
  const double t = static_cast<double>(state.t);
  const auto budgets = market_->budgets();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (k != buyer) best = std::max(best, state.cross_utility(buyer, k) / (t * budgets[k]));
  }
  return best - state.cross_utility(buyer, buyer) / (t * budgets[buyer]);
}

MetricAccumulator::Snapshot MetricAccumulator::snapshot(const PaceState& state) const {
  const std::size_t n = market_->buyers();
  Snapshot s;
  s.errors = errors_at(state);
  auto& row = s.row;
  row.t = state.t;
  row.epoch = static_cast<double>(state.t) / static_cast<double>(schedule_.epoch_length());
  row.beta = relative_error_norms(state.beta, solution_.beta);
  row.spend = relative_error_norms(state.avg_spend, market_->budgets());
  if (market_->mode() == Mode::linear) {
    row.utility = relative_error_norms(state.avg_gross, solution_.utility);
  } else {
    // A capped buyer's reference utility is zero, so its error is absolute.
    for (std::size_t i = 0; i < n; ++i) {
      const double r = capped_[i] ? std::abs(state.avg_net[i])
                                  : std::abs(state.avg_net[i] - solution_.net_utility[i]) /
                                        solution_.net_utility[i];
      row.utility.avg += r / static_cast<double>(n);
      row.utility.max = std::max(row.utility.max, r);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double d = state.beta[i] - solution_.beta[i];
    row.beta_sq_error += d * d;
  }
  if (state.ledgers_enabled) {
    for (std::size_t i = 0; i < n; ++i) s.regret.push_back(regret(i, state));
    row.regret_mean = std::accumulate(s.regret.begin(), s.regret.end(), 0.0) /
                      static_cast<double>(n);
  } else {
    row.regret_mean = kNan;
  }
  if (n > 1) {
    row.envy_max = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      const double rho = envy(i, state);
      s.envy.push_back(rho);
      s.own.push_back(state.cross_utility(i, i) /
                      (static_cast<double>(state.t) * market_->budgets()[i]));
      row.envy_positive_mean += std::max(rho, 0.0) / static_cast<double>(n);
      row.envy_max = std::max(row.envy_max, rho);
    }
  } else {
    row.envy_positive_mean = row.envy_max = kNan;
  }
  row.gamma = s.errors.gamma;
  row.envelopes = bound_envelopes(constants_, state.t);
  return s;
}

void MetricAccumulator::check_inequalities(const Snapshot& snap) {
  const std::size_t n = market_->buyers();
  const auto& e = snap.errors;
  const auto budgets = market_->budgets();
  ++stats_.checks;
  double worst_spend = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) worst_spend = std::max(worst_spend, e.delta[k] + e.eta[k]);
  const double kappa = constants_.kappa;
  for (std::size_t i = 0; i < n; ++i) {
    if (!snap.regret.empty()) {
      const double margin = e.xi[i] + e.gamma / budgets[i] - snap.regret[i];
      stats_.regret_margin = std::min(stats_.regret_margin, margin);
      if (margin < -kArithmeticSlack) ++stats_.regret_violations;
    }
    if (!snap.envy.empty()) {
      const double margin = kappa * e.xi[i] + kappa * kappa * worst_spend - snap.envy[i];
      stats_.envy_margin = std::min(stats_.envy_margin, margin);
      if (margin < -kArithmeticSlack) {
        ++stats_.envy_violations;
        if (worst_spend < 0.0) ++stats_.envy_violations_negative_spread;
      }
      double chain = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        chain = std::max(chain, solution_.utility[i] / budgets[i] *
                                    (1.0 + (e.delta[k] + e.eta[k]) / budgets[k]));
      }
      const double chain_margin = chain - snap.own[i] - snap.envy[i];
      stats_.envy_chain_margin = std::min(stats_.envy_chain_margin, chain_margin);
      if (chain_margin < -kArithmeticSlack) ++stats_.envy_chain_violations;
    }
    const double margin = e.gamma - std::abs(e.eta[i]);
    stats_.eta_margin = std::min(stats_.eta_margin, margin);
    if (margin < -kArithmeticSlack) ++stats_.eta_violations;
  }
}

ErrorTraceRow MetricAccumulator::row_at(const PaceState& state) const {
  return snapshot(state).row;
}

}  // namespace pace
