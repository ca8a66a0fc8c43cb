#include "pace/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>

#include "max_flow.hpp"
#include "pace/errors.hpp"

namespace pace {

namespace {

void require_finite(const MarketInstance& market, const char* what) {
  if (market.space() != ItemSpace::finite) {
    throw Error(std::string(what) + " needs a finite market; discretize the continuum first");
  }
}

// A buyer whose quasilinear multiplier sits at the cap of 1.
bool at_cap(Mode mode, double beta) { return mode == Mode::quasilinear && beta >= 1.0 - 1e-12; }

std::vector<double> item_prices(const MarketInstance& market, std::span<const double> beta) {
  const auto& v = market.valuations();
  std::vector<double> p(market.items(), 0.0);
  for (std::size_t i = 0; i < market.buyers(); ++i) {
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = std::max(p[j], beta[i] * v(i, j));
  }
  return p;
}

}  // namespace

double dual_objective(const MarketInstance& market, std::span<const double> beta) {
  require_finite(market, "dual_objective");
  const auto p = item_prices(market, beta);
  double f = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) f += market.supply()[j] * p[j];
  for (std::size_t i = 0; i < market.buyers(); ++i) f -= market.budgets()[i] * std::log(beta[i]);
  return f;
}

std::pair<std::vector<double>, std::vector<double>> dual_box(const MarketInstance& market,
                                                             double delta0) {
  const std::size_t n = market.buyers();
  std::vector<double> lo(n), hi(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (market.mode() == Mode::linear) {
      lo[i] = market.budgets()[i] / (1.0 + delta0);
      hi[i] = 1.0 + delta0;
    } else {
      lo[i] = market.ql_beta_min(i);
      hi[i] = 1.0;
    }
  }
  return {std::move(lo), std::move(hi)};
}

EquilibriumSolution make_solution(const MarketInstance& market, std::vector<double> beta) {
  EquilibriumSolution sol;
  sol.mode = market.mode();
  sol.beta = std::move(beta);
  for (std::size_t i = 0; i < market.buyers(); ++i) {
    const double u = market.budgets()[i] / sol.beta[i];
    sol.utility.push_back(u);
    // (1 - beta) u* is zero at the cap, matching the boundary case.
    sol.net_utility.push_back(market.mode() == Mode::linear ? u : (1.0 - sol.beta[i]) * u);
  }
  if (market.space() == ItemSpace::finite) {
    sol.diagnostics.objective = dual_objective(market, sol.beta);
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Prices and primal recovery

PriceFunction::PriceFunction(const MarketInstance& market, std::vector<double> beta)
    : market_(&market), beta_(std::move(beta)) {
  if (beta_.size() != market.buyers()) throw DimensionMismatch("beta has wrong length");
}

double PriceFunction::operator()(const Item& item) const {
  double p = 0.0;
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    p = std::max(p, beta_[i] * market_->value_of(i, item));
  }
  return p;
}

double PriceFunction::at_values(std::span<const double> values) const {
  double p = 0.0;
  for (std::size_t i = 0; i < beta_.size(); ++i) p = std::max(p, beta_[i] * values[i]);
  return p;
}

std::vector<double> PriceFunction::finite_prices() const {
  require_finite(*market_, "finite_prices");
  return item_prices(*market_, beta_);
}

PriceFunction price_function(const EquilibriumSolution& solution, const MarketInstance& market) {
  return PriceFunction(market, solution.beta);
}

Allocation recover_allocation_best_effort(const MarketInstance& market,
                                          std::span<const double> beta, double tie_tolerance) {
  require_finite(market, "recover_allocation");
  const std::size_t n = market.buyers();
  const std::size_t m = market.items();
  const auto& v = market.valuations();
  const auto s = market.supply();
  const auto budgets = market.budgets();

  Allocation out;
  out.prices = item_prices(market, beta);
  const auto& p = out.prices;

  std::vector<std::vector<std::size_t>> winners(m);
  double money = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    money += p[j] * s[j];
    if (!(p[j] > 0.0) || !(s[j] > 0.0)) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (beta[i] * v(i, j) >= (1.0 - tie_tolerance) * p[j]) winners[j].push_back(i);
    }
  }

  // Nodes: source, buyers, items, sink.
  const std::size_t source = 0, sink = n + m + 1;
  detail::MaxFlow flow(n + m + 2);
  const double unbounded = money + std::accumulate(budgets.begin(), budgets.end(), 0.0) + 1.0;
  std::vector<std::size_t> source_edge(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Capped quasilinear buyers may underspend, so they join in a second
    // phase; augmenting paths never reduce source-edge flow, which keeps the
    // budget-exact buyers saturated whenever that is feasible.
    source_edge[i] = flow.add_edge(source, 1 + i, at_cap(market.mode(), beta[i]) ? 0.0 : budgets[i]);
  }
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> edges(m);  // (buyer, edge id)
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i : winners[j]) edges[j].push_back({i, flow.add_edge(1 + i, 1 + n + j, unbounded)});
  }
  std::vector<std::size_t> sink_edge(m);
  for (std::size_t j = 0; j < m; ++j) sink_edge[j] = flow.add_edge(1 + n + j, sink, p[j] * s[j]);
  flow.run(source, sink);
  bool capped_any = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (at_cap(market.mode(), beta[i])) {
      flow.set_capacity(source_edge[i], budgets[i]);
      capped_any = true;
    }
  }
  if (capped_any) flow.run(source, sink);

  out.x = DenseMatrix(n, m);
  out.spend.assign(n, 0.0);
  const double slack = 1e-12 * std::max(1.0, money);
  bool exact = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (!at_cap(market.mode(), beta[i]) && budgets[i] - flow.flow(source_edge[i]) > slack) {
      exact = false;
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (!(p[j] > 0.0) || !(s[j] > 0.0)) continue;
    double routed = 0.0;
    for (auto [i, id] : edges[j]) {
      const double f = std::max(0.0, flow.flow(id));
      out.x(i, j) = f / p[j];
      routed += f;
    }
    const double leftover = p[j] * s[j] - routed;
    if (leftover > slack) {
      exact = false;
      const double share = leftover / static_cast<double>(edges[j].size());
      for (auto [i, id] : edges[j]) out.x(i, j) += share / p[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out.spend[i] += p[j] * out.x(i, j);
  }
  out.exact = exact;
  return out;
}

Allocation recover_allocation(const MarketInstance& market, std::span<const double> beta,
                              double tie_tolerance, double tolerance) {
  auto alloc = recover_allocation_best_effort(market, beta, tie_tolerance);
  for (std::size_t i = 0; i < market.buyers(); ++i) {
    const double gap = alloc.spend[i] - market.budgets()[i];
    const bool ok = at_cap(market.mode(), beta[i]) ? gap <= tolerance : std::abs(gap) <= tolerance;
    if (!ok) {
      throw PrimalRecoveryFailed("no budget-exact allocation on the winner graph (buyer " +
                                 std::to_string(i) + " spends " + std::to_string(alloc.spend[i]) +
                                 ")");
    }
  }
  return alloc;
}

// ---------------------------------------------------------------------------
// KKT

double KktReport::max_budget() const {
  return budget.empty() ? 0.0 : *std::max_element(budget.begin(), budget.end());
}
double KktReport::max_utility() const {
  return utility.empty() ? 0.0 : *std::max_element(utility.begin(), utility.end());
}
double KktReport::max_complementary_slackness() const {
  return complementary_slackness.empty()
             ? 0.0
             : *std::max_element(complementary_slackness.begin(), complementary_slackness.end());
}

KktReport kkt_check(const MarketInstance& market, const EquilibriumSolution& solution,
                    double tolerance) {
  if (market.space() == ItemSpace::continuum) {
    return kkt_check(discretize_continuum(market, OracleOptions{}.continuum_cells), solution,
                     tolerance);
  }
  const std::size_t n = market.buyers();
  const std::size_t m = market.items();
  if (solution.beta.size() != n) throw DimensionMismatch("solution has wrong number of buyers");
  const auto& v = market.valuations();
  const auto budgets = market.budgets();
  const bool ql = market.mode() == Mode::quasilinear;
  const auto& beta = solution.beta;

  KktReport r;
  r.tolerance = tolerance;
  const auto alloc = recover_allocation_best_effort(market, beta, 1e-8);
  r.primal_recovered = alloc.exact;

  const auto expected = price_function(solution, market).finite_prices();
  for (std::size_t j = 0; j < m; ++j) {
    r.price_consistency = std::max(r.price_consistency, std::abs(alloc.prices[j] - expected[j]));
  }

  double clearance = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double allocated = 0.0;
    for (std::size_t i = 0; i < n; ++i) allocated += alloc.x(i, j);
    clearance += alloc.prices[j] * (market.supply()[j] - allocated);
  }
  r.clearance = std::abs(clearance);

  for (std::size_t i = 0; i < n; ++i) {
    double gross = 0.0;
    double off_winning = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      gross += v(i, j) * alloc.x(i, j);
      off_winning += (alloc.prices[j] - beta[i] * v(i, j)) * alloc.x(i, j);
    }
    r.winning_set = std::max(r.winning_set, off_winning);
    const double target = budgets[i] / beta[i];
    const bool capped = at_cap(market.mode(), beta[i]);
    const double spend_gap = alloc.spend[i] - budgets[i];
    r.budget.push_back(capped ? std::max(0.0, spend_gap) : std::abs(spend_gap));
    r.utility.push_back(capped ? std::max(0.0, gross - target) : std::abs(gross - target));
    if (ql) {
      const double slack = target - gross;  // delta*_i
      r.complementary_slackness.push_back(std::abs(slack * (1.0 - beta[i])));
      r.box = std::max(r.box, beta[i] - 1.0);
    }
  }

  r.pass = r.price_consistency < tolerance && r.max_budget() < tolerance &&
           r.max_utility() < tolerance && r.clearance < tolerance && r.winning_set < tolerance &&
           r.max_complementary_slackness() < tolerance && r.box < tolerance;
  return r;
}

// ---------------------------------------------------------------------------
// Dual averaging solver

namespace {

// Reads the component structure of the winner graph at `tie` and returns the
// multipliers that make every tie exact and every component budget-balanced
// (quasilinear components are capped at 1).
std::optional<std::vector<double>> snap_to_ties(const MarketInstance& market,
                                                std::span<const double> beta, double tie) {
  const std::size_t n = market.buyers();
  const std::size_t m = market.items();
  const auto& v = market.valuations();
  const auto s = market.supply();
  const auto p = item_prices(market, beta);

  std::vector<std::vector<std::size_t>> buyer_items(n), item_buyers(m);
  for (std::size_t j = 0; j < m; ++j) {
    if (!(p[j] > 0.0) || !(s[j] > 0.0)) continue;
    for (std::size_t i = 0; i < n; ++i) {
      if (v(i, j) > 0.0 && beta[i] * v(i, j) >= (1.0 - tie) * p[j]) {
        buyer_items[i].push_back(j);
        item_buyers[j].push_back(i);
      }
    }
  }

  constexpr double kConsistency = 1e-9;
  std::vector<double> rel(n, 0.0), q(m, 0.0);
  std::vector<bool> buyer_seen(n, false), item_seen(m, false);
  std::vector<double> out(n, 0.0);
  for (std::size_t root = 0; root < n; ++root) {
    if (buyer_seen[root]) continue;
    std::vector<std::size_t> comp_buyers{root}, comp_items;
    buyer_seen[root] = true;
    rel[root] = 1.0;
    for (std::size_t head = 0; head < comp_buyers.size(); ++head) {
      const std::size_t i = comp_buyers[head];
      for (std::size_t j : buyer_items[i]) {
        const double price = rel[i] * v(i, j);
        if (item_seen[j]) {
          if (std::abs(q[j] - price) > kConsistency * q[j]) return std::nullopt;
          continue;
        }
        item_seen[j] = true;
        q[j] = price;
        comp_items.push_back(j);
        for (std::size_t k : item_buyers[j]) {
          const double r = price / v(k, j);
          if (buyer_seen[k]) {
            if (std::abs(rel[k] - r) > kConsistency * rel[k]) return std::nullopt;
            continue;
          }
          buyer_seen[k] = true;
          rel[k] = r;
          comp_buyers.push_back(k);
        }
      }
    }
    if (comp_items.empty()) {
      // A quasilinear buyer at the cap may win nothing and spend nothing.
      if (market.mode() != Mode::quasilinear) return std::nullopt;
      out[root] = 1.0;
      continue;
    }

    double budget = 0.0, money = 0.0;
    for (std::size_t i : comp_buyers) budget += market.budgets()[i];
    for (std::size_t j : comp_items) money += s[j] * q[j];
    double scale = budget / money;
    std::optional<std::size_t> capped;
    if (market.mode() == Mode::quasilinear) {
      std::size_t top = comp_buyers.front();
      for (std::size_t i : comp_buyers) {
        if (rel[i] > rel[top]) top = i;
      }
      if (scale * rel[top] > 1.0) {
        scale = 1.0 / rel[top];
        capped = top;
      }
    }
    for (std::size_t i : comp_buyers) {
      out[i] = scale * rel[i];
      if (market.mode() == Mode::quasilinear) out[i] = std::min(out[i], 1.0);
    }
    if (capped) out[*capped] = 1.0;
  }
  return out;
}

// Tie tolerances to try: geometric midpoints of the widest separations among
// the relative bid gaps below 1e-2, widest first, then a fixed ladder.
std::vector<double> tie_candidates(const MarketInstance& market, std::span<const double> beta) {
  const std::size_t n = market.buyers();
  const auto& v = market.valuations();
  const auto p = item_prices(market, beta);
  constexpr double kFloor = 1e-15;
  std::vector<double> gaps;
  for (std::size_t j = 0; j < market.items(); ++j) {
    if (!(p[j] > 0.0)) continue;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = 1.0 - beta[i] * v(i, j) / p[j];
      if (v(i, j) > 0.0 && g < 1e-2) gaps.push_back(std::max(g, kFloor));
    }
  }
  gaps.push_back(1e-2);
  std::sort(gaps.begin(), gaps.end());
  std::vector<std::pair<double, double>> splits;  // (ratio, midpoint)
  for (std::size_t k = 0; k + 1 < gaps.size(); ++k) {
    const double ratio = gaps[k + 1] / gaps[k];
    if (ratio > 1.5) splits.emplace_back(ratio, std::sqrt(gaps[k] * gaps[k + 1]));
  }
  std::sort(splits.begin(), splits.end(), std::greater<>());
  std::vector<double> out;
  for (std::size_t k = 0; k < std::min<std::size_t>(splits.size(), 8); ++k) {
    out.push_back(splits[k].second);
  }
  for (double tie : {1e-10, 1e-8, 1e-6, 1e-4, 1e-2}) out.push_back(tie);
  return out;
}

std::optional<std::pair<std::vector<double>, double>> try_polish(const MarketInstance& market,
                                                                 std::span<const double> beta) {
  for (double tie : tie_candidates(market, beta)) {
    auto candidate = snap_to_ties(market, beta, tie);
    if (!candidate) continue;
    const auto report = kkt_check(market, make_solution(market, *candidate), 1e-9);
    if (report.pass) return std::make_pair(std::move(*candidate), tie);
  }
  return std::nullopt;
}

EquilibriumSolution solve_dual(const MarketInstance& market, const OracleOptions& options) {
  require_finite(market, "dual solver");
  if (!(options.delta0 > 0.0)) throw Error("delta0 must be positive");
  const std::size_t n = market.buyers();
  const std::size_t m = market.items();
  const auto& v = market.valuations();
  const auto s = market.supply();
  const auto budgets = market.budgets();
  const auto [lo, hi] = dual_box(market, options.delta0);

  std::vector<double> beta(n);
  for (std::size_t i = 0; i < n; ++i) {
    beta[i] = market.mode() == Mode::linear ? (budgets[i] + 1.0) / 2.0 : (lo[i] + 1.0) / 2.0;
    beta[i] = std::clamp(beta[i], lo[i], hi[i]);
  }
  std::vector<double> avg(n, 0.0), grad(n, 0.0);

  std::size_t next_polish = 8;
  bool converged = false;
  std::size_t k = 0;
  double delta = std::numeric_limits<double>::infinity();
  // Largest step since the last doubling checkpoint; a single small step can
  // just mean every multiplier is clamped for a while.
  double window_delta = 0.0;
  while (k < options.max_iters) {
    ++k;
    // Exact expected subgradient: each item goes wholly to its lowest-index
    // highest bidder.
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      std::size_t winner = 0;
      double best = beta[0] * v(0, j);
      for (std::size_t i = 1; i < n; ++i) {
        const double bid = beta[i] * v(i, j);
        if (bid > best) {
          best = bid;
          winner = i;
        }
      }
      grad[winner] += s[j] * v(winner, j);
    }
    const double w_old = static_cast<double>(k - 1) / static_cast<double>(k);
    const double w_new = 1.0 / static_cast<double>(k);
    delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      avg[i] = w_old * avg[i] + w_new * grad[i];
      const double target =
          avg[i] > 0.0 ? budgets[i] / avg[i] : std::numeric_limits<double>::infinity();
      const double next = std::clamp(target, lo[i], hi[i]);
      delta = std::max(delta, std::abs(next - beta[i]));
      beta[i] = next;
    }
    window_delta = std::max(window_delta, delta);
    if (k == next_polish) {
      next_polish *= 2;
      if (options.polish) {
        if (auto polished = try_polish(market, beta)) {
          auto sol = make_solution(market, std::move(polished->first));
          sol.diagnostics.iterations = k;
          sol.diagnostics.final_delta = delta;
          sol.diagnostics.polished = true;
          sol.diagnostics.tie_tolerance = polished->second;
          return sol;
        }
      }
      if (window_delta < options.tolerance) {
        converged = true;
        break;
      }
      window_delta = 0.0;
    }
  }
  if (options.polish) {
    if (auto polished = try_polish(market, beta)) {
      auto sol = make_solution(market, std::move(polished->first));
      sol.diagnostics.iterations = k;
      sol.diagnostics.final_delta = delta;
      sol.diagnostics.polished = true;
      sol.diagnostics.tie_tolerance = polished->second;
      return sol;
    }
  }
  if (!converged) throw NoConvergence(k, delta);
  auto sol = make_solution(market, std::move(beta));
  sol.diagnostics.iterations = k;
  sol.diagnostics.final_delta = delta;
  return sol;
}

}  // namespace

EquilibriumSolution solve_linear_dual(const MarketInstance& market, const OracleOptions& options) {
  if (market.mode() != Mode::linear) throw ModeMismatch("solve_linear_dual on a quasilinear market");
  return solve_dual(market, options);
}

EquilibriumSolution solve_quasilinear_dual(const MarketInstance& market,
                                           const OracleOptions& options) {
  if (market.mode() != Mode::quasilinear) {
    throw ModeMismatch("solve_quasilinear_dual on a linear market");
  }
  return solve_dual(market, options);
}

EquilibriumSolution solve_equilibrium(const MarketInstance& market, const OracleOptions& options) {
  if (market.space() == ItemSpace::continuum) {
    const auto finite = discretize_continuum(market, options.continuum_cells);
    return solve_equilibrium(finite, options);
  }
  return market.mode() == Mode::linear ? solve_linear_dual(market, options)
                                       : solve_quasilinear_dual(market, options);
}

// ---------------------------------------------------------------------------
// Grid oracle

namespace {

// Exact minimizer over x in [lo, hi] of
//   sum_j s_j max(a_j, x w_j) - b log x,
// a convex function whose derivative is piecewise b-hyperbolic.
double minimize_last_coordinate(std::span<const double> a, std::span<const double> w,
                                std::span<const double> s, double b, double lo, double hi) {
  std::vector<std::pair<double, double>> kinks;  // (breakpoint, slope gained past it)
  double slope = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (!(w[j] > 0.0) || !(s[j] > 0.0)) continue;
    const double at = a[j] / w[j];
    if (at <= 0.0) {
      slope += s[j] * w[j];
    } else {
      kinks.push_back({at, s[j] * w[j]});
    }
  }
  std::sort(kinks.begin(), kinks.end());
  double x = std::numeric_limits<double>::infinity();
  double left = 0.0;
  for (std::size_t k = 0;; ++k) {
    const double right = k < kinks.size() ? kinks[k].first : std::numeric_limits<double>::infinity();
    if (slope > 0.0) {
      const double stationary = b / slope;
      if (stationary <= right) {
        x = std::max(stationary, left);
        break;
      }
    }
    if (k == kinks.size()) break;
    slope += kinks[k].second;
    left = right;
  }
  return std::clamp(x, lo, hi);
}

// Minimizer of a convex function on [lo, hi] to within 1e-13 of the interval.
template <typename F>
double golden_section(F&& f, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  while (hi - lo > 1e-13) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - r * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + r * (hi - lo);
      f2 = f(x2);
    }
  }
  // The ends are candidates too: the minimizer may sit on the box boundary.
  double best = 0.5 * (lo + hi), fb = f(best);
  for (double e : {lo, hi}) {
    const double fe = f(e);
    if (fe < fb) {
      fb = fe;
      best = e;
    }
  }
  return best;
}

}  // namespace

EquilibriumSolution brute_force_grid(const MarketInstance& market, double resolution,
                                     double delta0) {
  require_finite(market, "brute_force_grid");
  const std::size_t n = market.buyers();
  if (n > 3) throw TooLarge("brute_force_grid supports at most 3 buyers");
  if (!(resolution > 0.0)) throw Error("grid resolution must be positive");
  const std::size_t m = market.items();
  const auto& v = market.valuations();
  const auto s = market.supply();
  const auto budgets = market.budgets();
  const auto [lo, hi] = dual_box(market, delta0);
  const std::size_t last = n - 1;

  std::vector<double> a(m), w(m), beta(n);
  // F with beta[0..k) fixed and the trailing coordinates minimized: the last
  // one exactly, any middle one by golden section.
  auto reduced = [&](auto&& self, std::size_t k) -> double {
    if (k == last) {
      std::fill(a.begin(), a.end(), 0.0);
      for (std::size_t i = 0; i < last; ++i) {
        for (std::size_t j = 0; j < m; ++j) a[j] = std::max(a[j], beta[i] * v(i, j));
      }
      for (std::size_t j = 0; j < m; ++j) w[j] = v(last, j);
      beta[last] = minimize_last_coordinate(a, w, s, budgets[last], lo[last], hi[last]);
      return dual_objective(market, beta);
    }
    auto at = [&](double x) {
      beta[k] = x;
      return self(self, k + 1);
    };
    const double x = golden_section(at, lo[k], hi[k]);
    return at(x);
  };

  double best_value = std::numeric_limits<double>::infinity();
  if (last == 0) {
    best_value = reduced(reduced, 0);
  } else {
    // Exhaustive scan of the first coordinate at `resolution`; the reduced
    // objective is convex, so its minimizer lies within one step of the best
    // grid point, where a golden-section search finishes the job.
    const auto steps = static_cast<std::size_t>(std::floor((hi[0] - lo[0]) / resolution));
    double best = lo[0];
    for (std::size_t k = 0; k <= steps + 1; ++k) {
      const double x = std::min(lo[0] + static_cast<double>(k) * resolution, hi[0]);
      beta[0] = x;
      const double f = reduced(reduced, 1);
      if (f < best_value) {
        best_value = f;
        best = x;
      }
    }
    auto at = [&](double x) {
      beta[0] = x;
      return reduced(reduced, 1);
    };
    const double x = golden_section(at, std::max(lo[0], best - resolution),
                                    std::min(hi[0], best + resolution));
    const double fx = at(x);
    best_value = fx <= best_value ? fx : at(best);
  }
  auto sol = make_solution(market, beta);
  sol.diagnostics.objective = best_value;
  return sol;
}

MarketInstance discretize_continuum(const MarketInstance& market, std::size_t cells) {
  if (market.space() != ItemSpace::continuum) throw Error("market is already finite");
  if (cells == 0) throw Error("discretization needs at least one cell");
  const std::size_t n = market.buyers();
  DenseMatrix v(n, cells);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& f = market.linear_forms()[i];
    for (std::size_t j = 0; j < cells; ++j) {
      const double mid = (static_cast<double>(j) + 0.5) / static_cast<double>(cells);
      v(i, j) = f(mid);
    }
  }
  std::vector<double> budgets(market.budgets().begin(), market.budgets().end());
  return MarketInstance::finite(std::move(budgets), std::move(v),
                                std::vector<double>(cells, 1.0 / static_cast<double>(cells)),
                                market.mode());
}

}  // namespace pace
