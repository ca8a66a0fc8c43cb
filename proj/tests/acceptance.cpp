// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pace/engine.hpp"
#include "pace/errors.hpp"
#include "pace/experiment.hpp"
#include "pace/item_source.hpp"
#include "pace/metrics.hpp"
#include "pace/oracle.hpp"
#include "support.hpp"

using namespace pace;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

std::vector<std::uint64_t> seeds_1_to(std::size_t k) {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 1; i <= k; ++i) s.push_back(i);
  return s;
}

const ErrorTraceRow& row_at(const SeedResult& s, std::size_t t) {
  for (const auto& r : s.rows) {
    if (r.t == t) return r;
  }
  throw Error("no checkpoint at t = " + std::to_string(t));
}

// Inequality bookkeeping pooled over every simulated linear run.
struct Pool {
  std::size_t runs = 0;
  InequalityStats total;

  void add(const std::vector<SeedResult>& seeds) {
    for (const auto& s : seeds) {
      const auto& q = s.inequalities;
      ++runs;
      total.checks += q.checks;
      total.regret_violations += q.regret_violations;
      total.envy_violations += q.envy_violations;
      total.eta_violations += q.eta_violations;
      total.envy_violations_negative_spread += q.envy_violations_negative_spread;
      total.envy_chain_violations += q.envy_chain_violations;
    }
  }
};

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
std::set<int> failed;
std::vector<std::pair<int, std::string>> lines;

// Runs one criterion; lines are printed in criterion order at the end because
// the inequality criterion pools runs made by the others.
void report(int id, const char* name, const std::function<Outcome()>& body) {
  const auto start = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  if (!out.pass) {
    ++failures;
    failed.insert(id);
  }
  char head[64];
  std::snprintf(head, sizeof head, "[%s] %2d ", out.pass ? "PASS" : "FAIL", id);
  char tail[32];
  std::snprintf(tail, sizeof tail, " (%.1f s)", seconds_since(start));
  lines.emplace_back(id, head + std::string(name) + ": " + out.detail + tail);
  std::fprintf(stderr, "criterion %d done\n", id);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

}  // namespace

// --expect-fail=ID[,ID...] names criteria known to fail; the exit status is
// then zero only if exactly those fail. The report itself is unchanged.
int main(int argc, char** argv) {
  std::set<int> expected;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    const std::string flag = "--expect-fail=";
    if (arg.rfind(flag, 0) != 0) {
      std::fprintf(stderr, "unknown argument %s\n", arg.c_str());
      return 2;
    }
    std::stringstream ids(arg.substr(flag.size()));
    for (std::string id; std::getline(ids, id, ',');) expected.insert(std::stoi(id));
  }
  Pool pool;

  report(1, "oracle agrees with grid on 3x4 markets", [] {
    const auto start = Clock::now();
    std::mt19937_64 rng(101);
    double worst_gap = 0.0;
    std::size_t kkt_pass = 0;
    for (int k = 0; k < 25; ++k) {
      const auto m = testing_support::to_market(oracle::random_linear_market(3, 4, rng));
      const auto sol = solve_linear_dual(m);
      const auto grid = brute_force_grid(m, 1e-3);
      worst_gap = std::max(worst_gap, max_abs_diff(sol.beta, grid.beta));
      kkt_pass += kkt_check(m, sol, 1e-6).pass;
    }
    const double elapsed = seconds_since(start);
    return Outcome{worst_gap <= 2e-3 && kkt_pass == 25 && elapsed < 30.0,
                   "max |beta_da - beta_grid| = " + fmt("%.2e", worst_gap) +
                       ", KKT " + std::to_string(kkt_pass) + "/25"};
  });

  report(2, "equilibrium lies within [B, 1] on 100 markets", [] {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<std::size_t> nd(1, 20), md(1, 50);
    double worst = -1.0;
    for (int k = 0; k < 100; ++k) {
      const std::size_t n = nd(rng), m = md(rng);
      const auto market = testing_support::to_market(oracle::random_linear_market(n, m, rng));
      const auto sol = solve_linear_dual(market);
      for (std::size_t i = 0; i < n; ++i) {
        const double b = market.budgets()[i];
        worst = std::max({worst, b - sol.beta[i], sol.beta[i] - 1.0, b - sol.utility[i]});
      }
    }
    return Outcome{worst <= 1e-8, "largest bound excess = " + fmt("%.2e", worst)};
  });

  // Criteria 3, 4 and 6 share these runs.
  const auto big = generate_synthetic(SynthKind::uniform_random_finite, 50, 100, 2024);
  ExperimentResult big_runs;
  double big_elapsed = 0.0;
  {
    const auto start = Clock::now();
    ExperimentConfig config;
    config.epochs = 100;
    config.seeds = seeds_1_to(10);
    big_runs = run_experiment(big, config);
    big_elapsed = seconds_since(start);
    pool.add(big_runs.seeds);
  }

  report(3, "5% by epoch 10 and 2% by epoch 100 (n=50, m=100)", [&] {
    std::size_t early = 0, late = 0;
    double worst_early = 0.0, worst_late = 0.0;
    for (const auto& s : big_runs.seeds) {
      const auto& e10 = row_at(s, 10 * 50);
      const auto& e100 = row_at(s, 100 * 50);
      const double a = std::max(e10.beta.avg, e10.utility.avg);
      const double b = std::max(e100.beta.avg, e100.utility.avg);
      early += a < 0.05;
      late += b < 0.02;
      worst_early = std::max(worst_early, a);
      worst_late = std::max(worst_late, b);
    }
    return Outcome{early >= 8 && late >= 8 && big_elapsed < 120.0,
                   std::to_string(early) + "/10 seeds below 5% at epoch 10 (worst " +
                       fmt("%.4f", worst_early) + "), " + std::to_string(late) +
                       "/10 below 2% at epoch 100 (worst " + fmt("%.4f", worst_late) +
                       "), runs took " + fmt("%.1f s", big_elapsed)};
  });

  report(4, "spend lags utility at epoch 10", [&] {
    std::size_t lag = 0;
    double spend = 0.0, utility = 0.0;
    for (const auto& s : big_runs.seeds) {
      const auto& e10 = row_at(s, 10 * 50);
      lag += e10.spend.avg > e10.utility.avg;
      spend += e10.spend.avg / 10.0;
      utility += e10.utility.avg / 10.0;
    }
    return Outcome{lag >= 8, std::to_string(lag) + "/10 seeds; mean spend error " +
                                 fmt("%.4f", spend) + " vs utility error " + fmt("%.4f", utility)};
  });

  report(5, "beta mean-square error decays under its envelope (n=10, m=20)", [&] {
    const auto start = Clock::now();
    const auto market = generate_synthetic(SynthKind::uniform_random_finite, 10, 20, 5);
    ExperimentConfig config;
    config.horizon = 2000;
    config.seeds = seeds_1_to(10);
    const auto r = run_experiment(market, config);
    pool.add(r.seeds);
    const auto constants = theoretical_constants(market, r.solution, config.delta0);
    const std::size_t col = 6;  // beta_sq_error
    double at200 = 0.0, at2000 = 0.0, worst_ratio = 0.0;
    for (const auto& a : r.aggregate) {
      // beta_sq_error holds ||beta^{t+1} - beta*||^2, so it meets the envelope at t + 1.
      const double rhs = bound_envelopes(constants, a.t + 1).beta;
      worst_ratio = std::max(worst_ratio, a.mean[col] / rhs);
      if (a.t == 200) at200 = a.mean[col];
      if (a.t == 2000) at2000 = a.mean[col];
    }
    const double elapsed = seconds_since(start);
    return Outcome{at2000 <= 0.25 * at200 && worst_ratio <= 1.0 && elapsed < 60.0,
                   "E||beta-beta*||^2 ratio t=2000/t=200 = " + fmt("%.3f", at2000 / at200) +
                       ", max error/envelope = " + fmt("%.2e", worst_ratio)};
  });

  report(7, "step invariants over 1e5 randomized steps", [] {
    std::size_t steps = 0, bad = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      std::mt19937_64 rng(700 + seed);
      const auto m = testing_support::to_market(
          oracle::random_linear_market(2 + seed % 7, 2 + (3 * seed) % 11, rng));
      PaceEngine engine(m, PaceConfig{});
      IidFiniteStream stream(seed, m.supply());
      const std::size_t n = m.buyers();
      std::vector<double> prev_beta = engine.state().beta;
      std::vector<double> prev_own(n, 0.0);
      for (int k = 0; k < 10'000; ++k, ++steps) {
        const auto& obs = engine.step(stream.take());
        const auto& s = engine.state();
        bool ok = true;
        std::size_t winners = 0;
        for (std::size_t i = 0; i < n; ++i) {
          ok &= s.beta[i] >= engine.lower_bounds()[i] && s.beta[i] <= engine.upper_bounds()[i];
          winners += i == obs.winner;
          if (i != obs.winner) ok &= s.beta[i] >= prev_beta[i] && s.cross_utility(i, i) == prev_own[i];
          ok &= std::abs(static_cast<double>(s.t) * s.avg_gross[i] - s.cross_utility(i, i)) <=
                1e-9 * static_cast<double>(s.t);
          prev_own[i] = s.cross_utility(i, i);
        }
        ok &= winners == 1 && obs.price == obs.bids[obs.winner];
        for (std::size_t i = 0; i < n; ++i) {
          ok &= obs.bids[i] < obs.price || (obs.bids[i] == obs.price && i >= obs.winner);
        }
        bad += !ok;
        prev_beta = s.beta;
      }
    }
    return Outcome{bad == 0 && steps >= 100'000,
                   std::to_string(bad) + " violating steps out of " + std::to_string(steps)};
  });

  report(8, "greedy hindsight equals LP enumeration on 200 ledgers", [] {
    std::mt19937_64 rng(808);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0, grid_excess = 0.0;
    for (int k = 0; k < 200; ++k) {
      const std::size_t t = 1 + k % 8;
      oracle::Ledger l;
      std::vector<HindsightEntry> entries;
      for (std::size_t j = 0; j < t; ++j) {
        const double v = u(rng) < 0.1 ? 0.0 : u(rng);
        const double p = u(rng) < 0.1 ? 0.0 : 0.05 + u(rng);
        l.value.push_back(v);
        l.price.push_back(p);
        entries.push_back({v, p});
      }
      const double budget = 0.6 * u(rng);
      const double greedy = hindsight_utility(entries, budget, t);
      worst = std::max(worst, std::abs(greedy - oracle::knapsack_by_vertices(l, budget, t, false)));
      if (t <= 3) {
        grid_excess = std::max(grid_excess, oracle::knapsack_by_grid(l, budget, t, false) - greedy);
      }
    }
    return Outcome{worst <= 1e-9 && grid_excess <= 1e-9,
                   "max |greedy - LP| = " + fmt("%.2e", worst) +
                       ", grid never beats greedy by more than " + fmt("%.2e", grid_excess)};
  });

  report(9, "quasilinear box, KKT and net-utility convergence", [] {
    std::mt19937_64 rng(909);
    std::size_t kkt_pass = 0;
    double worst_cs = 0.0;
    for (int k = 0; k < 25; ++k) {
      auto r = oracle::random_linear_market(2 + k % 5, 3 + k % 6, rng);
      for (std::size_t i = 0; i < r.v.size(); ++i) {
        for (auto& x : r.v[i]) x *= 0.3 + 0.4 * static_cast<double>(i);
      }
      const auto m = testing_support::to_market(r, Mode::quasilinear);
      const auto report = kkt_check(m, solve_quasilinear_dual(m), 1e-6);
      kkt_pass += report.pass;
      worst_cs = std::max(worst_cs, report.max_complementary_slackness());
    }

    const auto market =
        generate_synthetic(SynthKind::uniform_random_finite, 10, 20, 9, Mode::quasilinear);
    const auto sol = solve_quasilinear_dual(market);
    std::size_t box_bad = 0;
    double error = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      PaceConfig config;
      config.mode = Mode::quasilinear;
      PaceEngine engine(market, config);
      IidFiniteStream stream(seed, market.supply());
      for (int t = 0; t < 1000; ++t) {
        engine.step(stream.take());
        for (std::size_t i = 0; i < 10; ++i) {
          const double b = engine.state().beta[i];
          box_bad += b < market.ql_beta_min(i) || b > 1.0;
        }
      }
      MetricAccumulator acc(market, sol, config.delta0, CheckpointSchedule(10, 1000));
      error += acc.row_at(engine.state()).utility.avg / 10.0;
    }
    return Outcome{kkt_pass == 25 && worst_cs < 1e-6 && box_bad == 0 && error < 0.05,
                   "KKT " + std::to_string(kkt_pass) + "/25 (max |delta(1-beta)| " +
                       fmt("%.1e", worst_cs) + "), box violations " + std::to_string(box_bad) +
                       ", mean net-utility error at T=100n " + fmt("%.4f", error)};
  });

  report(10, "adversarial arrivals leave the target 1/n of hindsight", [] {
    const auto s = run_adversarial(4, 10.0, 4000);
    const bool ok = s.realized_utility <= 500.0 && s.closed_form_hindsight == 2000.0 &&
                    s.realized_utility * 4.0 <= s.closed_form_hindsight &&
                    std::abs(s.hindsight_utility - 2000.0) <= 1e-6;
    return Outcome{ok, "buyer " + std::to_string(s.targeted_buyer) + " realized " +
                           fmt("%g", s.realized_utility) + " <= 500, hindsight " +
                           fmt("%.6f", s.hindsight_utility) + " (closed form 2000)"};
  });

  report(11, "continuum market tracked through a 1e4-cell oracle", [&] {
    const auto market = generate_synthetic(SynthKind::infdim_linear, 5, 0, 11);
    OracleOptions coarse;
    coarse.continuum_cells = 10'000;
    OracleOptions fine = coarse;
    fine.continuum_cells = 20'000;
    const auto a = solve_equilibrium(market, coarse);
    const auto b = solve_equilibrium(market, fine);
    const double mesh = max_abs_diff(a.beta, b.beta);
    ExperimentConfig config;
    config.epochs = 100;
    config.seeds = seeds_1_to(10);
    config.oracle = coarse;
    const auto r = run_experiment(market, config);
    pool.add(r.seeds);
    const double error = r.aggregate.back().mean[0];
    return Outcome{mesh < 1e-3 && error < 0.05,
                   "mean beta error at T=100n " + fmt("%.4f", error) + ", mesh change " +
                       fmt("%.2e", mesh)};
  });

  report(6, "pathwise regret and envy inequalities", [&] {
    const auto& q = pool.total;
    const bool ok = q.regret_violations == 0 && q.envy_violations == 0 && q.eta_violations == 0;
    return Outcome{ok, std::to_string(pool.runs) + " runs, " + std::to_string(q.checks) +
                           " checkpoints; violations regret " +
                           std::to_string(q.regret_violations) + ", envy " +
                           std::to_string(q.envy_violations) + ", |eta| <= gamma " +
                           std::to_string(q.eta_violations) + "; per-k envy chain " +
                           std::to_string(q.envy_chain_violations)};
  });

  std::sort(lines.begin(), lines.end());
  for (const auto& [id, line] : lines) std::printf("%s\n", line.c_str());
  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  if (expected.empty()) return failures == 0 ? 0 : 1;
  std::string known;
  for (int id : expected) known += (known.empty() ? "" : ",") + std::to_string(id);
  const bool as_expected = failed == expected;
  std::printf("expected failures {%s}: %s\n", known.c_str(),
              as_expected ? "matched" : "NOT matched");
  return as_expected ? 0 : 1;
}
