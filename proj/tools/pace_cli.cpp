#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pace/errors.hpp"
#include "pace/experiment.hpp"
#include "pace/oracle.hpp"

namespace fs = std::filesystem;
using namespace pace;

namespace {

struct MarketArgs {
  std::string market;
  std::string budgets;
  std::string supply;
  std::string mode = "linear";

  void attach(CLI::App* cmd, bool required = true) {
    auto* opt = cmd->add_option("--market", market, "valuation CSV (header \"c,d\" for a continuum)");
    if (required) opt->required();
    cmd->add_option("--budgets", budgets, "budget file, one value per line (default 1/n)");
    cmd->add_option("--supply", supply, "supply file, one value per line (default 1/m)");
    cmd->add_option("--mode", mode, "linear or ql")->check(CLI::IsMember({"linear", "ql", "quasilinear"}));
  }

  MarketInstance load() const {
    auto opt = [](const std::string& s) -> std::optional<fs::path> {
      if (s.empty()) return std::nullopt;
      return fs::path(s);
    };
    return ingest_csv_market(market, opt(budgets), opt(supply), parse_mode(mode));
  }
};

nlohmann::ordered_json kkt_json(const KktReport& r) {
  nlohmann::ordered_json j;
  j["pass"] = r.pass;
  j["tolerance"] = r.tolerance;
  j["primal_recovered"] = r.primal_recovered;
  j["price_consistency"] = r.price_consistency;
  j["budget"] = r.max_budget();
  j["utility"] = r.max_utility();
  j["clearance"] = r.clearance;
  j["winning_set"] = r.winning_set;
  j["complementary_slackness"] = r.max_complementary_slackness();
  j["box"] = r.box;
  return j;
}

std::vector<std::uint64_t> seed_list(std::size_t count, std::uint64_t base) {
  std::vector<std::uint64_t> seeds;
  for (std::size_t k = 0; k < count; ++k) seeds.push_back(base + k);
  return seeds;
}

// Reads n and M back from a raw adversarial valuation file (rows scaled by
// normalization keep the ratio M : 1).
std::pair<std::size_t, double> adversarial_shape(const MarketInstance& market) {
  const std::size_t n = market.buyers();
  if (market.space() != ItemSpace::finite || market.items() != n + 1) {
    throw InvalidMarket("adversarial arrivals need the n x (n+1) adversarial instance");
  }
  const auto& v = market.valuations();
  const double one = v(0, 0);
  double big = 0.0;
  for (std::size_t j = 1; j <= n; ++j) big = std::max(big, v(0, j));
  return {n, big / one};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online Fisher-market pacing dynamics, equilibrium oracle and metrics"};
  app.require_subcommand(1);

  // solve
  auto* solve = app.add_subcommand("solve", "compute the static equilibrium");
  MarketArgs solve_market;
  solve_market.attach(solve);
  std::string solve_out;
  double solve_delta0 = 0.05;
  std::size_t cells = 10'000;
  solve->add_option("--out", solve_out, "equilibrium JSON path (stdout when omitted)");
  solve->add_option("--delta0", solve_delta0, "box slack")->check(CLI::PositiveNumber);
  solve->add_option("--cells", cells, "cells used to discretize a continuum")->check(CLI::PositiveNumber);

  // run
  auto* runc = app.add_subcommand("run", "simulate the pacing dynamics over several seeds");
  MarketArgs run_market;
  run_market.attach(runc, false);
  std::size_t epochs = 100, seeds = 10, jobs = 1, horizon = 0, adv_n = 4;
  std::uint64_t seed_base = 1;
  double run_delta0 = 0.05, adv_big = 0.0;
  std::string arrivals = "iid", out_dir;
  bool no_regret = false;
  runc->add_option("--epochs", epochs, "horizon in epochs of n steps");
  runc->add_option("--horizon", horizon, "absolute horizon T (overrides --epochs)");
  runc->add_option("--seeds", seeds, "number of seeds")->check(CLI::PositiveNumber);
  runc->add_option("--seed-base", seed_base, "first seed");
  runc->add_option("--delta0", run_delta0, "box slack")->check(CLI::PositiveNumber);
  runc->add_option("--arrivals", arrivals, "iid, adversarial, or file:PATH");
  runc->add_option("--out-dir", out_dir, "directory for traces")->required();
  runc->add_option("--jobs", jobs, "parallel seeds (PACE_JOBS overrides)");
  runc->add_option("--n", adv_n, "buyers of the adversarial instance when no market is given");
  runc->add_option("--big", adv_big, "valuation M of the adversarial instance (default n + 1)");
  runc->add_flag("--no-regret", no_regret, "skip hindsight ledgers and regret");

  // synth
  auto* synth = app.add_subcommand("synth", "write a synthetic market");
  std::string kind, synth_out, synth_budgets, synth_supply, synth_mode = "linear";
  std::size_t sn = 10, sm = 20;
  std::uint64_t sseed = 1;
  synth->add_option("--kind", kind,
                    "uniform-random-finite, infdim-linear, complementary, identical, "
                    "adversarial-appendix")
      ->required();
  synth->add_option("--n", sn, "buyers")->check(CLI::PositiveNumber);
  synth->add_option("--m", sm, "items");
  synth->add_option("--seed", sseed, "generator seed");
  synth->add_option("--mode", synth_mode, "linear or ql")->check(CLI::IsMember({"linear", "ql", "quasilinear"}));
  synth->add_option("--out", synth_out, "valuation CSV path")->required();
  synth->add_option("--budgets-out", synth_budgets, "budget file path");
  synth->add_option("--supply-out", synth_supply, "supply file path");

  // verify
  auto* verify = app.add_subcommand("verify", "KKT report for an equilibrium file");
  MarketArgs verify_market;
  verify_market.attach(verify);
  std::string eq_path;
  double tolerance = 1e-9;
  verify->add_option("--eq", eq_path, "equilibrium JSON")->required();
  verify->add_option("--tolerance", tolerance, "residual tolerance");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "final errors across box slacks delta0");
  MarketArgs sweep_market;
  sweep_market.attach(sweep);
  std::vector<double> deltas{0.01, 0.05, 0.1, 0.2};
  std::size_t sweep_epochs = 100, sweep_seeds = 10;
  std::string sweep_out;
  sweep->add_option("--deltas", deltas, "delta0 values")->delimiter(',');
  sweep->add_option("--epochs", sweep_epochs, "horizon in epochs");
  sweep->add_option("--seeds", sweep_seeds, "number of seeds")->check(CLI::PositiveNumber);
  sweep->add_option("--jobs", jobs, "parallel seeds (PACE_JOBS overrides)");
  sweep->add_option("--out", sweep_out, "CSV path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve) {
      const auto market = solve_market.load();
      OracleOptions options;
      options.delta0 = solve_delta0;
      options.continuum_cells = cells;
      const auto sol = solve_equilibrium(market, options);
      const auto finite =
          market.space() == ItemSpace::finite ? market : discretize_continuum(market, cells);
      if (solve_out.empty()) {
        std::cout << equilibrium_json(sol, finite);
      } else {
        write_equilibrium_json(sol, finite, solve_out);
      }
      return 0;
    }

    if (*runc) {
      if (arrivals == "adversarial") {
        std::size_t n = adv_n;
        double big = adv_big > 0.0 ? adv_big : static_cast<double>(n + 1);
        if (!run_market.market.empty()) std::tie(n, big) = adversarial_shape(run_market.load());
        const std::size_t t = horizon ? horizon : epochs * n;
        const auto s = run_adversarial(n, big, t, run_delta0);
        nlohmann::ordered_json j;
        j["buyers"] = s.buyers;
        j["horizon"] = s.horizon;
        j["big"] = s.big;
        j["targeted_buyer"] = s.targeted_buyer;
        j["targeted_item"] = s.targeted_item;
        j["realized_utility"] = s.realized_utility;
        j["threshold"] = s.threshold;
        j["hindsight_utility"] = s.hindsight_utility;
        j["closed_form_hindsight"] = s.closed_form_hindsight;
        j["ratio"] = s.realized_utility / s.closed_form_hindsight;
        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "adversary.json") << j.dump(2) << '\n';
        std::cout << j.dump(2) << '\n';
        return 0;
      }
      if (run_market.market.empty()) throw Error("--market is required for these arrivals");
      const auto market = run_market.load();
      ExperimentConfig config;
      config.delta0 = run_delta0;
      config.epochs = epochs;
      if (horizon) config.horizon = horizon;
      config.seeds = seed_list(seeds, seed_base);
      config.out_dir = fs::path(out_dir);
      config.track_regret = !no_regret;
      config.jobs = resolve_jobs(jobs);
      if (arrivals == "iid") {
        config.arrivals = ArrivalKind::iid;
      } else if (arrivals.rfind("file:", 0) == 0) {
        config.arrivals = ArrivalKind::replay;
        config.replay_path = arrivals.substr(5);
      } else {
        throw Error("unknown arrivals '" + arrivals + "'");
      }
      const auto result = run_experiment(market, config);
      const auto& last = result.aggregate.back();
      std::cout << "t=" << last.t << " beta_avg=" << format_number(last.mean[0])
                << " utility_avg=" << format_number(last.mean[2])
                << " spend_avg=" << format_number(last.mean[4]) << '\n';
      return 0;
    }

    if (*synth) {
      const auto market = generate_synthetic(parse_synth_kind(kind), sn, sm, sseed, parse_mode(synth_mode));
      auto opt = [](const std::string& s) -> std::optional<fs::path> {
        if (s.empty()) return std::nullopt;
        return fs::path(s);
      };
      write_market_csv(market, synth_out, opt(synth_budgets), opt(synth_supply));
      return 0;
    }

    if (*verify) {
      const auto market = verify_market.load();
      const auto stored = read_equilibrium_json(eq_path);
      if (stored.mode != market.mode()) throw ModeMismatch("equilibrium file mode differs from --mode");
      if (stored.beta.size() != market.buyers()) {
        throw DimensionMismatch("equilibrium file has the wrong number of buyers");
      }
      const auto report = kkt_check(market, make_solution(market, stored.beta), tolerance);
      std::cout << kkt_json(report).dump(2) << '\n';
      return report.pass ? 0 : 2;
    }

    if (*sweep) {
      const auto market = sweep_market.load();
      std::ostringstream csv;
      csv << "delta0,t,beta_avg_mean,beta_avg_stderr,utility_avg_mean,utility_avg_stderr,"
             "spend_avg_mean,spend_avg_stderr\n";
      for (double d : deltas) {
        ExperimentConfig config;
        config.delta0 = d;
        config.epochs = sweep_epochs;
        config.seeds = seed_list(sweep_seeds, 1);
        config.track_regret = false;
        config.check_inequalities = false;
        config.jobs = resolve_jobs(jobs);
        const auto result = run_experiment(market, config);
        const auto& last = result.aggregate.back();
        csv << format_number(d) << ',' << last.t;
        for (std::size_t c : {0, 2, 4}) {
          csv << ',' << format_number(last.mean[c]) << ',' << format_number(last.stderr_[c]);
        }
        csv << '\n';
      }
      if (sweep_out.empty()) {
        std::cout << csv.str();
      } else {
        std::ofstream(sweep_out) << csv.str();
      }
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
