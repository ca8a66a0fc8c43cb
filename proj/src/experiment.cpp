#include "pace/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pace/engine.hpp"
#include "pace/errors.hpp"
#include "pace/item_source.hpp"
#include "pace/random.hpp"

namespace pace {

namespace {

constexpr std::size_t kMaxRejections = 1000;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_double(const std::string& text) {
  double x = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last || first == last) return std::nullopt;
  return x;
}

std::vector<double> read_vector_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<double> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string field = trim(line);
    if (field.empty()) continue;
    const auto x = parse_double(field);
    if (!x) throw ParseError("expected a number in " + path.filename().string(), lineno, 1);
    out.push_back(*x);
  }
  return out;
}

}  // namespace

std::string_view to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::uniform_random_finite: return "uniform-random-finite";
    case SynthKind::infdim_linear: return "infdim-linear";
    case SynthKind::complementary: return "complementary";
    case SynthKind::identical: return "identical";
    case SynthKind::adversarial: return "adversarial-appendix";
  }
  return "unknown";
}

SynthKind parse_synth_kind(std::string_view text) {
  if (text == "uniform-random-finite" || text == "uniform") return SynthKind::uniform_random_finite;
  if (text == "infdim-linear" || text == "infdim") return SynthKind::infdim_linear;
  if (text == "complementary") return SynthKind::complementary;
  if (text == "identical") return SynthKind::identical;
  if (text == "adversarial-appendix" || text == "adversarial") return SynthKind::adversarial;
  throw Error("unknown synthetic market kind '" + std::string(text) + "'");
}

MarketInstance generate_synthetic(SynthKind kind, std::size_t n, std::size_t m,
                                  std::uint64_t seed, Mode mode) {
  if (n == 0) throw InvalidMarket("market needs at least one buyer");
  const std::vector<double> budgets(n, 1.0 / static_cast<double>(n));
  switch (kind) {
    case SynthKind::uniform_random_finite: {
      if (m == 0) throw InvalidMarket("market needs at least one item");
      Rng rng(seed);
      DenseMatrix v(n, m);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) v(i, j) = uniform01(rng);
      }
      return normalize_market(budgets, v, std::vector<double>(m, 1.0), mode);
    }
    case SynthKind::infdim_linear: {
      Rng rng(seed);
      std::vector<LinearValuation> forms;
      std::size_t rejected = 0;
      while (forms.size() < n) {
        const double c = uniform(rng, -1.0, 1.0);
        const double d = 1.0 - c / 2.0;
        if (d < 0.0 || c + d < 0.0) {
          if (++rejected >= kMaxRejections) throw RejectionOverflow();
          continue;
        }
        rejected = 0;
        forms.push_back({c, d});
      }
      return MarketInstance::continuum(budgets, std::move(forms), mode);
    }
    case SynthKind::complementary: {
      DenseMatrix v(n, n);
      for (std::size_t i = 0; i < n; ++i) v(i, i) = static_cast<double>(n);
      return normalize_market(budgets, v, std::vector<double>(n, 1.0 / static_cast<double>(n)),
                              mode);
    }
    case SynthKind::identical: {
      if (m == 0) throw InvalidMarket("market needs at least one item");
      return normalize_market(budgets, DenseMatrix(n, m, 1.0),
                              std::vector<double>(m, 1.0 / static_cast<double>(m)), mode);
    }
    case SynthKind::adversarial:
      if (mode != Mode::linear) throw ModeMismatch("the adversarial instance is linear");
      return adversarial_market(n, static_cast<double>(n + 1));
  }
  throw Error("unknown synthetic market kind");
}

MarketInstance ingest_csv_market(const std::filesystem::path& valuations,
                                 const std::optional<std::filesystem::path>& budgets_path,
                                 const std::optional<std::filesystem::path>& supply_path,
                                 Mode mode) {
  std::ifstream in(valuations);
  if (!in) throw Error("cannot open " + valuations.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  bool continuum = false;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (first) {
      first = false;
      const bool numeric = !fields.empty() && parse_double(fields.front()).has_value();
      if (!numeric) {
        if (fields.size() == 2 && fields[0] == "c" && fields[1] == "d") continuum = true;
        continue;
      }
    }
    std::vector<double> row;
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const auto x = parse_double(fields[k]);
      if (!x) throw ParseError("malformed number '" + fields[k] + "'", lineno, k + 1);
      row.push_back(*x);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DimensionMismatch("row at line " + std::to_string(lineno) + " has " +
                              std::to_string(row.size()) + " fields, expected " +
                              std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no valuation rows", lineno == 0 ? 1 : lineno);
  const std::size_t n = rows.size();

  std::vector<double> budgets = budgets_path ? read_vector_file(*budgets_path)
                                             : std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (budgets.size() != n) {
    throw DimensionMismatch("budget file has " + std::to_string(budgets.size()) +
                            " entries for " + std::to_string(n) + " buyers");
  }

  if (continuum) {
    if (rows.front().size() != 2) throw DimensionMismatch("continuum rows need exactly c,d");
    if (supply_path) throw InvalidMarket("a continuum market takes no supply file");
    double total = 0.0;
    for (double b : budgets) total += b;
    if (!(total > 0.0)) throw ZeroBudget(0);
    for (std::size_t i = 0; i < n; ++i) {
      if (!(budgets[i] > 0.0)) throw ZeroBudget(i);
    }
    std::vector<LinearValuation> forms;
    for (const auto& r : rows) {
      LinearValuation f{r[0], r[1]};
      if (mode == Mode::linear && std::abs(f.integral() - 1.0) > kNormalizationTolerance &&
          f.integral() > 0.0) {
        const double scale = f.integral();
        f.slope /= scale;
        f.intercept /= scale;
      }
      forms.push_back(f);
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      for (double& b : budgets) b /= total;
      if (mode == Mode::quasilinear) {
        for (auto& f : forms) {
          f.slope /= total;
          f.intercept /= total;
        }
      }
    }
    return MarketInstance::continuum(std::move(budgets), std::move(forms), mode);
  }

  const std::size_t m = rows.front().size();
  std::vector<double> supply = supply_path ? read_vector_file(*supply_path)
                                           : std::vector<double>(m, 1.0 / static_cast<double>(m));
  if (supply.size() != m) {
    throw DimensionMismatch("supply file has " + std::to_string(supply.size()) +
                            " entries for " + std::to_string(m) + " items");
  }
  return normalize_market(budgets, DenseMatrix::from_rows(rows), supply, mode);
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 12);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

void write_market_csv(const MarketInstance& market, const std::filesystem::path& valuations,
                      const std::optional<std::filesystem::path>& budgets,
                      const std::optional<std::filesystem::path>& supply) {
  std::ofstream out(valuations);
  if (!out) throw Error("cannot write " + valuations.string());
  // Full precision here: the file is an input, not a trace.
  auto exact = [](double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
  };
  if (market.space() == ItemSpace::continuum) {
    out << "c,d\n";
    for (const auto& f : market.linear_forms()) out << exact(f.slope) << ',' << exact(f.intercept) << '\n';
  } else {
    const auto& v = market.valuations();
    for (std::size_t i = 0; i < v.rows(); ++i) {
      for (std::size_t j = 0; j < v.cols(); ++j) out << (j ? "," : "") << exact(v(i, j));
      out << '\n';
    }
  }
  if (budgets) {
    std::ofstream b(*budgets);
    if (!b) throw Error("cannot write " + budgets->string());
    for (double x : market.budgets()) b << exact(x) << '\n';
  }
  if (supply && market.space() == ItemSpace::finite) {
    std::ofstream s(*supply);
    if (!s) throw Error("cannot write " + supply->string());
    for (double x : market.supply()) s << exact(x) << '\n';
  }
}

std::size_t resolve_horizon(const ExperimentConfig& config, const MarketInstance& market) {
  const std::size_t t = config.horizon ? *config.horizon : config.epochs * market.buyers();
  if (t == 0) throw Error("horizon must be at least 1");
  return t;
}

const std::vector<std::string>& trace_columns() {
  static const std::vector<std::string> names{
      "beta_avg",      "beta_max",      "utility_avg",        "utility_max",
      "spend_avg",     "spend_max",     "beta_sq_error",      "regret_mean",
      "envy_positive_mean", "envy_max", "gamma",              "rhs_beta",
      "rhs_utility",   "rhs_spend"};
  return names;
}

std::vector<double> trace_values(const ErrorTraceRow& r) {
  return {r.beta.avg,    r.beta.max,         r.utility.avg,       r.utility.max,
          r.spend.avg,   r.spend.max,        r.beta_sq_error,     r.regret_mean,
          r.envy_positive_mean, r.envy_max,  r.gamma,             r.envelopes.beta,
          r.envelopes.utility,  r.envelopes.spend};
}

SeedResult run_seed(const MarketInstance& market, const EquilibriumSolution& solution,
                    const ExperimentConfig& config, std::uint64_t seed) {
  const std::size_t horizon = resolve_horizon(config, market);
  PaceConfig pace;
  pace.delta0 = config.delta0;
  pace.mode = market.mode();
  pace.horizon = horizon;
  pace.track_hindsight = config.track_regret;

  std::unique_ptr<ArrivalStream> stream;
  switch (config.arrivals) {
    case ArrivalKind::iid:
      if (market.space() == ItemSpace::finite) {
        stream = std::make_unique<IidFiniteStream>(seed, market.supply());
      } else {
        stream = std::make_unique<IidContinuumStream>(seed);
      }
      break;
    case ArrivalKind::replay:
      stream = std::make_unique<ReplayStream>(config.replay_path, market);
      break;
    case ArrivalKind::adversarial:
      throw Error("adversarial arrivals run through run_adversarial");
  }

  MetricAccumulator acc(market, solution, config.delta0,
                        CheckpointSchedule(market.buyers(), horizon), config.check_inequalities);
  StepObserver* observers[] = {&acc};
  const PaceState state = run(market, pace, *stream, observers);

  SeedResult out;
  out.seed = seed;
  out.rows = acc.rows();
  out.inequalities = acc.inequalities();
  out.final_beta = state.beta;
  out.final_utility = state.avg_net;
  out.final_spend = state.avg_spend;
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<SeedResult>& seeds) {
  std::map<std::size_t, std::vector<const ErrorTraceRow*>> by_t;
  for (const auto& s : seeds) {
    for (const auto& r : s.rows) by_t[r.t].push_back(&r);
  }
  std::vector<AggregateRow> out;
  const std::size_t width = trace_columns().size();
  for (const auto& [t, rows] : by_t) {
    AggregateRow a;
    a.t = t;
    a.epoch = rows.front()->epoch;
    a.mean.assign(width, 0.0);
    a.stderr_.assign(width, 0.0);
    const double k = static_cast<double>(rows.size());
    std::vector<std::vector<double>> values;
    for (const auto* r : rows) values.push_back(trace_values(*r));
    for (std::size_t c = 0; c < width; ++c) {
      double sum = 0.0;
      for (const auto& v : values) sum += v[c];
      const double mean = sum / k;
      a.mean[c] = mean;
      if (rows.size() > 1) {
        double ss = 0.0;
        for (const auto& v : values) ss += (v[c] - mean) * (v[c] - mean);
        a.stderr_[c] = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
      }
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::size_t resolve_jobs(std::size_t requested) {
  if (const char* env = std::getenv("PACE_JOBS")) {
    std::size_t v = 0;
    const std::string text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && ptr == text.data() + text.size() && v > 0) return v;
  }
  return std::max<std::size_t>(requested, 1);
}

std::string equilibrium_json(const EquilibriumSolution& solution, const MarketInstance& market) {
  nlohmann::ordered_json j;
  j["beta_star"] = solution.beta;
  j["u_star"] = solution.utility;
  if (solution.mode == Mode::quasilinear) j["u_qlme"] = solution.net_utility;
  if (market.space() == ItemSpace::finite) {
    j["p_star"] = PriceFunction(market, solution.beta).finite_prices();
  }
  j["mode"] = std::string(to_string(solution.mode));
  j["diagnostics"] = {{"iterations", solution.diagnostics.iterations},
                      {"final_delta", solution.diagnostics.final_delta},
                      {"objective", solution.diagnostics.objective},
                      {"polished", solution.diagnostics.polished},
                      {"tie_tolerance", solution.diagnostics.tie_tolerance}};
  return j.dump(2) + "\n";
}

void write_equilibrium_json(const EquilibriumSolution& solution, const MarketInstance& market,
                            const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << equilibrium_json(solution, market);
}

EquilibriumSolution read_equilibrium_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed equilibrium JSON: ") + e.what(), 1);
  }
  EquilibriumSolution s;
  try {
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.beta = j.at("beta_star").get<std::vector<double>>();
    s.utility = j.value("u_star", std::vector<double>{});
    s.net_utility = j.value("u_qlme", s.utility);
    if (j.contains("diagnostics")) {
      const auto& d = j["diagnostics"];
      s.diagnostics.iterations = d.value("iterations", std::size_t{0});
      s.diagnostics.final_delta = d.value("final_delta", 0.0);
      s.diagnostics.objective = d.value("objective", 0.0);
      s.diagnostics.polished = d.value("polished", false);
      s.diagnostics.tie_tolerance = d.value("tie_tolerance", 0.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("equilibrium JSON is missing fields: ") + e.what(), 1);
  }
  return s;
}

namespace {

void write_trace(const std::filesystem::path& path, const SeedResult& s) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "seed,t,epoch";
  for (const auto& c : trace_columns()) out << ',' << c;
  out << '\n';
  for (const auto& r : s.rows) {
    out << s.seed << ',' << r.t << ',' << format_number(r.epoch);
    for (double v : trace_values(r)) out << ',' << format_number(v);
    out << '\n';
  }
}

void write_aggregate(const std::filesystem::path& path, const std::vector<AggregateRow>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "seed,t,epoch";
  for (const auto& c : trace_columns()) out << ',' << c << "_mean," << c << "_stderr";
  out << '\n';
  for (const auto& r : rows) {
    out << "aggregate," << r.t << ',' << format_number(r.epoch);
    for (std::size_t c = 0; c < r.mean.size(); ++c) {
      out << ',' << format_number(r.mean[c]) << ',' << format_number(r.stderr_[c]);
    }
    out << '\n';
  }
}

void write_inequalities(const std::filesystem::path& path, const std::vector<SeedResult>& seeds) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "seed,checks,regret_violations,envy_violations,eta_violations,"
         "envy_violations_negative_spread,envy_chain_violations,regret_margin,envy_margin,"
         "eta_margin,envy_chain_margin\n";
  for (const auto& s : seeds) {
    const auto& q = s.inequalities;
    out << s.seed << ',' << q.checks << ',' << q.regret_violations << ',' << q.envy_violations
        << ',' << q.eta_violations << ',' << q.envy_violations_negative_spread << ','
        << q.envy_chain_violations << ',' << format_number(q.regret_margin) << ','
        << format_number(q.envy_margin) << ',' << format_number(q.eta_margin) << ','
        << format_number(q.envy_chain_margin) << '\n';
  }
}

}  // namespace

ExperimentResult run_experiment(const MarketInstance& market, const ExperimentConfig& config) {
  if (config.seeds.empty()) throw Error("experiment needs at least one seed");
  if (!(config.delta0 > 0.0)) throw Error("delta0 must be positive");
  if (config.arrivals == ArrivalKind::adversarial) {
    throw Error("adversarial arrivals run through run_adversarial");
  }
  ExperimentResult result;
  OracleOptions oracle = config.oracle;
  oracle.delta0 = config.delta0;
  result.solution = solve_equilibrium(market, oracle);

  const std::size_t count = config.seeds.size();
  result.seeds.resize(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < count; k = next++) {
      try {
        result.seeds[k] = run_seed(market, result.solution, config, config.seeds[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::min(std::max<std::size_t>(config.jobs, 1), count);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  std::string report;
  for (std::size_t k = 0; k < count; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      report += "seed " + std::to_string(config.seeds[k]) + ": " + e.what() + "\n";
    }
  }
  if (!report.empty()) throw Error("seed runs failed:\n" + report);

  result.aggregate = aggregate(result.seeds);

  if (config.out_dir) {
    std::filesystem::create_directories(*config.out_dir);
    for (const auto& s : result.seeds) {
      write_trace(*config.out_dir / ("trace_seed_" + std::to_string(s.seed) + ".csv"), s);
    }
    write_aggregate(*config.out_dir / "aggregate.csv", result.aggregate);
    write_inequalities(*config.out_dir / "inequalities.csv", result.seeds);
    if (market.space() == ItemSpace::finite) {
      write_equilibrium_json(result.solution, market, *config.out_dir / "equilibrium.json");
    } else {
      write_equilibrium_json(result.solution,
                             discretize_continuum(market, oracle.continuum_cells),
                             *config.out_dir / "equilibrium.json");
    }
  }
  return result;
}

AdversarialSummary run_adversarial(std::size_t buyers, double big, std::size_t horizon,
                                   double delta0) {
  const MarketInstance market = adversarial_market(buyers, big);
  AdversarialStream stream(buyers, horizon);
  PaceConfig config;
  config.delta0 = delta0;
  config.horizon = horizon;
  config.track_hindsight = false;
  const PaceState state = run(market, config, stream);

  AdversarialSummary s;
  s.buyers = buyers;
  s.horizon = horizon;
  s.big = big;
  s.targeted_buyer = stream.targeted_buyer().value();
  s.targeted_item = stream.targeted_item();
  s.realized_utility = state.cross_utility(s.targeted_buyer, s.targeted_buyer);
  s.threshold = static_cast<double>(horizon) / (2.0 * static_cast<double>(buyers));
  s.closed_form_hindsight = static_cast<double>(horizon) / 2.0;

  // Static equilibrium of the realized multiset: T/2 copies each of item 0
  // and the targeted item. Normalizing rescales buyer i's values by
  // c_i = <v_i, s>; raw utility is T c_i times the normalized one.
  const auto& v = market.valuations();
  DenseMatrix realized(buyers, 2);
  for (std::size_t i = 0; i < buyers; ++i) {
    realized(i, 0) = v(i, 0);
    realized(i, 1) = v(i, s.targeted_item);
  }
  const double half = static_cast<double>(horizon) / 2.0;
  const std::vector<double> supply{half, half};
  const MarketInstance hindsight =
      normalize_market(market.budgets(), realized, supply, Mode::linear);
  OracleOptions options;
  options.delta0 = delta0;
  const auto sol = solve_linear_dual(hindsight, options);
  const std::size_t i0 = s.targeted_buyer;
  const double c = 0.5 * (realized(i0, 0) + realized(i0, 1));
  s.hindsight_utility = static_cast<double>(horizon) * c * sol.utility[i0];
  return s;
}

}  // namespace pace
