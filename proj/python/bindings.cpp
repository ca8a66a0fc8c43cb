#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pace/engine.hpp"
#include "pace/errors.hpp"
#include "pace/experiment.hpp"
#include "pace/item_source.hpp"
#include "pace/market.hpp"
#include "pace/metrics.hpp"
#include "pace/oracle.hpp"

namespace py = pybind11;
using namespace pace;

namespace {

std::vector<double> to_vector(std::span<const double> s) { return {s.begin(), s.end()}; }

std::vector<std::vector<double>> to_rows(const DenseMatrix& m) {
  std::vector<std::vector<double>> out(m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r) out[r] = to_vector(m.row(r));
  return out;
}

py::dict kkt_dict(const KktReport& r) {
  py::dict d;
  d["pass"] = r.pass;
  d["tolerance"] = r.tolerance;
  d["primal_recovered"] = r.primal_recovered;
  d["price_consistency"] = r.price_consistency;
  d["budget"] = r.budget;
  d["utility"] = r.utility;
  d["clearance"] = r.clearance;
  d["winning_set"] = r.winning_set;
  d["complementary_slackness"] = r.complementary_slackness;
  d["box"] = r.box;
  return d;
}

Item make_item(const MarketInstance& market, py::object item) {
  if (market.space() == ItemSpace::continuum) return Item::at(item.cast<double>());
  return Item::finite(item.cast<std::size_t>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Online Fisher-market pacing dynamics and equilibrium oracle";

  auto base = py::register_exception<Error>(m, "PaceError", PyExc_RuntimeError);
  py::register_exception<InvalidMarket>(m, "InvalidMarket", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<NoConvergence>(m, "NoConvergence", base.ptr());
  py::register_exception<ModeMismatch>(m, "ModeMismatch", base.ptr());
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", base.ptr());

  py::enum_<Mode>(m, "Mode")
      .value("linear", Mode::linear)
      .value("quasilinear", Mode::quasilinear);
  py::enum_<ItemSpace>(m, "ItemSpace")
      .value("finite", ItemSpace::finite)
      .value("continuum", ItemSpace::continuum);

  py::class_<MarketInstance>(m, "Market")
      .def_static(
          "finite",
          [](std::vector<double> budgets, const std::vector<std::vector<double>>& v,
             std::vector<double> supply, Mode mode) {
            return MarketInstance::finite(std::move(budgets), DenseMatrix::from_rows(v),
                                          std::move(supply), mode);
          },
          py::arg("budgets"), py::arg("valuations"), py::arg("supply"),
          py::arg("mode") = Mode::linear)
      .def_static(
          "normalized",
          [](const std::vector<double>& budgets, const std::vector<std::vector<double>>& v,
             const std::vector<double>& supply, Mode mode) {
            return normalize_market(budgets, DenseMatrix::from_rows(v), supply, mode);
          },
          py::arg("budgets"), py::arg("valuations"), py::arg("supply"),
          py::arg("mode") = Mode::linear, "Rescale raw inputs into normalized form.")
      .def_static(
          "continuum",
          [](std::vector<double> budgets, const std::vector<std::pair<double, double>>& lines,
             Mode mode) {
            std::vector<LinearValuation> forms;
            for (auto [c, d] : lines) forms.push_back({c, d});
            return MarketInstance::continuum(std::move(budgets), std::move(forms), mode);
          },
          py::arg("budgets"), py::arg("lines"), py::arg("mode") = Mode::linear,
          "Continuum on [0, 1]; each line is (slope, intercept).")
      .def_static(
          "synthetic",
          [](const std::string& kind, std::size_t n, std::size_t m, std::uint64_t seed,
             Mode mode) { return generate_synthetic(parse_synth_kind(kind), n, m, seed, mode); },
          py::arg("kind"), py::arg("n"), py::arg("m") = 0, py::arg("seed") = 1,
          py::arg("mode") = Mode::linear)
      .def_static(
          "from_csv",
          [](const std::string& valuations, std::optional<std::string> budgets,
             std::optional<std::string> supply, Mode mode) {
            auto path = [](const std::optional<std::string>& s)
                -> std::optional<std::filesystem::path> {
              if (!s) return std::nullopt;
              return std::filesystem::path(*s);
            };
            return ingest_csv_market(valuations, path(budgets), path(supply), mode);
          },
          py::arg("valuations"), py::arg("budgets") = py::none(), py::arg("supply") = py::none(),
          py::arg("mode") = Mode::linear)
      .def_property_readonly("buyers", &MarketInstance::buyers)
      .def_property_readonly("items", &MarketInstance::items)
      .def_property_readonly("mode", &MarketInstance::mode)
      .def_property_readonly("space", &MarketInstance::space)
      .def_property_readonly("budgets",
                             [](const MarketInstance& mk) { return to_vector(mk.budgets()); })
      .def_property_readonly("supply",
                             [](const MarketInstance& mk) { return to_vector(mk.supply()); })
      .def_property_readonly("valuations",
                             [](const MarketInstance& mk) { return to_rows(mk.valuations()); })
      .def("mean_value", &MarketInstance::mean_value, py::arg("buyer"))
      .def("ql_beta_min", &MarketInstance::ql_beta_min, py::arg("buyer"));

  py::class_<SolverDiagnostics>(m, "SolverDiagnostics")
      .def_readonly("iterations", &SolverDiagnostics::iterations)
      .def_readonly("final_delta", &SolverDiagnostics::final_delta)
      .def_readonly("objective", &SolverDiagnostics::objective)
      .def_readonly("polished", &SolverDiagnostics::polished)
      .def_readonly("tie_tolerance", &SolverDiagnostics::tie_tolerance);

  py::class_<EquilibriumSolution>(m, "Equilibrium")
      .def_readonly("mode", &EquilibriumSolution::mode)
      .def_readonly("beta", &EquilibriumSolution::beta)
      .def_readonly("utility", &EquilibriumSolution::utility)
      .def_readonly("net_utility", &EquilibriumSolution::net_utility)
      .def_readonly("diagnostics", &EquilibriumSolution::diagnostics);

  m.def(
      "solve",
      [](const MarketInstance& market, double delta0, double tolerance, std::size_t max_iters,
         std::size_t cells) {
        OracleOptions o;
        o.delta0 = delta0;
        o.tolerance = tolerance;
        o.max_iters = max_iters;
        o.continuum_cells = cells;
        py::gil_scoped_release release;
        return solve_equilibrium(market, o);
      },
      py::arg("market"), py::arg("delta0") = 0.05, py::arg("tolerance") = 1e-10,
      py::arg("max_iters") = 1'000'000, py::arg("cells") = 10'000,
      "Static equilibrium; continuum markets are discretized first.");
  m.def(
      "kkt_check",
      [](const MarketInstance& market, const std::vector<double>& beta, double tolerance) {
        return kkt_dict(kkt_check(market, make_solution(market, beta), tolerance));
      },
      py::arg("market"), py::arg("beta"), py::arg("tolerance") = 1e-9);
  m.def("dual_objective", [](const MarketInstance& market, const std::vector<double>& beta) {
    return dual_objective(market, beta);
  });
  m.def("discretize", &discretize_continuum, py::arg("market"), py::arg("cells"));

  py::class_<StepObservation>(m, "Step")
      .def_readonly("t", &StepObservation::t)
      .def_readonly("values", &StepObservation::values)
      .def_readonly("beta", &StepObservation::beta)
      .def_readonly("bids", &StepObservation::bids)
      .def_readonly("winner", &StepObservation::winner)
      .def_readonly("price", &StepObservation::price)
      .def_readonly("net_utility", &StepObservation::net_utility);

  py::class_<PaceEngine>(m, "Engine")
      .def(py::init([](const MarketInstance& market, double delta0,
                       std::optional<std::vector<double>> initial_beta, bool track_hindsight) {
             PaceConfig c;
             c.delta0 = delta0;
             c.mode = market.mode();
             c.initial_beta = std::move(initial_beta);
             c.track_hindsight = track_hindsight;
             return PaceEngine(market, c);
           }),
           py::arg("market"), py::arg("delta0") = 0.05, py::arg("initial_beta") = py::none(),
           py::arg("track_hindsight") = false)
      .def(
          "step",
          [](PaceEngine& e, py::object item) { return e.step(make_item(e.market(), item)); },
          py::arg("item"), "Item index (finite) or point in [0, 1] (continuum).")
      .def("run_iid",
           [](PaceEngine& e, std::size_t steps, std::uint64_t seed) {
             py::gil_scoped_release release;
             if (e.market().space() == ItemSpace::continuum) {
               IidContinuumStream stream(seed);
               for (std::size_t t = 0; t < steps; ++t) e.step(stream.take());
             } else {
               IidFiniteStream stream(seed, e.market().supply());
               for (std::size_t t = 0; t < steps; ++t) e.step(stream.take());
             }
           },
           py::arg("steps"), py::arg("seed") = 1)
      .def_property_readonly("t", [](const PaceEngine& e) { return e.state().t; })
      .def_property_readonly("beta", [](const PaceEngine& e) { return e.state().beta; })
      .def_property_readonly("avg_gross", [](const PaceEngine& e) { return e.state().avg_gross; })
      .def_property_readonly("avg_net", [](const PaceEngine& e) { return e.state().avg_net; })
      .def_property_readonly("avg_spend", [](const PaceEngine& e) { return e.state().avg_spend; })
      .def_property_readonly("lower_bounds",
                             [](const PaceEngine& e) { return to_vector(e.lower_bounds()); })
      .def_property_readonly("upper_bounds",
                             [](const PaceEngine& e) { return to_vector(e.upper_bounds()); });

  m.def("relative_errors",
        [](const std::vector<double>& x, const std::vector<double>& y) {
          const auto r = relative_error_norms(x, y);
          return py::make_tuple(r.avg, r.max);
        },
        py::arg("x"), py::arg("reference"), "(mean, max) of |x - y| / y.");

  m.def(
      "run_experiment",
      [](const MarketInstance& market, std::size_t epochs, std::size_t seeds, double delta0,
         std::optional<std::string> out_dir, bool track_regret, std::size_t jobs) {
        ExperimentConfig c;
        c.delta0 = delta0;
        c.epochs = epochs;
        c.seeds.clear();
        for (std::size_t s = 1; s <= seeds; ++s) c.seeds.push_back(s);
        if (out_dir) c.out_dir = std::filesystem::path(*out_dir);
        c.track_regret = track_regret;
        c.jobs = resolve_jobs(jobs);
        ExperimentResult r;
        {
          py::gil_scoped_release release;
          r = run_experiment(market, c);
        }
        py::dict d;
        d["beta_star"] = r.solution.beta;
        d["columns"] = trace_columns();
        py::list rows;
        for (const auto& a : r.aggregate) {
          py::dict row;
          row["t"] = a.t;
          row["epoch"] = a.epoch;
          row["mean"] = a.mean;
          row["stderr"] = a.stderr_;
          rows.append(row);
        }
        d["aggregate"] = rows;
        py::list finals;
        for (const auto& s : r.seeds) finals.append(s.final_beta);
        d["final_beta"] = finals;
        return d;
      },
      py::arg("market"), py::arg("epochs") = 100, py::arg("seeds") = 10,
      py::arg("delta0") = 0.05, py::arg("out_dir") = py::none(), py::arg("track_regret") = true,
      py::arg("jobs") = 1);
}
