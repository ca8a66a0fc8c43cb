#include "pace/market.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pace/errors.hpp"

namespace pace {

std::string_view to_string(Mode mode) {
  return mode == Mode::linear ? "linear" : "quasilinear";
}

Mode parse_mode(std::string_view text) {
  if (text == "linear") return Mode::linear;
  if (text == "ql" || text == "quasilinear") return Mode::quasilinear;
  throw Error("unknown mode '" + std::string(text) + "'");
}

DenseMatrix DenseMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  DenseMatrix out(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != out.cols()) {
      throw DimensionMismatch("row " + std::to_string(r) + " has " +
                              std::to_string(rows[r].size()) + " entries, expected " +
                              std::to_string(out.cols()));
    }
    std::copy(rows[r].begin(), rows[r].end(), out.row(r).begin());
  }
  return out;
}

namespace {

double sum(std::span<const double> xs) { return std::accumulate(xs.begin(), xs.end(), 0.0); }

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += a[k] * b[k];
  return acc;
}

bool near_one(double x) { return std::abs(x - 1.0) <= kNormalizationTolerance; }

void check_budgets(std::span<const double> budgets) {
  if (budgets.empty()) throw InvalidMarket("market needs at least one buyer");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (!(budgets[i] > 0.0) || !std::isfinite(budgets[i])) throw ZeroBudget(i);
  }
}

void check_supply(std::span<const double> supply) {
  if (supply.empty()) throw InvalidMarket("market needs at least one item");
  for (std::size_t j = 0; j < supply.size(); ++j) {
    if (!(supply[j] >= 0.0) || !std::isfinite(supply[j])) throw ZeroSupply(j);
  }
  if (!(sum(supply) > 0.0)) throw ZeroSupply(0);
}

void check_valuations(const DenseMatrix& v) {
  for (std::size_t i = 0; i < v.rows(); ++i) {
    bool positive = false;
    for (std::size_t j = 0; j < v.cols(); ++j) {
      double x = v(i, j);
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw InvalidMarket("valuation (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") must be finite and nonnegative");
      }
      positive = positive || x > 0.0;
    }
    if (!positive) throw ZeroValuationRow(i);
  }
}

}  // namespace

void MarketInstance::validate_common() const {
  check_budgets(budgets_);
  if (space_ == ItemSpace::finite) {
    check_supply(supply_);
    if (valuations_.rows() != budgets_.size() || valuations_.cols() != supply_.size()) {
      throw DimensionMismatch("valuation matrix is " + std::to_string(valuations_.rows()) +
                              "x" + std::to_string(valuations_.cols()) + " but market has " +
                              std::to_string(budgets_.size()) + " buyers and " +
                              std::to_string(supply_.size()) + " items");
    }
    check_valuations(valuations_);
    for (std::size_t i = 0; i < buyers(); ++i) {
      if (!(mean_value(i) > 0.0)) throw ZeroValuationRow(i);
    }
  } else {
    if (forms_.size() != budgets_.size()) {
      throw DimensionMismatch("continuum market needs one linear valuation per buyer");
    }
    for (std::size_t i = 0; i < forms_.size(); ++i) {
      const auto& f = forms_[i];
      if (f.intercept < 0.0 || f.slope + f.intercept < 0.0) {
        throw InvalidMarket("continuum valuation of buyer " + std::to_string(i) +
                            " is negative somewhere on [0, 1]");
      }
      if (!(f.integral() > 0.0)) throw ZeroValuationRow(i);
    }
  }
}

MarketInstance MarketInstance::finite(std::vector<double> budgets, DenseMatrix valuations,
                                      std::vector<double> supply, Mode mode) {
  MarketInstance m;
  m.space_ = ItemSpace::finite;
  m.mode_ = mode;
  m.budgets_ = std::move(budgets);
  m.valuations_ = std::move(valuations);
  m.supply_ = std::move(supply);
  m.validate_common();
  if (!near_one(sum(m.budgets_))) throw InvalidMarket("budgets must sum to 1");
  if (!near_one(sum(m.supply_))) throw InvalidMarket("supply must sum to 1");
  if (mode == Mode::linear) {
    for (std::size_t i = 0; i < m.buyers(); ++i) {
      if (!near_one(m.mean_value(i))) {
        throw InvalidMarket("valuation row " + std::to_string(i) +
                            " is not normalized to <v_i, s> = 1");
      }
    }
  }
  return m;
}

MarketInstance MarketInstance::continuum(std::vector<double> budgets,
                                         std::vector<LinearValuation> valuations, Mode mode) {
  MarketInstance m;
  m.space_ = ItemSpace::continuum;
  m.mode_ = mode;
  m.budgets_ = std::move(budgets);
  m.forms_ = std::move(valuations);
  m.validate_common();
  if (!near_one(sum(m.budgets_))) throw InvalidMarket("budgets must sum to 1");
  if (mode == Mode::linear) {
    for (std::size_t i = 0; i < m.forms_.size(); ++i) {
      if (!near_one(m.forms_[i].integral())) {
        throw InvalidMarket("continuum valuation " + std::to_string(i) +
                            " does not integrate to 1");
      }
    }
  }
  return m;
}

MarketInstance MarketInstance::unnormalized(std::vector<double> budgets, DenseMatrix valuations,
                                            std::vector<double> supply, Mode mode) {
  MarketInstance m;
  m.space_ = ItemSpace::finite;
  m.mode_ = mode;
  m.normalized_ = false;
  m.budgets_ = std::move(budgets);
  m.valuations_ = std::move(valuations);
  m.supply_ = std::move(supply);
  m.validate_common();
  return m;
}

double MarketInstance::value_of(std::size_t buyer, const Item& item) const {
  if (buyer >= buyers()) throw IndexOutOfRange("buyer out of range", buyer);
  if (space_ == ItemSpace::finite) {
    if (item.index >= items()) throw IndexOutOfRange("item out of range", item.index);
    return valuations_(buyer, item.index);
  }
  if (!(item.point >= 0.0 && item.point <= 1.0)) {
    throw Error("continuum item must lie in [0, 1]");
  }
  return forms_[buyer](item.point);
}

void MarketInstance::values_at(const Item& item, std::span<double> out) const {
  if (out.size() != buyers()) throw DimensionMismatch("value buffer has wrong length");
  if (space_ == ItemSpace::finite) {
    if (item.index >= items()) throw IndexOutOfRange("item out of range", item.index);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = valuations_(i, item.index);
  } else {
    if (!(item.point >= 0.0 && item.point <= 1.0)) {
      throw Error("continuum item must lie in [0, 1]");
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = forms_[i](item.point);
  }
}

double MarketInstance::mean_value(std::size_t buyer) const {
  if (space_ == ItemSpace::finite) return dot(valuations_.row(buyer), supply_);
  return forms_[buyer].integral();
}

double MarketInstance::second_moment(std::size_t buyer) const {
  if (space_ == ItemSpace::finite) {
    double acc = 0.0;
    auto row = valuations_.row(buyer);
    for (std::size_t j = 0; j < row.size(); ++j) acc += supply_[j] * row[j] * row[j];
    return acc;
  }
  const auto& f = forms_[buyer];
  return f.slope * f.slope / 3.0 + f.slope * f.intercept + f.intercept * f.intercept;
}

double MarketInstance::max_value(std::size_t buyer) const {
  if (space_ == ItemSpace::finite) {
    double best = 0.0;
    auto row = valuations_.row(buyer);
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (supply_[j] > 0.0) best = std::max(best, row[j]);
    }
    return best;
  }
  const auto& f = forms_[buyer];
  return std::max(f(0.0), f(1.0));
}

double MarketInstance::max_value() const {
  double best = 0.0;
  for (std::size_t i = 0; i < buyers(); ++i) best = std::max(best, max_value(i));
  return best;
}

double MarketInstance::ql_beta_min(std::size_t buyer) const {
  return budgets_[buyer] / (mean_value(buyer) + 2.0 * budgets_[buyer]);
}

MarketInstance normalize_market(std::span<const double> raw_budgets,
                                const DenseMatrix& raw_valuations,
                                std::span<const double> raw_supply, Mode mode) {
  check_budgets(raw_budgets);
  check_supply(raw_supply);
  if (raw_valuations.rows() != raw_budgets.size() || raw_valuations.cols() != raw_supply.size()) {
    throw DimensionMismatch("valuation matrix shape does not match budgets and supply");
  }
  check_valuations(raw_valuations);

  std::vector<double> budgets(raw_budgets.begin(), raw_budgets.end());
  std::vector<double> supply(raw_supply.begin(), raw_supply.end());
  DenseMatrix valuations = raw_valuations;

  const double budget_total = sum(budgets);
  if (!near_one(budget_total)) {
    for (double& b : budgets) b /= budget_total;
  }
  const double supply_total = sum(supply);
  if (!near_one(supply_total)) {
    for (double& s : supply) s /= supply_total;
  }

  if (mode == Mode::linear) {
    for (std::size_t i = 0; i < valuations.rows(); ++i) {
      auto row = valuations.row(i);
      const double mean = dot(row, supply);
      if (!(mean > 0.0)) throw ZeroValuationRow(i);
      if (!near_one(mean)) {
        for (double& v : row) v /= mean;
      }
    }
  } else if (!near_one(budget_total)) {
    for (std::size_t i = 0; i < valuations.rows(); ++i) {
      for (double& v : valuations.row(i)) v /= budget_total;
    }
  }
  return MarketInstance::finite(std::move(budgets), std::move(valuations), std::move(supply),
                                mode);
}

ProportionalShare proportional_share_utilities(const MarketInstance& market,
                                               std::span<const double> equilibrium_utilities) {
  if (market.mode() != Mode::linear) {
    throw ModeMismatch("proportional share is defined for linear markets");
  }
  if (equilibrium_utilities.size() != market.buyers()) {
    throw DimensionMismatch("equilibrium utility vector has wrong length");
  }
  ProportionalShare out;
  for (std::size_t i = 0; i < market.buyers(); ++i) {
    const double u = market.budgets()[i] * market.mean_value(i);
    out.utilities.push_back(u);
    out.fraction.push_back(u / equilibrium_utilities[i]);
  }
  return out;
}

}  // namespace pace
