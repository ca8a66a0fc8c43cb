#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace pace {

enum class Mode { linear, quasilinear };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// v(theta) = slope * theta + intercept on [0, 1].
struct LinearValuation {
  double slope = 0.0;
  double intercept = 1.0;

  double operator()(double theta) const noexcept { return slope * theta + intercept; }
  double integral() const noexcept { return slope / 2.0 + intercept; }
  bool operator==(const LinearValuation&) const = default;
};

// An arrived item: an index into a finite item space, or a point of [0, 1].
struct Item {
  std::size_t index = 0;
  double point = 0.0;

  static Item finite(std::size_t j) { return {j, 0.0}; }
  static Item at(double theta) { return {0, theta}; }
  bool operator==(const Item&) const = default;
};

enum class ItemSpace { finite, continuum };

inline constexpr double kNormalizationTolerance = 1e-12;

// Buyers (budgets, valuations) plus an item space. Immutable once built; the
// factories validate every invariant of the requested form.
class MarketInstance {
 public:
  // Finite market already in normalized form. Linear mode requires
  // sum(B) = 1, sum(s) = 1 and <v_i, s> = 1; quasilinear requires sum(B) = 1
  // and <v_i, s> > 0.
  static MarketInstance finite(std::vector<double> budgets, DenseMatrix valuations,
                               std::vector<double> supply, Mode mode);

  // Continuum market on [0, 1] with linear valuations normalized to unit
  // integral and unit total budget.
  static MarketInstance continuum(std::vector<double> budgets,
                                  std::vector<LinearValuation> valuations, Mode mode);

  // Finite market that skips the normalization invariants (positivity and
  // nonnegativity are still enforced). Used by the adversarial instance.
  static MarketInstance unnormalized(std::vector<double> budgets, DenseMatrix valuations,
                                     std::vector<double> supply, Mode mode);

  std::size_t buyers() const noexcept { return budgets_.size(); }
  // Number of finite items; zero for a continuum.
  std::size_t items() const noexcept { return valuations_.cols(); }
  ItemSpace space() const noexcept { return space_; }
  Mode mode() const noexcept { return mode_; }
  bool normalized() const noexcept { return normalized_; }

  std::span<const double> budgets() const noexcept { return budgets_; }
  std::span<const double> supply() const noexcept { return supply_; }
  const DenseMatrix& valuations() const noexcept { return valuations_; }
  std::span<const LinearValuation> linear_forms() const noexcept { return forms_; }

  double value_of(std::size_t buyer, const Item& item) const;
  void values_at(const Item& item, std::span<double> out) const;

  // <v_i, s>, the expected value of one arrival.
  double mean_value(std::size_t buyer) const;
  // E_{theta~s}[v_i(theta)^2].
  double second_moment(std::size_t buyer) const;
  // ||v_i||_inf over the support of s.
  double max_value(std::size_t buyer) const;
  // max_i ||v_i||_inf.
  double max_value() const;

  // Lower end of the quasilinear multiplier box, B_i / (<v_i, s> + 2 B_i).
  double ql_beta_min(std::size_t buyer) const;

  bool operator==(const MarketInstance&) const = default;

 private:
  MarketInstance() = default;
  void validate_common() const;

  ItemSpace space_ = ItemSpace::finite;
  Mode mode_ = Mode::linear;
  bool normalized_ = true;
  std::vector<double> budgets_;
  DenseMatrix valuations_;
  std::vector<double> supply_;
  std::vector<LinearValuation> forms_;
};

// Rescales raw inputs into normalized form. Linear: budgets and supply to unit
// sum, each valuation row to <v_i, s> = 1. Quasilinear: budgets and valuations
// divided by one common constant (sum of raw budgets), supply to unit sum.
// Inputs already normalized within tolerance are left bit-identical.
MarketInstance normalize_market(std::span<const double> raw_budgets,
                                const DenseMatrix& raw_valuations,
                                std::span<const double> raw_supply, Mode mode);

struct ProportionalShare {
  std::vector<double> utilities;  // B_i <v_i, s>
  std::vector<double> fraction;   // u_prop_i / u*_i
};

ProportionalShare proportional_share_utilities(const MarketInstance& market,
                                               std::span<const double> equilibrium_utilities);

}  // namespace pace
