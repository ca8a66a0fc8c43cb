#include "pace/item_source.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <string>

#include "pace/errors.hpp"

namespace pace {

Item ArrivalStream::take(const AllocationView* view) {
  auto item = next(view);
  if (!item) throw StreamExhausted();
  return *item;
}

IidFiniteStream::IidFiniteStream(std::uint64_t seed, std::span<const double> supply)
    : rng_(seed) {
  if (supply.empty()) throw InvalidMarket("supply distribution is empty");
  double acc = 0.0;
  for (std::size_t j = 0; j < supply.size(); ++j) {
    if (!(supply[j] >= 0.0)) throw ZeroSupply(j);
    acc += supply[j];
    cdf_.push_back(acc);
  }
  if (!(acc > 0.0)) throw ZeroSupply(0);
  for (double& c : cdf_) c /= acc;
}

std::optional<Item> IidFiniteStream::next(const AllocationView*) {
  const double u = uniform01(rng_);
  // First j with cdf_j > u; zero-mass items can never be selected.
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) {
    // u is below 1 but rounding can leave the last cdf entry under it.
    it = std::prev(cdf_.end());
    while (it != cdf_.begin() && *it == *std::prev(it)) --it;
  }
  return Item::finite(static_cast<std::size_t>(it - cdf_.begin()));
}

IidContinuumStream::IidContinuumStream(std::uint64_t seed) : rng_(seed) {}

std::optional<Item> IidContinuumStream::next(const AllocationView*) {
  return Item::at(uniform01(rng_));
}

AdversarialStream::AdversarialStream(std::size_t buyers, std::size_t horizon)
    : buyers_(buyers), horizon_(horizon) {
  if (buyers < 2) throw InvalidMarket("adversarial instance needs at least two buyers");
  if (horizon == 0 || horizon % 2 != 0) {
    throw Error("adversarial horizon must be a positive even number");
  }
}

std::optional<Item> AdversarialStream::next(const AllocationView* view) {
  if (emitted_ >= horizon_) return std::nullopt;
  const std::size_t half = horizon_ / 2;
  if (emitted_ < half) {
    ++emitted_;
    return Item::finite(0);
  }
  if (!target_) {
    if (view == nullptr) throw AllocationViewMissing();
    const double threshold = static_cast<double>(horizon_) / (2.0 * static_cast<double>(buyers_));
    std::size_t pick = 0;
    bool found = false;
    for (std::size_t i = 0; i < buyers_; ++i) {
      if (view->realized_utility(i) <= threshold) {
        pick = i;
        found = true;
        break;
      }
    }
    if (!found) {
      // Unreachable when the first half was fully allocated; fall back to the
      // least-served buyer.
      for (std::size_t i = 1; i < buyers_; ++i) {
        if (view->realized_utility(i) < view->realized_utility(pick)) pick = i;
      }
    }
    target_ = pick;
    target_item_ = buyers_ - pick;
  }
  ++emitted_;
  return Item::finite(target_item_);
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

ReplayStream::ReplayStream(const std::filesystem::path& path, const MarketInstance& market) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open arrival file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = trim(line);
    if (text.empty()) continue;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (market.space() == ItemSpace::finite) {
      std::size_t index = 0;
      auto [ptr, ec] = std::from_chars(first, last, index);
      if (ec != std::errc() || ptr != last) throw ParseError("expected an item index", line_no);
      if (index >= market.items()) throw ParseError("item index out of range", line_no);
      items_.push_back(Item::finite(index));
    } else {
      double theta = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, theta);
      if (ec != std::errc() || ptr != last) throw ParseError("expected a decimal item", line_no);
      if (!(theta >= 0.0 && theta <= 1.0)) throw ParseError("item outside [0, 1]", line_no);
      items_.push_back(Item::at(theta));
    }
  }
}

std::optional<Item> ReplayStream::next(const AllocationView*) {
  if (cursor_ >= items_.size()) return std::nullopt;
  return items_[cursor_++];
}

MarketInstance adversarial_market(std::size_t buyers, double big) {
  if (buyers < 2) throw InvalidMarket("adversarial instance needs at least two buyers");
  if (!(big > static_cast<double>(buyers))) {
    throw InvalidMarket("adversarial valuation M must exceed the number of buyers");
  }
  DenseMatrix v(buyers, buyers + 1, big);
  for (std::size_t i = 0; i < buyers; ++i) v(i, 0) = 1.0;
  for (std::size_t k = 1; k <= buyers; ++k) v(buyers - k, k) = 0.0;
  return MarketInstance::unnormalized(std::vector<double>(buyers, 1.0), std::move(v),
                                      std::vector<double>(buyers + 1, 1.0), Mode::linear);
}

}  // namespace pace
