#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "pace/market.hpp"
#include "pace/random.hpp"

namespace pace {

// Read-only view of realized allocations, exposed by the engine to adaptive
// arrival processes.
class AllocationView {
 public:
  virtual ~AllocationView() = default;
  virtual std::size_t buyers() const = 0;
  virtual std::size_t steps() const = 0;
  // Cumulative (not time-averaged) gross utility buyer i has received so far.
  virtual double realized_utility(std::size_t buyer) const = 0;
};

// Produces theta_1, theta_2, ...; std::nullopt marks end of stream.
class ArrivalStream {
 public:
  virtual ~ArrivalStream() = default;
  virtual std::optional<Item> next(const AllocationView* view) = 0;

  // Like next(), but end of stream raises StreamExhausted.
  Item take(const AllocationView* view = nullptr);
};

// i.i.d. draws from a finite supply distribution by inverse CDF.
class IidFiniteStream final : public ArrivalStream {
 public:
  IidFiniteStream(std::uint64_t seed, std::span<const double> supply);
  std::optional<Item> next(const AllocationView* view) override;

 private:
  Rng rng_;
  std::vector<double> cdf_;
};

// i.i.d. Uniform[0, 1] points.
class IidContinuumStream final : public ArrivalStream {
 public:
  explicit IidContinuumStream(std::uint64_t seed);
  std::optional<Item> next(const AllocationView* view) override;

 private:
  Rng rng_;
};

// The adaptive adversary against the market built by adversarial_market():
// item 0 for the first half of the horizon, then the item that the buyer with
// the lowest realized utility (lowest index on ties) values at zero.
class AdversarialStream final : public ArrivalStream {
 public:
  AdversarialStream(std::size_t buyers, std::size_t horizon);
  std::optional<Item> next(const AllocationView* view) override;

  std::optional<std::size_t> targeted_buyer() const noexcept { return target_; }
  std::size_t targeted_item() const noexcept { return target_item_; }

 private:
  std::size_t buyers_;
  std::size_t horizon_;
  std::size_t emitted_ = 0;
  std::optional<std::size_t> target_;
  std::size_t target_item_ = 0;
};

// Replays one item per line: an integer index (finite) or a point in [0, 1]
// (continuum).
class ReplayStream final : public ArrivalStream {
 public:
  ReplayStream(const std::filesystem::path& path, const MarketInstance& market);
  explicit ReplayStream(std::vector<Item> items) : items_(std::move(items)) {}
  std::optional<Item> next(const AllocationView* view) override;
  std::size_t size() const noexcept { return items_.size(); }

 private:
  std::vector<Item> items_;
  std::size_t cursor_ = 0;
};

// n buyers with unit budgets, n + 1 unit-supply items; every buyer values
// item 0 at 1; item k >= 1 is worth `big` to everyone except buyer n - k,
// who values it at 0. Not normalized.
MarketInstance adversarial_market(std::size_t buyers, double big);

}  // namespace pace
