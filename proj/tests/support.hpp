#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "oracles.hpp"
#include "pace/market.hpp"

namespace testing_support {

inline pace::MarketInstance to_market(const oracle::RandomMarket& r,
                                      pace::Mode mode = pace::Mode::linear) {
  return pace::MarketInstance::finite(r.budgets, pace::DenseMatrix::from_rows(r.v), r.supply, mode);
}

inline pace::MarketInstance random_market(std::size_t n, std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return to_market(oracle::random_linear_market(n, m, rng));
}

inline pace::MarketInstance complementary() {
  return pace::MarketInstance::finite({0.5, 0.5}, pace::DenseMatrix::from_rows({{2, 0}, {0, 2}}),
                                      {0.5, 0.5}, pace::Mode::linear);
}

inline pace::MarketInstance identical() {
  return pace::MarketInstance::finite({0.5, 0.5}, pace::DenseMatrix::from_rows({{1, 1}, {1, 1}}),
                                      {0.5, 0.5}, pace::Mode::linear);
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("pace_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& text) const {
    auto p = path_ / name;
    std::ofstream(p) << text;
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
