#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pace {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An error that points at one buyer or item index.
class IndexedError : public Error {
 public:
  IndexedError(const std::string& what, std::size_t index)
      : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ZeroBudget : public IndexedError {
 public:
  explicit ZeroBudget(std::size_t buyer)
      : IndexedError("budget must be strictly positive", buyer) {}
};

class ZeroValuationRow : public IndexedError {
 public:
  explicit ZeroValuationRow(std::size_t buyer)
      : IndexedError("buyer has no positive valuation", buyer) {}
};

class ZeroSupply : public IndexedError {
 public:
  explicit ZeroSupply(std::size_t item)
      : IndexedError("supply must be nonnegative with positive total", item) {}
};

class IndexOutOfRange : public IndexedError {
 public:
  IndexOutOfRange(const std::string& what, std::size_t index)
      : IndexedError(what, index) {}
};

class InvalidMarket : public Error {
 public:
  using Error::Error;
};

class ModeMismatch : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column = 0)
      : Error(format(what, line, column)), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, std::size_t line,
                            std::size_t column) {
    std::string out = what + " at line " + std::to_string(line);
    if (column != 0) out += ", column " + std::to_string(column);
    return out;
  }
  std::size_t line_;
  std::size_t column_;
};

class StreamExhausted : public Error {
 public:
  StreamExhausted() : Error("arrival stream exhausted") {}
};

class AllocationViewMissing : public Error {
 public:
  AllocationViewMissing()
      : Error("adversarial arrivals need the engine's allocation view") {}
};

class NoConvergence : public Error {
 public:
  NoConvergence(std::size_t iterations, double last_delta)
      : Error("equilibrium solver did not converge after " +
              std::to_string(iterations) + " iterations (last step " +
              std::to_string(last_delta) + ")"),
        iterations_(iterations),
        last_delta_(last_delta) {}
  std::size_t iterations() const noexcept { return iterations_; }
  double last_delta() const noexcept { return last_delta_; }

 private:
  std::size_t iterations_;
  double last_delta_;
};

class PrimalRecoveryFailed : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class LedgerDisabled : public Error {
 public:
  LedgerDisabled() : Error("hindsight ledgers are disabled for this run") {}
};

class UndefinedForSingleBuyer : public Error {
 public:
  UndefinedForSingleBuyer() : Error("envy is undefined for a single buyer") {}
};

class ZeroReference : public IndexedError {
 public:
  explicit ZeroReference(std::size_t index)
      : IndexedError("relative error needs a strictly positive reference", index) {}
};

class BoundaryEquilibrium : public Error {
 public:
  BoundaryEquilibrium()
      : Error("an equilibrium multiplier sits on the boundary of its box") {}
};

class RejectionOverflow : public Error {
 public:
  RejectionOverflow()
      : Error("too many consecutive rejected continuum valuation draws") {}
};

}  // namespace pace
