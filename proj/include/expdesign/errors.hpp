#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace expdesign {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vector/matrix sizes that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Caller asked for something outside an operation's contract.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
 public:
  using Error::Error;
};

class SingularityError : public Error {
 public:
  SingularityError(const std::string& what, double condition, double threshold)
      : Error(what), condition_(condition), threshold_(threshold) {}

  double condition() const noexcept { return condition_; }
  double threshold() const noexcept { return threshold_; }

 private:
  double condition_;
  double threshold_;
};

// Rejection sampling ran out of candidate draws.
class ExhaustionError : public Error {
 public:
  ExhaustionError(const std::string& what, double best_imbalance, std::size_t screened)
      : Error(what), best_imbalance_(best_imbalance), screened_(screened) {}

  double best_imbalance() const noexcept { return best_imbalance_; }
  std::size_t screened() const noexcept { return screened_; }

 private:
  double best_imbalance_;
  std::size_t screened_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line) : Error(what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class CollinearityError : public Error {
 public:
  using Error::Error;
};

class DegenerateIntervalError : public Error {
 public:
  using Error::Error;
};

}  // namespace expdesign
