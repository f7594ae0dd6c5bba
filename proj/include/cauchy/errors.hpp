#pragma once

#include <stdexcept>
#include <string>

namespace cauchy {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  InvalidParameter(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// The overlap table ends before the requested D threshold is crossed.
class NeedsLongerTable : public Error {
 public:
  explicit NeedsLongerTable(double threshold, long long table_end)
      : Error("overlap table too short: need D(N) > " + std::to_string(threshold) +
              " but table ends at N=" + std::to_string(table_end)),
        threshold_(threshold) {}
  double required_threshold() const noexcept { return threshold_; }

 private:
  double threshold_;
};

class NumericOverflow : public Error {
 public:
  using Error::Error;
};

/// A request exceeds the configured memory or size budget.
class TooLarge : public Error {
 public:
  using Error::Error;
};

class EmptyRange : public Error {
 public:
  using Error::Error;
};

class InvalidPlan : public Error {
 public:
  using Error::Error;
};

/// The coarse-graining scales collapse (q >= u or u >= l) at this beta.
class TooLargeBeta : public InvalidPlan {
 public:
  using InvalidPlan::InvalidPlan;
};

}  // namespace cauchy
