#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spellscope {

enum class Side : std::uint8_t { US, UK };

enum class Condition : std::uint8_t { Adjacent, NonAdjacent };

constexpr Side other(Side s) { return s == Side::US ? Side::UK : Side::US; }

std::string_view to_string(Side s);
std::string_view to_string(Condition c);
std::optional<Side> parse_side(std::string_view s);
std::optional<Condition> parse_condition(std::string_view s);

// Failure categories double as the CLI exit-code contract.
enum class ErrorKind : int {
  Io = 2,
  Config = 3,
  Backend = 4,
  DataFormat = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

// Neumaier compensated summation; keeps means stable across reduction orders.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace spellscope
