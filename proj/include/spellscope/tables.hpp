#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "spellscope/common.hpp"

namespace spellscope {

/// Distribution of the second word's convention for one first-word convention.
struct ConditionalRow {
  double second_us = 0.0;
  double second_uk = 0.0;
  // Spread across the averaged units (groups, or templates when macro-averaged).
  double std_us = 0.0;
  double std_uk = 0.0;
  std::size_t support = 0;  // groups or pairs behind this row

  double operator[](Side second) const { return second == Side::US ? second_us : second_uk; }
};

/// 2x2 table of P(second side | first side). A row is empty when undefined.
struct ConditionalTable {
  Condition condition = Condition::Adjacent;
  std::optional<ConditionalRow> us_first;
  std::optional<ConditionalRow> uk_first;
  bool macro_averaged = false;
  std::size_t template_count = 0;
  std::size_t excluded = 0;

  const std::optional<ConditionalRow>& row(Side first) const {
    return first == Side::US ? us_first : uk_first;
  }
};

}  // namespace spellscope
