#pragma once

#include <cstddef>

#include "kgforge/eval.hpp"

namespace kgforge::detail {

inline double tie_adjusted_rank(std::size_t greater, std::size_t ties, TiePolicy tie) {
  const double base = 1.0 + static_cast<double>(greater);
  switch (tie) {
    case TiePolicy::optimistic: return base;
    case TiePolicy::pessimistic: return base + static_cast<double>(ties);
    case TiePolicy::mean: return base + 0.5 * static_cast<double>(ties);
  }
  return base;
}

/// Fills the aggregate fields of a report whose rank vectors are set.
void finish_report(EvalReport& report, std::span<const Triple> test);

}  // namespace kgforge::detail
