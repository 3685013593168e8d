#pragma once

#include <cstdint>

namespace bkifd {

/// Counts multiply-adds that touch the input data matrix. Sparse products
/// add one per stored nonzero per right-hand column, dense products add
/// rows*inner*cols.
struct OpCounter {
  std::uint64_t multiply_adds = 0;

  void add(std::uint64_t n) noexcept { multiply_adds += n; }
};

}  // namespace bkifd
