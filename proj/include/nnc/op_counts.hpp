#pragma once

#include <cstdint>

namespace nnc {

/// Integer ALU operation tallies of fixed-point inference.
struct OpCounts {
  std::uint64_t macc = 0;
  std::uint64_t add = 0;
  std::uint64_t shift = 0;
  std::uint64_t maxsat = 0;

  OpCounts& operator+=(const OpCounts& other) {
    macc += other.macc;
    add += other.add;
    shift += other.shift;
    maxsat += other.maxsat;
    return *this;
  }
  friend OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }
  friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

}  // namespace nnc
