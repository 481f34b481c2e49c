#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "nnc/ir/graph.hpp"

namespace nnc {

/// Qm.n format: `width` total bits (sign included), `frac` fractional bits.
/// A stored integer v represents v * 2^-frac. `frac` may be negative or
/// exceed the width.
struct QFormat {
  int width = 16;
  int frac = 0;

  /// Integer bits including the sign bit.
  int integer_bits() const { return width - frac; }
  std::int64_t min_int() const { return -(std::int64_t{1} << (width - 1)); }
  std::int64_t max_int() const { return (std::int64_t{1} << (width - 1)) - 1; }

  friend bool operator==(const QFormat&, const QFormat&) = default;
};

inline constexpr int kMinWidth = 2;
inline constexpr int kMaxWidth = 16;

/// Throws PreconditionError unless 2 <= width <= 16.
void check_width(int width);

/// Bytes of the smallest standard container for `width` bits: 1, 2 or 4.
/// Width 32 denotes float32 storage.
int container_bytes(int width);

/// Clamps to [-2^(width-1), 2^(width-1) - 1].
std::int64_t saturate(std::int64_t value, int width);

/// Reduces `value` modulo 2^bits into the signed range (two's complement wrap).
std::int64_t wrap(std::int64_t value, int bits);

/// floor(value / 2^shift) for shift >= 0.
std::int64_t shift_right_floor(std::int64_t value, int shift);

/// saturate(floor(x * 2^frac), width).
std::int32_t quantize_value(double x, QFormat fmt);

/// v * 2^-frac.
double dequantize(std::int64_t v, QFormat fmt);
inline double dequantize(std::int64_t v, int frac) { return dequantize(v, QFormat{kMaxWidth, frac}); }

/// Rescales a double-width value from from_frac to to_frac fractional bits:
/// arithmetic right shift (floor) when reducing precision, exact left shift
/// otherwise, then saturation to `width` bits.
std::int32_t requantize(std::int64_t v, int from_frac, int to_frac, int width);

/// floor(numerator / denominator) for denominator > 0.
std::int64_t floor_div(std::int64_t numerator, std::int64_t denominator);

/// Smallest and largest representable reals.
std::pair<double, double> format_range(QFormat fmt);
double format_resolution(QFormat fmt);

/// dequantize(quantize_value(x)).
double fake_quantize(double x, QFormat fmt);

/// Integer tensor in a Qm.n format. Values are held widened; their range is
/// the format's, and container_bytes(format.width) is the storage width on
/// target.
struct FixedTensor {
  std::vector<std::int32_t> data;
  QFormat format;
  Shape shape;

  bool in_range() const;
};

FixedTensor quantize_tensor(std::span<const double> values, QFormat fmt, Shape shape);
std::vector<double> dequantize_tensor(const FixedTensor& tensor);

}  // namespace nnc
