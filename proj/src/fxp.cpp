#include "nnc/fxp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nnc/error.hpp"

namespace nnc {

void check_width(int width) {
  if (width < kMinWidth || width > kMaxWidth) {
    throw Error(ErrorCode::PreconditionError, "width " + std::to_string(width) + " outside [2, 16]");
  }
}

int container_bytes(int width) {
  if (width <= 8) return 1;
  if (width <= 16) return 2;
  return 4;
}

std::int64_t saturate(std::int64_t value, int width) {
  const std::int64_t lo = -(std::int64_t{1} << (width - 1));
  const std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;
  return std::clamp(value, lo, hi);
}

std::int64_t wrap(std::int64_t value, int bits) {
  if (bits >= 64) return value;
  const auto mask = (std::uint64_t{1} << bits) - 1;
  const std::uint64_t low = static_cast<std::uint64_t>(value) & mask;
  const std::uint64_t sign = std::uint64_t{1} << (bits - 1);
  return (low & sign) ? static_cast<std::int64_t>(low) - static_cast<std::int64_t>(mask) - 1
                      : static_cast<std::int64_t>(low);
}

std::int64_t shift_right_floor(std::int64_t value, int shift) {
  if (shift >= 63) return value < 0 ? -1 : 0;
  // >> on negative signed values is arithmetic since C++20.
  return value >> shift;
}

std::int32_t quantize_value(double x, QFormat fmt) {
  const double scaled = std::floor(std::ldexp(x, fmt.frac));
  if (std::isnan(scaled)) return 0;
  if (scaled <= static_cast<double>(fmt.min_int())) return static_cast<std::int32_t>(fmt.min_int());
  if (scaled >= static_cast<double>(fmt.max_int())) return static_cast<std::int32_t>(fmt.max_int());
  return static_cast<std::int32_t>(scaled);
}

double dequantize(std::int64_t v, QFormat fmt) { return std::ldexp(static_cast<double>(v), -fmt.frac); }

std::int32_t requantize(std::int64_t v, int from_frac, int to_frac, int width) {
  const int shift = from_frac - to_frac;
  if (shift >= 0) return static_cast<std::int32_t>(saturate(shift_right_floor(v, shift), width));
  const int left = -shift;
  if (v == 0) return 0;
  const std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;
  const std::int64_t lo = -(std::int64_t{1} << (width - 1));
  // Any |v| >= 1 shifted by >= width bits leaves the range.
  if (left >= width) return static_cast<std::int32_t>(v > 0 ? hi : lo);
  if (v > hi) return static_cast<std::int32_t>(hi);
  if (v < lo) return static_cast<std::int32_t>(lo);
  return static_cast<std::int32_t>(saturate(v * (std::int64_t{1} << left), width));
}

std::int64_t floor_div(std::int64_t numerator, std::int64_t denominator) {
  std::int64_t q = numerator / denominator;
  if ((numerator % denominator != 0) && (numerator < 0)) --q;
  return q;
}

std::pair<double, double> format_range(QFormat fmt) {
  return {dequantize(fmt.min_int(), fmt), dequantize(fmt.max_int(), fmt)};
}

double format_resolution(QFormat fmt) { return std::ldexp(1.0, -fmt.frac); }

double fake_quantize(double x, QFormat fmt) { return dequantize(quantize_value(x, fmt), fmt); }

bool FixedTensor::in_range() const {
  return std::all_of(data.begin(), data.end(),
                     [&](std::int32_t v) { return v >= format.min_int() && v <= format.max_int(); });
}

FixedTensor quantize_tensor(std::span<const double> values, QFormat fmt, Shape shape) {
  if (values.size() != shape.size()) {
    throw Error(ErrorCode::ShapeMismatch, "tensor has " + std::to_string(values.size()) + " values, shape " +
                                              to_string(shape) + " needs " + std::to_string(shape.size()));
  }
  FixedTensor out{{}, fmt, shape};
  out.data.reserve(values.size());
  for (double v : values) out.data.push_back(quantize_value(v, fmt));
  return out;
}

std::vector<double> dequantize_tensor(const FixedTensor& tensor) {
  std::vector<double> out;
  out.reserve(tensor.data.size());
  for (auto v : tensor.data) out.push_back(dequantize(v, tensor.format));
  return out;
}

}  // namespace nnc
