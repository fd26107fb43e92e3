#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace bpre {

/// Population sizes exceed 2^64 quickly (Z_80 ~ e^120), so counts are
/// arbitrary precision; values below 2^64 stay in the inline limbs.
using Population = boost::multiprecision::cpp_int;

inline bool fits_u64(const Population& z) { return z <= std::numeric_limits<std::uint64_t>::max(); }

inline std::string to_decimal(const Population& z) { return z.str(); }

/// Natural log of a population; log(0) is -inf.
inline double log_population(const Population& z) {
  if (z.is_zero()) return -std::numeric_limits<double>::infinity();
  if (fits_u64(z)) return std::log(static_cast<double>(z.convert_to<std::uint64_t>()));
  const auto bits = boost::multiprecision::msb(z);
  const unsigned shift = static_cast<unsigned>(bits) - 60;
  const Population top = z >> shift;
  return std::log(static_cast<double>(top.convert_to<std::uint64_t>())) + shift * std::log(2.0);
}

namespace detail {

/// e^x, snapped to the nearest integer when within 1e-12 relative of it so that
/// thresholds such as c = log 2 land on the intended integer.
inline long double snapped_exp(double x) {
  const long double v = std::exp(static_cast<long double>(x));
  const long double r = std::round(v);
  return std::abs(v - r) <= 1e-12L * std::max(1.0L, v) ? r : v;
}

inline Population from_integral(long double v) {
  if (v < 1.8e19L) return Population(static_cast<std::uint64_t>(v));
  int exponent = 0;
  const long double mant = std::frexp(v, &exponent);
  Population out(static_cast<std::uint64_t>(std::ldexp(mant, 64)));
  return exponent >= 64 ? Population(out << (exponent - 64)) : Population(out >> (64 - exponent));
}

}  // namespace detail

/// Largest integer not above e^x. Population events {Z <= e^x} are decided
/// against this integer everywhere so the oracle and the simulators agree.
inline Population floor_exp(double x) {
  if (x < 0.0) return Population(0);
  return detail::from_integral(std::floor(detail::snapped_exp(x)));
}

/// Smallest integer not below e^x.
inline Population ceil_exp(double x) {
  if (x < 0.0) return Population(1);
  return detail::from_integral(std::ceil(detail::snapped_exp(x)));
}

}  // namespace bpre
