#pragma once

// Number systems shared by every formula in the library. Each estimator is a
// template over a Field so the same code runs in double precision for data
// and in exact rationals for the verification oracle.

#include <bit>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <string>
#include <type_traits>

#include <boost/multiprecision/gmp.hpp>

namespace mlmom {

using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;

template <class T>
concept Field = std::regular<T> && requires(T a, T b) {
  { a + b } -> std::convertible_to<T>;
  { a - b } -> std::convertible_to<T>;
  { a * b } -> std::convertible_to<T>;
  { a / b } -> std::convertible_to<T>;
  { -a } -> std::convertible_to<T>;
  { a < b } -> std::convertible_to<bool>;
  { a == b } -> std::convertible_to<bool>;
};

template <class T>
inline constexpr bool is_exact_v = !std::is_floating_point_v<T>;

/// Nearest double to q (ties to even). mpq_get_d alone truncates.
inline double to_double(const Rational& q) {
  const double truncated = mpq_get_d(q.backend().data());
  if (!std::isfinite(truncated)) return truncated;
  const double away = std::nextafter(
      truncated, q.sign() < 0 ? -std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::infinity());
  if (!std::isfinite(away)) return truncated;
  const Rational gap_truncated = abs(q - Rational(truncated));
  const Rational gap_away = abs(Rational(away) - q);
  if (gap_away < gap_truncated) return away;
  if (gap_truncated < gap_away) return truncated;
  return (std::bit_cast<std::uint64_t>(truncated) & 1U) == 0 ? truncated : away;
}

inline Rational to_rational(double d) { return Rational(d); }

inline std::string to_string(const Rational& q) { return q.str(); }

template <Field T>
T from_rational(const Rational& q) {
  if constexpr (std::is_same_v<T, Rational>) {
    return q;
  } else {
    return static_cast<T>(to_double(q));
  }
}

template <Field T>
T from_int(std::int64_t v) {
  if constexpr (std::is_same_v<T, Rational>) {
    return Rational(static_cast<long long>(v));
  } else {
    return static_cast<T>(v);
  }
}

template <Field T>
double as_double(const T& v) {
  if constexpr (std::is_same_v<T, Rational>) {
    return to_double(v);
  } else {
    return static_cast<double>(v);
  }
}

template <Field T>
bool is_finite(const T& v) {
  if constexpr (std::is_floating_point_v<T>) {
    return std::isfinite(v);
  } else {
    return true;
  }
}

template <Field T>
T magnitude(const T& v) {
  return v < T(0) ? -v : v;
}

template <Field T>
T power(const T& base, int exponent) {
  T out(1);
  for (int i = 0; i < exponent; ++i) out = out * base;
  return out;
}

/// Neumaier-compensated running sum for floating types; plain exact
/// accumulation otherwise.
template <Field T>
class CompensatedSum {
 public:
  void add(const T& x) {
    if constexpr (std::is_floating_point_v<T>) {
      const T t = sum_ + x;
      if (std::abs(sum_) >= std::abs(x)) {
        compensation_ += (sum_ - t) + x;
      } else {
        compensation_ += (x - t) + sum_;
      }
      sum_ = t;
    } else {
      sum_ = sum_ + x;
    }
  }

  CompensatedSum& operator+=(const T& x) {
    add(x);
    return *this;
  }

  [[nodiscard]] T value() const {
    if constexpr (std::is_floating_point_v<T>) {
      return sum_ + compensation_;
    } else {
      return sum_;
    }
  }

 private:
  T sum_ = T(0);
  T compensation_ = T(0);
};

}  // namespace mlmom
