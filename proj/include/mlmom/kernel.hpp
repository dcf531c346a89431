#pragma once

// Expected powers of weighted sums of i.i.d. zero-mean draws, exact central
// moments of finite laws, and the centred power sums the estimators are
// built from.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mlmom/distribution.hpp"
#include "mlmom/error.hpp"
#include "mlmom/number.hpp"

namespace mlmom {

/// S = sum_l w_l x_l for i.i.d. zero-mean x with moments mu2, mu3, mu4.
template <Field T>
struct WeightedSumSpec {
  std::vector<T> weights;
  T mu2{}, mu3{}, mu4{};
};

template <Field T>
T expected_power(const WeightedSumSpec<T>& spec, int order) {
  if (spec.weights.empty()) {
    throw Error(ErrorCode::invalid_weights, "weight list is empty");
  }
  CompensatedSum<T> w2, w3, w4;
  for (const T& w : spec.weights) {
    if (!is_finite(w)) throw Error(ErrorCode::invalid_weights, "weight is not finite");
    const T sq = w * w;
    w2 += sq;
    w3 += sq * w;
    w4 += sq * sq;
  }
  switch (order) {
    case 2: return spec.mu2 * w2.value();
    case 3: return spec.mu3 * w3.value();
    case 4: {
      const T s2 = w2.value();
      const T s4 = w4.value();
      return spec.mu4 * s4 + T(3) * spec.mu2 * spec.mu2 * (s2 * s2 - s4);
    }
    default:
      throw Error(ErrorCode::unsupported_order,
                  "expected_power supports orders 2, 3, 4; got " + std::to_string(order));
  }
}

/// Central moments of a zero-mean law. Construction enforces mu2 >= 0 and
/// mu4 >= mu2^2.
class TrueMoments {
 public:
  TrueMoments(Rational mu2, Rational mu3, Rational mu4)
      : mu2_(std::move(mu2)), mu3_(std::move(mu3)), mu4_(std::move(mu4)) {
    if (mu2_ < 0) throw Error(ErrorCode::invalid_moments, "mu2 is negative");
    if (mu4_ < mu2_ * mu2_) throw Error(ErrorCode::invalid_moments, "mu4 < mu2^2");
  }

  [[nodiscard]] const Rational& mu2() const noexcept { return mu2_; }
  [[nodiscard]] const Rational& mu3() const noexcept { return mu3_; }
  [[nodiscard]] const Rational& mu4() const noexcept { return mu4_; }

  [[nodiscard]] const Rational& moment(int order) const {
    switch (order) {
      case 2: return mu2_;
      case 3: return mu3_;
      case 4: return mu4_;
      default:
        throw Error(ErrorCode::unsupported_order, "moment order " + std::to_string(order));
    }
  }

 private:
  Rational mu2_, mu3_, mu4_;
};

inline TrueMoments true_moments(const DiscreteDistribution& dist) {
  Rational m2(0), m3(0), m4(0);
  for (const auto& [x, p] : dist.atoms()) {
    const Rational x2 = x * x;
    m2 += p * x2;
    m3 += p * x2 * x;
    m4 += p * x2 * x2;
  }
  return TrueMoments(m2, m3, m4);
}

/// Sums of powers of residuals r_j = x_j - mean; pair_sum runs over
/// unordered pairs j < j' of r_j^2 r_j'^2.
template <Field T>
struct CenteredSums {
  T mean{}, sum2{}, sum3{}, sum4{}, pair_sum{};
};

template <Field T>
T compensated_mean(std::span<const T> values) {
  CompensatedSum<T> total;
  for (const T& v : values) total += v;
  return total.value() / from_int<T>(static_cast<std::int64_t>(values.size()));
}

template <Field T>
CenteredSums<T> centered_power_sums(std::span<const T> values) {
  CenteredSums<T> out;
  if (values.empty()) return out;
  out.mean = compensated_mean(values);
  CompensatedSum<T> s2, s3, s4;
  for (const T& v : values) {
    const T r = v - out.mean;
    const T r2 = r * r;
    s2 += r2;
    s3 += r2 * r;
    s4 += r2 * r2;
  }
  out.sum2 = s2.value();
  out.sum3 = s3.value();
  out.sum4 = s4.value();
  out.pair_sum = (out.sum2 * out.sum2 - out.sum4) / T(2);
  return out;
}

template <Field T>
CenteredSums<T> centered_power_sums(const std::vector<T>& values) {
  return centered_power_sums(std::span<const T>(values));
}

}  // namespace mlmom
