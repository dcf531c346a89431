#pragma once

// Unbiased second and third central moment estimators for the unbalanced
// three-level model y_ijk = u_i + v_ij + w_ijk. Estimation runs innermost
// first: w from within-subgroup residuals, then v from subgroup means around
// group means, then u from group means around the grand mean, each step
// subtracting the contamination implied by the previous estimates.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlmom/design.hpp"
#include "mlmom/error.hpp"
#include "mlmom/kernel.hpp"
#include "mlmom/number.hpp"
#include "mlmom/two_level.hpp"

namespace mlmom {

/// estimate = (statistic - inner_v * v_estimate - inner_w * w_estimate) / denominator
template <Field T>
struct NestedCorrection {
  T denominator{}, inner_v{}, inner_w{};

  [[nodiscard]] T apply(const T& statistic, const T& v, const T& w) const {
    return (statistic - inner_v * v - inner_w * w) / denominator;
  }
};

template <Field T>
struct ThreeLevelSchemeConstants {
  Scheme scheme = Scheme::grp;
  Correction<T> v2, v3;  // inner multiplies the matching w estimate
  NestedCorrection<T> u2, u3;
};

template <Field T>
struct ThreeLevelConstants {
  Correction<T> w2, w3;
  ThreeLevelSchemeConstants<T> grp, obs;

  [[nodiscard]] const ThreeLevelSchemeConstants<T>& scheme(Scheme s) const {
    return s == Scheme::grp ? grp : obs;
  }
};

namespace detail {

inline ThreeLevelSchemeConstants<Rational> three_level_grp(const NestedDesignSummary& s) {
  ThreeLevelSchemeConstants<Rational> c;
  c.scheme = Scheme::grp;
  const Rational n(static_cast<long long>(s.n()));
  Rational inv_j(0), inv_j2(0), w_in_u2(0), w_in_u3(0);
  for (const auto& g : s.groups) {
    const Rational j(static_cast<long long>(g.n));
    c.v2.denominator += j - 1;
    c.v2.inner += (j - 1) / j * g.inv_sum1;
    c.v3.denominator += (j - 1) * (j - 2) / j;
    c.v3.inner += (j - 1) * (j - 2) / (j * j) * g.inv_sum2;
    inv_j += 1 / j;
    inv_j2 += 1 / (j * j);
    w_in_u2 += g.inv_sum1 / (j * j);
    w_in_u3 += g.inv_sum2 / (j * j * j);
  }
  c.u2 = {n - 1, (n - 1) / n * inv_j, (n - 1) / n * w_in_u2};
  const Rational d3 = (n - 1) * (n - 2) / n;
  c.u3 = {d3, d3 / n * inv_j2, d3 / n * w_in_u3};
  return c;
}

inline ThreeLevelSchemeConstants<Rational> three_level_obs(const NestedDesignSummary& s) {
  ThreeLevelSchemeConstants<Rational> c;
  c.scheme = Scheme::obs;
  const Rational big_n(static_cast<long long>(s.total()));
  const Rational n2 = big_n * big_n;
  const Rational n3 = n2 * big_n;
  const Rational pk2(s.outer.pow_sum2);
  const Rational pk3(s.outer.pow_sum3);
  const Rational g2(s.sub_pow_sum2);
  const Rational g3(s.sub_pow_sum3);
  for (const auto& g : s.groups) {
    const Rational ki(static_cast<long long>(g.total));
    const Rational ki2 = ki * ki;
    const Rational ki3 = ki2 * ki;
    const Rational q2(g.pow_sum2);
    const Rational q3(g.pow_sum3);
    for (const std::int64_t size : g.sizes) {
      const Rational k(static_cast<long long>(size));
      c.v2.denominator += 1 - 2 * k / ki + q2 / ki2;
      c.v2.inner += 1 / k - 1 / ki;
      c.v3.denominator += 1 - 3 * k / ki + 3 * k * k / ki2 - q3 / ki3;
      c.v3.inner += (ki - k) * (ki - 2 * k) / (ki2 * k * k);
    }
    const Rational o = 1 - ki / big_n;
    c.u2.denominator += 1 - 2 * ki / big_n + pk2 / n2;
    c.u2.inner_v += o * o * q2 / ki2 + (g2 - q2) / n2;
    c.u2.inner_w += 1 / ki - 1 / big_n;
    c.u3.denominator += 1 - 3 * ki / big_n + 3 * ki2 / n2 - pk3 / n3;
    c.u3.inner_v += o * o * o * q3 / ki3 - (g3 - q3) / n3;
    c.u3.inner_w += (big_n - ki) * (big_n - 2 * ki) / (n2 * ki2);
  }
  return c;
}

template <Field T>
NestedCorrection<T> convert(const NestedCorrection<Rational>& c) {
  return {from_rational<T>(c.denominator), from_rational<T>(c.inner_v),
          from_rational<T>(c.inner_w)};
}

template <Field T>
ThreeLevelSchemeConstants<T> convert(const ThreeLevelSchemeConstants<Rational>& c) {
  return {c.scheme, convert<T>(c.v2), convert<T>(c.v3), convert<T>(c.u2), convert<T>(c.u3)};
}

}  // namespace detail

inline ThreeLevelConstants<Rational> exact_three_level_constants(const NestedDesignSummary& s) {
  ThreeLevelConstants<Rational> c;
  for (const auto& g : s.groups) {
    for (const std::int64_t size : g.sizes) {
      const Rational k(static_cast<long long>(size));
      c.w2.denominator += k - 1;
      c.w3.denominator += (k - 1) * (k - 2) / k;
    }
  }
  c.grp = detail::three_level_grp(s);
  c.obs = detail::three_level_obs(s);
  return c;
}

template <Field T>
ThreeLevelConstants<T> three_level_constants(const NestedDesignSummary& summary) {
  auto exact = exact_three_level_constants(summary);
  if constexpr (std::is_same_v<T, Rational>) {
    return exact;
  } else {
    return {detail::convert<T>(exact.w2), detail::convert<T>(exact.w3),
            detail::convert<T>(exact.grp), detail::convert<T>(exact.obs)};
  }
}

/// The three-level estimators stop at third order.
inline void require_three_level_order(int order) {
  if (order != 2 && order != 3) {
    throw Error(ErrorCode::unsupported_order,
                "three-level estimators support orders 2 and 3; got " + std::to_string(order));
  }
}

template <Field T>
struct WEstimates {
  T mu2w{}, mu3w{};
};

template <Field T>
struct VEstimates {
  T mu2v{}, mu3v{};
};

template <Field T>
struct UEstimates {
  T mu2u{}, mu3u{};
};

template <Field T>
struct ThreeLevelSchemeEstimates {
  Scheme scheme = Scheme::grp;
  T mu2v{}, mu3v{}, mu2u{}, mu3u{};
};

template <Field T>
struct ThreeLevelEstimates {
  T mu2w{}, mu3w{};
  std::optional<ThreeLevelSchemeEstimates<T>> grp, obs;
};

namespace detail {

template <Field T>
void require_matching_sizes(const ThreeLevelData<T>& data, const NestedDesignSummary& summary) {
  if (size_profile(data) != summary.sizes()) {
    throw Error(ErrorCode::usage, "design summary does not match the dataset's subgroup sizes");
  }
}

/// Subgroup means per group, then the group centre under the scheme.
template <Field T>
struct GroupMeans {
  std::vector<T> subgroup;
  T grp{}, obs{};
};

template <Field T>
GroupMeans<T> group_means(const std::vector<std::vector<T>>& group) {
  GroupMeans<T> m;
  m.subgroup.reserve(group.size());
  CompensatedSum<T> all;
  std::int64_t count = 0;
  for (const auto& sub : group) {
    m.subgroup.push_back(compensated_mean(std::span<const T>(sub)));
    for (const T& y : sub) all += y;
    count += static_cast<std::int64_t>(sub.size());
  }
  m.grp = compensated_mean(std::span<const T>(m.subgroup));
  m.obs = all.value() / from_int<T>(count);
  return m;
}

}  // namespace detail

template <Field T>
WEstimates<T> estimate_w(const ThreeLevelData<T>& data, const ThreeLevelConstants<T>& constants) {
  CompensatedSum<T> s2, s3;
  for (const auto& group : data.groups) {
    for (const auto& sub : group) {
      const auto c = centered_power_sums(std::span<const T>(sub));
      s2 += c.sum2;
      s3 += c.sum3;
    }
  }
  return {s2.value() / constants.w2.denominator, s3.value() / constants.w3.denominator};
}

template <Field T>
WEstimates<T> estimate_w(const ThreeLevelData<T>& data, const NestedDesignSummary& summary) {
  detail::require_matching_sizes(data, summary);
  return estimate_w(data, three_level_constants<T>(summary));
}

template <Field T>
VEstimates<T> estimate_v_3l(const ThreeLevelData<T>& data, const ThreeLevelConstants<T>& constants,
                            Scheme scheme, const WEstimates<T>& w) {
  CompensatedSum<T> s2, s3;
  for (const auto& group : data.groups) {
    const auto means = detail::group_means(group);
    const T center = scheme == Scheme::grp ? means.grp : means.obs;
    for (const T& m : means.subgroup) {
      const T d = m - center;
      s2 += d * d;
      s3 += d * d * d;
    }
  }
  const auto& c = constants.scheme(scheme);
  return {c.v2.apply(s2.value(), w.mu2w), c.v3.apply(s3.value(), w.mu3w)};
}

template <Field T>
VEstimates<T> estimate_v_3l(const ThreeLevelData<T>& data, const NestedDesignSummary& summary,
                            Scheme scheme, const WEstimates<T>& w) {
  detail::require_matching_sizes(data, summary);
  return estimate_v_3l(data, three_level_constants<T>(summary), scheme, w);
}

template <Field T>
UEstimates<T> estimate_u_3l(const ThreeLevelData<T>& data, const ThreeLevelConstants<T>& constants,
                            Scheme scheme, const VEstimates<T>& v, const WEstimates<T>& w) {
  std::vector<T> centers;
  centers.reserve(data.groups.size());
  CompensatedSum<T> all;
  std::int64_t count = 0;
  for (const auto& group : data.groups) {
    const auto means = detail::group_means(group);
    centers.push_back(scheme == Scheme::grp ? means.grp : means.obs);
    for (const auto& sub : group) {
      for (const T& y : sub) all += y;
      count += static_cast<std::int64_t>(sub.size());
    }
  }
  const T grand = scheme == Scheme::grp ? compensated_mean(std::span<const T>(centers))
                                        : all.value() / from_int<T>(count);
  CompensatedSum<T> s2, s3;
  for (const T& m : centers) {
    const T d = m - grand;
    s2 += d * d;
    s3 += d * d * d;
  }
  const auto& c = constants.scheme(scheme);
  return {c.u2.apply(s2.value(), v.mu2v, w.mu2w), c.u3.apply(s3.value(), v.mu3v, w.mu3w)};
}

template <Field T>
UEstimates<T> estimate_u_3l(const ThreeLevelData<T>& data, const NestedDesignSummary& summary,
                            Scheme scheme, const VEstimates<T>& v, const WEstimates<T>& w) {
  detail::require_matching_sizes(data, summary);
  return estimate_u_3l(data, three_level_constants<T>(summary), scheme, v, w);
}

/// w, then scheme-matched v and u for each requested scheme.
template <Field T>
ThreeLevelEstimates<T> estimate_three_level(const ThreeLevelData<T>& data,
                                            const ThreeLevelConstants<T>& constants,
                                            bool with_grp = true, bool with_obs = true) {
  ThreeLevelEstimates<T> out;
  const auto w = estimate_w(data, constants);
  out.mu2w = w.mu2w;
  out.mu3w = w.mu3w;
  auto run = [&](Scheme scheme) {
    const auto v = estimate_v_3l(data, constants, scheme, w);
    const auto u = estimate_u_3l(data, constants, scheme, v, w);
    return ThreeLevelSchemeEstimates<T>{scheme, v.mu2v, v.mu3v, u.mu2u, u.mu3u};
  };
  if (with_grp) out.grp = run(Scheme::grp);
  if (with_obs) out.obs = run(Scheme::obs);
  return out;
}

template <Field T>
ThreeLevelEstimates<T> estimate_three_level(const ThreeLevelData<T>& data,
                                            const NestedDesignSummary& summary,
                                            bool with_grp = true, bool with_obs = true) {
  detail::require_matching_sizes(data, summary);
  return estimate_three_level(data, three_level_constants<T>(summary), with_grp, with_obs);
}

}  // namespace mlmom
