#pragma once

// Unbiased second, third and fourth central moment estimators for the
// unbalanced two-level model y_ij = u_i + v_ij.
//
// Every design-only quantity (denominators, contamination coefficients, the
// 2x2 fourth-moment coefficient matrices and the adjustment-term factors) is
// computed once in exact rational arithmetic from the group sizes and then
// converted to the working number type. The data-dependent statistics are
// computed in the working type.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mlmom/design.hpp"
#include "mlmom/error.hpp"
#include "mlmom/kernel.hpp"
#include "mlmom/number.hpp"

namespace mlmom {

enum class Scheme { grp, obs };

constexpr std::string_view scheme_name(Scheme s) { return s == Scheme::grp ? "grp" : "obs"; }

enum class SystemKind { within, grp, obs };

/// Nuisance moments entering the between-group adjustment terms.
template <Field T>
struct Nuisances {
  T mu2u_mu2v{};
  T mu2v_sq{};
  T mu4v{};
};

/// An adjustment term as a linear form in the nuisances:
/// uv * (mu2u mu2v) + fourth_v * mu4v + v_sq * mu2v^2.
template <Field T>
struct Adjustment {
  T uv{}, fourth_v{}, v_sq{};

  [[nodiscard]] T eval(const Nuisances<T>& m) const {
    return uv * m.mu2u_mu2v + fourth_v * m.mu4v + v_sq * m.mu2v_sq;
  }
};

/// [a11 a12; a21 a22] (mu4, mu2^2)' = (rhs1 - t4, rhs2 - t22)'.
template <Field T>
struct FourthMomentSystem {
  T a11{}, a12{}, a21{}, a22{};
  T rhs1{}, rhs2{};
  T t4{}, t22{};
  T det{};

  /// Exact types: det == 0. Floating types:
  /// |det| <= 1e-9 * max(|a11 a22|, |a12 a21|).
  [[nodiscard]] bool singular() const {
    if constexpr (is_exact_v<T>) {
      return det == T(0);
    } else {
      const T scale = std::max(magnitude(a11 * a22), magnitude(a12 * a21));
      return magnitude(det) <= T(1e-9) * scale;
    }
  }

  /// Returns (mu4, mu2^2).
  [[nodiscard]] std::pair<T, T> solve() const {
    if (singular()) {
      throw Error(ErrorCode::singular_system, "fourth-moment system is singular");
    }
    const T b1 = rhs1 - t4;
    const T b2 = rhs2 - t22;
    return {(a22 * b1 - a12 * b2) / det, (a11 * b2 - a21 * b1) / det};
  }
};

/// estimate = (statistic - inner * inner_estimate) / denominator
template <Field T>
struct Correction {
  T denominator{}, inner{};

  [[nodiscard]] T apply(const T& statistic, const T& inner_estimate) const {
    return (statistic - inner * inner_estimate) / denominator;
  }
};

template <Field T>
struct WithinConstants {
  Correction<T> second, third;  // inner is zero
  T a11{}, a12{}, a21{}, a22{};
};

template <Field T>
struct BetweenConstants {
  Scheme scheme = Scheme::grp;
  Correction<T> second, third;
  T a11{}, a12{}, a21{}, a22{};
  Adjustment<T> t4, t22;
};

template <Field T>
struct TwoLevelConstants {
  WithinConstants<T> within;
  BetweenConstants<T> grp, obs;

  [[nodiscard]] const BetweenConstants<T>& between(Scheme s) const {
    return s == Scheme::grp ? grp : obs;
  }
};

namespace detail {

template <Field T>
FourthMomentSystem<T> make_system(const T& a11, const T& a12, const T& a21, const T& a22) {
  FourthMomentSystem<T> s;
  s.a11 = a11;
  s.a12 = a12;
  s.a21 = a21;
  s.a22 = a22;
  s.det = a11 * a22 - a12 * a21;
  return s;
}

template <Field T>
Correction<T> convert(const Correction<Rational>& c) {
  return {from_rational<T>(c.denominator), from_rational<T>(c.inner)};
}

template <Field T>
Adjustment<T> convert(const Adjustment<Rational>& a) {
  return {from_rational<T>(a.uv), from_rational<T>(a.fourth_v), from_rational<T>(a.v_sq)};
}

template <Field T>
BetweenConstants<T> convert(const BetweenConstants<Rational>& b) {
  return {b.scheme,
          convert<T>(b.second),
          convert<T>(b.third),
          from_rational<T>(b.a11),
          from_rational<T>(b.a12),
          from_rational<T>(b.a21),
          from_rational<T>(b.a22),
          convert<T>(b.t4),
          convert<T>(b.t22)};
}

inline WithinConstants<Rational> within_constants(const DesignSummary& s) {
  WithinConstants<Rational> c;
  c.second.denominator = 0;
  c.third.denominator = 0;
  for (const std::int64_t size : s.sizes) {
    const Rational j(static_cast<long long>(size));
    const Rational j2 = j * j;
    c.second.denominator += j - 1;
    c.third.denominator += (j - 1) * (j - 2) / j;
    c.a11 += (j - 1) * (j2 - 3 * j + 3) / j2;
    c.a12 += 3 * (j - 1) * (2 * j - 3) / j2;
    c.a21 += (j - 1) * (2 * j - 3) / (2 * j2);
    c.a22 += (j - 1) * (j2 * j - 2 * j2 - 3 * j + 9) / (2 * j2);
  }
  return c;
}

inline BetweenConstants<Rational> grp_constants(const DesignSummary& s) {
  BetweenConstants<Rational> c;
  c.scheme = Scheme::grp;
  const Rational n(static_cast<long long>(s.n));
  const Rational n2 = n * n;
  const Rational n3 = n2 * n;
  const Rational& s1 = s.inv_sum1;
  const Rational& s2 = s.inv_sum2;
  const Rational& s3 = s.inv_sum3;

  c.second = {n - 1, (n - 1) * s1 / n};
  c.third = {(n - 1) * (n - 2) / n, (n - 1) * (n - 2) * s2 / n2};

  const Rational quartic = (n - 1) * (n2 - 3 * n + 3);
  const Rational cross = (n - 1) * (2 * n - 3);
  c.a11 = quartic / n2;
  c.a12 = 3 * cross / n2;
  c.a21 = cross / n2;
  // Coefficient of mu2u^2 in the ordered-pair cross statistic. The centred
  // group means play the role of within-group residuals here, so the
  // polynomial matches the within a22.
  c.a22 = (n - 1) * (n3 - 2 * n2 - 3 * n + 9) / n2;

  c.t4.uv = 6 * (n - 1) * (n - 1) / n2 * s1;
  c.t4.fourth_v = quartic / n3 * s3;
  c.t4.v_sq = 3 * ((n - 2) * (n - 2) / n2 * s2 + (2 * n - 3) / n3 * s1 * s1 - quartic / n3 * s3);

  c.t22.uv = 2 * (n - 1) * ((n - 1) * (n - 1) + 2) / n2 * s1;
  c.t22.fourth_v = cross / n3 * s3;
  c.t22.v_sq = (n3 - 2 * n2 - 3 * n + 9) / n3 * s1 * s1 + (n - 2) * (6 - n) / n2 * s2 -
               3 * cross / n3 * s3;
  return c;
}

inline BetweenConstants<Rational> obs_constants(const DesignSummary& s) {
  BetweenConstants<Rational> c;
  c.scheme = Scheme::obs;
  const Rational big_n(static_cast<long long>(s.total));
  const Rational n2 = big_n * big_n;
  const Rational n3 = n2 * big_n;
  const Rational n4 = n2 * n2;
  const Rational p2(s.pow_sum2);
  const Rational p3(s.pow_sum3);
  const Rational p4(s.pow_sum4);

  std::vector<Rational> sizes;
  sizes.reserve(s.n);
  for (const std::int64_t size : s.sizes) sizes.emplace_back(static_cast<long long>(size));

  // Per-group building blocks.
  auto g = [&](const Rational& j) { return 1 - 2 * j / big_n + p2 / n2; };
  auto h = [&](const Rational& j) { return 1 / j - 1 / big_n; };
  auto f = [&](const Rational& j) {
    const Rational hj = h(j);
    return j * hj * hj * hj * hj + (big_n - j) / n4;
  };
  auto quart_u = [&](const Rational& j) {
    const Rational o = 1 - j / big_n;
    return o * o * o * o + (p4 - j * j * j * j) / n4;
  };
  auto sq_u = [&](const Rational& j) {
    const Rational o = 1 - j / big_n;
    return o * o + (p2 - j * j) / n2;
  };
  auto q = [&](const Rational& ji, const Rational& jk) {
    const Rational oi = 1 - ji / big_n;
    const Rational ok = 1 - jk / big_n;
    return ji * ji / n2 * oi * oi + jk * jk / n2 * ok * ok +
           (p4 - ji * ji * ji * ji - jk * jk * jk * jk) / n4;
  };
  auto e = [&](const Rational& ji, const Rational& jk) {
    return ((big_n - ji) * (big_n - ji) / ji + (big_n - jk) * (big_n - jk) / jk +
            (big_n - ji - jk)) /
           n4;
  };

  Rational d2(0), i2(0), d3(0), i3(0);
  for (const Rational& j : sizes) {
    d2 += g(j);
    i2 += h(j);
    d3 += 1 - 3 * j / big_n + 3 * j * j / n2 - p3 / n3;
    i3 += (big_n - j) * (big_n - 2 * j) / (n2 * j * j);

    const Rational qu = quart_u(j);
    const Rational su = sq_u(j);
    c.a11 += qu;
    c.a12 += 3 * (su * su - qu);

    c.t4.uv += 6 * g(j) * h(j);
    c.t4.fourth_v += f(j);
    c.t4.v_sq += 3 * (h(j) * h(j) - f(j));
  }
  c.second = {d2, i2};
  c.third = {d3, i3};

  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      if (i == k) continue;
      const Rational& ji = sizes[i];
      const Rational& jk = sizes[k];
      const Rational qik = q(ji, jk);
      const Rational mix = p2 / n2 - (ji + jk) / big_n;
      const Rational eik = e(ji, jk);
      c.a21 += qik;
      c.a22 += g(ji) * g(jk) + 2 * mix * mix - 3 * qik;
      c.t22.uv += g(ji) * h(jk) + g(jk) * h(ji) - 4 / big_n * mix;
      c.t22.fourth_v += eik;
      c.t22.v_sq += h(ji) * h(jk) + 2 / n2 - 3 * eik;
    }
  }
  return c;
}

}  // namespace detail

inline TwoLevelConstants<Rational> exact_two_level_constants(const DesignSummary& summary) {
  return {detail::within_constants(summary), detail::grp_constants(summary),
          detail::obs_constants(summary)};
}

/// Exact design constants converted once to T.
template <Field T>
TwoLevelConstants<T> two_level_constants(const DesignSummary& summary) {
  const auto exact = exact_two_level_constants(summary);
  if constexpr (std::is_same_v<T, Rational>) {
    return exact;
  } else {
    const auto& w = exact.within;
    WithinConstants<T> within{detail::convert<T>(w.second), detail::convert<T>(w.third),
                              from_rational<T>(w.a11), from_rational<T>(w.a12),
                              from_rational<T>(w.a21), from_rational<T>(w.a22)};
    return {within, detail::convert<T>(exact.grp), detail::convert<T>(exact.obs)};
  }
}

/// Coefficient matrix and adjustment terms for one fourth-moment system; rhs
/// is left at zero for the caller to attach statistics. Nuisances are ignored
/// for the within system.
template <Field T>
FourthMomentSystem<T> build_fourth_system(SystemKind kind, const DesignSummary& summary,
                                          const Nuisances<T>& nuisances = {}) {
  const auto constants = two_level_constants<T>(summary);
  switch (kind) {
    case SystemKind::within: {
      const auto& w = constants.within;
      return detail::make_system(w.a11, w.a12, w.a21, w.a22);
    }
    case SystemKind::grp:
    case SystemKind::obs: {
      const auto& b = constants.between(kind == SystemKind::grp ? Scheme::grp : Scheme::obs);
      auto system = detail::make_system(b.a11, b.a12, b.a21, b.a22);
      system.t4 = b.t4.eval(nuisances);
      system.t22 = b.t22.eval(nuisances);
      return system;
    }
  }
  throw Error(ErrorCode::unsupported_kind, "unknown fourth-moment system kind");
}

template <Field T>
struct WithinStatistics {
  T sum2{}, sum3{}, sum4{};
  T pair_sum{};  // unordered pairs j < j' within each group
};

template <Field T>
WithinStatistics<T> within_statistics(const TwoLevelData<T>& data) {
  CompensatedSum<T> s2, s3, s4, pairs;
  for (const auto& group : data.groups) {
    const auto c = centered_power_sums(std::span<const T>(group));
    s2 += c.sum2;
    s3 += c.sum3;
    s4 += c.sum4;
    pairs += c.pair_sum;
  }
  return {s2.value(), s3.value(), s4.value(), pairs.value()};
}

template <Field T>
struct BetweenStatistics {
  T center{};
  T sum2{}, sum3{}, sum4{};
  T cross{};  // ordered pairs i != i'
};

template <Field T>
BetweenStatistics<T> between_statistics(const TwoLevelData<T>& data, Scheme scheme) {
  std::vector<T> means;
  means.reserve(data.groups.size());
  CompensatedSum<T> all;
  std::int64_t count = 0;
  for (const auto& group : data.groups) {
    means.push_back(compensated_mean(std::span<const T>(group)));
    for (const T& y : group) all += y;
    count += static_cast<std::int64_t>(group.size());
  }
  BetweenStatistics<T> out;
  out.center = scheme == Scheme::grp ? compensated_mean(std::span<const T>(means))
                                     : all.value() / from_int<T>(count);
  std::vector<T> sq(means.size());
  CompensatedSum<T> s2, s3, s4, cross;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const T d = means[i] - out.center;
    sq[i] = d * d;
    s2 += sq[i];
    s3 += sq[i] * d;
    s4 += sq[i] * sq[i];
  }
  for (std::size_t i = 0; i < sq.size(); ++i) {
    for (std::size_t k = 0; k < sq.size(); ++k) {
      if (i != k) cross += sq[i] * sq[k];
    }
  }
  out.sum2 = s2.value();
  out.sum3 = s3.value();
  out.sum4 = s4.value();
  out.cross = cross.value();
  return out;
}

template <Field T>
struct WithinEstimates {
  T mu2v{}, mu3v{};
  std::optional<T> mu4v, mu2v_sq;  // jointly solved; empty when singular
  T det_v{};
  std::optional<ErrorCode> fourth_error;
};

template <Field T>
struct BetweenEstimates {
  Scheme scheme = Scheme::grp;
  T mu2u{}, mu3u{};
  std::optional<T> mu4u, mu2u_sq;
  T det_u{};
  std::optional<ErrorCode> fourth_error;
};

template <Field T>
WithinEstimates<T> estimate_within(const TwoLevelData<T>& data,
                                   const TwoLevelConstants<T>& constants) {
  const auto& c = constants.within;
  const auto stats = within_statistics(data);
  WithinEstimates<T> out;
  out.mu2v = stats.sum2 / c.second.denominator;
  out.mu3v = stats.sum3 / c.third.denominator;

  auto system = detail::make_system(c.a11, c.a12, c.a21, c.a22);
  system.rhs1 = stats.sum4;
  system.rhs2 = stats.pair_sum;
  out.det_v = system.det;
  if (system.singular()) {
    out.fourth_error = ErrorCode::singular_system;
  } else {
    auto [mu4, mu2_sq] = system.solve();
    out.mu4v = mu4;
    out.mu2v_sq = mu2_sq;
  }
  return out;
}

namespace detail {

template <Field T>
void require_matching_sizes(const TwoLevelData<T>& data, const DesignSummary& summary) {
  if (size_profile(data) != summary.sizes) {
    throw Error(ErrorCode::usage, "design summary does not match the dataset's group sizes");
  }
}

}  // namespace detail

template <Field T>
WithinEstimates<T> estimate_within(const TwoLevelData<T>& data, const DesignSummary& summary) {
  detail::require_matching_sizes(data, summary);
  return estimate_within(data, two_level_constants<T>(summary));
}

/// Between-group estimates under one averaging scheme. Adjustment terms use
/// the plug-ins mu2u_hat * mu2v_hat, the jointly solved mu2v^2 and mu4v,
/// unless `nuisances` overrides them.
template <Field T>
BetweenEstimates<T> estimate_between(const TwoLevelData<T>& data,
                                     const TwoLevelConstants<T>& constants,
                                     const WithinEstimates<T>& within, Scheme scheme,
                                     const std::optional<Nuisances<T>>& nuisances = std::nullopt) {
  const auto& c = constants.between(scheme);
  const auto stats = between_statistics(data, scheme);
  BetweenEstimates<T> out;
  out.scheme = scheme;
  out.mu2u = c.second.apply(stats.sum2, within.mu2v);
  out.mu3u = c.third.apply(stats.sum3, within.mu3v);

  auto system = detail::make_system(c.a11, c.a12, c.a21, c.a22);
  out.det_u = system.det;
  if (system.singular()) {
    out.fourth_error = ErrorCode::singular_system;
    return out;
  }
  Nuisances<T> plug;
  if (nuisances) {
    plug = *nuisances;
  } else if (within.mu4v && within.mu2v_sq) {
    plug = {out.mu2u * within.mu2v, *within.mu2v_sq, *within.mu4v};
  } else {
    out.fourth_error = ErrorCode::missing_within_fourth;
    return out;
  }
  system.rhs1 = stats.sum4;
  system.rhs2 = stats.cross;
  system.t4 = c.t4.eval(plug);
  system.t22 = c.t22.eval(plug);
  auto [mu4, mu2_sq] = system.solve();
  out.mu4u = mu4;
  out.mu2u_sq = mu2_sq;
  return out;
}

template <Field T>
BetweenEstimates<T> estimate_between_grp(const TwoLevelData<T>& data, const DesignSummary& summary,
                                         const WithinEstimates<T>& within) {
  detail::require_matching_sizes(data, summary);
  return estimate_between(data, two_level_constants<T>(summary), within, Scheme::grp);
}

template <Field T>
BetweenEstimates<T> estimate_between_obs(const TwoLevelData<T>& data, const DesignSummary& summary,
                                         const WithinEstimates<T>& within) {
  detail::require_matching_sizes(data, summary);
  return estimate_between(data, two_level_constants<T>(summary), within, Scheme::obs);
}

template <Field T>
struct TwoLevelEstimates {
  WithinEstimates<T> within;
  BetweenEstimates<T> grp, obs;

  [[nodiscard]] const BetweenEstimates<T>& between(Scheme s) const {
    return s == Scheme::grp ? grp : obs;
  }
};

template <Field T>
TwoLevelEstimates<T> estimate_two_level(const TwoLevelData<T>& data,
                                        const TwoLevelConstants<T>& constants) {
  TwoLevelEstimates<T> out;
  out.within = estimate_within(data, constants);
  out.grp = estimate_between(data, constants, out.within, Scheme::grp);
  out.obs = estimate_between(data, constants, out.within, Scheme::obs);
  return out;
}

template <Field T>
TwoLevelEstimates<T> estimate_two_level(const TwoLevelData<T>& data, const DesignSummary& summary) {
  detail::require_matching_sizes(data, summary);
  return estimate_two_level(data, two_level_constants<T>(summary));
}

}  // namespace mlmom
