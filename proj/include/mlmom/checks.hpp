#pragma once

// The verification suites: exact enumeration checks, Monte Carlo bias
// checks and randomized property checks. Shared by `mlmom verify` and the
// acceptance runner.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mlmom/design.hpp"
#include "mlmom/distribution.hpp"
#include "mlmom/enumeration.hpp"
#include "mlmom/kernel.hpp"
#include "mlmom/monte_carlo.hpp"
#include "mlmom/statistic.hpp"

namespace mlmom {

inline constexpr std::uint64_t kDefaultSeed = 20240917;
inline constexpr std::uint64_t kDefaultReps = 200000;

struct CheckResult {
  std::string id;
  int criterion = 0;  // 0 for supplementary checks
  std::string description;
  std::string expected;
  std::string actual;
  std::string tolerance;
  bool passed = false;
  bool asserted = true;  // false: recorded finding that never fails a run
  std::optional<double> z;
  std::optional<double> se;
  std::string note;
};

struct VerifyOptions {
  std::uint64_t two_level_reps = kDefaultReps;
  std::uint64_t three_level_reps = kDefaultReps;
  std::uint64_t seed = kDefaultSeed;
  unsigned threads = 0;
};

/// Latent laws used throughout the suites.
namespace laws {

inline DiscreteDistribution skewed() { return DiscreteDistribution::parse("2:1/3,-1:2/3"); }
inline DiscreteDistribution skewed_left() { return DiscreteDistribution::parse("-2:1/3,1:2/3"); }
inline DiscreteDistribution symmetric() { return DiscreteDistribution::rademacher(); }
/// Three-point law with mu4 = 3 mu2^2.
inline DiscreteDistribution normal_kurtosis() {
  return DiscreteDistribution::parse("-1:1/6,0:2/3,1:1/6");
}

}  // namespace laws

/// Small deterministic generator for the randomized checks.
class CheckRng {
 public:
  explicit CheckRng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return lo + static_cast<std::int64_t>(x % span);
  }

  /// p/q with p in [lo, hi] and q in [1, max_den].
  Rational rational(std::int64_t lo, std::int64_t hi, std::int64_t max_den) {
    const std::int64_t p = between(lo, hi);
    const std::int64_t q = between(1, max_den);
    return Rational(p, q);
  }

  Rational nonzero_rational(std::int64_t lo, std::int64_t hi, std::int64_t max_den) {
    Rational r = rational(lo, hi, max_den);
    while (r == 0) r = rational(lo, hi, max_den);
    return r;
  }

  /// Zero-mean law with `atoms` distinct integer support points.
  DiscreteDistribution zero_mean_law(int atoms) {
    while (true) {
      if (atoms == 2) {
        const std::int64_t a = -between(1, 4);
        const std::int64_t b = between(1, 4);
        return DiscreteDistribution(
            {{Rational(a), Rational(b, b - a)}, {Rational(b), Rational(-a, b - a)}});
      }
      const std::int64_t a = -between(1, 4);
      const std::int64_t b = between(1, 4);
      const std::int64_t c = between(a + 1, b - 1);
      const Rational pc(between(1, 5), 8);
      const Rational pa = (Rational(b) * (1 - pc) + Rational(c) * pc) / Rational(b - a);
      const Rational pb = 1 - pc - pa;
      if (pa > 0 && pb > 0) {
        return DiscreteDistribution(
            {{Rational(a), pa}, {Rational(c), pc}, {Rational(b), pb}});
      }
    }
  }

 private:
  std::mt19937_64 engine_;
};

namespace detail {

/// Shortest text that reads back as the same double.
inline std::string fmt(double x) {
  char buffer[32];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, x);
  return ec == std::errc() ? std::string(buffer, end) : std::string("?");
}

inline CheckResult exact_check(std::string id, int criterion, std::string description,
                               const Rational& expected, const Rational& actual) {
  CheckResult r;
  r.id = std::move(id);
  r.criterion = criterion;
  r.description = std::move(description);
  r.expected = to_string(expected);
  r.actual = to_string(actual);
  r.tolerance = "exact";
  r.passed = expected == actual;
  return r;
}

inline CheckResult failed_check(std::string id, int criterion, std::string description,
                                std::string expected, const Error& e) {
  CheckResult r;
  r.id = std::move(id);
  r.criterion = criterion;
  r.description = std::move(description);
  r.expected = std::move(expected);
  r.actual = std::string(error_name(e.code()));
  r.tolerance = "exact";
  r.passed = false;
  r.note = e.what();
  return r;
}

inline std::string sizes_text(const SizeProfile& sizes) {
  std::string out = "(";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i != 0) out += ',';
    out += std::to_string(sizes[i]);
  }
  return out + ")";
}

inline std::string sizes_text(const NestedSizeProfile& sizes) {
  std::string out = "(";
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i != 0) out += ',';
    out += sizes_text(sizes[i]);
  }
  return out + ")";
}

inline Nuisances<Rational> true_nuisances(const TwoLevelLaws& l) {
  const auto u = true_moments(l.u);
  const auto v = true_moments(l.v);
  return {u.mu2() * v.mu2(), v.mu2() * v.mu2(), v.mu4()};
}

}  // namespace detail

/// Orders 2 and 3, both schemes, joint enumeration over all draws.
inline std::vector<CheckResult> check_two_level_exact(const SizeProfile& sizes,
                                                      const TwoLevelLaws& l, int criterion = 1) {
  const std::array which{TwoLevelStatistic::mu2v,     TwoLevelStatistic::mu3v,
                         TwoLevelStatistic::mu2u_grp, TwoLevelStatistic::mu3u_grp,
                         TwoLevelStatistic::mu2u_obs, TwoLevelStatistic::mu3u_obs};
  const auto design = validate_two_level_design(sizes);
  const auto got = enumerate_statistics(design, l, which);
  const auto u = true_moments(l.u);
  const auto v = true_moments(l.v);
  std::vector<CheckResult> out;
  for (std::size_t k = 0; k < which.size(); ++k) {
    const std::string name(statistic_name(which[k]));
    out.push_back(detail::exact_check("two_level.exact." + name, criterion,
                                      "E[" + name + "] on J=" + detail::sizes_text(sizes),
                                      true_value(which[k], u, v), got[k]));
  }
  return out;
}

/// The within fourth-moment pair, enumerating v only.
inline std::vector<CheckResult> check_v_fourth(const SizeProfile& sizes, const TwoLevelLaws& l,
                                               int criterion = 2) {
  const std::array which{TwoLevelStatistic::mu4v, TwoLevelStatistic::mu2v_sq};
  const auto design = validate_two_level_design(sizes);
  const auto u = true_moments(l.u);
  const auto v = true_moments(l.v);
  const std::string where = " on J=" + detail::sizes_text(sizes);
  std::vector<CheckResult> out;
  try {
    const auto got =
        enumerate_statistics(design, l, which, EnumerationScope{Grouping::joint, false, true, true});
    for (std::size_t k = 0; k < which.size(); ++k) {
      const std::string name(statistic_name(which[k]));
      out.push_back(detail::exact_check("two_level.v_fourth." + name, criterion,
                                        "E[" + name + "]" + where, true_value(which[k], u, v),
                                        got[k]));
    }
  } catch (const Error& e) {
    for (const auto s : which) {
      const std::string name(statistic_name(s));
      out.push_back(detail::failed_check("two_level.v_fourth." + name, criterion,
                                         "E[" + name + "]" + where,
                                         to_string(true_value(s, u, v)), e));
    }
  }
  return out;
}

/// The between fourth-moment pair with adjustment terms built from the true
/// nuisance moments, both schemes.
inline std::vector<CheckResult> check_u_fourth_true_nuisances(const SizeProfile& sizes,
                                                              const TwoLevelLaws& l,
                                                              int criterion = 3) {
  const std::array which{TwoLevelStatistic::mu4u_grp, TwoLevelStatistic::mu2u_sq_grp,
                         TwoLevelStatistic::mu4u_obs, TwoLevelStatistic::mu2u_sq_obs};
  const auto design = validate_two_level_design(sizes);
  const auto u = true_moments(l.u);
  const auto v = true_moments(l.v);
  const std::string where = " with true nuisances on J=" + detail::sizes_text(sizes);
  auto id = [&](TwoLevelStatistic s) {
    return "two_level.u_fourth_true." + std::string(statistic_name(s)) + ".n" +
           std::to_string(sizes.size());
  };
  auto description = [&](TwoLevelStatistic s) {
    return "E[" + std::string(statistic_name(s)) + "]" + where;
  };
  std::vector<CheckResult> out;
  try {
    const auto got = enumerate_statistics(design, l, which, {}, {}, detail::true_nuisances(l));
    for (std::size_t k = 0; k < which.size(); ++k) {
      out.push_back(detail::exact_check(id(which[k]), criterion, description(which[k]),
                                        true_value(which[k], u, v), got[k]));
    }
  } catch (const Error& e) {
    for (const auto s : which) {
      out.push_back(detail::failed_check(id(s), criterion, description(s),
                                         to_string(true_value(s, u, v)), e));
    }
  }
  return out;
}

/// Determinants of the between fourth-moment systems must equal `expected`.
inline std::vector<CheckResult> check_u_fourth_determinant(const SizeProfile& sizes,
                                                           const Rational& expected_grp,
                                                           const Rational& expected_obs,
                                                           int criterion = 0) {
  const auto design = validate_two_level_design(sizes);
  const Nuisances<Rational> zero{};
  std::vector<CheckResult> out;
  for (const auto kind : {SystemKind::grp, SystemKind::obs}) {
    const auto system = build_fourth_system<Rational>(kind, design, zero);
    const bool grp = kind == SystemKind::grp;
    out.push_back(detail::exact_check(
        std::string("two_level.u_fourth_det.") + (grp ? "grp" : "obs") + ".n" +
            std::to_string(sizes.size()),
        criterion,
        std::string("determinant of the ") + (grp ? "grp" : "obs") + " system on J=" +
            detail::sizes_text(sizes),
        grp ? expected_grp : expected_obs, system.det));
  }
  return out;
}

/// Exact bias of the shipped plug-in fourth-moment estimators. Recorded,
/// never asserted.
inline std::vector<CheckResult> check_plugin_bias_exact(const SizeProfile& sizes,
                                                        const TwoLevelLaws& l, int criterion = 4) {
  const std::array which{TwoLevelStatistic::mu4u_grp, TwoLevelStatistic::mu2u_sq_grp,
                         TwoLevelStatistic::mu4u_obs, TwoLevelStatistic::mu2u_sq_obs};
  const auto design = validate_two_level_design(sizes);
  const auto u = true_moments(l.u);
  const auto v = true_moments(l.v);
  std::vector<CheckResult> out;
  auto base = [&](TwoLevelStatistic s) {
    CheckResult r;
    const std::string name(statistic_name(s));
    r.id = "two_level.plugin_bias." + name + ".n" + std::to_string(sizes.size());
    r.criterion = criterion;
    r.description = "exact bias of plug-in " + name + " on J=" + detail::sizes_text(sizes);
    r.expected = to_string(true_value(s, u, v));
    r.tolerance = "recorded";
    r.asserted = false;
    return r;
  };
  try {
    const auto got = enumerate_statistics(design, l, which);
    for (std::size_t k = 0; k < which.size(); ++k) {
      auto r = base(which[k]);
      const Rational bias = got[k] - true_value(which[k], u, v);
      r.actual = to_string(got[k]);
      r.passed = bias == 0;
      r.note = "bias " + to_string(bias) + " (" + detail::fmt(to_double(bias)) + ")";
      out.push_back(std::move(r));
    }
  } catch (const Error& e) {
    for (const auto s : which) {
      auto r = base(s);
      r.actual = std::string(error_name(e.code()));
      r.note = e.what();
      out.push_back(std::move(r));
    }
  }
  return out;
}

/// Monte Carlo |z| checks. Statistics in `recorded` are reported as findings.
inline std::vector<CheckResult> check_two_level_mc(const TwoLevelPlan& plan,
                                                   std::span<const TwoLevelStatistic> asserted,
                                                   std::span<const TwoLevelStatistic> recorded,
                                                   double z_bound, int criterion,
                                                   const VerifyOptions& options) {
  std::vector<TwoLevelStatistic> all(asserted.begin(), asserted.end());
  all.insert(all.end(), recorded.begin(), recorded.end());
  const auto reports = run_monte_carlo(plan, all, MonteCarloOptions{options.threads});
  std::vector<CheckResult> out;
  for (std::size_t k = 0; k < reports.size(); ++k) {
    const auto& b = reports[k];
    CheckResult r;
    r.id = "two_level.mc." + b.name + ".n" + std::to_string(plan.sizes.size());
    r.criterion = criterion;
    r.description = "Monte Carlo mean of " + b.name + " on J=" + detail::sizes_text(plan.sizes) +
                    ", R=" + std::to_string(plan.reps);
    r.expected = to_string(b.truth);
    r.actual = detail::fmt(b.mean);
    r.tolerance = "|z| <= " + detail::fmt(z_bound);
    r.asserted = k < asserted.size();
    r.z = b.z;
    r.se = b.se;
    r.passed = !b.degenerate && b.failures == 0 && std::abs(b.z) <= z_bound;
    if (b.failures != 0) {
      r.note = std::to_string(b.failures) + " of " + std::to_string(plan.reps) +
               " replications had no estimate";
    }
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<CheckResult> check_singularity_all_three(const SizeProfile& sizes,
                                                            int criterion = 5) {
  const auto design = validate_two_level_design(sizes);
  const auto system = build_fourth_system<Rational>(SystemKind::within, design, {});
  std::vector<CheckResult> out;
  out.push_back(detail::exact_check("two_level.singular.det_v", criterion,
                                    "determinant of the within system on J=" +
                                        detail::sizes_text(sizes),
                                    Rational(0), system.det));
  TwoLevelData<Rational> data;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    auto& g = data.groups.emplace_back();
    for (std::int64_t j = 0; j < sizes[i]; ++j) g.push_back(Rational(static_cast<long long>(i * j * j)));
  }
  const auto within = estimate_within(data, design);
  CheckResult r;
  r.id = "two_level.singular.error";
  r.criterion = criterion;
  r.description = "within fourth-moment solve reports SingularSystem";
  r.expected = std::string(error_name(ErrorCode::singular_system));
  r.actual = within.fourth_error ? std::string(error_name(*within.fourth_error)) : "solved";
  r.tolerance = "exact";
  r.passed = within.fourth_error == ErrorCode::singular_system && !within.mu4v && !within.mu2v_sq;
  out.push_back(std::move(r));
  return out;
}

/// w level per subgroup, v level per group; u is held fixed.
inline std::vector<CheckResult> check_three_level_exact(const NestedSizeProfile& sizes,
                                                        const ThreeLevelLaws& l,
                                                        int criterion = 6) {
  const auto design = validate_three_level_design(sizes);
  const auto u = true_moments(l.u);
  const auto v = true_moments(l.v);
  const auto w = true_moments(l.w);
  const std::string where = " on K=" + detail::sizes_text(sizes);
  std::vector<CheckResult> out;
  auto run = [&](std::span<const ThreeLevelStatistic> which, const EnumerationScope& scope) {
    const auto got = enumerate_statistics(design, l, which, scope);
    for (std::size_t k = 0; k < which.size(); ++k) {
      const std::string name(statistic_name(which[k]));
      out.push_back(detail::exact_check("three_level.exact." + name, criterion,
                                        "E[" + name + "]" + where,
                                        true_value(which[k], u, v, w), got[k]));
    }
  };
  const std::array w_level{ThreeLevelStatistic::mu2w, ThreeLevelStatistic::mu3w};
  run(w_level, EnumerationScope{Grouping::per_subgroup, false, false, true});
  const std::array v_level{ThreeLevelStatistic::mu2v_grp, ThreeLevelStatistic::mu3v_grp,
                           ThreeLevelStatistic::mu2v_obs, ThreeLevelStatistic::mu3v_obs};
  run(v_level, EnumerationScope{Grouping::per_group, false, true, true});
  return out;
}

inline std::vector<CheckResult> check_three_level_mc(const ThreeLevelPlan& plan, double z_bound,
                                                     int criterion, const VerifyOptions& options) {
  const std::array which{ThreeLevelStatistic::mu2u_grp, ThreeLevelStatistic::mu3u_grp,
                         ThreeLevelStatistic::mu2u_obs, ThreeLevelStatistic::mu3u_obs};
  const auto reports = run_monte_carlo(plan, which, MonteCarloOptions{options.threads});
  std::vector<CheckResult> out;
  for (const auto& b : reports) {
    CheckResult r;
    r.id = "three_level.mc." + b.name;
    r.criterion = criterion;
    r.description = "Monte Carlo mean of " + b.name + " on K=" + detail::sizes_text(plan.sizes) +
                    ", R=" + std::to_string(plan.reps);
    r.expected = to_string(b.truth);
    r.actual = detail::fmt(b.mean);
    r.tolerance = "|z| <= " + detail::fmt(z_bound);
    r.z = b.z;
    r.se = b.se;
    r.passed = !b.degenerate && b.failures == 0 && std::abs(b.z) <= z_bound;
    out.push_back(std::move(r));
  }
  return out;
}

/// Monte Carlo means against the exact enumerated expectation.
inline std::vector<CheckResult> check_mc_against_enumeration(const TwoLevelPlan& plan,
                                                             double z_bound,
                                                             const VerifyOptions& options) {
  const std::array which{TwoLevelStatistic::mu2v,     TwoLevelStatistic::mu3v,
                         TwoLevelStatistic::mu2u_grp, TwoLevelStatistic::mu3u_grp,
                         TwoLevelStatistic::mu2u_obs, TwoLevelStatistic::mu3u_obs};
  const auto exact = enumerate_statistics(validate_two_level_design(plan.sizes),
                                          TwoLevelLaws{plan.u, plan.v}, which);
  const auto reports = run_monte_carlo(plan, which, MonteCarloOptions{options.threads});
  std::vector<CheckResult> out;
  for (std::size_t k = 0; k < which.size(); ++k) {
    const auto& b = reports[k];
    CheckResult r;
    r.id = "two_level.mc_vs_exact." + b.name;
    r.description = "Monte Carlo mean of " + b.name + " against its enumerated expectation";
    r.expected = to_string(exact[k]);
    r.actual = detail::fmt(b.mean);
    r.tolerance = "|z| <= " + detail::fmt(z_bound);
    r.se = b.se;
    r.z = (b.mean - to_double(exact[k])) / b.se;
    r.passed = !b.degenerate && std::abs(*r.z) <= z_bound;
    out.push_back(std::move(r));
  }
  return out;
}

/// E[mu4v - 3 mu2v_sq] = 0 under a law with mu4 = 3 mu2^2.
inline CheckResult check_normal_consistency(const SizeProfile& sizes) {
  const auto design = validate_two_level_design(sizes);
  const TwoLevelLaws l{DiscreteDistribution::point_mass_zero(), laws::normal_kurtosis()};
  const std::array which{TwoLevelStatistic::mu4v, TwoLevelStatistic::mu2v_sq};
  const auto got =
      enumerate_statistics(design, l, which, EnumerationScope{Grouping::per_group, false, true, true});
  return detail::exact_check("two_level.normal_consistency", 0,
                             "E[mu4v - 3 mu2v_sq] under a three-point law with mu4 = 3 mu2^2",
                             Rational(0), got[0] - 3 * got[1]);
}

/// With u degenerate at 0 the between second moments average to 0.
inline CheckResult check_point_mass_u(const SizeProfile& sizes) {
  const auto design = validate_two_level_design(sizes);
  const TwoLevelLaws l{DiscreteDistribution::point_mass_zero(), laws::skewed()};
  return detail::exact_check("two_level.point_mass_u", 0, "E[mu2u_grp] with u degenerate at 0",
                             Rational(0),
                             enumerate_statistic(design, l, TwoLevelStatistic::mu2u_grp));
}

/// With v degenerate at 0 the three-level v estimators average to 0.
inline std::vector<CheckResult> check_degenerate_nesting(const NestedSizeProfile& sizes) {
  const auto design = validate_three_level_design(sizes);
  const ThreeLevelLaws l{laws::symmetric(), DiscreteDistribution::point_mass_zero(),
                         laws::skewed()};
  const std::array which{ThreeLevelStatistic::mu2v_grp, ThreeLevelStatistic::mu2v_obs};
  const auto got =
      enumerate_statistics(design, l, which, EnumerationScope{Grouping::per_group, false, true, true});
  std::vector<CheckResult> out;
  for (std::size_t k = 0; k < which.size(); ++k) {
    const std::string name(statistic_name(which[k]));
    out.push_back(detail::exact_check("three_level.degenerate_v." + name, 0,
                                      "E[" + name + "] with v degenerate at 0", Rational(0),
                                      got[k]));
  }
  return out;
}

namespace detail {

inline TwoLevelData<Rational> random_two_level(CheckRng& rng, const SizeProfile& sizes) {
  TwoLevelData<Rational> data;
  for (const auto j : sizes) {
    auto& g = data.groups.emplace_back();
    for (std::int64_t k = 0; k < j; ++k) g.push_back(rng.rational(-20, 20, 4));
  }
  return data;
}

inline ThreeLevelData<Rational> random_three_level(CheckRng& rng, const NestedSizeProfile& sizes) {
  ThreeLevelData<Rational> data;
  for (const auto& group : sizes) {
    auto& g = data.groups.emplace_back();
    for (const auto k : group) {
      auto& sub = g.emplace_back();
      for (std::int64_t m = 0; m < k; ++m) sub.push_back(rng.rational(-20, 20, 4));
    }
  }
  return data;
}

template <class Data, class F>
Data transform(const Data& data, F f) {
  Data out = data;
  for (auto& g : out.groups) {
    if constexpr (std::is_same_v<Data, TwoLevelData<Rational>>) {
      for (auto& y : g) y = f(y);
    } else {
      for (auto& sub : g) {
        for (auto& y : sub) y = f(y);
      }
    }
  }
  return out;
}

inline TwoLevelData<double> to_double_data(const TwoLevelData<Rational>& data) {
  TwoLevelData<double> out;
  for (const auto& g : data.groups) {
    auto& o = out.groups.emplace_back();
    for (const auto& y : g) o.push_back(to_double(y));
  }
  return out;
}

inline ThreeLevelData<double> to_double_data(const ThreeLevelData<Rational>& data) {
  ThreeLevelData<double> out;
  for (const auto& g : data.groups) {
    auto& o = out.groups.emplace_back();
    for (const auto& sub : g) {
      auto& s = o.emplace_back();
      for (const auto& y : sub) s.push_back(to_double(y));
    }
  }
  return out;
}

template <class Data>
double max_abs(const Data& data) {
  double m = 0.0;
  for (const auto& g : data.groups) {
    if constexpr (std::is_same_v<Data, TwoLevelData<double>>) {
      for (const double y : g) m = std::max(m, std::abs(y));
    } else {
      for (const auto& sub : g) {
        for (const double y : sub) m = std::max(m, std::abs(y));
      }
    }
  }
  return m;
}

struct Tally {
  std::size_t compared = 0;
  std::size_t failed = 0;
  std::string first_failure;

  void record(bool ok, const std::string& what) {
    ++compared;
    if (!ok) {
      if (failed == 0) first_failure = what;
      ++failed;
    }
  }
};

/// |a - b| <= tol * max(|a|, |b|, scale).
inline bool close(double a, double b, double tol, double scale) {
  return std::abs(a - b) <= tol * std::max({std::abs(a), std::abs(b), scale});
}

}  // namespace detail

/// Balanced designs: grp and obs estimates of orders 2 and 3 coincide in
/// rational mode. Order-4 agreement is recorded separately.
inline std::vector<CheckResult> check_balanced_equivalence(std::uint64_t seed, int datasets = 100,
                                                           int criterion = 8) {
  CheckRng rng(seed);
  detail::Tally low, fourth;
  std::size_t fourth_unavailable = 0;
  for (int t = 0; t < datasets; ++t) {
    const std::string tag = "dataset " + std::to_string(t);
    if (t % 2 == 0) {
      const auto n = static_cast<std::size_t>(rng.between(3, 5));
      const SizeProfile sizes(n, rng.between(3, 5));
      const auto data = detail::random_two_level(rng, sizes);
      const auto est = estimate_two_level(data, validate_two_level_design(sizes));
      low.record(est.grp.mu2u == est.obs.mu2u, tag + " mu2u");
      low.record(est.grp.mu3u == est.obs.mu3u, tag + " mu3u");
      if (est.grp.mu4u && est.obs.mu4u) {
        fourth.record(*est.grp.mu4u == *est.obs.mu4u, tag + " mu4u");
        fourth.record(*est.grp.mu2u_sq == *est.obs.mu2u_sq, tag + " mu2u_sq");
      } else {
        ++fourth_unavailable;
      }
    } else {
      const auto n = static_cast<std::size_t>(rng.between(3, 4));
      const auto j = static_cast<std::size_t>(rng.between(3, 4));
      const NestedSizeProfile sizes(n, SizeProfile(j, rng.between(3, 4)));
      const auto data = detail::random_three_level(rng, sizes);
      const auto est = estimate_three_level(data, validate_three_level_design(sizes));
      low.record(est.grp->mu2v == est.obs->mu2v, tag + " mu2v");
      low.record(est.grp->mu3v == est.obs->mu3v, tag + " mu3v");
      low.record(est.grp->mu2u == est.obs->mu2u, tag + " mu2u");
      low.record(est.grp->mu3u == est.obs->mu3u, tag + " mu3u");
    }
  }
  std::vector<CheckResult> out;
  CheckResult r;
  r.id = "balanced.orders_2_3";
  r.criterion = criterion;
  r.description = "grp and obs estimates of orders 2 and 3 on " + std::to_string(datasets) +
                  " balanced datasets";
  r.expected = "0 mismatches";
  r.actual = std::to_string(low.failed) + " mismatches in " + std::to_string(low.compared);
  r.tolerance = "exact";
  r.passed = low.failed == 0;
  r.note = low.first_failure;
  out.push_back(std::move(r));

  CheckResult f;
  f.id = "balanced.order_4";
  f.criterion = criterion;
  f.description = "grp and obs fourth-moment estimates on balanced two-level datasets";
  f.expected = "0 mismatches";
  f.actual = std::to_string(fourth.failed) + " mismatches in " + std::to_string(fourth.compared);
  f.tolerance = "exact";
  f.asserted = false;
  f.passed = fourth.failed == 0;
  f.note = std::to_string(fourth_unavailable) + " datasets had a singular system";
  if (!fourth.first_failure.empty()) f.note += "; first mismatch: " + fourth.first_failure;
  out.push_back(std::move(f));
  return out;
}

/// Location invariance and order-k scale equivariance, rational and float.
inline std::vector<CheckResult> check_equivariance(std::uint64_t seed, int datasets = 100,
                                                   double float_tolerance = 1e-12,
                                                   int criterion = 9) {
  CheckRng rng(seed);
  detail::Tally exact_shift, exact_scale, float_shift, float_scale;
  for (int t = 0; t < datasets; ++t) {
    const std::string tag = "dataset " + std::to_string(t);
    const Rational c = rng.rational(-50, 50, 8);
    const Rational s = rng.nonzero_rational(-12, 12, 4);
    const double sd = to_double(s);
    if (t % 2 == 0) {
      SizeProfile sizes(static_cast<std::size_t>(rng.between(3, 5)));
      for (auto& j : sizes) j = rng.between(3, 6);
      const auto design = validate_two_level_design(sizes);
      const auto ex = exact_two_level_constants(design);
      const auto fc = two_level_constants<double>(design);
      const auto data = detail::random_two_level(rng, sizes);
      const auto shifted = detail::transform(data, [&](const Rational& y) { return y + c; });
      const auto scaled = detail::transform(data, [&](const Rational& y) { return y * s; });
      const auto base = evaluate_statistics(data, ex, kAllTwoLevelStatistics);
      const auto sh = evaluate_statistics(shifted, ex, kAllTwoLevelStatistics);
      const auto sc = evaluate_statistics(scaled, ex, kAllTwoLevelStatistics);
      const auto dd = detail::to_double_data(data);
      const auto dsh = detail::to_double_data(shifted);
      const auto dsc = detail::to_double_data(scaled);
      const auto fbase = evaluate_statistics(dd, fc, kAllTwoLevelStatistics);
      const auto fsh = evaluate_statistics(dsh, fc, kAllTwoLevelStatistics);
      const auto fsc = evaluate_statistics(dsc, fc, kAllTwoLevelStatistics);
      const double shift_scale = std::max(detail::max_abs(dd), detail::max_abs(dsh));
      const double scale_scale = detail::max_abs(dsc);
      for (std::size_t k = 0; k < kAllTwoLevelStatistics.size(); ++k) {
        const std::string what = tag + " " + std::string(statistic_name(kAllTwoLevelStatistics[k]));
        const int order = statistic_order(kAllTwoLevelStatistics[k]);
        const bool available = base[k].value.has_value();
        exact_shift.record(sh[k].value.has_value() == available &&
                               (!available || *sh[k].value == *base[k].value),
                           what);
        exact_scale.record(sc[k].value.has_value() == available &&
                               (!available || *sc[k].value == power(s, order) * *base[k].value),
                           what);
        if (!available || !fbase[k].value) continue;
        if (fsh[k].value) {
          float_shift.record(detail::close(*fsh[k].value, *fbase[k].value, float_tolerance,
                                           std::pow(shift_scale, order)),
                             what);
        }
        if (fsc[k].value) {
          float_scale.record(detail::close(*fsc[k].value, std::pow(sd, order) * *fbase[k].value,
                                           float_tolerance, std::pow(scale_scale, order)),
                             what);
        }
      }
    } else {
      NestedSizeProfile sizes(static_cast<std::size_t>(rng.between(3, 4)));
      for (auto& g : sizes) {
        g.resize(static_cast<std::size_t>(rng.between(3, 4)));
        for (auto& k : g) k = rng.between(3, 5);
      }
      const auto design = validate_three_level_design(sizes);
      const auto ex = exact_three_level_constants(design);
      const auto fc = three_level_constants<double>(design);
      const auto data = detail::random_three_level(rng, sizes);
      const auto shifted = detail::transform(data, [&](const Rational& y) { return y + c; });
      const auto scaled = detail::transform(data, [&](const Rational& y) { return y * s; });
      const auto base = evaluate_statistics(data, ex, kAllThreeLevelStatistics);
      const auto sh = evaluate_statistics(shifted, ex, kAllThreeLevelStatistics);
      const auto sc = evaluate_statistics(scaled, ex, kAllThreeLevelStatistics);
      const auto dd = detail::to_double_data(data);
      const auto dsh = detail::to_double_data(shifted);
      const auto dsc = detail::to_double_data(scaled);
      const auto fbase = evaluate_statistics(dd, fc, kAllThreeLevelStatistics);
      const auto fsh = evaluate_statistics(dsh, fc, kAllThreeLevelStatistics);
      const auto fsc = evaluate_statistics(dsc, fc, kAllThreeLevelStatistics);
      const double shift_scale = std::max(detail::max_abs(dd), detail::max_abs(dsh));
      const double scale_scale = detail::max_abs(dsc);
      for (std::size_t k = 0; k < kAllThreeLevelStatistics.size(); ++k) {
        const std::string what =
            tag + " " + std::string(statistic_name(kAllThreeLevelStatistics[k]));
        const int order = statistic_order(kAllThreeLevelStatistics[k]);
        exact_shift.record(*sh[k].value == *base[k].value, what);
        exact_scale.record(*sc[k].value == power(s, order) * *base[k].value, what);
        float_shift.record(detail::close(*fsh[k].value, *fbase[k].value, float_tolerance,
                                         std::pow(shift_scale, order)),
                           what);
        float_scale.record(detail::close(*fsc[k].value, std::pow(sd, order) * *fbase[k].value,
                                         float_tolerance, std::pow(scale_scale, order)),
                           what);
      }
    }
  }
  std::vector<CheckResult> out;
  auto summarize = [&](std::string id, std::string description, const detail::Tally& tally,
                       std::string tolerance) {
    CheckResult r;
    r.id = std::move(id);
    r.criterion = criterion;
    r.description = std::move(description) + " on " + std::to_string(datasets) + " datasets";
    r.expected = "0 violations";
    r.actual = std::to_string(tally.failed) + " violations in " + std::to_string(tally.compared);
    r.tolerance = std::move(tolerance);
    r.passed = tally.failed == 0;
    r.note = tally.first_failure;
    out.push_back(std::move(r));
  };
  const std::string rel = "relative " + detail::fmt(float_tolerance) + " of max(|a|,|b|,max|y|^k)";
  summarize("equivariance.shift.exact", "adding a constant leaves estimates unchanged (rational)",
            exact_shift, "exact");
  summarize("equivariance.scale.exact", "scaling by s multiplies order-k estimates by s^k (rational)",
            exact_scale, "exact");
  summarize("equivariance.shift.float", "adding a constant leaves estimates unchanged (double)",
            float_shift, rel);
  summarize("equivariance.scale.float", "scaling by s multiplies order-k estimates by s^k (double)",
            float_scale, rel);
  return out;
}

/// expected_power against enumeration for random weights and laws.
inline std::vector<CheckResult> check_weighted_power(std::uint64_t seed, int trials = 50,
                                                     int criterion = 10) {
  CheckRng rng(seed);
  detail::Tally tally;
  const std::array orders{2, 3, 4};
  for (int t = 0; t < trials; ++t) {
    const auto length = static_cast<std::size_t>(rng.between(1, 10));
    const auto law = rng.zero_mean_law(static_cast<int>(rng.between(2, 3)));
    const auto m = true_moments(law);
    WeightedSumSpec<Rational> spec{{}, m.mu2(), m.mu3(), m.mu4()};
    for (std::size_t l = 0; l < length; ++l) spec.weights.push_back(rng.rational(-6, 6, 5));
    const auto enumerated = enumerate_weighted_power(spec.weights, law, orders);
    for (std::size_t k = 0; k < orders.size(); ++k) {
      tally.record(expected_power(spec, orders[k]) == enumerated[k],
                   "trial " + std::to_string(t) + " order " + std::to_string(orders[k]));
    }
  }
  CheckResult r;
  r.id = "kernel.weighted_power";
  r.criterion = criterion;
  r.description = "expected_power against enumeration on " + std::to_string(trials) +
                  " random weight vectors, orders 2-4";
  r.expected = "0 mismatches";
  r.actual = std::to_string(tally.failed) + " mismatches in " + std::to_string(tally.compared);
  r.tolerance = "exact";
  r.passed = tally.failed == 0;
  r.note = tally.first_failure;
  return {r};
}

/// Designs used by the suites.
namespace designs {

inline SizeProfile unbalanced_small() { return {3, 3, 4}; }
inline SizeProfile four_each() { return {4, 4, 4}; }
inline SizeProfile three_each() { return {3, 3, 3}; }
/// Smallest unbalanced design with nonsingular within and between systems.
inline SizeProfile four_groups() { return {3, 3, 3, 4}; }
inline NestedSizeProfile nested_three() { return {{3, 3, 3}, {3, 3, 3}, {3, 3, 3}}; }

}  // namespace designs

inline TwoLevelLaws default_two_level_laws() { return {laws::skewed_left(), laws::skewed()}; }

inline ThreeLevelLaws default_three_level_laws() {
  return {laws::skewed_left(), laws::symmetric(), laws::skewed()};
}

inline std::vector<CheckResult> exact_suite(const VerifyOptions& options) {
  std::vector<CheckResult> out;
  auto append = [&out](std::vector<CheckResult> more) {
    for (auto& r : more) out.push_back(std::move(r));
  };
  append(check_two_level_exact(designs::unbalanced_small(),
                               {laws::symmetric(), laws::skewed()}));
  append(check_v_fourth(designs::four_each(),
                        {DiscreteDistribution::point_mass_zero(), laws::skewed()}));
  append(check_u_fourth_determinant(designs::four_each(), Rational(0), Rational(0)));
  append(check_u_fourth_true_nuisances(designs::four_groups(), default_two_level_laws()));
  append(check_plugin_bias_exact(designs::four_groups(), default_two_level_laws()));
  append(check_singularity_all_three(designs::three_each()));
  append(check_three_level_exact(designs::nested_three(), default_three_level_laws()));
  append(check_balanced_equivalence(options.seed));
  append(check_equivariance(options.seed));
  append(check_weighted_power(options.seed));
  out.push_back(check_normal_consistency(designs::four_each()));
  out.push_back(check_point_mass_u(designs::unbalanced_small()));
  append(check_degenerate_nesting(designs::nested_three()));
  return out;
}

inline std::vector<CheckResult> mc_suite(const VerifyOptions& options) {
  std::vector<CheckResult> out;
  auto append = [&out](std::vector<CheckResult> more) {
    for (auto& r : more) out.push_back(std::move(r));
  };
  const auto l = default_two_level_laws();
  const std::array low{TwoLevelStatistic::mu2u_grp, TwoLevelStatistic::mu3u_grp,
                       TwoLevelStatistic::mu2u_obs, TwoLevelStatistic::mu3u_obs};
  const std::array fourth{TwoLevelStatistic::mu4u_grp, TwoLevelStatistic::mu4u_obs};
  for (const auto& sizes : {designs::four_each(), designs::four_groups()}) {
    const TwoLevelPlan plan{sizes, l.u, l.v, options.two_level_reps, options.seed};
    append(check_two_level_mc(plan, low, fourth, 4.0, 4, options));
  }
  const auto l3 = default_three_level_laws();
  append(check_three_level_mc(
      ThreeLevelPlan{designs::nested_three(), l3.u, l3.v, l3.w, options.three_level_reps,
                     options.seed},
      4.0, 7, options));
  append(check_mc_against_enumeration(
      TwoLevelPlan{designs::unbalanced_small(), laws::symmetric(), laws::skewed(),
                   options.two_level_reps, options.seed},
      5.0, options));
  return out;
}

inline bool all_asserted_pass(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (r.asserted && !r.passed) return false;
  }
  return true;
}

}  // namespace mlmom
