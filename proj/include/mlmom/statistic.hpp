#pragma once

// Named selectors for every estimator, the true value each one targets, and
// batch evaluation used by the oracle, the Monte Carlo harness and the CLI.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mlmom/error.hpp"
#include "mlmom/kernel.hpp"
#include "mlmom/three_level.hpp"
#include "mlmom/two_level.hpp"

namespace mlmom {

enum class TwoLevelStatistic {
  mu2v,
  mu3v,
  mu4v,
  mu2v_sq,
  mu2u_grp,
  mu3u_grp,
  mu4u_grp,
  mu2u_sq_grp,
  mu2u_obs,
  mu3u_obs,
  mu4u_obs,
  mu2u_sq_obs,
};

enum class ThreeLevelStatistic {
  mu2w,
  mu3w,
  mu2v_grp,
  mu3v_grp,
  mu2u_grp,
  mu3u_grp,
  mu2v_obs,
  mu3v_obs,
  mu2u_obs,
  mu3u_obs,
};

inline constexpr std::array<TwoLevelStatistic, 12> kAllTwoLevelStatistics{
    TwoLevelStatistic::mu2v,        TwoLevelStatistic::mu3v,     TwoLevelStatistic::mu4v,
    TwoLevelStatistic::mu2v_sq,     TwoLevelStatistic::mu2u_grp, TwoLevelStatistic::mu3u_grp,
    TwoLevelStatistic::mu4u_grp,    TwoLevelStatistic::mu2u_sq_grp, TwoLevelStatistic::mu2u_obs,
    TwoLevelStatistic::mu3u_obs,    TwoLevelStatistic::mu4u_obs, TwoLevelStatistic::mu2u_sq_obs,
};

inline constexpr std::array<ThreeLevelStatistic, 10> kAllThreeLevelStatistics{
    ThreeLevelStatistic::mu2w,     ThreeLevelStatistic::mu3w,     ThreeLevelStatistic::mu2v_grp,
    ThreeLevelStatistic::mu3v_grp, ThreeLevelStatistic::mu2u_grp, ThreeLevelStatistic::mu3u_grp,
    ThreeLevelStatistic::mu2v_obs, ThreeLevelStatistic::mu3v_obs, ThreeLevelStatistic::mu2u_obs,
    ThreeLevelStatistic::mu3u_obs,
};

constexpr std::string_view statistic_name(TwoLevelStatistic s) {
  switch (s) {
    case TwoLevelStatistic::mu2v: return "mu2v";
    case TwoLevelStatistic::mu3v: return "mu3v";
    case TwoLevelStatistic::mu4v: return "mu4v";
    case TwoLevelStatistic::mu2v_sq: return "mu2v_sq";
    case TwoLevelStatistic::mu2u_grp: return "mu2u_grp";
    case TwoLevelStatistic::mu3u_grp: return "mu3u_grp";
    case TwoLevelStatistic::mu4u_grp: return "mu4u_grp";
    case TwoLevelStatistic::mu2u_sq_grp: return "mu2u_sq_grp";
    case TwoLevelStatistic::mu2u_obs: return "mu2u_obs";
    case TwoLevelStatistic::mu3u_obs: return "mu3u_obs";
    case TwoLevelStatistic::mu4u_obs: return "mu4u_obs";
    case TwoLevelStatistic::mu2u_sq_obs: return "mu2u_sq_obs";
  }
  return "?";
}

constexpr std::string_view statistic_name(ThreeLevelStatistic s) {
  switch (s) {
    case ThreeLevelStatistic::mu2w: return "mu2w";
    case ThreeLevelStatistic::mu3w: return "mu3w";
    case ThreeLevelStatistic::mu2v_grp: return "mu2v_grp";
    case ThreeLevelStatistic::mu3v_grp: return "mu3v_grp";
    case ThreeLevelStatistic::mu2u_grp: return "mu2u_grp";
    case ThreeLevelStatistic::mu3u_grp: return "mu3u_grp";
    case ThreeLevelStatistic::mu2v_obs: return "mu2v_obs";
    case ThreeLevelStatistic::mu3v_obs: return "mu3v_obs";
    case ThreeLevelStatistic::mu2u_obs: return "mu2u_obs";
    case ThreeLevelStatistic::mu3u_obs: return "mu3u_obs";
  }
  return "?";
}

/// Moment order of the target; the squared-second-moment targets count as 4.
constexpr int statistic_order(TwoLevelStatistic s) {
  switch (s) {
    case TwoLevelStatistic::mu2v:
    case TwoLevelStatistic::mu2u_grp:
    case TwoLevelStatistic::mu2u_obs: return 2;
    case TwoLevelStatistic::mu3v:
    case TwoLevelStatistic::mu3u_grp:
    case TwoLevelStatistic::mu3u_obs: return 3;
    default: return 4;
  }
}

constexpr int statistic_order(ThreeLevelStatistic s) {
  switch (s) {
    case ThreeLevelStatistic::mu2w:
    case ThreeLevelStatistic::mu2v_grp:
    case ThreeLevelStatistic::mu2u_grp:
    case ThreeLevelStatistic::mu2v_obs:
    case ThreeLevelStatistic::mu2u_obs: return 2;
    default: return 3;
  }
}

inline Rational true_value(TwoLevelStatistic s, const TrueMoments& u, const TrueMoments& v) {
  switch (s) {
    case TwoLevelStatistic::mu2v: return v.mu2();
    case TwoLevelStatistic::mu3v: return v.mu3();
    case TwoLevelStatistic::mu4v: return v.mu4();
    case TwoLevelStatistic::mu2v_sq: return v.mu2() * v.mu2();
    case TwoLevelStatistic::mu2u_grp:
    case TwoLevelStatistic::mu2u_obs: return u.mu2();
    case TwoLevelStatistic::mu3u_grp:
    case TwoLevelStatistic::mu3u_obs: return u.mu3();
    case TwoLevelStatistic::mu4u_grp:
    case TwoLevelStatistic::mu4u_obs: return u.mu4();
    case TwoLevelStatistic::mu2u_sq_grp:
    case TwoLevelStatistic::mu2u_sq_obs: return u.mu2() * u.mu2();
  }
  return Rational(0);
}

inline Rational true_value(ThreeLevelStatistic s, const TrueMoments& u, const TrueMoments& v,
                           const TrueMoments& w) {
  switch (s) {
    case ThreeLevelStatistic::mu2w: return w.mu2();
    case ThreeLevelStatistic::mu3w: return w.mu3();
    case ThreeLevelStatistic::mu2v_grp:
    case ThreeLevelStatistic::mu2v_obs: return v.mu2();
    case ThreeLevelStatistic::mu3v_grp:
    case ThreeLevelStatistic::mu3v_obs: return v.mu3();
    case ThreeLevelStatistic::mu2u_grp:
    case ThreeLevelStatistic::mu2u_obs: return u.mu2();
    case ThreeLevelStatistic::mu3u_grp:
    case ThreeLevelStatistic::mu3u_obs: return u.mu3();
  }
  return Rational(0);
}

/// A computed value, or the reason it is unavailable.
template <Field T>
struct StatisticValue {
  std::optional<T> value;
  std::optional<ErrorCode> error;
};

template <Field T>
std::vector<StatisticValue<T>> evaluate_statistics(
    const TwoLevelData<T>& data, const TwoLevelConstants<T>& constants,
    std::span<const TwoLevelStatistic> which,
    const std::optional<Nuisances<T>>& nuisances = std::nullopt) {
  bool need_grp = false;
  bool need_obs = false;
  for (const auto s : which) {
    const auto name = statistic_name(s);
    need_grp = need_grp || name.ends_with("_grp");
    need_obs = need_obs || name.ends_with("_obs");
  }
  const auto within = estimate_within(data, constants);
  std::optional<BetweenEstimates<T>> grp, obs;
  if (need_grp) grp = estimate_between(data, constants, within, Scheme::grp, nuisances);
  if (need_obs) obs = estimate_between(data, constants, within, Scheme::obs, nuisances);

  auto fourth = [](const std::optional<T>& v, const std::optional<ErrorCode>& e) {
    return StatisticValue<T>{v, v ? std::nullopt : e};
  };
  std::vector<StatisticValue<T>> out;
  out.reserve(which.size());
  for (const auto s : which) {
    switch (s) {
      case TwoLevelStatistic::mu2v: out.push_back({within.mu2v, {}}); break;
      case TwoLevelStatistic::mu3v: out.push_back({within.mu3v, {}}); break;
      case TwoLevelStatistic::mu4v: out.push_back(fourth(within.mu4v, within.fourth_error)); break;
      case TwoLevelStatistic::mu2v_sq:
        out.push_back(fourth(within.mu2v_sq, within.fourth_error));
        break;
      case TwoLevelStatistic::mu2u_grp: out.push_back({grp->mu2u, {}}); break;
      case TwoLevelStatistic::mu3u_grp: out.push_back({grp->mu3u, {}}); break;
      case TwoLevelStatistic::mu4u_grp: out.push_back(fourth(grp->mu4u, grp->fourth_error)); break;
      case TwoLevelStatistic::mu2u_sq_grp:
        out.push_back(fourth(grp->mu2u_sq, grp->fourth_error));
        break;
      case TwoLevelStatistic::mu2u_obs: out.push_back({obs->mu2u, {}}); break;
      case TwoLevelStatistic::mu3u_obs: out.push_back({obs->mu3u, {}}); break;
      case TwoLevelStatistic::mu4u_obs: out.push_back(fourth(obs->mu4u, obs->fourth_error)); break;
      case TwoLevelStatistic::mu2u_sq_obs:
        out.push_back(fourth(obs->mu2u_sq, obs->fourth_error));
        break;
    }
  }
  return out;
}

template <Field T>
std::vector<StatisticValue<T>> evaluate_statistics(const ThreeLevelData<T>& data,
                                                   const ThreeLevelConstants<T>& constants,
                                                   std::span<const ThreeLevelStatistic> which) {
  bool need_grp = false;
  bool need_obs = false;
  for (const auto s : which) {
    const auto name = statistic_name(s);
    need_grp = need_grp || name.ends_with("_grp");
    need_obs = need_obs || name.ends_with("_obs");
  }
  const auto est = estimate_three_level(data, constants, need_grp, need_obs);
  std::vector<StatisticValue<T>> out;
  out.reserve(which.size());
  for (const auto s : which) {
    switch (s) {
      case ThreeLevelStatistic::mu2w: out.push_back({est.mu2w, {}}); break;
      case ThreeLevelStatistic::mu3w: out.push_back({est.mu3w, {}}); break;
      case ThreeLevelStatistic::mu2v_grp: out.push_back({est.grp->mu2v, {}}); break;
      case ThreeLevelStatistic::mu3v_grp: out.push_back({est.grp->mu3v, {}}); break;
      case ThreeLevelStatistic::mu2u_grp: out.push_back({est.grp->mu2u, {}}); break;
      case ThreeLevelStatistic::mu3u_grp: out.push_back({est.grp->mu3u, {}}); break;
      case ThreeLevelStatistic::mu2v_obs: out.push_back({est.obs->mu2v, {}}); break;
      case ThreeLevelStatistic::mu3v_obs: out.push_back({est.obs->mu3v, {}}); break;
      case ThreeLevelStatistic::mu2u_obs: out.push_back({est.obs->mu2u, {}}); break;
      case ThreeLevelStatistic::mu3u_obs: out.push_back({est.obs->mu3u, {}}); break;
    }
  }
  return out;
}

/// Single value; an unavailable estimate is raised as its error.
template <Field T, class Data, class Constants, class Statistic>
T evaluate_or_throw(const Data& data, const Constants& constants, Statistic which) {
  const std::array<Statistic, 1> one{which};
  auto values = evaluate_statistics(data, constants, std::span<const Statistic>(one));
  if (!values.front().value) {
    const ErrorCode code = values.front().error.value_or(ErrorCode::singular_system);
    throw Error(code, std::string(statistic_name(which)) + " is unavailable for this design");
  }
  return *values.front().value;
}

}  // namespace mlmom
