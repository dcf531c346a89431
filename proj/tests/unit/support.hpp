#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "mlmom/design.hpp"

namespace test_support {

using mlmom::Rational;

inline Rational q(const char* text) { return Rational(std::string(text)); }

inline mlmom::TwoLevelData<Rational> exact(
    std::initializer_list<std::initializer_list<long long>> groups) {
  mlmom::TwoLevelData<Rational> out;
  for (const auto& g : groups) {
    auto& dst = out.groups.emplace_back();
    for (long long y : g) dst.emplace_back(y);
  }
  return out;
}

inline mlmom::ThreeLevelData<Rational> exact3(
    std::initializer_list<std::initializer_list<std::initializer_list<long long>>> groups) {
  mlmom::ThreeLevelData<Rational> out;
  for (const auto& g : groups) {
    auto& dst = out.groups.emplace_back();
    for (const auto& s : g) {
      auto& sub = dst.emplace_back();
      for (long long y : s) sub.emplace_back(y);
    }
  }
  return out;
}

template <class Data>
auto as_double(const Data& data) {
  if constexpr (std::is_same_v<Data, mlmom::TwoLevelData<Rational>>) {
    mlmom::TwoLevelDataset out;
    for (const auto& g : data.groups) {
      auto& dst = out.groups.emplace_back();
      for (const auto& y : g) dst.push_back(mlmom::to_double(y));
    }
    return out;
  } else {
    mlmom::ThreeLevelDataset out;
    for (const auto& g : data.groups) {
      auto& dst = out.groups.emplace_back();
      for (const auto& s : g) {
        auto& sub = dst.emplace_back();
        for (const auto& y : s) sub.push_back(mlmom::to_double(y));
      }
    }
    return out;
  }
}

/// |a - b| <= rel * max(1, |b|)
inline bool near(double a, const Rational& b, double rel = 1e-10) {
  const double target = mlmom::to_double(b);
  return std::abs(a - target) <= rel * std::max(1.0, std::abs(target));
}

}  // namespace test_support
