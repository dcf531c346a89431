#pragma once

// Datasets, size profiles and the exact design constants every estimator
// consumes. Summaries depend on group sizes only, never on observations.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mlmom/error.hpp"
#include "mlmom/number.hpp"

namespace mlmom {

/// y_ij grouped as groups[i][j].
template <Field T>
struct TwoLevelData {
  std::vector<std::vector<T>> groups;

  friend bool operator==(const TwoLevelData&, const TwoLevelData&) = default;
};

/// y_ijk grouped as groups[i][j][k].
template <Field T>
struct ThreeLevelData {
  std::vector<std::vector<std::vector<T>>> groups;

  friend bool operator==(const ThreeLevelData&, const ThreeLevelData&) = default;
};

using TwoLevelDataset = TwoLevelData<double>;
using ThreeLevelDataset = ThreeLevelData<double>;

using SizeProfile = std::vector<std::int64_t>;
using NestedSizeProfile = std::vector<std::vector<std::int64_t>>;

/// Group count, sizes and power sums for one level of nesting. Reciprocal sums
/// are exact rationals; integer power sums are arbitrary precision.
struct DesignSummary {
  std::size_t n = 0;
  SizeProfile sizes;
  std::int64_t total = 0;
  Rational inv_sum1, inv_sum2, inv_sum3;
  Integer pow_sum1, pow_sum2, pow_sum3, pow_sum4;

  /// Pure arithmetic on sizes; only checks that each size is positive.
  static DesignSummary from_sizes(std::span<const std::int64_t> sizes) {
    DesignSummary s;
    s.n = sizes.size();
    s.sizes.assign(sizes.begin(), sizes.end());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const std::int64_t size = sizes[i];
      if (size < 1) {
        throw Error(ErrorCode::group_too_small,
                    "group " + std::to_string(i) + " is empty", {{"group", i}});
      }
      const Integer z(static_cast<long long>(size));
      const Rational q(z);
      s.total += size;
      s.inv_sum1 += 1 / q;
      s.inv_sum2 += 1 / (q * q);
      s.inv_sum3 += 1 / (q * q * q);
      s.pow_sum1 += z;
      s.pow_sum2 += z * z;
      s.pow_sum3 += z * z * z;
      s.pow_sum4 += z * z * z * z;
    }
    return s;
  }

  friend bool operator==(const DesignSummary&, const DesignSummary&) = default;
};

/// Three-level sizes: one DesignSummary per group over its subgroup sizes K_ij
/// (so groups[i].total == K_i), an outer summary over K_i, and global power
/// sums of K_ij over every (i, j).
struct NestedDesignSummary {
  std::vector<DesignSummary> groups;
  DesignSummary outer;
  Integer sub_pow_sum2, sub_pow_sum3;

  [[nodiscard]] std::size_t n() const { return outer.n; }
  [[nodiscard]] std::int64_t total() const { return outer.total; }

  [[nodiscard]] NestedSizeProfile sizes() const {
    NestedSizeProfile out;
    out.reserve(groups.size());
    for (const auto& g : groups) out.push_back(g.sizes);
    return out;
  }

  static NestedDesignSummary from_sizes(const NestedSizeProfile& sizes) {
    NestedDesignSummary s;
    SizeProfile group_totals;
    group_totals.reserve(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i].empty()) {
        throw Error(ErrorCode::subgroup_count_too_small,
                    "group " + std::to_string(i) + " has no subgroups", {{"group", i}});
      }
      s.groups.push_back(DesignSummary::from_sizes(sizes[i]));
      group_totals.push_back(s.groups.back().total);
      s.sub_pow_sum2 += s.groups.back().pow_sum2;
      s.sub_pow_sum3 += s.groups.back().pow_sum3;
    }
    s.outer = DesignSummary::from_sizes(group_totals);
    return s;
  }

  friend bool operator==(const NestedDesignSummary&, const NestedDesignSummary&) = default;
};

/// Gate for two-level size profiles: n >= 3 and every J_i >= 3.
inline DesignSummary validate_two_level_design(std::span<const std::int64_t> sizes) {
  if (sizes.size() < 3) {
    throw Error(ErrorCode::too_few_groups,
                "need at least 3 groups, got " + std::to_string(sizes.size()),
                {{"groups", sizes.size()}});
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 3) {
      throw Error(ErrorCode::group_too_small,
                  "group " + std::to_string(i) + " has " + std::to_string(sizes[i]) +
                      " observations, need at least 3",
                  {{"group", i}});
    }
  }
  return DesignSummary::from_sizes(sizes);
}

/// Gate for three-level size profiles: n >= 3, every J_i >= 3, every K_ij >= 3.
inline NestedDesignSummary validate_three_level_design(const NestedSizeProfile& sizes) {
  if (sizes.size() < 3) {
    throw Error(ErrorCode::too_few_groups,
                "need at least 3 groups, got " + std::to_string(sizes.size()),
                {{"groups", sizes.size()}});
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i].size() < 3) {
      throw Error(ErrorCode::subgroup_count_too_small,
                  "group " + std::to_string(i) + " has " + std::to_string(sizes[i].size()) +
                      " subgroups, need at least 3",
                  {{"group", i}});
    }
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (std::size_t j = 0; j < sizes[i].size(); ++j) {
      if (sizes[i][j] < 3) {
        throw Error(ErrorCode::subgroup_too_small,
                    "subgroup (" + std::to_string(i) + ", " + std::to_string(j) + ") has " +
                        std::to_string(sizes[i][j]) + " observations, need at least 3",
                    {{"group", i}, {"subgroup", j}});
      }
    }
  }
  return NestedDesignSummary::from_sizes(sizes);
}

template <Field T>
SizeProfile size_profile(const TwoLevelData<T>& data) {
  SizeProfile sizes;
  sizes.reserve(data.groups.size());
  for (const auto& g : data.groups) sizes.push_back(static_cast<std::int64_t>(g.size()));
  return sizes;
}

template <Field T>
NestedSizeProfile size_profile(const ThreeLevelData<T>& data) {
  NestedSizeProfile sizes;
  sizes.reserve(data.groups.size());
  for (const auto& g : data.groups) {
    auto& row = sizes.emplace_back();
    for (const auto& sub : g) row.push_back(static_cast<std::int64_t>(sub.size()));
  }
  return sizes;
}

/// Checks, in order: group count, group sizes, then finiteness of values.
template <Field T>
DesignSummary validate_two_level(const TwoLevelData<T>& data) {
  DesignSummary summary = validate_two_level_design(size_profile(data));
  for (std::size_t i = 0; i < data.groups.size(); ++i) {
    for (std::size_t j = 0; j < data.groups[i].size(); ++j) {
      if (!is_finite(data.groups[i][j])) {
        throw Error(ErrorCode::non_finite_value,
                    "observation (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") is not finite",
                    {{"group", i}, {"observation", j}});
      }
    }
  }
  return summary;
}

template <Field T>
NestedDesignSummary validate_three_level(const ThreeLevelData<T>& data) {
  NestedDesignSummary summary = validate_three_level_design(size_profile(data));
  for (std::size_t i = 0; i < data.groups.size(); ++i) {
    for (std::size_t j = 0; j < data.groups[i].size(); ++j) {
      for (std::size_t k = 0; k < data.groups[i][j].size(); ++k) {
        if (!is_finite(data.groups[i][j][k])) {
          throw Error(ErrorCode::non_finite_value,
                      "observation (" + std::to_string(i) + ", " + std::to_string(j) + ", " +
                          std::to_string(k) + ") is not finite",
                      {{"group", i}, {"subgroup", j}, {"observation", k}});
        }
      }
    }
  }
  return summary;
}

}  // namespace mlmom
