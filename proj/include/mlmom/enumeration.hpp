#pragma once

// Exact expectations by exhaustive enumeration over finite-support latent
// laws, in rational arithmetic.
//
// Latent draws are laid out as "slots". A statistic whose value is a sum of
// terms each depending on one block of slots can be enumerated block by
// block: with x* the reference outcome (every slot at its first atom),
//
//   E[f] = sum_b E[f(x* with block b free)] - (blocks - 1) f(x*).
//
// Slots outside every block stay at x*; the statistic must not depend on
// them. Both assumptions are spot-checked before enumerating.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mlmom/design.hpp"
#include "mlmom/distribution.hpp"
#include "mlmom/error.hpp"
#include "mlmom/number.hpp"
#include "mlmom/statistic.hpp"

namespace mlmom {

inline constexpr std::uint64_t kEnumerationBudget = 20'000'000;

struct EnumerationOptions {
  std::uint64_t budget = kEnumerationBudget;  // total evaluated outcomes
  unsigned threads = 0;                       // 0: hardware concurrency
};

using SlotBlocks = std::vector<std::vector<std::size_t>>;
/// Vector-valued so several estimators share one pass over the outcomes.
using SlotStatistic = std::function<std::vector<Rational>(std::span<const Rational>)>;

namespace detail {

inline unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

inline std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > UINT64_MAX / a) return UINT64_MAX;
  return a * b;
}

struct BlockSum {
  std::vector<Rational> weighted;
  Rational probability;
};

inline void accumulate(std::vector<Rational>& into, const std::vector<Rational>& values,
                       const Rational& weight) {
  if (into.empty()) into.assign(values.size(), Rational(0));
  if (values.size() != into.size()) {
    throw std::logic_error("statistic changed its output length");
  }
  for (std::size_t k = 0; k < values.size(); ++k) into[k] += weight * values[k];
}

inline BlockSum enumerate_block(std::span<const DiscreteDistribution* const> laws,
                                const std::vector<std::size_t>& block,
                                const std::vector<Rational>& reference, std::uint64_t outcomes,
                                const SlotStatistic& statistic, unsigned threads) {
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(std::max(1U, threads), outcomes));
  std::vector<BlockSum> partial(workers);
  std::vector<std::exception_ptr> failures(workers);

  auto work = [&](unsigned w) {
    try {
      const std::uint64_t begin = outcomes * w / workers;
      const std::uint64_t end = outcomes * (w + 1) / workers;
      std::vector<Rational> values = reference;
      BlockSum acc{{}, Rational(0)};
      for (std::uint64_t index = begin; index < end; ++index) {
        std::uint64_t rest = index;
        Rational p(1);
        for (const std::size_t slot : block) {
          const auto& atoms = laws[slot]->atoms();
          const auto& atom = atoms[rest % atoms.size()];
          rest /= atoms.size();
          values[slot] = atom.value;
          p *= atom.probability;
        }
        accumulate(acc.weighted, statistic(values), p);
        acc.probability += p;
      }
      partial[w] = std::move(acc);
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };

  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  // Fixed-order reduction.
  BlockSum total{{}, Rational(0)};
  for (const auto& p : partial) {
    if (!p.weighted.empty()) accumulate(total.weighted, p.weighted, Rational(1));
    total.probability += p.probability;
  }
  return total;
}

}  // namespace detail

/// Exact E[statistic] over independent slots with the given laws.
inline std::vector<Rational> enumerate_slots(std::span<const DiscreteDistribution* const> laws,
                                const SlotBlocks& blocks, const SlotStatistic& statistic,
                                const EnumerationOptions& options = {}) {
  std::vector<std::uint64_t> outcomes_per_block;
  std::uint64_t total_outcomes = 0;
  std::size_t variables = 0;
  std::vector<bool> covered(laws.size(), false);
  for (const auto& block : blocks) {
    std::uint64_t outcomes = 1;
    for (const std::size_t slot : block) {
      if (slot >= laws.size() || covered[slot]) {
        throw Error(ErrorCode::usage, "enumeration blocks must be disjoint slot indices");
      }
      covered[slot] = true;
      outcomes = detail::saturating_mul(outcomes, laws[slot]->size());
      if (laws[slot]->size() > 1) ++variables;
    }
    outcomes_per_block.push_back(outcomes);
    total_outcomes = std::min<std::uint64_t>(UINT64_MAX - outcomes, total_outcomes) + outcomes;
  }
  if (total_outcomes > options.budget) {
    throw Error(ErrorCode::enumeration_too_large,
                std::to_string(variables) + " enumerated variables need " +
                    (total_outcomes == UINT64_MAX ? std::string("more than 2^64")
                                                  : std::to_string(total_outcomes)) +
                    " outcomes, bound is " + std::to_string(options.budget),
                {{"variables", variables}, {"bound", static_cast<std::size_t>(options.budget)}});
  }

  std::vector<Rational> reference;
  reference.reserve(laws.size());
  for (const auto* law : laws) reference.push_back(law->atoms().front().value);
  const std::vector<Rational> at_reference = statistic(reference);

  // Spot checks: no dependence on uncovered slots, additivity across blocks.
  auto at_last_atoms = [&](std::vector<Rational> values, auto&& include) {
    for (std::size_t s = 0; s < laws.size(); ++s) {
      if (include(s)) values[s] = laws[s]->atoms().back().value;
    }
    return values;
  };
  // One slot at a time: moving all held slots together hides dependence for
  // location-invariant statistics.
  for (std::size_t held = 0; held < laws.size(); ++held) {
    if (covered[held] || laws[held]->size() < 2) continue;
    const auto moved = at_last_atoms(reference, [held](std::size_t s) { return s == held; });
    if (statistic(moved) != at_reference) {
      throw Error(ErrorCode::locality_violation,
                  "statistic depends on draws outside the enumerated blocks",
                  {{"slot", held}});
    }
  }
  if (blocks.size() >= 2) {
    auto in_block = [&](std::size_t b) {
      return [&, b](std::size_t s) {
        return std::find(blocks[b].begin(), blocks[b].end(), s) != blocks[b].end();
      };
    };
    const auto first = at_last_atoms(reference, in_block(0));
    const auto second = at_last_atoms(reference, in_block(1));
    const auto both = at_last_atoms(first, in_block(1));
    const auto f_both = statistic(both);
    const auto f_first = statistic(first);
    const auto f_second = statistic(second);
    for (std::size_t k = 0; k < at_reference.size(); ++k) {
      if (f_both[k] + at_reference[k] == f_first[k] + f_second[k]) continue;
      throw Error(ErrorCode::locality_violation, "statistic is not additive across blocks");
    }
  }

  const unsigned threads = detail::resolve_threads(options.threads);
  std::vector<Rational> expectation(at_reference.size(), Rational(0));
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto sum = detail::enumerate_block(laws, blocks[b], reference, outcomes_per_block[b],
                                             statistic, threads);
    if (sum.probability != 1) {
      throw std::logic_error("enumerated probabilities sum to " + to_string(sum.probability));
    }
    detail::accumulate(expectation, sum.weighted, Rational(1));
  }
  if (blocks.empty()) return at_reference;
  const Rational repeats(static_cast<long long>(blocks.size() - 1));
  for (std::size_t k = 0; k < expectation.size(); ++k) expectation[k] -= repeats * at_reference[k];
  return expectation;
}

/// Exact E[S^k] for S = sum_l w_l x_l with x_l i.i.d. from `law`, one
/// entry per requested order.
inline std::vector<Rational> enumerate_weighted_power(std::span<const Rational> weights,
                                                      const DiscreteDistribution& law,
                                                      std::span<const int> orders,
                                                      const EnumerationOptions& options = {}) {
  if (weights.empty()) throw Error(ErrorCode::invalid_weights, "weight list is empty");
  for (const int k : orders) {
    if (k < 1) throw Error(ErrorCode::unsupported_order, "order must be positive");
  }
  const std::vector<const DiscreteDistribution*> laws(weights.size(), &law);
  SlotBlocks blocks(1);
  for (std::size_t l = 0; l < weights.size(); ++l) blocks.front().push_back(l);
  const std::vector<Rational> w(weights.begin(), weights.end());
  const std::vector<int> k(orders.begin(), orders.end());
  return enumerate_slots(
      laws, blocks,
      [&w, &k](std::span<const Rational> x) {
        Rational s(0);
        for (std::size_t l = 0; l < w.size(); ++l) s += w[l] * x[l];
        std::vector<Rational> out;
        out.reserve(k.size());
        for (const int order : k) out.push_back(power(s, order));
        return out;
      },
      options);
}

struct TwoLevelLaws {
  DiscreteDistribution u, v;
};

struct ThreeLevelLaws {
  DiscreteDistribution u, v, w;
};

enum class Grouping { joint, per_group, per_subgroup };

/// Which latent levels are enumerated and how the draws are blocked. Levels
/// left out are held at their reference atom.
struct EnumerationScope {
  Grouping grouping = Grouping::joint;
  bool u = true;
  bool v = true;
  bool w = true;
};

using TwoLevelRationalStatistic = std::function<std::vector<Rational>(const TwoLevelData<Rational>&)>;
using ThreeLevelRationalStatistic = std::function<std::vector<Rational>(const ThreeLevelData<Rational>&)>;

/// Slot layout: u_0..u_{n-1}, then v_ij in group order.
inline std::vector<Rational> enumerate_expectation(const DesignSummary& design, const TwoLevelLaws& laws,
                                                   const TwoLevelRationalStatistic& statistic,
                                      const EnumerationScope& scope = {},
                                      const EnumerationOptions& options = {}) {
  if (scope.grouping == Grouping::per_subgroup) {
    throw Error(ErrorCode::usage, "two-level designs have no subgroups");
  }
  std::vector<const DiscreteDistribution*> slot_laws;
  SlotBlocks blocks(scope.grouping == Grouping::joint ? 1 : design.n);
  auto block_of = [&](std::size_t group) -> std::vector<std::size_t>& {
    return scope.grouping == Grouping::joint ? blocks.front() : blocks[group];
  };
  for (std::size_t i = 0; i < design.n; ++i) {
    if (scope.u) block_of(i).push_back(slot_laws.size());
    slot_laws.push_back(&laws.u);
  }
  for (std::size_t i = 0; i < design.n; ++i) {
    for (std::int64_t j = 0; j < design.sizes[i]; ++j) {
      if (scope.v) block_of(i).push_back(slot_laws.size());
      slot_laws.push_back(&laws.v);
    }
  }
  std::erase_if(blocks, [](const auto& b) { return b.empty(); });

  const std::size_t n = design.n;
  const SizeProfile sizes = design.sizes;
  auto slot_statistic = [&statistic, n, sizes](std::span<const Rational> x) {
    TwoLevelData<Rational> data;
    data.groups.resize(n);
    std::size_t next = n;
    for (std::size_t i = 0; i < n; ++i) {
      data.groups[i].reserve(static_cast<std::size_t>(sizes[i]));
      for (std::int64_t j = 0; j < sizes[i]; ++j) data.groups[i].push_back(x[i] + x[next++]);
    }
    return statistic(data);
  };
  return enumerate_slots(slot_laws, blocks, slot_statistic, options);
}

/// Slot layout: u_i, then v_ij, then w_ijk, each in index order.
inline std::vector<Rational> enumerate_expectation(const NestedDesignSummary& design, const ThreeLevelLaws& laws,
                                      const ThreeLevelRationalStatistic& statistic,
                                      const EnumerationScope& scope = {},
                                      const EnumerationOptions& options = {}) {
  if (scope.grouping == Grouping::per_subgroup && scope.u) {
    throw Error(ErrorCode::usage, "per-subgroup enumeration cannot include the u level");
  }
  const auto sizes = design.sizes();
  std::vector<std::vector<std::size_t>> sub_index(sizes.size());
  std::size_t subgroups = 0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (std::size_t j = 0; j < sizes[i].size(); ++j) sub_index[i].push_back(subgroups++);
  }
  const std::size_t block_count = scope.grouping == Grouping::joint       ? 1
                                  : scope.grouping == Grouping::per_group ? sizes.size()
                                                                          : subgroups;
  SlotBlocks blocks(block_count);
  auto block_of = [&](std::size_t i, std::size_t j) -> std::vector<std::size_t>& {
    switch (scope.grouping) {
      case Grouping::joint: return blocks.front();
      case Grouping::per_group: return blocks[i];
      case Grouping::per_subgroup: break;
    }
    return blocks[sub_index[i][j]];
  };
  std::vector<const DiscreteDistribution*> slot_laws;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (scope.u) block_of(i, 0).push_back(slot_laws.size());
    slot_laws.push_back(&laws.u);
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (std::size_t j = 0; j < sizes[i].size(); ++j) {
      if (scope.v) block_of(i, j).push_back(slot_laws.size());
      slot_laws.push_back(&laws.v);
    }
  }
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    for (std::size_t j = 0; j < sizes[i].size(); ++j) {
      for (std::int64_t k = 0; k < sizes[i][j]; ++k) {
        if (scope.w) block_of(i, j).push_back(slot_laws.size());
        slot_laws.push_back(&laws.w);
      }
    }
  }
  std::erase_if(blocks, [](const auto& b) { return b.empty(); });

  auto slot_statistic = [&statistic, &sizes, subgroups](std::span<const Rational> x) {
    const std::size_t n = sizes.size();
    ThreeLevelData<Rational> data;
    data.groups.resize(n);
    std::size_t v_next = n;
    std::size_t w_next = n + subgroups;
    for (std::size_t i = 0; i < n; ++i) {
      data.groups[i].resize(sizes[i].size());
      for (std::size_t j = 0; j < sizes[i].size(); ++j) {
        const Rational base = x[i] + x[v_next++];
        auto& sub = data.groups[i][j];
        sub.reserve(static_cast<std::size_t>(sizes[i][j]));
        for (std::int64_t k = 0; k < sizes[i][j]; ++k) sub.push_back(base + x[w_next++]);
      }
    }
    return statistic(data);
  };
  return enumerate_slots(slot_laws, blocks, slot_statistic, options);
}

namespace detail {

template <class Values, class Statistic>
std::vector<Rational> require_values(const Values& values, std::span<const Statistic> which) {
  std::vector<Rational> out;
  out.reserve(values.size());
  std::string missing;
  std::optional<ErrorCode> code;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (!values[k].value) {
      missing += (missing.empty() ? "" : ", ") + std::string(statistic_name(which[k]));
      if (!code) code = values[k].error.value_or(ErrorCode::singular_system);
      continue;
    }
    out.push_back(*values[k].value);
  }
  if (code) throw Error(*code, "unavailable for this design: " + missing);
  return out;
}

}  // namespace detail

/// Exact expectations of named two-level estimators. `nuisances` replaces
/// the plug-in adjustment inputs, e.g. with true moments.
inline std::vector<Rational> enumerate_statistics(
    const DesignSummary& design, const TwoLevelLaws& laws, std::span<const TwoLevelStatistic> which,
    const EnumerationScope& scope = {}, const EnumerationOptions& options = {},
    const std::optional<Nuisances<Rational>>& nuisances = {}) {
  const auto constants = exact_two_level_constants(design);
  return enumerate_expectation(
      design, laws,
      [&](const TwoLevelData<Rational>& data) {
        return detail::require_values(evaluate_statistics(data, constants, which, nuisances), which);
      },
      scope, options);
}

inline std::vector<Rational> enumerate_statistics(const NestedDesignSummary& design,
                                                  const ThreeLevelLaws& laws,
                                                  std::span<const ThreeLevelStatistic> which,
                                                  const EnumerationScope& scope = {},
                                                  const EnumerationOptions& options = {}) {
  const auto constants = exact_three_level_constants(design);
  return enumerate_expectation(
      design, laws,
      [&](const ThreeLevelData<Rational>& data) {
        return detail::require_values(evaluate_statistics(data, constants, which), which);
      },
      scope, options);
}

inline Rational enumerate_statistic(const DesignSummary& design, const TwoLevelLaws& laws,
                                    TwoLevelStatistic which, const EnumerationScope& scope = {},
                                    const EnumerationOptions& options = {},
                                    const std::optional<Nuisances<Rational>>& nuisances = {}) {
  const std::array<TwoLevelStatistic, 1> one{which};
  return enumerate_statistics(design, laws, one, scope, options, nuisances).front();
}

inline Rational enumerate_statistic(const NestedDesignSummary& design, const ThreeLevelLaws& laws,
                                    ThreeLevelStatistic which, const EnumerationScope& scope = {},
                                    const EnumerationOptions& options = {}) {
  const std::array<ThreeLevelStatistic, 1> one{which};
  return enumerate_statistics(design, laws, one, scope, options).front();
}

}  // namespace mlmom
