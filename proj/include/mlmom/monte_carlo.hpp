#pragma once

// Seeded Monte Carlo bias testing. Replication r draws from its own engine
// seeded by (seed, r); replications are processed in fixed chunks whose
// running statistics are merged in chunk order, so reports do not depend on
// the number of threads.

#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "mlmom/design.hpp"
#include "mlmom/distribution.hpp"
#include "mlmom/error.hpp"
#include "mlmom/kernel.hpp"
#include "mlmom/statistic.hpp"

namespace mlmom {

inline constexpr std::uint64_t kChunkSize = 4096;

struct TwoLevelPlan {
  SizeProfile sizes;
  DiscreteDistribution u = DiscreteDistribution::rademacher();
  DiscreteDistribution v = DiscreteDistribution::rademacher();
  std::uint64_t reps = 1;
  std::uint64_t seed = 0;
};

struct ThreeLevelPlan {
  NestedSizeProfile sizes;
  DiscreteDistribution u = DiscreteDistribution::rademacher();
  DiscreteDistribution v = DiscreteDistribution::rademacher();
  DiscreteDistribution w = DiscreteDistribution::rademacher();
  std::uint64_t reps = 1;
  std::uint64_t seed = 0;
};

using SimulationPlan = std::variant<TwoLevelPlan, ThreeLevelPlan>;

struct BiasReport {
  std::string name;
  Rational truth;
  double true_value = 0.0;
  double mean = 0.0;
  double se = 0.0;  // NaN when fewer than two successful replications
  double z = 0.0;
  std::uint64_t reps = 0;      // successful replications
  std::uint64_t failures = 0;  // replications where the estimator was unavailable
  bool degenerate = false;     // se is zero or undefined
};

struct MonteCarloOptions {
  unsigned threads = 0;  // 0: hardware concurrency
};

/// splitmix64 output number `index` for the stream starting at `seed`.
constexpr std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using Engine = std::mt19937_64;

inline Engine replication_engine(std::uint64_t seed, std::uint64_t replication) {
  return Engine(splitmix64(seed, replication));
}

/// Uniform on [0, 1) with 53 random bits.
inline double unit_draw(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

inline double draw(const DiscreteDistribution& law, Engine& engine) {
  return law.value_as_double(law.sample_index(unit_draw(engine)));
}

/// Draw order: u_i, then v_ij for that group.
inline TwoLevelDataset sample_dataset(const SizeProfile& sizes, const DiscreteDistribution& u,
                                      const DiscreteDistribution& v, Engine& engine) {
  TwoLevelDataset data;
  data.groups.resize(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double ui = draw(u, engine);
    auto& group = data.groups[i];
    group.reserve(static_cast<std::size_t>(sizes[i]));
    for (std::int64_t j = 0; j < sizes[i]; ++j) group.push_back(ui + draw(v, engine));
  }
  return data;
}

/// Draw order: u_i, then for each subgroup v_ij followed by its w_ijk.
inline ThreeLevelDataset sample_dataset(const NestedSizeProfile& sizes,
                                        const DiscreteDistribution& u,
                                        const DiscreteDistribution& v,
                                        const DiscreteDistribution& w, Engine& engine) {
  ThreeLevelDataset data;
  data.groups.resize(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double ui = draw(u, engine);
    data.groups[i].resize(sizes[i].size());
    for (std::size_t j = 0; j < sizes[i].size(); ++j) {
      const double base = ui + draw(v, engine);
      auto& sub = data.groups[i][j];
      sub.reserve(static_cast<std::size_t>(sizes[i][j]));
      for (std::int64_t k = 0; k < sizes[i][j]; ++k) sub.push_back(base + draw(w, engine));
    }
  }
  return data;
}

inline TwoLevelDataset sample_dataset(const TwoLevelPlan& plan, Engine& engine) {
  return sample_dataset(plan.sizes, plan.u, plan.v, engine);
}

inline ThreeLevelDataset sample_dataset(const ThreeLevelPlan& plan, Engine& engine) {
  return sample_dataset(plan.sizes, plan.u, plan.v, plan.w, engine);
}

namespace detail {

struct Running {
  std::uint64_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t failures = 0;

  void add(double x) {
    ++count;
    const double delta = x - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (x - mean);
  }

  void merge(const Running& other) {
    failures += other.failures;
    if (other.count == 0) return;
    if (count == 0) {
      const auto kept = failures;
      *this = other;
      failures = kept;
      return;
    }
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double total = na + nb;
    const double delta = other.mean - mean;
    mean += delta * nb / total;
    m2 += other.m2 + delta * delta * na * nb / total;
    count += other.count;
  }
};

template <class Replicate>
std::vector<Running> run_chunks(std::uint64_t reps, std::size_t statistics, unsigned threads,
                                const Replicate& replicate) {
  const std::uint64_t chunks = (reps + kChunkSize - 1) / kChunkSize;
  std::vector<std::vector<Running>> per_chunk(chunks, std::vector<Running>(statistics));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto work = [&]() {
    try {
      for (std::uint64_t c = next++; c < chunks && !failed; c = next++) {
        const std::uint64_t end = std::min(reps, (c + 1) * kChunkSize);
        for (std::uint64_t r = c * kChunkSize; r < end; ++r) replicate(r, per_chunk[c]);
      }
    } catch (...) {
      if (!failed.exchange(true)) failure = std::current_exception();
    }
  };
  const unsigned hw = std::thread::hardware_concurrency();
  const unsigned workers = static_cast<unsigned>(
      std::min<std::uint64_t>(threads != 0 ? threads : (hw == 0 ? 1 : hw), chunks));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Running> total(statistics);
  for (const auto& chunk : per_chunk) {
    for (std::size_t k = 0; k < statistics; ++k) total[k].merge(chunk[k]);
  }
  return total;
}

inline BiasReport make_report(std::string name, const Rational& truth, const Running& run) {
  BiasReport out;
  out.name = std::move(name);
  out.truth = truth;
  out.true_value = to_double(truth);
  out.reps = run.count;
  out.failures = run.failures;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (run.count == 0) {
    out.mean = out.se = out.z = nan;
    out.degenerate = true;
    return out;
  }
  out.mean = run.mean;
  if (run.count < 2) {
    out.se = out.z = nan;
    out.degenerate = true;
    return out;
  }
  const double n = static_cast<double>(run.count);
  out.se = std::sqrt(run.m2 / (n - 1.0) / n);
  const double gap = out.mean - out.true_value;
  if (out.se == 0.0) {
    out.degenerate = true;
    out.z = gap == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), gap);
  } else {
    out.z = gap / out.se;
  }
  return out;
}

template <class Values>
void record(const Values& values, std::vector<Running>& into) {
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (values[k].value) {
      into[k].add(*values[k].value);
    } else {
      ++into[k].failures;
    }
  }
}

inline void require_reps(std::uint64_t reps) {
  if (reps == 0) throw Error(ErrorCode::usage, "replication count must be at least 1");
}

}  // namespace detail

inline std::vector<BiasReport> run_monte_carlo(const TwoLevelPlan& plan,
                                               std::span<const TwoLevelStatistic> which,
                                               const MonteCarloOptions& options = {}) {
  detail::require_reps(plan.reps);
  const auto constants = two_level_constants<double>(validate_two_level_design(plan.sizes));
  const auto totals = detail::run_chunks(
      plan.reps, which.size(), options.threads, [&](std::uint64_t r, std::vector<detail::Running>& into) {
        Engine engine = replication_engine(plan.seed, r);
        const auto data = sample_dataset(plan, engine);
        detail::record(evaluate_statistics(data, constants, which), into);
      });
  const auto u = true_moments(plan.u);
  const auto v = true_moments(plan.v);
  std::vector<BiasReport> out;
  for (std::size_t k = 0; k < which.size(); ++k) {
    out.push_back(detail::make_report(std::string(statistic_name(which[k])),
                                      true_value(which[k], u, v), totals[k]));
  }
  return out;
}

inline std::vector<BiasReport> run_monte_carlo(const ThreeLevelPlan& plan,
                                               std::span<const ThreeLevelStatistic> which,
                                               const MonteCarloOptions& options = {}) {
  detail::require_reps(plan.reps);
  const auto constants = three_level_constants<double>(validate_three_level_design(plan.sizes));
  const auto totals = detail::run_chunks(
      plan.reps, which.size(), options.threads, [&](std::uint64_t r, std::vector<detail::Running>& into) {
        Engine engine = replication_engine(plan.seed, r);
        const auto data = sample_dataset(plan, engine);
        detail::record(evaluate_statistics(data, constants, which), into);
      });
  const auto u = true_moments(plan.u);
  const auto v = true_moments(plan.v);
  const auto w = true_moments(plan.w);
  std::vector<BiasReport> out;
  for (std::size_t k = 0; k < which.size(); ++k) {
    out.push_back(detail::make_report(std::string(statistic_name(which[k])),
                                      true_value(which[k], u, v, w), totals[k]));
  }
  return out;
}

/// Every estimator applicable to the plan's level count.
inline std::vector<BiasReport> run_monte_carlo(const SimulationPlan& plan,
                                               const MonteCarloOptions& options = {}) {
  return std::visit(
      [&](const auto& p) -> std::vector<BiasReport> {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, TwoLevelPlan>) {
          return run_monte_carlo(p, kAllTwoLevelStatistics, options);
        } else {
          return run_monte_carlo(p, kAllThreeLevelStatistics, options);
        }
      },
      plan);
}

}  // namespace mlmom
