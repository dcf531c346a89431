// Acceptance runner: one PASS/FAIL line per criterion, with the individual
// checks listed above it. `--criterion N` runs a single criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mlmom/mlmom.hpp"

namespace {

using mlmom::CheckResult;
using mlmom::Rational;

constexpr std::uint64_t kSeed = mlmom::kDefaultSeed;

struct Outcome {
  std::vector<CheckResult> checks;
  std::vector<CheckResult> supplementary;  // printed, never decides the verdict
};

struct Criterion {
  int id;
  std::string title;
  double time_limit_s;
  std::function<Outcome()> run;
};

void append(std::vector<CheckResult>& into, std::vector<CheckResult> more) {
  for (auto& r : more) into.push_back(std::move(r));
}

void print_check(const CheckResult& r, const char* tag) {
  std::cout << "  [" << tag << "] " << r.id << ": expected " << r.expected << ", actual "
            << r.actual << " (" << r.tolerance << ")";
  if (r.z) std::cout << " z=" << *r.z;
  if (!r.note.empty()) std::cout << " -- " << r.note;
  std::cout << '\n';
}

/// Expectations of the double-precision estimators over every outcome; each
/// double result is converted exactly, so only the estimator rounds.
std::vector<Rational> float_mode_expectation(const mlmom::DesignSummary& design,
                                             const mlmom::TwoLevelLaws& laws,
                                             std::span<const mlmom::TwoLevelStatistic> which) {
  const auto constants = mlmom::two_level_constants<double>(design);
  return mlmom::enumerate_expectation(design, laws, [&](const mlmom::TwoLevelData<Rational>& d) {
    mlmom::TwoLevelDataset data;
    for (const auto& g : d.groups) {
      auto& o = data.groups.emplace_back();
      for (const auto& y : g) o.push_back(mlmom::to_double(y));
    }
    std::vector<Rational> out;
    for (const auto& v : mlmom::evaluate_statistics(data, constants, which)) {
      out.emplace_back(v.value.value());
    }
    return out;
  });
}

Outcome criterion1() {
  const mlmom::SizeProfile sizes{3, 3, 4};
  const mlmom::TwoLevelLaws laws{mlmom::laws::symmetric(), mlmom::laws::skewed()};
  Outcome o;
  o.checks = mlmom::check_two_level_exact(sizes, laws, 1);
  const std::array which{mlmom::TwoLevelStatistic::mu2v,     mlmom::TwoLevelStatistic::mu3v,
                         mlmom::TwoLevelStatistic::mu2u_grp, mlmom::TwoLevelStatistic::mu3u_grp,
                         mlmom::TwoLevelStatistic::mu2u_obs, mlmom::TwoLevelStatistic::mu3u_obs};
  const auto got = float_mode_expectation(mlmom::validate_two_level_design(sizes), laws, which);
  const auto u = mlmom::true_moments(laws.u);
  const auto v = mlmom::true_moments(laws.v);
  for (std::size_t k = 0; k < which.size(); ++k) {
    const Rational truth = mlmom::true_value(which[k], u, v);
    const double actual = mlmom::to_double(got[k]);
    const double expected = mlmom::to_double(truth);
    const double gap = std::abs(actual - expected);
    CheckResult r;
    r.id = "two_level.float." + std::string(mlmom::statistic_name(which[k]));
    r.criterion = 1;
    r.expected = mlmom::to_string(truth);
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.17g", actual);
    r.actual = buffer;
    r.tolerance = "relative <= 1e-10";  // absolute when the target is 0
    r.passed = gap <= 1e-10 * std::max(std::abs(expected), 1.0);
    o.checks.push_back(std::move(r));
  }
  return o;
}

Outcome criterion2() {
  return {mlmom::check_v_fourth(
              {4, 4, 4}, {mlmom::DiscreteDistribution::point_mass_zero(), mlmom::laws::skewed()}, 2),
          {}};
}

Outcome criterion3() {
  const auto laws = mlmom::default_two_level_laws();
  Outcome o;
  o.checks = mlmom::check_u_fourth_true_nuisances({4, 4, 4}, laws, 3);
  o.supplementary = mlmom::check_u_fourth_determinant({4, 4, 4}, Rational(0), Rational(0), 3);
  append(o.supplementary, mlmom::check_u_fourth_true_nuisances({3, 3, 3, 4}, laws, 3));
  return o;
}

Outcome criterion4() {
  const auto laws = mlmom::default_two_level_laws();
  const mlmom::SizeProfile sizes{4, 4, 4};
  Outcome o;
  const std::array low{mlmom::TwoLevelStatistic::mu2u_grp, mlmom::TwoLevelStatistic::mu3u_grp,
                       mlmom::TwoLevelStatistic::mu2u_obs, mlmom::TwoLevelStatistic::mu3u_obs};
  const std::array fourth{mlmom::TwoLevelStatistic::mu4u_grp, mlmom::TwoLevelStatistic::mu4u_obs};
  mlmom::VerifyOptions options;
  o.checks = mlmom::check_two_level_mc({sizes, laws.u, laws.v, 200000, kSeed}, low, fourth, 4.0, 4,
                                       options);
  append(o.checks, mlmom::check_plugin_bias_exact(sizes, laws, 4));
  o.supplementary = mlmom::check_plugin_bias_exact({3, 3, 3, 4}, laws, 4);
  return o;
}

Outcome criterion5() { return {mlmom::check_singularity_all_three({3, 3, 3}, 5), {}}; }

Outcome criterion6() {
  return {mlmom::check_three_level_exact(mlmom::designs::nested_three(),
                                         mlmom::default_three_level_laws(), 6),
          {}};
}

Outcome criterion7() {
  const auto l = mlmom::default_three_level_laws();
  return {mlmom::check_three_level_mc(
              {mlmom::designs::nested_three(), l.u, l.v, l.w, 1000000, kSeed}, 4.0, 7, {}),
          {}};
}

Outcome criterion8() { return {mlmom::check_balanced_equivalence(kSeed, 100, 8), {}}; }
Outcome criterion9() { return {mlmom::check_equivariance(kSeed, 100, 1e-12, 9), {}}; }
Outcome criterion10() { return {mlmom::check_weighted_power(kSeed, 50, 10), {}}; }

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "exact two-level unbiasedness, orders 2 and 3, J=(3,3,4)", 1.0, criterion1},
      {2, "exact within fourth-moment system, J=(4,4,4)", 1.0, criterion2},
      {3, "exact between fourth-moment system with true nuisances, J=(4,4,4)", 10.0, criterion3},
      {4, "plug-in fourth-moment bias audit with Monte Carlo, J=(4,4,4)", 60.0, criterion4},
      {5, "singularity detection on an all-J=3 design", 1.0, criterion5},
      {6, "exact three-level w and v unbiasedness, K=3 throughout", 10.0, criterion6},
      {7, "three-level u-level Monte Carlo, R=1e6", 120.0, criterion7},
      {8, "balanced-design scheme equivalence", 60.0, criterion8},
      {9, "shift and scale equivariance", 60.0, criterion9},
      {10, "expected_power against enumeration", 60.0, criterion10},
  };
  return all;
}

bool run(const Criterion& c) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  std::string failure;
  try {
    o = c.run();
  } catch (const std::exception& e) {
    failure = e.what();
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  bool passed = failure.empty() && !o.checks.empty();
  for (const auto& r : o.checks) {
    const bool counts = r.asserted;
    passed = passed && (!counts || r.passed);
    print_check(r, !counts ? "info" : r.passed ? "ok" : "FAIL");
  }
  for (const auto& r : o.supplementary) {
    print_check(r, !r.asserted ? "extra info" : r.passed ? "extra ok" : "extra FAIL");
  }
  if (!failure.empty()) std::cout << "  [FAIL] " << failure << '\n';
  const bool in_time = seconds <= c.time_limit_s;
  if (!in_time) {
    std::cout << "  [FAIL] runtime " << seconds << " s exceeds " << c.time_limit_s << " s\n";
  }
  passed = passed && in_time;
  std::printf("criterion %d: %s (%.2f s) %s\n", c.id, passed ? "PASS" : "FAIL", seconds,
              c.title.c_str());
  std::fflush(stdout);
  return passed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria for the mlmom library", "mlmom_acceptance"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criterion number (repeatable; default all)")
      ->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  bool all_passed = true;
  for (const auto& c : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.id) == selected.end()) {
      continue;
    }
    all_passed = run(c) && all_passed;
  }
  return all_passed ? 0 : 1;
}
