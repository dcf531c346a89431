// mlmom: moment estimation for unbalanced two- and three-level data.
//
//   mlmom estimate --levels 2|3 --input FILE [--scheme grp|obs|both] [--orders 2,3[,4]]
//   mlmom verify   [--suite exact|mc|all] [--reps R] [--seed S]
//   mlmom simulate --design SIZES [--dist-u LAW] [--dist-v LAW] [--dist-w LAW] [--reps R] [--seed S]
//
// Exit codes: 0 success, 1 failed verification, 2 usage/format/validation
// error, 3 singular fourth-moment system.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "mlmom/mlmom.hpp"
#include "report.hpp"

namespace {

using mlmom::Error;
using mlmom::ErrorCode;
using mlmom::report::Json;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitSingular = 3;

void emit(const Json& j) { std::cout << j.dump(2) << '\n'; }

int fail(Json out, const Error& e) {
  out["errors"] = Json::array({mlmom::report::error(e)});
  emit(out);
  std::cerr << "mlmom: " << e.what() << '\n';
  return kExitInvalid;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto at = text.find(sep, start);
    parts.push_back(text.substr(start, at == std::string_view::npos ? at : at - start));
    if (at == std::string_view::npos) return parts;
    start = at + 1;
  }
}

std::int64_t parse_count(std::string_view text, std::string_view what) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  std::int64_t value = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || end != text.data() + text.size()) {
    throw Error(ErrorCode::usage, "cannot read '" + std::string(text) + "' as " + std::string(what));
  }
  return value;
}

std::set<int> parse_orders(const std::string& text, int levels) {
  std::set<int> orders;
  for (const auto part : split(text, ',')) {
    const auto k = parse_count(part, "a moment order");
    if (k < 2 || k > 4) {
      throw Error(ErrorCode::usage, "orders must be 2, 3 or 4; got " + std::to_string(k));
    }
    orders.insert(static_cast<int>(k));
  }
  if (levels == 3 && orders.contains(4)) {
    throw Error(ErrorCode::usage, "order 4 is only available with --levels 2");
  }
  return orders;
}

/// "3,3,4" for two levels, "3,3,3/3,3,3/3,3,3" for three.
std::variant<mlmom::SizeProfile, mlmom::NestedSizeProfile> parse_design(const std::string& text) {
  auto row = [](std::string_view part) {
    mlmom::SizeProfile sizes;
    for (const auto s : split(part, ',')) sizes.push_back(parse_count(s, "a group size"));
    return sizes;
  };
  if (text.find('/') == std::string::npos) return row(text);
  mlmom::NestedSizeProfile nested;
  for (const auto part : split(text, '/')) nested.push_back(row(part));
  return nested;
}

// Canonical order makes the report independent of row order.
void canonicalize(mlmom::LabeledTwoLevel& in) {
  std::vector<std::size_t> order(in.group_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return in.group_ids[a] < in.group_ids[b]; });
  mlmom::LabeledTwoLevel out;
  for (const auto i : order) {
    out.group_ids.push_back(in.group_ids[i]);
    auto values = in.data.groups[i];
    std::sort(values.begin(), values.end());
    out.data.groups.push_back(std::move(values));
  }
  in = std::move(out);
}

void canonicalize(mlmom::LabeledThreeLevel& in) {
  std::vector<std::size_t> order(in.group_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return in.group_ids[a] < in.group_ids[b]; });
  mlmom::LabeledThreeLevel out;
  for (const auto i : order) {
    out.group_ids.push_back(in.group_ids[i]);
    const auto& ids = in.subgroup_ids[i];
    std::vector<std::size_t> sub(ids.size());
    std::iota(sub.begin(), sub.end(), 0);
    std::sort(sub.begin(), sub.end(), [&](std::size_t a, std::size_t b) { return ids[a] < ids[b]; });
    auto& out_ids = out.subgroup_ids.emplace_back();
    auto& group = out.data.groups.emplace_back();
    for (const auto j : sub) {
      out_ids.push_back(ids[j]);
      auto values = in.data.groups[i][j];
      std::sort(values.begin(), values.end());
      group.push_back(std::move(values));
    }
  }
  in = std::move(out);
}

Json two_level_design(const mlmom::DesignSummary& s) {
  Json d;
  d["n"] = s.n;
  d["N"] = s.total;
  d["J"] = s.sizes;
  return d;
}

Json three_level_design(const mlmom::NestedDesignSummary& s) {
  Json d;
  d["n"] = s.n();
  d["N"] = s.total();
  const auto sizes = s.sizes();
  std::vector<std::size_t> j;
  std::vector<std::int64_t> k_i;
  for (const auto& g : sizes) {
    j.push_back(g.size());
    k_i.push_back(std::accumulate(g.begin(), g.end(), std::int64_t{0}));
  }
  d["J"] = j;
  d["K"] = sizes;
  d["K_i"] = k_i;
  return d;
}

struct EstimateArgs {
  int levels = 2;
  std::string input;
  std::string scheme = "both";
  std::string orders = "2,3";
  bool deterministic = false;
};

struct Collected {
  Json estimates = Json::object();
  Json determinants = Json::object();
  Json singular = Json::object();
  Json negative = Json::array();
  Json errors = Json::array();
  bool singular_hit = false;
};

void put(Collected& c, Json& block, const std::string& scope, const std::string& name, double v,
         bool even) {
  block[name] = v;
  if (even && v < 0) c.negative.push_back(scope + "." + name);
}

int estimate_two_level(const EstimateArgs& args, const std::set<int>& orders, Json out) {
  auto labeled = mlmom::ingest_two_level_csv(args.input);
  canonicalize(labeled);
  const auto summary = mlmom::validate_two_level(labeled.data);
  const auto constants = mlmom::two_level_constants<double>(summary);
  Json design = two_level_design(summary);
  design["group_ids"] = labeled.group_ids;
  out["levels"] = 2;
  out["design"] = std::move(design);

  const bool fourth = orders.contains(4);
  Collected c;
  const auto within = mlmom::estimate_within(labeled.data, constants);
  Json w = Json::object();
  if (orders.contains(2)) put(c, w, "within", "mu2v", within.mu2v, true);
  if (orders.contains(3)) put(c, w, "within", "mu3v", within.mu3v, false);
  if (fourth) {
    c.determinants["within"] = within.det_v;
    c.singular["within"] = within.fourth_error.has_value();
    if (within.mu4v) {
      put(c, w, "within", "mu4v", *within.mu4v, true);
      put(c, w, "within", "mu2v_sq", *within.mu2v_sq, true);
    } else {
      c.singular_hit = true;
      c.errors.push_back(mlmom::report::error(ErrorCode::singular_system,
                                              "the within fourth-moment system is singular", {},
                                              "within"));
    }
  }
  c.estimates["within"] = std::move(w);

  for (const auto scheme : {mlmom::Scheme::grp, mlmom::Scheme::obs}) {
    const std::string name(mlmom::scheme_name(scheme));
    if (args.scheme != "both" && args.scheme != name) continue;
    const auto b = mlmom::estimate_between(labeled.data, constants, within, scheme);
    Json block = Json::object();
    if (orders.contains(2)) put(c, block, name, "mu2u", b.mu2u, true);
    if (orders.contains(3)) put(c, block, name, "mu3u", b.mu3u, false);
    if (fourth) {
      c.determinants[name] = b.det_u;
      c.singular[name] = b.fourth_error == ErrorCode::singular_system;
      if (b.mu4u) {
        put(c, block, name, "mu4u", *b.mu4u, true);
        put(c, block, name, "mu2u_sq", *b.mu2u_sq, true);
      } else {
        c.singular_hit = true;
        const auto code = b.fourth_error.value_or(ErrorCode::singular_system);
        c.errors.push_back(mlmom::report::error(
            code,
            code == ErrorCode::missing_within_fourth
                ? "the within fourth-moment solve failed, so mu4u cannot be adjusted"
                : "the " + name + " fourth-moment system is singular",
            {}, name));
      }
    }
    c.estimates[name] = std::move(block);
  }

  out["estimates"] = std::move(c.estimates);
  Json diagnostics;
  if (fourth) {
    diagnostics["determinants"] = std::move(c.determinants);
    diagnostics["singular"] = std::move(c.singular);
  }
  diagnostics["negative_estimates"] = std::move(c.negative);
  out["diagnostics"] = std::move(diagnostics);
  out["errors"] = std::move(c.errors);
  emit(out);
  return c.singular_hit ? kExitSingular : kExitOk;
}

int estimate_three_level(const EstimateArgs& args, const std::set<int>& orders, Json out) {
  auto labeled = mlmom::ingest_three_level_csv(args.input);
  canonicalize(labeled);
  const auto summary = mlmom::validate_three_level(labeled.data);
  const auto constants = mlmom::three_level_constants<double>(summary);
  Json design = three_level_design(summary);
  design["group_ids"] = labeled.group_ids;
  design["subgroup_ids"] = labeled.subgroup_ids;
  out["levels"] = 3;
  out["design"] = std::move(design);

  const bool grp = args.scheme != "obs";
  const bool obs = args.scheme != "grp";
  const auto est = mlmom::estimate_three_level(labeled.data, constants, grp, obs);
  Collected c;
  Json w = Json::object();
  if (orders.contains(2)) put(c, w, "w", "mu2w", est.mu2w, true);
  if (orders.contains(3)) put(c, w, "w", "mu3w", est.mu3w, false);
  c.estimates["w"] = std::move(w);
  for (const auto& s : {est.grp, est.obs}) {
    if (!s) continue;
    const std::string name(mlmom::scheme_name(s->scheme));
    Json block = Json::object();
    if (orders.contains(2)) {
      put(c, block, name, "mu2v", s->mu2v, true);
      put(c, block, name, "mu2u", s->mu2u, true);
    }
    if (orders.contains(3)) {
      put(c, block, name, "mu3v", s->mu3v, false);
      put(c, block, name, "mu3u", s->mu3u, false);
    }
    c.estimates[name] = std::move(block);
  }
  out["estimates"] = std::move(c.estimates);
  out["diagnostics"] = Json{{"negative_estimates", std::move(c.negative)}};
  out["errors"] = Json::array();
  emit(out);
  return kExitOk;
}

int cmd_estimate(const EstimateArgs& args) {
  Json out = mlmom::report::header("estimate");
  if (!args.deterministic) out["generated_at"] = mlmom::report::utc_timestamp();
  try {
    const auto orders = parse_orders(args.orders, args.levels);
    Json requested = Json::array();
    for (const int k : orders) requested.push_back(k);
    out["orders"] = std::move(requested);
    out["scheme"] = args.scheme;
    return args.levels == 2 ? estimate_two_level(args, orders, out)
                            : estimate_three_level(args, orders, out);
  } catch (const Error& e) {
    return fail(out, e);
  }
}

struct VerifyArgs {
  std::string suite = "all";
  std::uint64_t reps = mlmom::kDefaultReps;
  std::uint64_t seed = mlmom::kDefaultSeed;
  unsigned threads = 0;
};

int cmd_verify(const VerifyArgs& args) {
  mlmom::VerifyOptions options;
  options.two_level_reps = args.reps;
  options.three_level_reps = args.reps;
  options.seed = args.seed;
  options.threads = args.threads;
  Json out = mlmom::report::header("verify");
  out["suite"] = args.suite;
  out["seed"] = args.seed;
  out["reps"] = args.reps;
  try {
    if (args.reps < 2) throw Error(ErrorCode::usage, "--reps must be at least 2");
    std::vector<mlmom::CheckResult> results;
    if (args.suite != "mc") results = mlmom::exact_suite(options);
    if (args.suite != "exact") {
      for (auto& r : mlmom::mc_suite(options)) results.push_back(std::move(r));
    }
    std::size_t passed = 0, failed = 0, findings = 0;
    Json checks = Json::array();
    for (const auto& r : results) {
      if (!r.asserted) {
        ++findings;
      } else if (r.passed) {
        ++passed;
      } else {
        ++failed;
      }
      checks.push_back(mlmom::report::check(r));
    }
    out["passed"] = failed == 0;
    out["summary"] = Json{{"asserted", passed + failed},
                          {"passed", passed},
                          {"failed", failed},
                          {"findings", findings}};
    out["checks"] = std::move(checks);
    emit(out);
    return failed == 0 ? kExitOk : kExitVerifyFailed;
  } catch (const Error& e) {
    return fail(out, e);
  }
}

struct SimulateArgs {
  std::string design;
  std::string dist_u = "1:0.5,-1:0.5";
  std::string dist_v = "1:0.5,-1:0.5";
  std::optional<std::string> dist_w;
  std::uint64_t reps = 10000;
  std::uint64_t seed = mlmom::kDefaultSeed;
  unsigned threads = 0;
};

int cmd_simulate(const SimulateArgs& args) {
  Json out = mlmom::report::header("simulate");
  try {
    const auto design = parse_design(args.design);
    const auto u = mlmom::DiscreteDistribution::parse(args.dist_u);
    const auto v = mlmom::DiscreteDistribution::parse(args.dist_v);
    if (args.reps < 1) throw Error(ErrorCode::usage, "--reps must be at least 1");
    Json laws;
    laws["u"] = u.to_string();
    laws["v"] = v.to_string();
    std::vector<mlmom::BiasReport> reports;
    const mlmom::MonteCarloOptions options{args.threads};
    if (const auto* sizes = std::get_if<mlmom::SizeProfile>(&design)) {
      if (args.dist_w) throw Error(ErrorCode::usage, "--dist-w needs a three-level design");
      Json echo = two_level_design(mlmom::validate_two_level_design(*sizes));
      out["levels"] = 2;
      out["design"] = std::move(echo);
      reports = mlmom::run_monte_carlo(mlmom::SimulationPlan{mlmom::TwoLevelPlan{*sizes, u, v, args.reps, args.seed}},
                                       options);
    } else {
      const auto& nested = std::get<mlmom::NestedSizeProfile>(design);
      const auto w = mlmom::DiscreteDistribution::parse(args.dist_w.value_or("1:0.5,-1:0.5"));
      Json echo = three_level_design(mlmom::validate_three_level_design(nested));
      out["levels"] = 3;
      out["design"] = std::move(echo);
      reports = mlmom::run_monte_carlo(
          mlmom::SimulationPlan{mlmom::ThreeLevelPlan{nested, u, v, w, args.reps, args.seed}},
          options);
      laws["w"] = w.to_string();
    }
    out["distributions"] = std::move(laws);
    out["reps"] = args.reps;
    out["seed"] = args.seed;
    Json list = Json::array();
    for (const auto& b : reports) list.push_back(mlmom::report::bias(b));
    out["reports"] = std::move(list);
    emit(out);
    return kExitOk;
  } catch (const Error& e) {
    return fail(out, e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Unbiased central-moment estimators for unbalanced multilevel data", "mlmom"};
  app.set_version_flag("--version", std::string(mlmom::kVersion));
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Estimate latent moments from a long-format CSV");
  estimate->add_option("--levels", est.levels, "Number of levels (2 or 3)")
      ->required()
      ->check(CLI::IsMember({2, 3}));
  estimate->add_option("--input", est.input, "CSV file")->required();
  estimate->add_option("--scheme", est.scheme, "Averaging scheme")
      ->check(CLI::IsMember({"grp", "obs", "both"}));
  estimate->add_option("--orders", est.orders, "Comma-separated moment orders (default 2,3)");
  estimate->add_flag("--deterministic", est.deterministic, "Omit the timestamp");

  VerifyArgs ver;
  auto* verify = app.add_subcommand("verify", "Run the built-in verification suites");
  verify->add_option("--suite", ver.suite, "exact, mc or all")
      ->check(CLI::IsMember({"exact", "mc", "all"}));
  verify->add_option("--reps", ver.reps, "Monte Carlo replications");
  verify->add_option("--seed", ver.seed, "Monte Carlo seed");
  verify->add_option("--threads", ver.threads, "Worker threads (0: all cores)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo bias report for a design");
  simulate->add_option("--design", sim.design, "Sizes, e.g. 3,3,4 or 3,3,3/3,3,3/3,3,3")
      ->required();
  simulate->add_option("--dist-u", sim.dist_u, "Law of u as value:probability,...");
  simulate->add_option("--dist-v", sim.dist_v, "Law of v");
  simulate->add_option("--dist-w", sim.dist_w, "Law of w (three-level designs)");
  simulate->add_option("--reps", sim.reps, "Replications");
  simulate->add_option("--seed", sim.seed, "Seed");
  simulate->add_option("--threads", sim.threads, "Worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (estimate->parsed()) return cmd_estimate(est);
    if (verify->parsed()) return cmd_verify(ver);
    return cmd_simulate(sim);
  } catch (const std::exception& e) {
    std::cerr << "mlmom: internal error: " << e.what() << '\n';
    return kExitInvalid;
  }
}
