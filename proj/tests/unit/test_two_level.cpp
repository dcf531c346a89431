#include <catch_amalgamated.hpp>

#include "mlmom/two_level.hpp"
#include "support.hpp"

using mlmom::DesignSummary;
using mlmom::Rational;
using mlmom::Scheme;
using mlmom::SystemKind;
using test_support::exact;
using test_support::q;

namespace {

// Values below come from an independent naive evaluation of the formulas in
// exact arithmetic (pair loops, no shared code with the library).
const auto kData = exact({{1, 4, -2, 0}, {3, 3, 5}, {-1, 2, 2, 7, 0}, {2, -3, 1, 1}});

}  // namespace

TEST_CASE("within estimates on the small unbalanced example", "[two_level]") {
  // n = 2 breaks the design gate, so the summary is built from sizes directly.
  const auto data = exact({{0, 0, 3}, {0, 0, 0, 4}});
  const auto summary = DesignSummary::from_sizes(mlmom::size_profile(data));
  const auto w = mlmom::estimate_within(data, summary);
  CHECK(w.mu2v == Rational(18, 5));
  CHECK(w.mu3v == Rational(180, 13));

  const auto wd = mlmom::estimate_within(test_support::as_double(data), summary);
  CHECK(wd.mu2v == Catch::Approx(3.6).epsilon(1e-15));
  CHECK(wd.mu3v == Catch::Approx(180.0 / 13.0).epsilon(1e-15));
}

TEST_CASE("constant groups give zero within moments", "[two_level]") {
  const auto data = exact({{2, 2, 2}, {-1, -1, -1, -1}, {5, 5, 5}});
  const auto summary = mlmom::validate_two_level(data);
  const auto w = mlmom::estimate_within(data, summary);
  CHECK(w.mu2v == 0);
  CHECK(w.mu3v == 0);
}

TEST_CASE("within fourth-moment system on J=(4,4,4)", "[two_level]") {
  const auto summary = mlmom::validate_two_level_design(mlmom::SizeProfile{4, 4, 4});
  const auto s = mlmom::build_fourth_system<Rational>(SystemKind::within, summary);
  CHECK(s.a11 == Rational(63, 16));
  CHECK(s.a12 == Rational(135, 16));
  CHECK(s.a21 == Rational(45, 32));
  CHECK(s.a22 == Rational(261, 32));
  CHECK(s.det == Rational(81, 4));
  CHECK_FALSE(s.singular());
}

TEST_CASE("all groups of three make the within system singular", "[two_level]") {
  const auto summary = mlmom::validate_two_level_design(mlmom::SizeProfile{3, 3, 3, 3});
  const auto s = mlmom::build_fourth_system<Rational>(SystemKind::within, summary);
  CHECK(s.a11 == Rational(8, 3));
  CHECK(s.a12 == 8);
  CHECK(s.a21 == Rational(4, 3));
  CHECK(s.a22 == 4);
  CHECK(s.det == 0);
  CHECK(s.singular());
  CHECK_THROWS_AS(s.solve(), mlmom::Error);

  const auto data = exact({{0, 1, 5}, {2, 2, 3}, {1, 0, 0}, {4, 1, 1}});
  const auto w = mlmom::estimate_within(data, summary);
  CHECK(w.fourth_error == mlmom::ErrorCode::singular_system);
  CHECK_FALSE(w.mu4v);
  CHECK_FALSE(w.mu2v_sq);
  // the between fourth moment needs the within pair as plug-ins
  const auto grp = mlmom::estimate_between_grp(data, summary, w);
  CHECK(grp.fourth_error == mlmom::ErrorCode::missing_within_fourth);
}

TEST_CASE("between systems: zero nuisances give zero adjustments", "[two_level]") {
  const auto summary = mlmom::validate_two_level_design(mlmom::SizeProfile{3, 4, 5});
  for (const auto kind : {SystemKind::grp, SystemKind::obs}) {
    const auto s = mlmom::build_fourth_system<Rational>(kind, summary, {});
    CHECK(s.t4 == 0);
    CHECK(s.t22 == 0);
  }
}

TEST_CASE("between coefficient matrices", "[two_level]") {
  const auto n4 = mlmom::validate_two_level_design(mlmom::SizeProfile{4, 3, 5, 4});
  const auto grp = mlmom::build_fourth_system<Rational>(SystemKind::grp, n4);
  CHECK(grp.a11 == Rational(21, 16));
  CHECK(grp.a12 == Rational(45, 16));
  CHECK(grp.a21 == Rational(15, 16));
  CHECK(grp.a22 == Rational(87, 16));
  CHECK(grp.det == Rational(9, 2));

  const auto obs = mlmom::build_fourth_system<Rational>(SystemKind::obs, n4);
  CHECK(obs.a11 == Rational(11041, 8192));
  CHECK(obs.a12 == Rational(24099, 8192));
  CHECK(obs.a21 == Rational(7779, 8192));
  CHECK(obs.a22 == Rational(44905, 8192));
  CHECK(obs.det == Rational(602207, 131072));

  const auto n3 = mlmom::validate_two_level_design(mlmom::SizeProfile{3, 3, 4});
  const auto o3 = mlmom::build_fourth_system<Rational>(SystemKind::obs, n3);
  const Rational big_n(10);
  Rational a11(0);
  for (int j : {3, 3, 4}) {
    const Rational share = 1 - Rational(j) / big_n;
    a11 += share * share * share * share + Rational(81 + 81 + 256 - j * j * j * j) / 10000;
  }
  CHECK(o3.a11 == a11);
  CHECK(o3.a11 == Rational(3467, 5000));
  CHECK(o3.a12 == Rational(10401, 5000));
  CHECK(o3.a21 == Rational(1667, 2500));
  CHECK(o3.a22 == Rational(5001, 2500));
  // three groups: both between systems are exactly singular
  CHECK(o3.det == 0);
  CHECK(mlmom::build_fourth_system<Rational>(SystemKind::grp, n3).det == 0);
}

TEST_CASE("full two-level estimates against the independent oracle", "[two_level]") {
  const auto summary = mlmom::validate_two_level(kData);
  const auto est = mlmom::estimate_two_level(kData, summary);

  CHECK(est.within.mu2v == Rational(445, 72));
  CHECK(est.within.mu3v == Rational(3455, 273));
  CHECK(est.within.det_v == Rational(1103, 25));
  REQUIRE(est.within.mu4v);
  CHECK(*est.within.mu4v == q("7964099/52944"));
  CHECK(*est.within.mu2v_sq == q("334451/17648"));

  CHECK(est.grp.mu2u == Rational(1249, 1728));
  CHECK(est.grp.mu3u == Rational(4317, 2080));
  REQUIRE(est.grp.mu4u);
  CHECK(*est.grp.mu4u == q("-66695753089/13723084800"));
  CHECK(*est.grp.mu2u_sq == q("313792871/1646770176"));

  CHECK(est.obs.mu2u == Rational(3733, 5238));
  CHECK(est.obs.mu3u == Rational(2406377, 698880));
  REQUIRE(est.obs.mu4u);
  CHECK(*est.obs.mu4u == q("-15359436155554687/5010133497693120"));
  CHECK(*est.obs.mu2u_sq == q("-22177722912015973/75152002465396800"));
}

TEST_CASE("adjustment terms against the oracle", "[two_level]") {
  const auto summary = mlmom::validate_two_level(kData);
  const auto w = mlmom::estimate_within(kData, summary);
  for (const auto& [kind, mu2u, t4, t22] :
       {std::tuple{SystemKind::grp, Rational(1249, 1728), q("162171575429/6099148800"),
                   q("342444789643/10978467840")},
        std::tuple{SystemKind::obs, Rational(3733, 5238), q("74657948691439/2662278451200"),
                   q("48735935547167/1597367070720")}}) {
    const mlmom::Nuisances<Rational> plug{mu2u * w.mu2v, *w.mu2v_sq, *w.mu4v};
    const auto s = mlmom::build_fourth_system<Rational>(kind, summary, plug);
    CHECK(s.t4 == t4);
    CHECK(s.t22 == t22);
  }
}

TEST_CASE("double path tracks the exact path", "[two_level]") {
  const auto summary = mlmom::validate_two_level(kData);
  const auto ex = mlmom::estimate_two_level(kData, summary);
  const auto fl = mlmom::estimate_two_level(test_support::as_double(kData), summary);
  using test_support::near;
  CHECK(near(fl.within.mu2v, ex.within.mu2v));
  CHECK(near(fl.within.mu3v, ex.within.mu3v));
  CHECK(near(*fl.within.mu4v, *ex.within.mu4v));
  CHECK(near(*fl.within.mu2v_sq, *ex.within.mu2v_sq));
  for (const auto s : {Scheme::grp, Scheme::obs}) {
    CHECK(near(fl.between(s).mu2u, ex.between(s).mu2u));
    CHECK(near(fl.between(s).mu3u, ex.between(s).mu3u));
    CHECK(near(*fl.between(s).mu4u, *ex.between(s).mu4u, 1e-9));
    CHECK(near(*fl.between(s).mu2u_sq, *ex.between(s).mu2u_sq, 1e-9));
  }
}

TEST_CASE("equal group means give negative between estimates", "[two_level]") {
  const auto data = exact({{0, 0, 3}, {1, 1, 1}, {-1, 2, 2}});
  const auto summary = mlmom::validate_two_level(data);
  const auto w = mlmom::estimate_within(data, summary);
  const auto grp = mlmom::estimate_between_grp(data, summary, w);
  CHECK(grp.mu2u == -(w.mu2v / 3) * summary.inv_sum1);
  CHECK(grp.mu3u == -(w.mu3v / 3) * summary.inv_sum2);
  const auto obs = mlmom::estimate_between_obs(data, summary, w);
  CHECK(obs.mu2u == -w.mu2v / 3);
}

TEST_CASE("supplied nuisances replace the plug-ins", "[two_level]") {
  const auto summary = mlmom::validate_two_level(kData);
  const auto constants = mlmom::two_level_constants<Rational>(summary);
  const auto w = mlmom::estimate_within(kData, constants);
  const mlmom::Nuisances<Rational> plug{Rational(1249, 1728) * w.mu2v, *w.mu2v_sq, *w.mu4v};
  const auto explicit_plug = mlmom::estimate_between(kData, constants, w, Scheme::grp, std::optional{plug});
  CHECK(*explicit_plug.mu4u == q("-66695753089/13723084800"));
  const auto other =
      mlmom::estimate_between(kData, constants, w, Scheme::grp,
                              std::optional{mlmom::Nuisances<Rational>{Rational(2), Rational(4), Rational(6)}});
  CHECK(*other.mu4u != *explicit_plug.mu4u);
  CHECK(other.mu2u == explicit_plug.mu2u);
}

TEST_CASE("mismatched summary is a usage error", "[two_level]") {
  const auto summary = mlmom::validate_two_level_design(mlmom::SizeProfile{3, 3, 3});
  try {
    mlmom::estimate_within(kData, summary);
    FAIL("accepted a mismatched summary");
  } catch (const mlmom::Error& e) {
    CHECK(e.code() == mlmom::ErrorCode::usage);
  }
}
