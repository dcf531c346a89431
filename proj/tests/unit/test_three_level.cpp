#include <catch_amalgamated.hpp>

#include "mlmom/three_level.hpp"
#include "support.hpp"

using mlmom::Rational;
using mlmom::Scheme;
using test_support::exact3;
using test_support::q;

namespace {

// Independent naive evaluation, exact arithmetic.
const auto kData = exact3({{{1, 2, 6}, {0, -1, 3, 2}, {4, 4, 1}},
                           {{2, 2, -3}, {5, 1, 0}, {1, 1, 1}, {-2, 0, 3, 3}},
                           {{7, 0, 1, 1, 2}, {3, -1, -1}, {0, 2, 4}}});

}  // namespace

TEST_CASE("w estimates with one non-constant subgroup", "[three_level]") {
  const auto data = exact3({{{0, 0, 3}, {1, 1, 1}, {2, 2, 2}},
                            {{5, 5, 5}, {1, 1, 1}, {0, 0, 0}},
                            {{4, 4, 4}, {3, 3, 3}, {-1, -1, -1}}});
  const auto summary = mlmom::validate_three_level(data);
  const auto w = mlmom::estimate_w(data, summary);
  CHECK(w.mu2w == Rational(1, 3));
  CHECK(w.mu3w == 1);
}

TEST_CASE("constant subgroups give zero w moments", "[three_level]") {
  const auto data = exact3({{{1, 1, 1}, {2, 2, 2}, {3, 3, 3}},
                            {{1, 1, 1}, {2, 2, 2}, {3, 3, 3, 3}},
                            {{0, 0, 0}, {0, 0, 0}, {9, 9, 9}}});
  const auto w = mlmom::estimate_w(data, mlmom::validate_three_level(data));
  CHECK(w.mu2w == 0);
  CHECK(w.mu3w == 0);
}

TEST_CASE("three-level estimates against the independent oracle", "[three_level]") {
  const auto summary = mlmom::validate_three_level(kData);
  const auto est = mlmom::estimate_three_level(kData, summary);
  CHECK(est.mu2w == Rational(961, 180));
  CHECK(est.mu3w == Rational(22708, 2265));
  REQUIRE(est.grp);
  CHECK(est.grp->mu2v == Rational(-133967, 181440));
  CHECK(est.grp->mu3v == Rational(-156378751, 83170800));
  CHECK(est.grp->mu2u == Rational(74863, 544320));
  CHECK(est.grp->mu3u == Rational(39752657, 124756200));
  REQUIRE(est.obs);
  CHECK(est.obs->mu2v == q("-143815093/196110423"));
  CHECK(est.obs->mu3v == q("-3524428700228/1873062103743"));
  CHECK(est.obs->mu2u == q("118400382910841/1630746416935350"));
  CHECK(est.obs->mu3u == q("2841762593740362802352/10451725639057355635125"));

  const auto only_grp = mlmom::estimate_three_level(kData, summary, true, false);
  CHECK(only_grp.grp);
  CHECK_FALSE(only_grp.obs);
}

TEST_CASE("three-level double path tracks the exact path", "[three_level]") {
  const auto summary = mlmom::validate_three_level(kData);
  const auto ex = mlmom::estimate_three_level(kData, summary);
  const auto fl = mlmom::estimate_three_level(test_support::as_double(kData), summary);
  using test_support::near;
  CHECK(near(fl.mu2w, ex.mu2w));
  CHECK(near(fl.mu3w, ex.mu3w));
  for (const auto& [a, b] : {std::pair{*fl.grp, *ex.grp}, std::pair{*fl.obs, *ex.obs}}) {
    CHECK(near(a.mu2v, b.mu2v));
    CHECK(near(a.mu3v, b.mu3v));
    CHECK(near(a.mu2u, b.mu2u));
    CHECK(near(a.mu3u, b.mu3u));
  }
}

TEST_CASE("step-wise calls agree with the combined estimate", "[three_level]") {
  const auto summary = mlmom::validate_three_level(kData);
  const auto w = mlmom::estimate_w(kData, summary);
  for (const auto scheme : {Scheme::grp, Scheme::obs}) {
    const auto v = mlmom::estimate_v_3l(kData, summary, scheme, w);
    const auto u = mlmom::estimate_u_3l(kData, summary, scheme, v, w);
    const auto all = mlmom::estimate_three_level(kData, summary);
    const auto& s = scheme == Scheme::grp ? *all.grp : *all.obs;
    CHECK(v.mu2v == s.mu2v);
    CHECK(v.mu3v == s.mu3v);
    CHECK(u.mu2u == s.mu2u);
    CHECK(u.mu3u == s.mu3u);
  }
}

TEST_CASE("equal subgroup means give non-positive v estimates", "[three_level]") {
  const auto data = exact3({{{0, 0, 3}, {1, 1, 1}, {2, -1, 2}},
                            {{5, 5, 5}, {4, 6, 5}, {5, 5, 5, 5}},
                            {{0, 0, 0}, {1, -1, 0}, {0, 0, 0}}});
  const auto summary = mlmom::validate_three_level(data);
  const auto w = mlmom::estimate_w(data, summary);
  REQUIRE(w.mu2w > 0);
  for (const auto scheme : {Scheme::grp, Scheme::obs}) {
    const auto v = mlmom::estimate_v_3l(data, summary, scheme, w);
    CHECK(v.mu2v < 0);
  }
}

TEST_CASE("three-level orders stop at three", "[three_level]") {
  CHECK_NOTHROW(mlmom::require_three_level_order(2));
  CHECK_NOTHROW(mlmom::require_three_level_order(3));
  CHECK_THROWS_AS(mlmom::require_three_level_order(4), mlmom::Error);
}
