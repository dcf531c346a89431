#include <catch_amalgamated.hpp>

#include "mlmom/kernel.hpp"

using mlmom::Rational;
using mlmom::WeightedSumSpec;

TEST_CASE("expected powers of weighted sums", "[kernel]") {
  WeightedSumSpec<Rational> two{{Rational(1), Rational(1)}, Rational(1), Rational(0), Rational(3)};
  CHECK(mlmom::expected_power(two, 4) == 12);
  CHECK(mlmom::expected_power(two, 2) == 2);

  WeightedSumSpec<Rational> single{{Rational(-3, 2)}, Rational(5), Rational(7), Rational(40)};
  CHECK(mlmom::expected_power(single, 3) == Rational(7) * Rational(-27, 8));
  CHECK(mlmom::expected_power(single, 4) == Rational(40) * Rational(81, 16));

  const Rational third(1, 3);
  WeightedSumSpec<Rational> equal{{third, third, third}, Rational(2), Rational(0), Rational(4)};
  CHECK(mlmom::expected_power(equal, 2) == Rational(2, 3));

  WeightedSumSpec<double> d{{0.5, -0.5, 2.0}, 2.0, 2.0, 6.0};
  CHECK(mlmom::expected_power(d, 3) == Catch::Approx(2.0 * (0.125 - 0.125 + 8.0)));

  CHECK_THROWS_AS(mlmom::expected_power(two, 5), mlmom::Error);
  CHECK_THROWS_AS(mlmom::expected_power(WeightedSumSpec<Rational>{}, 2), mlmom::Error);
  WeightedSumSpec<double> bad{{1.0, std::nan("")}, 1.0, 0.0, 1.0};
  CHECK_THROWS_AS(mlmom::expected_power(bad, 2), mlmom::Error);
}

TEST_CASE("centred power sums", "[kernel]") {
  const std::vector<Rational> v{Rational(0), Rational(0), Rational(3)};
  const auto c = mlmom::centered_power_sums(v);
  CHECK(c.mean == 1);
  CHECK(c.sum2 == 6);
  CHECK(c.sum3 == 6);
  CHECK(c.sum4 == 18);
  CHECK(c.pair_sum == 9);

  const std::vector<double> flat(4, 2.75);
  const auto f = mlmom::centered_power_sums(flat);
  CHECK(f.sum2 == 0.0);
  CHECK(f.sum3 == 0.0);
  CHECK(f.sum4 == 0.0);
  CHECK(f.pair_sum == 0.0);

  const auto s = mlmom::centered_power_sums(std::vector<double>{-1.0, 1.0});
  CHECK(s.mean == 0.0);
  CHECK(s.sum2 == 2.0);
  CHECK(s.sum3 == 0.0);
  CHECK(s.sum4 == 2.0);
  CHECK(s.pair_sum == 1.0);
}

TEST_CASE("pair sum matches an explicit pair loop", "[kernel]") {
  const std::vector<Rational> v{Rational(1), Rational(4), Rational(-2), Rational(0), Rational(7, 3)};
  const auto c = mlmom::centered_power_sums(v);
  Rational pairs(0);
  for (std::size_t a = 0; a < v.size(); ++a) {
    for (std::size_t b = a + 1; b < v.size(); ++b) {
      const Rational ra = v[a] - c.mean;
      const Rational rb = v[b] - c.mean;
      pairs += ra * ra * rb * rb;
    }
  }
  CHECK(c.pair_sum == pairs);
}

TEST_CASE("compensated sum recovers cancelled terms", "[kernel]") {
  mlmom::CompensatedSum<double> s;
  for (double x : {1e16, 1.0, -1e16, 1.0}) s += x;
  CHECK(s.value() == 2.0);
}

TEST_CASE("rational to double rounds to nearest", "[kernel]") {
  CHECK(mlmom::to_double(Rational(1, 3)) == 1.0 / 3.0);
  CHECK(mlmom::to_double(Rational(-2, 3)) == -2.0 / 3.0);
  CHECK(mlmom::to_double(Rational(180, 13)) == 180.0 / 13.0);
  CHECK(mlmom::to_double(Rational(1, 10)) == 0.1);
}
