#include <catch_amalgamated.hpp>

#include "mlmom/distribution.hpp"
#include "mlmom/kernel.hpp"

using mlmom::DiscreteDistribution;
using mlmom::Error;
using mlmom::ErrorCode;
using mlmom::Rational;

TEST_CASE("exact rational parsing", "[distribution]") {
  using mlmom::parse_rational;
  CHECK(parse_rational("1/3") == Rational(1, 3));
  CHECK(parse_rational("-2/6") == Rational(-1, 3));
  CHECK(parse_rational("0.1") == Rational(1, 10));
  CHECK(parse_rational("-1.25") == Rational(-5, 4));
  CHECK(parse_rational("2.5e-1") == Rational(1, 4));
  CHECK(parse_rational(" 3 ") == Rational(3));
  for (const char* bad : {"", "1/0", "abc", "1/-3", "1..2", "e5", "0x10"}) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_rational(bad), Error);
  }
}

TEST_CASE("distribution invariants", "[distribution]") {
  CHECK_NOTHROW(DiscreteDistribution::parse("1:0.5,-1:0.5"));
  CHECK_NOTHROW(DiscreteDistribution::parse("2:1/3,-1:2/3"));
  auto code = [](const char* text) {
    try {
      DiscreteDistribution::parse(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::usage;
  };
  CHECK(code("1:0.5,-2:0.5") == ErrorCode::invalid_distribution);  // mean -1/2
  CHECK(code("1:0.5,-1:0.4") == ErrorCode::invalid_distribution);  // mass 0.9
  CHECK(code("1:0.5,-1:0.5,0:0") == ErrorCode::invalid_distribution);
  CHECK(code("3:1") == ErrorCode::invalid_distribution);
  CHECK(code("1") == ErrorCode::invalid_distribution);
  // 0.1 + 0.2 + 0.7 is exactly 1 in rationals
  CHECK_NOTHROW(DiscreteDistribution::parse("7:0.1,-7:0.1,0:0.8"));
  CHECK(DiscreteDistribution::point_mass_zero().size() == 1);
}

TEST_CASE("true moments of small laws", "[distribution]") {
  const auto m = mlmom::true_moments(DiscreteDistribution::parse("2:1/3,-1:2/3"));
  CHECK(m.mu2() == 2);
  CHECK(m.mu3() == 2);
  CHECK(m.mu4() == 6);
  const auto r = mlmom::true_moments(DiscreteDistribution::rademacher());
  CHECK(r.mu2() == 1);
  CHECK(r.mu3() == 0);
  CHECK(r.mu4() == 1);
  CHECK_THROWS_AS(mlmom::TrueMoments(Rational(2), Rational(0), Rational(3)), Error);
  CHECK_THROWS_AS(mlmom::TrueMoments(Rational(-1), Rational(0), Rational(3)), Error);
}

TEST_CASE("inverse CDF follows listed atom order", "[distribution]") {
  const auto d = DiscreteDistribution::parse("2:1/3,-1:2/3");
  CHECK(d.sample_index(0.0) == 0);
  CHECK(d.sample_index(0.333) == 0);
  CHECK(d.sample_index(0.334) == 1);
  CHECK(d.sample_index(0.999999) == 1);
  CHECK(d.value_as_double(0) == 2.0);
  CHECK(d.to_string() == "2:1/3,-1:2/3");
}

TEST_CASE("leading zeros are decimal, not octal", "[distribution]") {
  using mlmom::parse_rational;
  CHECK(parse_rational("0.8") == Rational(4, 5));
  CHECK(parse_rational("0.09") == Rational(9, 100));
  CHECK(parse_rational("010/3") == Rational(10, 3));
  CHECK(parse_rational("7/09") == Rational(7, 9));
  CHECK(parse_rational("00") == 0);
  CHECK(parse_rational(".5") == Rational(1, 2));
}
