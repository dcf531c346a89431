#include <catch_amalgamated.hpp>

#include "mlmom/design.hpp"

using mlmom::DesignSummary;
using mlmom::Error;
using mlmom::ErrorCode;
using mlmom::Integer;
using mlmom::NestedDesignSummary;
using mlmom::Rational;

TEST_CASE("design summary power sums", "[design]") {
  const auto s = DesignSummary::from_sizes(mlmom::SizeProfile{3, 3, 4});
  CHECK(s.n == 3);
  CHECK(s.total == 10);
  CHECK(s.inv_sum1 == Rational(11, 12));
  CHECK(s.inv_sum2 == Rational(1, 9) + Rational(1, 9) + Rational(1, 16));
  CHECK(s.inv_sum3 == Rational(2, 27) + Rational(1, 64));
  CHECK(s.pow_sum2 == Integer(34));

  const auto t = DesignSummary::from_sizes(mlmom::SizeProfile{4, 5, 6, 7});
  CHECK(t.pow_sum1 == Integer(22));
  CHECK(t.pow_sum2 == Integer(126));
  CHECK(t.pow_sum3 == Integer(64 + 125 + 216 + 343));
  CHECK(t.pow_sum4 == Integer(256 + 625 + 1296 + 2401));
}

TEST_CASE("nested summary aggregates subgroup sizes", "[design]") {
  const auto s = NestedDesignSummary::from_sizes({{3, 4, 5}, {3, 3, 3}, {4, 4, 4}});
  CHECK(s.n() == 3);
  CHECK(s.total() == 33);
  CHECK(s.outer.sizes == mlmom::SizeProfile{12, 9, 12});
  CHECK(s.outer.pow_sum2 == Integer(144 + 81 + 144));
  CHECK(s.sub_pow_sum2 == Integer(9 + 16 + 25 + 27 + 48));
  CHECK(s.sub_pow_sum3 == Integer(27 + 64 + 125 + 81 + 192));
  CHECK(s.groups[0].inv_sum1 == Rational(47, 60));
  CHECK(s.sizes() == mlmom::NestedSizeProfile{{3, 4, 5}, {3, 3, 3}, {4, 4, 4}});
}

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::usage;
}

}  // namespace

TEST_CASE("two-level validation order and context", "[design]") {
  using mlmom::validate_two_level_design;
  CHECK(code_of([] { validate_two_level_design(mlmom::SizeProfile{3, 3}); }) ==
        ErrorCode::too_few_groups);
  // group count is checked before sizes
  CHECK(code_of([] { validate_two_level_design(mlmom::SizeProfile{1, 1}); }) ==
        ErrorCode::too_few_groups);
  try {
    validate_two_level_design(mlmom::SizeProfile{3, 2, 5});
    FAIL("accepted a group of 2");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::group_too_small);
    CHECK(e.at("group") == 1U);
  }
  CHECK_NOTHROW(validate_two_level_design(mlmom::SizeProfile{3, 3, 3}));
}

TEST_CASE("non-finite observations are rejected after the design", "[design]") {
  mlmom::TwoLevelDataset data{{{1, 2, 3}, {1, 2, 3}, {1, std::nan(""), 3}}};
  try {
    mlmom::validate_two_level(data);
    FAIL("accepted NaN");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::non_finite_value);
    CHECK(e.at("group") == 2U);
    CHECK(e.at("observation") == 1U);
  }
  data.groups.pop_back();
  CHECK(code_of([&] { mlmom::validate_two_level(data); }) == ErrorCode::too_few_groups);
}

TEST_CASE("three-level validation", "[design]") {
  using mlmom::validate_three_level_design;
  CHECK(code_of([] { validate_three_level_design({{3, 3, 3}, {3, 3, 3}}); }) ==
        ErrorCode::too_few_groups);
  CHECK(code_of([] { validate_three_level_design({{3, 3, 3}, {3, 3}, {3, 3, 3}}); }) ==
        ErrorCode::subgroup_count_too_small);
  try {
    validate_three_level_design({{3, 3, 3}, {3, 3, 3}, {3, 3, 2}});
    FAIL("accepted a subgroup of 2");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::subgroup_too_small);
    CHECK(e.at("group") == 2U);
    CHECK(e.at("subgroup") == 2U);
  }
  mlmom::ThreeLevelDataset data{
      {{{1, 2, 3}, {1, 2, 3}, {1, 2, 3}},
       {{1, 2, 3}, {1, 2, 3}, {1, 2, 3}},
       {{1, 2, 3}, {1, 2, 3}, {1, 2, HUGE_VAL}}}};
  CHECK(code_of([&] { mlmom::validate_three_level(data); }) == ErrorCode::non_finite_value);
}

TEST_CASE("error carries a bare message and a prefixed what()", "[design]") {
  const Error e(ErrorCode::singular_system, "det is 0", {{"group", 4}});
  CHECK(e.message() == "det is 0");
  CHECK(std::string(e.what()) == "SingularSystem: det is 0");
  CHECK(e.at("group") == 4U);
  CHECK_FALSE(e.at("row").has_value());
}
