#include "mms/rational.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace mms;

TEST_CASE("parse_rat reads integers, fractions and decimals", "[rational]") {
  CHECK(parse_rat("3") == Rat(3));
  CHECK(parse_rat("-17") == Rat(-17));
  CHECK(parse_rat("+4") == Rat(4));
  CHECK(parse_rat("7/2") == Rat(7, 2));
  CHECK(parse_rat("-7/2") == Rat(-7, 2));
  CHECK(parse_rat("0.25") == Rat(1, 4));
  CHECK(parse_rat("-0.5") == Rat(-1, 2));
  CHECK(parse_rat("3.9") == Rat(39, 10));
  CHECK(parse_rat(".5") == Rat(1, 2));
  CHECK(parse_rat(" 19/10 ") == Rat(19, 10));
  CHECK(parse_rat("0.050") == Rat(1, 20));
}

TEST_CASE("parse_rat stores lowest terms with positive denominator", "[rational]") {
  // The mpq string constructor keeps "-6/4" unreduced; the parser must not.
  Rat r = parse_rat("-6/4");
  CHECK(rat_num(r) == -3);
  CHECK(rat_den(r) == 2);
  r = parse_rat("10/-4");
  CHECK(rat_num(r) == -5);
  CHECK(rat_den(r) == 2);
  r = parse_rat("0/7");
  CHECK(rat_num(r) == 0);
  CHECK(rat_den(r) == 1);
}

TEST_CASE("parse_rat rejects malformed input", "[rational]") {
  CHECK_THROWS_AS(parse_rat(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_rat("abc"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rat("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rat("1/2/3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rat("1.2.3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rat("1e3"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rat("1/2.5"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rat("--3"), std::invalid_argument);
}

TEST_CASE("rat_to_string round-trips through parse_rat", "[rational]") {
  std::mt19937_64 rng(20240811);
  std::uniform_int_distribution<long> num(-1000, 1000);
  std::uniform_int_distribution<long> den(1, 1000);
  for (int i = 0; i < 200; ++i) {
    Rat r(num(rng), den(rng));
    CHECK(parse_rat(rat_to_string(r)) == r);
  }
  CHECK(rat_to_string(Rat(4, 2)) == "2");
  CHECK(rat_to_string(Rat(-1, 3)) == "-1/3");
}

TEST_CASE("floor and ceil handle negatives", "[rational]") {
  CHECK(rat_floor(Rat(7, 2)) == 3);
  CHECK(rat_floor(Rat(-7, 2)) == -4);
  CHECK(rat_floor(Rat(4)) == 4);
  CHECK(rat_ceil(Rat(7, 2)) == 4);
  CHECK(rat_ceil(Rat(-7, 2)) == -3);
  CHECK(rat_ceil(Rat(-4)) == -4);
}

TEST_CASE("rat_from_double is exact on dyadic values", "[rational]") {
  CHECK(rat_from_double(0.5) == Rat(1, 2));
  CHECK(rat_from_double(-2.25) == Rat(-9, 4));
  CHECK(rat_from_double(3.0) == Rat(3));
}

TEST_CASE("rat_limit_denominator matches brute force on small caps", "[rational]") {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<long> num(-500, 500);
  std::uniform_int_distribution<long> den(1, 997);
  for (int i = 0; i < 100; ++i) {
    Rat x(num(rng), den(rng));
    Rat got = rat_limit_denominator(x, Int(10));
    REQUIRE(rat_den(got) <= 10);
    // Brute force: the closest fraction with denominator at most 10.
    Rat best_err = rat_abs(got - x);
    for (long q = 1; q <= 10; ++q) {
      Int p = rat_floor(Rat(q) * x);
      for (Int pp = p - 1; pp <= p + 2; ++pp) {
        Rat cand(pp, Int(q));
        CHECK(best_err <= rat_abs(cand - x));
      }
    }
  }
}

TEST_CASE("rat_limit_denominator returns exact values when already coarse", "[rational]") {
  CHECK(rat_limit_denominator(Rat(3, 7), Int(7)) == Rat(3, 7));
  CHECK(rat_limit_denominator(Rat(3, 7), Int(1000)) == Rat(3, 7));
  CHECK(rat_limit_denominator(parse_rat("3.141592653589793"), Int(113)) == Rat(355, 113));
}
