#include <doctest.h>

#include <cmath>

#include "finemerge/core.hpp"

using namespace finemerge;

TEST_CASE("english vocabulary layout") {
  const Vocabulary& v = Vocabulary::english();
  CHECK(v.size() == 29);
  CHECK(v.blank() == 0);
  CHECK(v.index(' ') == 1);
  CHECK(v.index('a') == 2);
  CHECK(v.index('\'') == 28);
  CHECK(v.index('A') == -1);
  CHECK_FALSE(v.contains('_'));
  CHECK(v.has_space());
  CHECK(v.decode(v.encode("it's ok")) == "it's ok");
  CHECK_THROWS_AS(v.encode("a_b"), InputError);
  CHECK_THROWS_AS(v.encode("x!"), InputError);
}

TEST_CASE("vocabulary construction errors") {
  CHECK_THROWS_AS(Vocabulary("abc"), InputError);
  CHECK_THROWS_AS(Vocabulary("_aa"), InputError);
  CHECK_THROWS_AS(Vocabulary("_"), InputError);
  Vocabulary small("_ab");
  CHECK(small.size() == 3);
  CHECK_FALSE(small.has_space());
}

TEST_CASE("normalize_text") {
  CHECK(normalize_text("  Hello,   World!  ") == "hello world");
  CHECK(normalize_text("It's\tTIME\n") == "it's time");
  CHECK(normalize_text("42 ... ") == "");
  CHECK(normalize_text("a - b") == "a b");
  CHECK(normalize_text("a b", Vocabulary("_ab")) == "ab");
}

TEST_CASE("split_words ignores repeated spaces") {
  CHECK(split_words("a  b ").size() == 2);
  CHECK(split_words("").empty());
  CHECK(word_count(" x y z") == 3);
}

TEST_CASE("resolve_confidences") {
  CHECK(resolve_confidences("a b", {}) == std::vector<double>{1.0, 1.0});
  const std::vector<double> c{0.2, 0.9};
  CHECK(resolve_confidences("a b", c) == c);
  const std::vector<double> one{0.5};
  CHECK_THROWS_AS(resolve_confidences("a b", one), InputError);
  const std::vector<double> bad{0.5, 1.5};
  CHECK_THROWS_AS(resolve_confidences("a b", bad), InputError);
}

TEST_CASE("validate_posteriors") {
  const Vocabulary v("_ab");
  FramePosteriors ok("u", 2, 3, {0.2, 0.3, 0.5, 1.0, 0.0, 0.0});
  CHECK(validate_posteriors(ok, v) == ok);

  SUBCASE("rescales small drift and is idempotent") {
    FramePosteriors drift("u", 1, 3, {0.2, 0.3, 0.50005});
    const auto once = validate_posteriors(drift, v);
    double sum = 0.0;
    for (double x : once.row(0)) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(validate_posteriors(once, v) == once);
  }
  SUBCASE("rejects") {
    CHECK_THROWS_AS(validate_posteriors(FramePosteriors("u", 1, 2, {0.5, 0.5}), v), InputError);
    CHECK_THROWS_AS(validate_posteriors(FramePosteriors("u", 1, 3, {0.5, 0.6, -0.1}), v), InputError);
    CHECK_THROWS_AS(validate_posteriors(FramePosteriors("u", 1, 3, {0.5, 0.6, 0.1}), v), InputError);
    CHECK_THROWS_AS(validate_posteriors(FramePosteriors("u", 1, 3, {0.5, NAN, 0.5}), v), InputError);
  }
  CHECK_THROWS_AS(FramePosteriors("u", 2, 3, {0.1}), InputError);
}
