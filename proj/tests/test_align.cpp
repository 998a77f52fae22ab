#include <doctest.h>

#include <random>

#include "finemerge/align.hpp"
#include "support.hpp"

using namespace finemerge;

TEST_CASE("min_frames counts separating blanks") {
  CHECK(min_frames("a") == 1);
  CHECK(min_frames("ab") == 2);
  CHECK(min_frames("aa") == 3);
  CHECK(min_frames("aaa") == 5);
  CHECK(min_frames("posted") == 6);
  CHECK(min_frames("toasted") == 7);
}

TEST_CASE("augmented labels interleave blanks") {
  const Vocabulary v("_ab");
  const auto a = AugmentedLabels::expand("ab", v);
  CHECK(a.states == std::vector<int>{0, 1, 0, 2, 0});
  CHECK(a.source_positions[1] == std::optional<std::size_t>(0));
  CHECK(a.source_positions[3] == std::optional<std::size_t>(1));
  CHECK_FALSE(a.source_positions[2].has_value());
}

TEST_CASE("smooth adds a floor before the log") {
  FramePosteriors p("u", 1, 2, {1.0, 0.0});
  const auto l = smooth(p);
  CHECK(l.at(0, 0) == doctest::Approx(0.0));
  CHECK(l.at(0, 1) == doctest::Approx(std::log(1e-20)));
  CHECK_THROWS_AS(smooth(p, 0.0), InputError);
}

TEST_CASE("viterbi_align on hand instances") {
  const Vocabulary v("_ab");
  SUBCASE("one-hot path") {
    FramePosteriors p("u", 4, 3, {0, 1, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1});
    const auto a = viterbi_align("ab", smooth(p), v);
    CHECK(a.states == std::vector<int>{1, 1, 0, 2});
    CHECK(a.log_prob == doctest::Approx(0.0));
    CHECK(a.source_positions[0] == std::optional<std::size_t>(0));
    CHECK_FALSE(a.source_positions[2].has_value());
    CHECK(a.source_positions[3] == std::optional<std::size_t>(1));
  }
  SUBCASE("repeat needs a blank") {
    FramePosteriors p("u", 3, 3, {0.1, 0.9, 0, 0.1, 0.9, 0, 0.1, 0.9, 0});
    const auto a = viterbi_align("aa", smooth(p), v);
    CHECK(a.states == std::vector<int>{1, 0, 1});
  }
  SUBCASE("ties go to the lowest predecessor") {
    FramePosteriors p("u", 2, 3, {1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0 / 3});
    // Paths _a, a_, aa all tie; the end state prefers the label, and its
    // predecessor search the blank before it.
    const auto a = viterbi_align("a", smooth(p), v);
    CHECK(a.states == std::vector<int>{0, 1});
  }
  SUBCASE("errors") {
    FramePosteriors p("u", 2, 3, {1, 0, 0, 1, 0, 0});
    CHECK_THROWS_AS(viterbi_align("aa", smooth(p), v), InfeasibleAlignment);
    CHECK_THROWS_AS(viterbi_align("", smooth(p), v), InputError);
    CHECK_THROWS_AS(viterbi_align("c", smooth(p), v), InputError);
  }
}

TEST_CASE("viterbi_align matches brute-force enumeration") {
  std::mt19937_64 rng(20240601);
  const std::vector<Vocabulary> vocabs{Vocabulary("_ab"), Vocabulary("_ abc"), Vocabulary("_abcd")};
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const Vocabulary& v = vocabs[static_cast<std::size_t>(i) % vocabs.size()];
    const std::string s = testing::random_transcript(rng, v, 4);
    std::uniform_int_distribution<std::size_t> frames(min_frames(s), 8);
    const std::size_t t = frames(rng);
    const auto p = testing::random_matrix(rng, t, v.size(), i % 2 == 0);
    const auto a = viterbi_align(s, smooth(p), v);
    const auto oracle = testing::brute_force_align(s, p, v);
    REQUIRE_FALSE(oracle.optima.empty());
    CHECK(a.log_prob == doctest::Approx(oracle.best).epsilon(1e-12));
    CHECK(std::find(oracle.optima.begin(), oracle.optima.end(), a.states) != oracle.optima.end());
    CHECK(testing::collapse(a.states, v) == s);
    ++checked;
  }
  CHECK(checked == 300);
}

TEST_CASE("source positions point at the emitted character") {
  std::mt19937_64 rng(5);
  const Vocabulary v("_ abc");
  for (int i = 0; i < 50; ++i) {
    const std::string s = testing::random_transcript(rng, v, 4);
    const auto p = testing::random_matrix(rng, min_frames(s) + 3, v.size());
    const auto a = viterbi_align(s, smooth(p), v);
    std::size_t last = 0;
    for (std::size_t t = 0; t < a.states.size(); ++t) {
      if (a.states[t] == v.blank()) {
        CHECK_FALSE(a.source_positions[t].has_value());
        continue;
      }
      REQUIRE(a.source_positions[t].has_value());
      CHECK(s[*a.source_positions[t]] == v.symbol(a.states[t]));
      CHECK(*a.source_positions[t] >= last);
      last = *a.source_positions[t];
    }
  }
}
