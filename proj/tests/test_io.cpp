#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "finemerge/io.hpp"

using namespace finemerge;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name) { return fs::temp_directory_path() / ("finemerge_io_" + name); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Values exactly representable in single precision.
std::vector<FramePosteriors> sample(const Vocabulary& v) {
  std::vector<FramePosteriors> out;
  for (std::size_t k = 0; k < 3; ++k) {
    FramePosteriors p("utt-" + std::to_string(k), 2 + k, v.size());
    for (std::size_t t = 0; t < p.frames(); ++t) {
      p.at(t, (t + k) % v.size()) = 0.75;
      p.at(t, (t + k + 1) % v.size()) = 0.125;
      p.at(t, (t + k + 2) % v.size()) = 0.125;
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST_CASE("posterior archives round-trip") {
  const Vocabulary& v = Vocabulary::english();
  const auto items = sample(v);

  SUBCASE("binary is bit exact") {
    const auto path = temp_path("p.bin");
    io::save_posteriors(path, items, v);
    CHECK(io::load_posteriors(path) == items);
    CHECK(slurp(path).substr(0, 4) == "FMPB");
  }
  SUBCASE("json mirror agrees with binary") {
    const auto bin = temp_path("p2.bin");
    const auto js = temp_path("p2.json");
    io::save_posteriors(bin, items, v, io::Format::kBinary);
    io::save_posteriors(js, items, v, io::Format::kJson);
    CHECK(io::load_posteriors(js) == io::load_posteriors(bin));
  }
  SUBCASE("single json object") {
    const auto js = temp_path("one.json");
    std::ofstream(js) << R"({"id": "x", "vocab": "_ab", "probs": [[0.5, 0.25, 0.25]]})";
    const auto loaded = io::load_posteriors(js, Vocabulary("_ab"));
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].id() == "x");
    CHECK(loaded[0].at(0, 1) == 0.25);
    CHECK_THROWS_AS(io::load_posteriors(js), InputError);  // vocabulary mismatch
  }
}

TEST_CASE("a 1x2 matrix round-trips") {
  const Vocabulary v("_a");
  const std::vector<FramePosteriors> one{FramePosteriors("m", 1, 2, {0.25, 0.75})};
  const auto path = temp_path("tiny.bin");
  io::save_posteriors(path, one, v);
  CHECK(io::load_posteriors(path, v) == one);
  const std::string bytes = slurp(path);
  std::ofstream(path, std::ios::binary) << bytes.substr(0, bytes.size() - 1);
  CHECK_THROWS_AS(io::load_posteriors(path, v), InputError);
}

TEST_CASE("damaged posterior archives are rejected") {
  const Vocabulary& v = Vocabulary::english();
  const auto path = temp_path("good.bin");
  io::save_posteriors(path, sample(v), v);
  const std::string bytes = slurp(path);
  const auto bad = temp_path("bad.bin");

  SUBCASE("truncated") {
    std::ofstream(bad, std::ios::binary) << bytes.substr(0, bytes.size() - 3);
    CHECK_THROWS_AS(io::load_posteriors(bad), InputError);
  }
  SUBCASE("bad magic") {
    std::string b = bytes;
    b[1] = 'X';
    std::ofstream(bad, std::ios::binary) << b;
    CHECK_THROWS_AS(io::load_posteriors(bad), InputError);
  }
  SUBCASE("bad version") {
    std::string b = bytes;
    b[4] = 9;
    std::ofstream(bad, std::ios::binary) << b;
    CHECK_THROWS_AS(io::load_posteriors(bad), InputError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(io::load_posteriors(temp_path("absent.bin")), InputError); }
  CHECK_THROWS_AS(io::parse_format("xml"), InputError);
}

TEST_CASE("hypothesis lines") {
  std::istringstream in(
      "{\"id\": \"a\", \"transcript\": \"hello world\", \"word_confidences\": [0.5, 0.75]}\n"
      "\n"
      "not json\n"
      "{\"id\": \"b\", \"transcript\": \"x\", \"nbest\": [{\"transcript\": \"x\", \"score\": -1.5}]}\n"
      "{\"id\": \"c\", \"transcript\": \"two words\", \"word_confidences\": [0.5]}\n"
      "{\"transcript\": \"no id\"}\n");
  const auto r = io::read_hypotheses(in);
  REQUIRE(r.records.size() == 2);
  CHECK(r.records[0].word_confidences == std::vector<double>{0.5, 0.75});
  CHECK(r.records[1].nbest == std::vector<NBestEntry>{{"x", -1.5}});
  REQUIRE(r.errors.size() == 3);
  CHECK(r.errors[0].line == 3);
  CHECK(r.errors[1].line == 5);
  CHECK(r.errors[2].line == 6);

  std::ostringstream out;
  io::write_hypotheses(out, r.records);
  std::istringstream again(out.str());
  CHECK(io::read_hypotheses(again).records == r.records);
}

TEST_CASE("reference lines") {
  const auto path = temp_path("refs.jsonl");
  const std::vector<io::Reference> refs{{"a", "one two"}, {"b", ""}};
  io::write_references(path, refs);
  const auto back = io::read_references(path);
  CHECK(back.errors.empty());
  REQUIRE(back.records.size() == 2);
  CHECK(back.records[1].id == "b");
  CHECK(back.records[0].transcript == "one two");
}

TEST_CASE("parameter files") {
  io::ParameterSet p;
  p.merge = {2e-3, 0.7, 0.25};
  p.beam.alpha = 1.5;
  p.beam.beta = -0.5;
  p.beam.width = 64;
  p.rover.conf_null = 0.3;
  p.rover.prefer_on_tie = TiePreference::kLocal;
  p.rescore_lambda = 2.0;
  const auto path = temp_path("params.json");
  io::save_params(path, p);
  const auto back = io::load_params(path);
  CHECK(back.merge.psi == p.merge.psi);
  CHECK(back.merge.omega == p.merge.omega);
  CHECK(back.merge.gamma == p.merge.gamma);
  CHECK(back.beam.alpha == p.beam.alpha);
  CHECK(back.beam.beta == p.beam.beta);
  CHECK(back.beam.width == p.beam.width);
  CHECK(back.rover.conf_null == p.rover.conf_null);
  CHECK(back.rover.prefer_on_tie == TiePreference::kLocal);
  CHECK(back.rescore_lambda == p.rescore_lambda);
  CHECK(io::params_to_json(back) == io::params_to_json(p));

  std::string text = slurp(path);
  const auto pos = text.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 12, "\"version\": 2");
  std::ofstream(path) << text;
  CHECK_THROWS_AS(io::load_params(path), InputError);

  std::ofstream(path) << R"({"format": "other", "version": 1})";
  CHECK_THROWS_AS(io::load_params(path), InputError);
  std::ofstream(path) << "{";
  CHECK_THROWS_AS(io::load_params(path), InputError);
}
