#include <doctest.h>

#include <json.hpp>

#include "finemerge/metrics.hpp"
#include "finemerge/synth.hpp"
#include "finemerge/tune.hpp"

using namespace finemerge;

namespace {

struct Fixture {
  SynthDataset data = gen_dataset(SynthConfig{}, 2000);
  NGramLM lm = NGramLM::train(data.train_sentences);
  std::vector<std::string> refs;
  Fixture() {
    for (const auto& u : data.val) refs.push_back(u.reference);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

TuneGrids small_grids() {
  TuneGrids g;
  g.alpha = {0.5, 1.0};
  g.beta = {0.0, 1.0};
  g.psi = {1e-3, 0.05};
  g.omega = {0.3, 0.7};
  g.gamma = {0.1, 0.4};
  g.conf_null = {0.3, 0.6};
  g.lambda = {0.0, 1.0};
  return g;
}

}  // namespace

TEST_CASE("singleton grids return their only point") {
  const auto& f = fixture();
  TuneGrids g;
  g.alpha = {0.75};
  g.beta = {0.25};
  g.psi = {2e-3};
  g.omega = {0.6};
  g.gamma = {0.15};
  g.conf_null = {0.4};
  g.lambda = {3.0};
  const auto r = grid_search(f.data.val, f.lm, g);
  CHECK(r.best.beam.alpha == 0.75);
  CHECK(r.best.beam.beta == 0.25);
  CHECK(r.best.merge.psi == 2e-3);
  CHECK(r.best.merge.omega == 0.6);
  CHECK(r.best.merge.gamma == 0.15);
  CHECK(r.best.rover.conf_null == 0.4);
  CHECK(r.best.rescore_lambda == 3.0);
  CHECK(r.trace.size() == 4);
}

TEST_CASE("a zero-omega-and-gamma grid reproduces local decoding") {
  const auto& f = fixture();
  TuneGrids g = small_grids();
  g.omega = {0.0};
  g.gamma = {0.0};
  const auto r = grid_search(f.data.val, f.lm, g);
  CHECK(r.finemerge_wer == r.local_wer);
}

TEST_CASE("reported objectives match a fresh evaluation") {
  const auto& f = fixture();
  const auto g = small_grids();
  const auto r = grid_search(f.data.val, f.lm, g);
  CHECK(r.trace.size() == 4 + 8 + 2 + 2);
  const auto out = run_systems(f.data.val, f.lm, r.best, 1);
  CHECK(wer(f.refs, out.local) == r.local_wer);
  CHECK(wer(f.refs, out.finemerge) == r.finemerge_wer);
  CHECK(wer(f.refs, out.rover_words) == r.rover_wer);
  CHECK(wer(f.refs, out.rescore) == r.rescore_wer);
  CHECK(wer(f.refs, out.service) == r.service_wer);

  // The chosen point is the first minimum of its stage.
  for (const auto& t : r.trace) {
    if (t.stage == "finemerge") CHECK(t.wer >= r.finemerge_wer);
    if (t.stage == "local") CHECK(t.wer >= r.local_wer);
  }

  SUBCASE("parallel search agrees") {
    const auto p = grid_search(f.data.val, f.lm, g, {}, 3);
    CHECK(io::params_to_json(p.best) == io::params_to_json(r.best));
    CHECK(trace_to_json(p) == trace_to_json(r));
  }
}

TEST_CASE("tuned merge beats both inputs on validation") {
  const auto& f = fixture();
  const auto r = grid_search(f.data.val, f.lm, small_grids());
  CHECK(r.finemerge_wer < r.local_wer);
  CHECK(r.finemerge_wer < r.service_wer);
}

TEST_CASE("trace json") {
  const auto& f = fixture();
  const auto r = grid_search(f.data.val, f.lm, small_grids());
  const auto j = nlohmann::json::parse(trace_to_json(r));
  CHECK(j["format"] == "finemerge-tune-trace");
  CHECK(j["trace"].size() == r.trace.size());
}

TEST_CASE("grid validation") {
  const auto& f = fixture();
  TuneGrids g = small_grids();
  g.alpha.clear();
  CHECK_THROWS_AS(grid_search(f.data.val, f.lm, g), InputError);
  g = small_grids();
  g.omega = {1.5};
  CHECK_THROWS_AS(grid_search(f.data.val, f.lm, g), InputError);
  CHECK_THROWS_AS(grid_search(std::span<const Utterance>{}, f.lm, small_grids()), InputError);
}
