#include <doctest.h>

#include <filesystem>
#include <set>

#include "finemerge/align.hpp"
#include "finemerge/dataset.hpp"
#include "finemerge/decode.hpp"
#include "finemerge/metrics.hpp"
#include "finemerge/synth.hpp"

using namespace finemerge;

namespace {

std::vector<std::string> references(const std::vector<Utterance>& us) {
  std::vector<std::string> out;
  for (const auto& u : us) out.push_back(u.reference);
  return out;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  SynthConfig cfg;
  const auto a = gen_dataset(cfg, 200);
  const auto b = gen_dataset(cfg, 200);
  CHECK(a.train_sentences == b.train_sentences);
  REQUIRE(a.test.size() == b.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i) {
    CHECK(a.test[i].posteriors == b.test[i].posteriors);
    CHECK(a.test[i].service == b.test[i].service);
  }
  cfg.seed = 8;
  CHECK(gen_dataset(cfg, 200).train_sentences != a.train_sentences);
}

TEST_CASE("splits are disjoint and roughly 85/5/10") {
  const auto d = gen_dataset(SynthConfig{}, 1000);
  CHECK(d.train_sentences.size() == 850);
  CHECK(d.val.size() == 50);
  CHECK(d.test.size() == 100);
  std::set<std::string> seen(d.train_sentences.begin(), d.train_sentences.end());
  CHECK(seen.size() == d.train_sentences.size());
  for (const auto* split : {&d.val, &d.test}) {
    for (const auto& u : *split) CHECK(seen.insert(u.reference).second);
  }
}

TEST_CASE("generated records are well formed") {
  const auto d = gen_dataset(SynthConfig{}, 200);
  std::set<std::string> ids;
  for (const auto& u : d.test) {
    CHECK(ids.insert(u.id).second);
    CHECK(u.service.id == u.id);
    CHECK(u.reference == normalize_text(u.reference));
    CHECK_NOTHROW(validate_posteriors(u.posteriors, Vocabulary::english()));
    CHECK(u.posteriors.frames() >= min_frames(u.reference));
    CHECK(u.service.word_confidences.size() == word_count(normalize_text(u.service.transcript)));
    CHECK_FALSE(u.service.nbest.empty());
    CHECK(u.service.nbest.front().transcript == u.service.transcript);
  }
}

TEST_CASE("noiseless configuration reproduces the references") {
  SynthConfig cfg;
  cfg.local_noise = 0.0;
  cfg.boundary_noise = 0.0;
  cfg.local_confusion_rate = 0.0;
  cfg.homophone_rate = 0.0;
  cfg.service_confusions.clear();
  const auto d = gen_dataset(cfg, 200);
  for (const auto& u : d.test) {
    CHECK(greedy_decode(u.posteriors) == u.reference);
    CHECK(normalize_text(u.service.transcript) == u.reference);
  }
}

TEST_CASE("default noise gives both systems distinct, moderate error rates") {
  const auto d = gen_dataset(SynthConfig{}, 2000);
  const auto refs = references(d.test);
  std::vector<std::string> service, greedy;
  for (const auto& u : d.test) {
    service.push_back(normalize_text(u.service.transcript));
    greedy.push_back(greedy_decode(u.posteriors));
  }
  const double service_wer = wer(refs, service);
  const double greedy_wer = wer(refs, greedy);
  CHECK(service_wer > 0.02);
  CHECK(service_wer < 0.3);
  CHECK(greedy_wer > 0.05);
  CHECK(greedy_wer < 0.5);
}

TEST_CASE("small default benchmark: both systems err, on different utterances") {
  const auto d = gen_dataset(SynthConfig{}, 500);
  const auto refs = references(d.test);
  std::vector<std::string> service, greedy;
  std::size_t both = 0, either = 0;
  for (const auto& u : d.test) {
    service.push_back(normalize_text(u.service.transcript));
    greedy.push_back(greedy_decode(u.posteriors));
    const bool s = service.back() != u.reference;
    const bool g = greedy.back() != u.reference;
    both += s && g;
    either += s || g;
  }
  // Seed-7 values: service 0.0828, local greedy 0.1847, overlap 13/44.
  CHECK(wer(refs, service) > 0.05);
  CHECK(wer(refs, service) < 0.40);
  CHECK(wer(refs, greedy) > 0.05);
  CHECK(wer(refs, greedy) < 0.40);
  REQUIRE(either > 0);
  CHECK(static_cast<double>(both) / static_cast<double>(either) < 0.9);
}

TEST_CASE("datasets survive a save and load") {
  SynthConfig cfg;
  const auto d = gen_dataset(cfg, 200);
  const auto dir = std::filesystem::temp_directory_path() / "finemerge_synth_test";
  std::filesystem::remove_all(dir);
  save_dataset(dir, d, cfg);
  CHECK(std::filesystem::exists(dir / "manifest.json"));
  CHECK(std::filesystem::exists(dir / "train" / "sentences.txt"));
  const auto test = io::load_split(dir / "test");
  REQUIRE(test.size() == d.test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    CHECK(test[i].id == d.test[i].id);
    CHECK(test[i].reference == d.test[i].reference);
    CHECK(test[i].service.transcript == d.test[i].service.transcript);
    CHECK(test[i].posteriors.frames() == d.test[i].posteriors.frames());
  }
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.local_noise = 1.5;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = SynthConfig{};
  cfg.dwell_min = 0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  cfg = SynthConfig{};
  cfg.min_words = 5;
  cfg.max_words = 4;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}
