#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "finemerge/dataset.hpp"

namespace finemerge {

const std::vector<std::string>& default_word_list();

struct CharConfusion {
  std::string from;
  std::string to;
  double rate = 0.0;
};

// Knobs of the synthetic accent benchmark. The "local" model sees every
// character but is diffusely noisy; the "service" is clean except for
// systematic accent confusions, after which its own LM snaps the result onto
// the nearest vocabulary word.
struct SynthConfig {
  std::uint64_t seed = 7;

  // Sentence source: `sentences` when non-empty, otherwise random sentences
  // over `words` (default list when empty). The first word is drawn with Zipf
  // rank weights; each later word comes from the previous word's fixed list
  // of `successors`, or with probability `successor_escape` from the Zipf
  // distribution again. Zero successors gives independent words.
  std::vector<std::string> words;
  std::vector<std::string> sentences;
  double zipf_exponent = 1.0;
  std::size_t successors = 16;
  double successor_escape = 0.15;
  std::size_t min_words = 3;
  std::size_t max_words = 10;

  // Frame path.
  std::size_t dwell_min = 1;
  std::size_t dwell_max = 3;
  double blank_insertion = 0.3;

  // Local posteriors.
  double local_noise = 0.25;
  double boundary_noise = 0.05;  // word boundaries are acoustically clearer
  double local_confusion_rate = 0.06;
  std::map<char, std::string> local_confusions;  // '_' in a target list means deletion

  // Service transcript.
  std::vector<CharConfusion> service_confusions = {
      {"t", "d", 0.3}, {"d", "t", 0.1}, {"v", "w", 0.3}, {"w", "v", 0.3}, {"th", "d", 0.25}};
  std::map<std::string, std::string> homophones;
  double homophone_rate = 0.3;
  bool snap_to_words = true;
  double confidence_correct = 0.85;
  double confidence_error = 0.55;
  double confidence_sd = 0.12;
  std::size_t nbest = 5;

  // Train sentences only feed the LM unless this is set.
  bool train_utterances = false;

  SynthConfig();
  void validate() const;
};

struct SynthDataset {
  std::vector<std::string> train_sentences;
  std::vector<Utterance> train;  // filled only with SynthConfig::train_utterances
  std::vector<Utterance> val;
  std::vector<Utterance> test;
};

// Deterministic under cfg.seed. `n` distinct sentences are split 85/5/10 into
// train, validation and test.
SynthDataset gen_dataset(const SynthConfig& cfg, std::size_t n);

// Writes manifest.json, train/sentences.txt and the val/test split
// directories (plus train/ split files when train utterances were generated).
void save_dataset(const std::filesystem::path& dir, const SynthDataset& data, const SynthConfig& cfg,
                  io::Format format = io::Format::kBinary);

// Per-utterance random stream, independent of how many utterances precede it.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  static Rng for_stream(std::uint64_t seed, std::uint64_t stream);

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
  bool chance(double p) { return uniform() < p; }
  double normal(double mean, double sd);

 private:
  std::mt19937_64 engine_;
};

}  // namespace finemerge
