#include "finemerge/lm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <tuple>

#include "finemerge/binary.hpp"
#include "finemerge/core.hpp"

namespace finemerge {

namespace {
constexpr char kMagic[4] = {'F', 'M', 'L', 'M'};
}

NGramLM NGramLM::train(std::span<const std::string> sentences, double backoff,
                       double unknown_log_prob) {
  if (sentences.empty()) throw InputError("cannot train a language model on an empty corpus");
  if (!(backoff > 0.0 && backoff <= 1.0)) throw InputError("backoff factor must lie in (0, 1]");

  NGramLM lm;
  lm.backoff_ = backoff;
  lm.unknown_log_prob_ = unknown_log_prob;
  lm.words_ = {"<s>", "</s>"};
  lm.index_words();

  // Word ids are assigned in sorted order so that identical corpora produce
  // identical tables regardless of sentence order.
  std::vector<std::string> vocab;
  for (const auto& sentence : sentences) {
    for (auto& w : split_words(sentence)) vocab.push_back(std::move(w));
  }
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  for (auto& w : vocab) lm.words_.push_back(std::move(w));
  lm.index_words();
  lm.unigrams_.assign(lm.words_.size(), 0);

  std::vector<WordId> tokens;
  for (const auto& sentence : sentences) {
    tokens.assign(1, kSentenceStart);
    for (const auto& w : split_words(sentence)) tokens.push_back(lm.ids_.at(w));
    tokens.push_back(kSentenceEnd);
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      ++lm.unigrams_[tokens[i]];
      ++lm.total_tokens_;
      ++lm.bigrams_[pair_key(tokens[i - 1], tokens[i])];
      ++lm.bigram_history_[tokens[i - 1]];
      if (i >= 2) {
        ++lm.trigrams_[{tokens[i - 2], tokens[i - 1], tokens[i]}];
        ++lm.trigram_history_[pair_key(tokens[i - 2], tokens[i - 1])];
      }
    }
  }
  return lm;
}

void NGramLM::index_words() {
  ids_.clear();
  for (std::size_t i = 0; i < words_.size(); ++i) ids_.emplace(words_[i], static_cast<WordId>(i));
}

NGramLM::WordId NGramLM::lookup(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end() || it->second == kSentenceStart) return kUnknown;
  return it->second;
}

double NGramLM::score(const State& current, WordId word, State* next) const {
  // `next` may alias `current`.
  const State state = current;
  if (next) *next = State{state.prev1, word};
  if (word == kUnknown || word >= words_.size()) return unknown_log_prob_;

  double scale = 1.0;
  if (state.prev2 != kNoWord) {
    auto tri = trigrams_.find({state.prev2, state.prev1, word});
    if (tri != trigrams_.end()) {
      const double hist = static_cast<double>(trigram_history_.at(pair_key(state.prev2, state.prev1)));
      return std::max(std::log(static_cast<double>(tri->second) / hist), unknown_log_prob_);
    }
    scale *= backoff_;
  }
  if (state.prev1 != kNoWord) {
    auto bi = bigrams_.find(pair_key(state.prev1, word));
    if (bi != bigrams_.end()) {
      const double hist = static_cast<double>(bigram_history_.at(state.prev1));
      return std::max(std::log(scale * static_cast<double>(bi->second) / hist), unknown_log_prob_);
    }
    scale *= backoff_;
  }
  const std::uint64_t count = unigrams_[word];
  if (count == 0) return unknown_log_prob_;
  return std::max(std::log(scale * static_cast<double>(count) / static_cast<double>(total_tokens_)),
                  unknown_log_prob_);
}

double NGramLM::logprob(std::span<const std::string> words) const {
  State state = start();
  double total = 0.0;
  for (const auto& w : words) total += score(state, w, &state);
  return total + end_score(state);
}

double NGramLM::sentence_logprob(std::string_view sentence) const {
  const auto words = split_words(sentence);
  return logprob(words);
}

double NGramLM::continuation_mass(WordId history) const {
  auto hist = bigram_history_.find(history);
  if (hist == bigram_history_.end()) return 0.0;
  double mass = 0.0;
  for (WordId w = 0; w < words_.size(); ++w) {
    auto bi = bigrams_.find(pair_key(history, w));
    if (bi != bigrams_.end()) mass += static_cast<double>(bi->second) / static_cast<double>(hist->second);
  }
  return mass;
}

void NGramLM::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kMagic, 4);
  binary::write_le<std::uint16_t>(out, kFormatVersion);
  binary::write_le<double>(out, backoff_);
  binary::write_le<double>(out, unknown_log_prob_);

  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(words_.size()));
  for (std::size_t i = 0; i < words_.size(); ++i) {
    binary::write_string(out, words_[i]);
    binary::write_le<std::uint64_t>(out, unigrams_[i]);
  }

  std::vector<std::pair<std::uint64_t, std::uint64_t>> bigrams(bigrams_.begin(), bigrams_.end());
  std::sort(bigrams.begin(), bigrams.end());
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bigrams.size()));
  for (const auto& [key, count] : bigrams) {
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(key >> 32));
    binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(key));
    binary::write_le<std::uint64_t>(out, count);
  }

  std::vector<std::pair<std::array<WordId, 3>, std::uint64_t>> trigrams(trigrams_.begin(),
                                                                         trigrams_.end());
  std::sort(trigrams.begin(), trigrams.end());
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(trigrams.size()));
  for (const auto& [key, count] : trigrams) {
    for (WordId id : key) binary::write_le<std::uint32_t>(out, id);
    binary::write_le<std::uint64_t>(out, count);
  }
  if (!out) throw InputError("failed writing " + path.string());
}

NGramLM NGramLM::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open language model " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
    throw InputError(path.string() + " is not a language model file (bad magic)");
  }
  const auto version = binary::read_le<std::uint16_t>(in, "format version");
  if (version != kFormatVersion) {
    throw InputError("unsupported language model version " + std::to_string(version));
  }

  NGramLM lm;
  lm.backoff_ = binary::read_le<double>(in, "backoff");
  lm.unknown_log_prob_ = binary::read_le<double>(in, "unknown log-probability");

  const auto word_count = binary::read_le<std::uint32_t>(in, "word count");
  if (word_count < 2) throw InputError("language model word table is missing sentence markers");
  lm.words_.reserve(word_count);
  lm.unigrams_.reserve(word_count);
  for (std::uint32_t i = 0; i < word_count; ++i) {
    lm.words_.push_back(binary::read_string(in, "word"));
    lm.unigrams_.push_back(binary::read_le<std::uint64_t>(in, "unigram count"));
    if (i > 0) lm.total_tokens_ += lm.unigrams_.back();
  }
  lm.index_words();

  auto check_id = [&](WordId id) {
    if (id >= word_count) throw InputError("language model references an unknown word id");
    return id;
  };
  const auto bigram_count = binary::read_le<std::uint32_t>(in, "bigram count");
  for (std::uint32_t i = 0; i < bigram_count; ++i) {
    const WordId a = check_id(binary::read_le<std::uint32_t>(in, "bigram"));
    const WordId b = check_id(binary::read_le<std::uint32_t>(in, "bigram"));
    const auto count = binary::read_le<std::uint64_t>(in, "bigram count");
    lm.bigrams_[pair_key(a, b)] = count;
    lm.bigram_history_[a] += count;
  }
  const auto trigram_count = binary::read_le<std::uint32_t>(in, "trigram count");
  for (std::uint32_t i = 0; i < trigram_count; ++i) {
    std::array<WordId, 3> key{};
    for (auto& id : key) id = check_id(binary::read_le<std::uint32_t>(in, "trigram"));
    const auto count = binary::read_le<std::uint64_t>(in, "trigram count");
    lm.trigrams_[key] = count;
    lm.trigram_history_[pair_key(key[0], key[1])] += count;
  }
  return lm;
}

}  // namespace finemerge
