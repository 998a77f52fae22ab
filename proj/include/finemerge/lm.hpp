#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace finemerge {

// Word trigram model scored with stupid backoff.
//
// Each sentence is padded with one <s> and terminated by </s>. The score of w
// after (u, v) is c(u v w) / c(u v) when the trigram was seen, else
// lambda * score(w | v), bottoming out at the unigram c(w) / N where N counts
// every token except <s>. Scores never fall below the unknown-word floor.
class NGramLM {
 public:
  using WordId = std::uint32_t;

  static constexpr WordId kSentenceStart = 0;
  static constexpr WordId kSentenceEnd = 1;
  static constexpr WordId kUnknown = 0xfffffffeu;  // out-of-vocabulary word
  static constexpr WordId kNoWord = 0xffffffffu;   // empty history slot
  static constexpr double kDefaultBackoff = 0.4;
  static constexpr double kDefaultUnknownLogProb = -16.11809565095832;  // log(1e-7)
  static constexpr std::uint16_t kFormatVersion = 1;

  // Two most recent words; <s> pads the start.
  struct State {
    WordId prev2 = kNoWord;
    WordId prev1 = kSentenceStart;
    bool operator==(const State&) const = default;
  };

  // Sentences are whitespace-separated words. Throws InputError when empty.
  static NGramLM train(std::span<const std::string> sentences, double backoff = kDefaultBackoff,
                       double unknown_log_prob = kDefaultUnknownLogProb);

  static NGramLM load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  WordId lookup(std::string_view word) const;
  State start() const { return {}; }

  // Log score of `word` in state `state`; `next` receives the successor state.
  double score(const State& state, WordId word, State* next = nullptr) const;
  double score(const State& state, std::string_view word, State* next = nullptr) const {
    return score(state, lookup(word), next);
  }
  double end_score(const State& state) const { return score(state, kSentenceEnd); }

  // Sum of word scores plus the end-of-sentence transition.
  double logprob(std::span<const std::string> words) const;
  double sentence_logprob(std::string_view sentence) const;

  double backoff() const { return backoff_; }
  double unknown_log_prob() const { return unknown_log_prob_; }
  std::size_t vocabulary_size() const { return words_.size(); }
  std::uint64_t token_count() const { return total_tokens_; }

  // Sum of c(v w) / c(v) over every observed continuation of v.
  double continuation_mass(WordId history) const;

 private:
  struct TrigramHash {
    std::size_t operator()(const std::array<WordId, 3>& k) const noexcept {
      std::uint64_t h = k[0];
      h = h * 0x9E3779B97F4A7C15ull ^ k[1];
      h = h * 0x9E3779B97F4A7C15ull ^ k[2];
      return static_cast<std::size_t>(h ^ (h >> 29));
    }
  };
  static std::uint64_t pair_key(WordId a, WordId b) {
    return (static_cast<std::uint64_t>(a) << 32) | b;
  }
  void index_words();

  double backoff_ = kDefaultBackoff;
  double unknown_log_prob_ = kDefaultUnknownLogProb;
  std::uint64_t total_tokens_ = 0;

  std::vector<std::string> words_;  // id -> word; 0 = <s>, 1 = </s>
  std::unordered_map<std::string, WordId> ids_;
  std::vector<std::uint64_t> unigrams_;  // by word id
  std::unordered_map<std::uint64_t, std::uint64_t> bigrams_;
  std::unordered_map<std::uint64_t, std::uint64_t> bigram_history_;  // c(v .)
  std::unordered_map<std::array<WordId, 3>, std::uint64_t, TrigramHash> trigrams_;
  std::unordered_map<std::uint64_t, std::uint64_t> trigram_history_;  // c(u v .)
};

}  // namespace finemerge
