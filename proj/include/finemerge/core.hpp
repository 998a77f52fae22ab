#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace finemerge {

// Bad user input: malformed files, out-of-range parameters, shape mismatches.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered character alphabet with a distinguished CTC blank.
//
// The canonical English alphabet has 29 symbols: blank at index 0, then
// space, a-z and apostrophe. The blank is written as '_' wherever the
// alphabet is serialized; '_' is never a transcript character.
class Vocabulary {
 public:
  static constexpr char kBlankChar = '_';

  // `symbols` lists every symbol in index order, blank included as '_'.
  explicit Vocabulary(std::string symbols);

  static const Vocabulary& english();

  std::size_t size() const { return symbols_.size(); }
  int blank() const { return blank_; }
  char symbol(int index) const { return symbols_.at(static_cast<std::size_t>(index)); }
  // -1 when `c` is not in the alphabet.
  int index(char c) const { return lookup_[static_cast<unsigned char>(c)]; }
  bool contains(char c) const { return index(c) >= 0 && index(c) != blank_; }
  bool has_space() const { return index(' ') >= 0; }
  const std::string& symbols() const { return symbols_; }

  // Maps every character of `text` to its index; throws InputError on any
  // out-of-alphabet character.
  std::vector<int> encode(std::string_view text) const;
  std::string decode(std::span<const int> indices) const;

  bool operator==(const Vocabulary& other) const { return symbols_ == other.symbols_; }

 private:
  std::string symbols_;
  int blank_ = -1;
  int lookup_[256];
};

// Row-major T x V matrix of per-frame symbol probabilities.
class FramePosteriors {
 public:
  FramePosteriors() = default;
  FramePosteriors(std::string utterance_id, std::size_t frames, std::size_t symbols);
  FramePosteriors(std::string utterance_id, std::size_t frames, std::size_t symbols,
                  std::vector<double> probs);

  const std::string& id() const { return id_; }
  void set_id(std::string id) { id_ = std::move(id); }
  std::size_t frames() const { return frames_; }
  std::size_t symbols() const { return symbols_; }

  std::span<const double> row(std::size_t t) const {
    return {probs_.data() + t * symbols_, symbols_};
  }
  std::span<double> row(std::size_t t) { return {probs_.data() + t * symbols_, symbols_}; }
  double at(std::size_t t, std::size_t c) const { return probs_[t * symbols_ + c]; }
  double& at(std::size_t t, std::size_t c) { return probs_[t * symbols_ + c]; }

  const std::vector<double>& data() const { return probs_; }

  bool operator==(const FramePosteriors&) const = default;

 private:
  std::string id_;
  std::size_t frames_ = 0;
  std::size_t symbols_ = 0;
  std::vector<double> probs_;
};

// A transcript with one confidence per whitespace-delimited word.
struct Hypothesis {
  std::string transcript;
  std::vector<double> word_confidences;
};

struct NBestEntry {
  std::string transcript;
  double score = 0.0;  // log domain

  bool operator==(const NBestEntry&) const = default;
};

struct ServiceHypothesis {
  std::string id;
  std::string transcript;
  std::vector<double> word_confidences;
  std::vector<NBestEntry> nbest;

  bool operator==(const ServiceHypothesis&) const = default;
};

using LocalHypothesis = Hypothesis;

// Length-T expansion of a transcript over the frames of a posterior matrix.
struct FrameAlignment {
  std::vector<int> states;  // vocabulary index per frame
  double log_prob = 0.0;
  // Index into the aligned transcript, or nullopt on blank frames.
  std::vector<std::optional<std::size_t>> source_positions;
};

// Lowercase, drop characters outside `vocab`, collapse whitespace, trim.
std::string normalize_text(std::string_view raw, const Vocabulary& vocab = Vocabulary::english());

std::vector<std::string> split_words(std::string_view text);
std::size_t word_count(std::string_view text);

// Checks shape, sign and row sums (|sum - 1| <= 1e-4), then rescales each row
// to sum to 1 within 1e-9. Idempotent.
FramePosteriors validate_posteriors(FramePosteriors posteriors, const Vocabulary& vocab);

inline constexpr double kRowSumTolerance = 1e-4;

// Confidences default to 1.0 when absent; otherwise their count must match
// the word count and every value must lie in [0, 1].
std::vector<double> resolve_confidences(std::string_view transcript,
                                        std::span<const double> confidences);

}  // namespace finemerge
