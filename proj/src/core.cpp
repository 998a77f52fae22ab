#include "finemerge/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

namespace finemerge {

Vocabulary::Vocabulary(std::string symbols) : symbols_(std::move(symbols)) {
  std::fill(std::begin(lookup_), std::end(lookup_), -1);
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    auto c = static_cast<unsigned char>(symbols_[i]);
    if (lookup_[c] != -1) {
      throw InputError(std::string("duplicate vocabulary symbol '") + symbols_[i] + "'");
    }
    lookup_[c] = static_cast<int>(i);
  }
  blank_ = lookup_[static_cast<unsigned char>(kBlankChar)];
  if (blank_ < 0) throw InputError("vocabulary has no blank symbol '_'");
  if (symbols_.size() < 2) throw InputError("vocabulary needs at least one non-blank symbol");
}

const Vocabulary& Vocabulary::english() {
  static const Vocabulary vocab("_ abcdefghijklmnopqrstuvwxyz'");
  return vocab;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (char c : text) {
    int i = index(c);
    if (i < 0 || i == blank_) {
      throw InputError(std::string("character '") + c + "' is not in the vocabulary");
    }
    out.push_back(i);
  }
  return out;
}

std::string Vocabulary::decode(std::span<const int> indices) const {
  std::string out;
  out.reserve(indices.size());
  for (int i : indices) out.push_back(symbol(i));
  return out;
}

FramePosteriors::FramePosteriors(std::string utterance_id, std::size_t frames, std::size_t symbols)
    : id_(std::move(utterance_id)), frames_(frames), symbols_(symbols), probs_(frames * symbols, 0.0) {}

FramePosteriors::FramePosteriors(std::string utterance_id, std::size_t frames, std::size_t symbols,
                                 std::vector<double> probs)
    : id_(std::move(utterance_id)), frames_(frames), symbols_(symbols), probs_(std::move(probs)) {
  if (probs_.size() != frames_ * symbols_) {
    throw InputError("posterior matrix holds " + std::to_string(probs_.size()) + " values, expected " +
                     std::to_string(frames_) + "x" + std::to_string(symbols_));
  }
}

std::string normalize_text(std::string_view raw, const Vocabulary& vocab) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char raw_c : raw) {
    auto c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw_c)));
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (!vocab.contains(c)) continue;
    if (pending_space && vocab.has_space()) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && text[i] == ' ') ++i;
    std::size_t j = i;
    while (j < text.size() && text[j] != ' ') ++j;
    if (j > i) words.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return words;
}

std::size_t word_count(std::string_view text) { return split_words(text).size(); }

FramePosteriors validate_posteriors(FramePosteriors posteriors, const Vocabulary& vocab) {
  if (posteriors.symbols() != vocab.size()) {
    throw InputError("posteriors for '" + posteriors.id() + "' have " +
                     std::to_string(posteriors.symbols()) + " columns, vocabulary has " +
                     std::to_string(vocab.size()));
  }
  for (std::size_t t = 0; t < posteriors.frames(); ++t) {
    auto row = posteriors.row(t);
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw InputError("posteriors for '" + posteriors.id() + "' frame " + std::to_string(t) +
                         " contain a negative or non-finite entry");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      throw InputError("posteriors for '" + posteriors.id() + "' frame " + std::to_string(t) +
                       " sum to " + std::to_string(sum));
    }
    // Rows already at 1 within a few ulps are left untouched so that a second
    // pass is a bitwise no-op.
    if (std::abs(sum - 1.0) > 1e-12) {
      for (double& p : row) p /= sum;
    }
  }
  return posteriors;
}

std::vector<double> resolve_confidences(std::string_view transcript,
                                        std::span<const double> confidences) {
  const std::size_t words = word_count(transcript);
  if (confidences.empty()) return std::vector<double>(words, 1.0);
  if (confidences.size() != words) {
    throw InputError("transcript '" + std::string(transcript) + "' has " + std::to_string(words) +
                     " words but " + std::to_string(confidences.size()) + " confidences");
  }
  for (double c : confidences) {
    if (!(c >= 0.0 && c <= 1.0)) throw InputError("word confidence outside [0, 1]");
  }
  return {confidences.begin(), confidences.end()};
}

}  // namespace finemerge
