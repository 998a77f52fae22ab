#include "finemerge/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "finemerge/align.hpp"
#include "finemerge/merge.hpp"

namespace finemerge {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

std::string collapse_spaces(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == ' ') {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

// Prefix trie shared by all beam entries of one decode. A node is a distinct
// collapsed prefix; its LM contribution depends only on the prefix.
class PrefixTree {
 public:
  struct Node {
    int parent = -1;
    int symbol = -1;       // last emitted symbol, -1 at the root
    int word_length = 0;   // characters since the last space
    double text_score = 0.0;
    NGramLM::State lm_state;
    // Per-frame scratch: index into the next-beam buffer.
    std::size_t stamp = std::numeric_limits<std::size_t>::max();
    std::size_t slot = 0;
  };

  PrefixTree(const Vocabulary& vocab, const NGramLM* lm, double alpha, double beta)
      : vocab_(vocab), lm_(lm), alpha_(alpha), beta_(beta), space_(vocab.index(' ')) {
    nodes_.emplace_back();
    if (lm_) nodes_[0].lm_state = lm_->start();
  }

  Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

  int child(int parent, int symbol) {
    const std::uint64_t key = static_cast<std::uint64_t>(parent) * vocab_.size() +
                              static_cast<std::uint64_t>(symbol);
    auto [it, inserted] = children_.try_emplace(key, static_cast<int>(nodes_.size()));
    if (!inserted) return it->second;

    Node n;
    n.parent = parent;
    n.symbol = symbol;
    const Node& p = node(parent);
    n.text_score = p.text_score;
    n.lm_state = p.lm_state;
    if (symbol == space_) {
      n.word_length = 0;
      if (p.word_length > 0) close_word(parent, p.word_length, n.text_score, n.lm_state);
    } else {
      n.word_length = p.word_length + 1;
    }
    nodes_.push_back(n);
    return it->second;
  }

  // Score including the trailing partial word and the sentence end.
  double final_text_score(int id) const {
    const Node& n = node(id);
    double score = n.text_score;
    NGramLM::State state = n.lm_state;
    if (n.word_length > 0) close_word(id, n.word_length, score, state);
    if (lm_ && alpha_ != 0.0) score += alpha_ * lm_->end_score(state);
    return score;
  }

  std::string text(int id) const {
    std::string out;
    for (; id > 0; id = node(id).parent) out.push_back(vocab_.symbol(node(id).symbol));
    std::reverse(out.begin(), out.end());
    return out;
  }

  // Lexicographic order of the two prefixes' strings.
  bool text_less(int a, int b) const { return text(a) < text(b); }

 private:
  // Adds the LM score of the word ending at node `last` to `score`.
  void close_word(int last, int length, double& score, NGramLM::State& state) const {
    score += beta_;
    if (!lm_ || alpha_ == 0.0) return;
    std::string word(static_cast<std::size_t>(length), '\0');
    int id = last;
    for (int i = length - 1; i >= 0; --i, id = node(id).parent) {
      word[static_cast<std::size_t>(i)] = vocab_.symbol(node(id).symbol);
    }
    score += alpha_ * lm_->score(state, word, &state);
  }

  const Vocabulary& vocab_;
  const NGramLM* lm_;
  double alpha_;
  double beta_;
  int space_;
  std::vector<Node> nodes_;
  std::unordered_map<std::uint64_t, int> children_;
};

struct BeamEntry {
  int node = 0;
  double blank = kNegInf;
  double non_blank = kNegInf;
  double total() const { return log_add(blank, non_blank); }
};

}  // namespace

void BeamParams::validate() const {
  if (width < 1) throw InputError("beam width must be at least 1");
  if (nbest < 1) throw InputError("nbest must be at least 1");
  if (!(alpha >= 0.0)) throw InputError("LM weight alpha must be non-negative");
  if (!std::isfinite(beta)) throw InputError("word bonus beta must be finite");
  if (!(symbol_cutoff >= 0.0 && symbol_cutoff < 1.0)) throw InputError("symbol cutoff must lie in [0, 1)");
}

std::string greedy_decode(const FramePosteriors& posteriors, const Vocabulary& vocab) {
  std::string out;
  int previous = -1;
  for (std::size_t t = 0; t < posteriors.frames(); ++t) {
    const auto row = posteriors.row(t);
    const int best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
    if (best != previous && best != vocab.blank()) out.push_back(vocab.symbol(best));
    previous = best;
  }
  return out;
}

double ctc_logprob(const FramePosteriors& posteriors, std::string_view transcript,
                   const Vocabulary& vocab) {
  const std::size_t frames = posteriors.frames();
  if (transcript.empty()) {
    double total = 0.0;
    for (std::size_t t = 0; t < frames; ++t) total += safe_log(posteriors.at(t, vocab.blank()));
    return total;
  }
  const std::size_t needed = min_frames(transcript);
  if (frames < needed) {
    throw InfeasibleAlignment("transcript needs " + std::to_string(needed) + " frames, only " +
                              std::to_string(frames) + " available");
  }
  const AugmentedLabels labels = AugmentedLabels::expand(transcript, vocab);
  const std::size_t n = labels.states.size();

  std::vector<double> prev(n, kNegInf), cur(n, kNegInf);
  prev[0] = safe_log(posteriors.at(0, labels.states[0]));
  prev[1] = safe_log(posteriors.at(0, labels.states[1]));
  for (std::size_t t = 1; t < frames; ++t) {
    for (std::size_t j = 0; j < n; ++j) {
      double mass = prev[j];
      if (j >= 1) mass = log_add(mass, prev[j - 1]);
      if (j >= 2 && labels.states[j] != vocab.blank() && labels.states[j] != labels.states[j - 2]) {
        mass = log_add(mass, prev[j - 2]);
      }
      cur[j] = mass == kNegInf ? kNegInf : mass + safe_log(posteriors.at(t, labels.states[j]));
    }
    std::swap(prev, cur);
  }
  return log_add(prev[n - 1], prev[n - 2]);
}

double lm_bonus(std::string_view transcript, const NGramLM* lm, double alpha, double beta) {
  const auto words = split_words(transcript);
  double bonus = beta * static_cast<double>(words.size());
  if (lm && alpha != 0.0) bonus += alpha * lm->logprob(words);
  return bonus;
}

std::vector<ScoredTranscript> beam_decode(const FramePosteriors& posteriors, const NGramLM* lm,
                                          const BeamParams& params, const Vocabulary& vocab) {
  params.validate();
  if (posteriors.symbols() != vocab.size()) {
    throw InputError("posterior width does not match the vocabulary");
  }
  PrefixTree tree(vocab, lm, params.alpha, params.beta);
  const int blank = vocab.blank();
  const std::size_t symbols = vocab.size();

  std::vector<BeamEntry> beam{BeamEntry{0, 0.0, kNegInf}};
  std::vector<BeamEntry> next;
  std::vector<double> log_row(symbols);
  std::vector<int> candidates;

  auto slot_for = [&](int id, std::size_t t) -> BeamEntry& {
    auto& n = tree.node(id);
    if (n.stamp != t) {
      n.stamp = t;
      n.slot = next.size();
      next.push_back(BeamEntry{id, kNegInf, kNegInf});
    }
    return next[n.slot];
  };

  auto better = [&](const BeamEntry& a, double score_a, const BeamEntry& b, double score_b) {
    if (score_a != score_b) return score_a > score_b;
    return tree.text_less(a.node, b.node);
  };

  for (std::size_t t = 0; t < posteriors.frames(); ++t) {
    const auto row = posteriors.row(t);
    candidates.clear();
    for (std::size_t c = 0; c < symbols; ++c) {
      log_row[c] = safe_log(row[c]);
      if (static_cast<int>(c) != blank && row[c] > 0.0 && row[c] >= params.symbol_cutoff) {
        candidates.push_back(static_cast<int>(c));
      }
    }

    next.clear();
    for (const BeamEntry& entry : beam) {
      const double total = entry.total();
      if (total == kNegInf) continue;
      // Evaluated before any insertion into `next`; later references may
      // be invalidated by growth.
      if (log_row[blank] != kNegInf) {
        BeamEntry& same = slot_for(entry.node, t);
        same.blank = log_add(same.blank, total + log_row[blank]);
      }
      const int last = tree.node(entry.node).symbol;
      for (int c : candidates) {
        const double lp = log_row[static_cast<std::size_t>(c)];
        if (c == last) {
          BeamEntry& same = slot_for(entry.node, t);
          same.non_blank = log_add(same.non_blank, entry.non_blank + lp);
          const int extended = tree.child(entry.node, c);
          BeamEntry& ext = slot_for(extended, t);
          ext.non_blank = log_add(ext.non_blank, entry.blank + lp);
        } else {
          const int extended = tree.child(entry.node, c);
          BeamEntry& ext = slot_for(extended, t);
          ext.non_blank = log_add(ext.non_blank, total + lp);
        }
      }
    }

    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(next.size());
    for (std::size_t i = 0; i < next.size(); ++i) {
      const double total = next[i].total();
      if (total == kNegInf) continue;
      ranked.emplace_back(total + tree.node(next[i].node).text_score, i);
    }
    auto order = [&](const auto& a, const auto& b) {
      return better(next[a.second], a.first, next[b.second], b.first);
    };
    if (ranked.size() > params.width) {
      std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(params.width),
                       ranked.end(), order);
      ranked.resize(params.width);
    }
    std::sort(ranked.begin(), ranked.end(), order);
    beam.clear();
    for (const auto& [score, i] : ranked) beam.push_back(next[i]);
  }

  std::vector<std::pair<double, std::size_t>> finals;
  for (std::size_t i = 0; i < beam.size(); ++i) {
    const double total = beam[i].total();
    if (total == kNegInf) continue;
    finals.emplace_back(total + tree.final_text_score(beam[i].node), i);
  }
  std::sort(finals.begin(), finals.end(), [&](const auto& a, const auto& b) {
    return better(beam[a.second], a.first, beam[b.second], b.first);
  });

  std::vector<ScoredTranscript> out;
  std::unordered_set<std::string> seen;
  for (const auto& [score, i] : finals) {
    std::string text = collapse_spaces(tree.text(beam[i].node));
    if (!seen.insert(text).second) continue;
    out.push_back({std::move(text), score, beam[i].total()});
    if (out.size() >= params.nbest) break;
  }
  if (out.empty()) out.push_back({"", kNegInf, kNegInf});
  return out;
}

LocalHypothesis local_confidences(const FramePosteriors& posteriors, std::string_view transcript,
                                  const Vocabulary& vocab) {
  LocalHypothesis out{std::string(transcript), {}};
  const auto words = split_words(transcript);
  if (words.empty()) return out;
  FrameAlignment alignment;
  try {
    alignment = viterbi_align(transcript, smooth(posteriors), vocab);
  } catch (const InfeasibleAlignment&) {
    out.word_confidences.assign(words.size(), 0.5);
    return out;
  }
  const auto word_of = word_index_map(transcript);
  std::vector<double> log_sum(words.size(), 0.0);
  std::vector<std::size_t> frames(words.size(), 0);
  for (std::size_t t = 0; t < alignment.states.size(); ++t) {
    const auto& pos = alignment.source_positions[t];
    if (!pos || transcript[*pos] == ' ') continue;
    const std::size_t w = word_of[*pos];
    log_sum[w] += std::log(posteriors.at(t, static_cast<std::size_t>(alignment.states[t])) +
                           kSmoothingEpsilon);
    ++frames[w];
  }
  for (std::size_t w = 0; w < words.size(); ++w) {
    const double mean = frames[w] ? log_sum[w] / static_cast<double>(frames[w]) : std::log(0.5);
    out.word_confidences.push_back(std::clamp(std::exp(mean), 0.0, 1.0));
  }
  return out;
}

}  // namespace finemerge
