#pragma once

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "finemerge/align.hpp"
#include "finemerge/core.hpp"
#include "finemerge/lm.hpp"

namespace testing {

using finemerge::FramePosteriors;
using finemerge::Vocabulary;

// Rows given as {symbol: probability} with the remainder spread evenly over
// the unlisted symbols.
inline FramePosteriors sparse_matrix(const std::vector<std::map<char, double>>& rows,
                                     const Vocabulary& vocab = Vocabulary::english(),
                                     const std::string& id = "u") {
  FramePosteriors p(id, rows.size(), vocab.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    double listed = 0.0;
    for (const auto& [c, prob] : rows[t]) {
      p.at(t, static_cast<std::size_t>(vocab.index(c))) = prob;
      listed += prob;
    }
    const std::size_t rest = vocab.size() - rows[t].size();
    for (std::size_t c = 0; c < vocab.size(); ++c) {
      const char sym = vocab.symbol(static_cast<int>(c));
      if (!rows[t].count(sym)) p.at(t, c) = (1.0 - listed) / static_cast<double>(rest);
    }
  }
  return p;
}

// Dirichlet-ish random rows; `peaky` sharpens them so some entries are tiny.
inline FramePosteriors random_matrix(std::mt19937_64& rng, std::size_t frames, std::size_t symbols,
                                     bool peaky = false) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FramePosteriors p("r", frames, symbols);
  for (std::size_t t = 0; t < frames; ++t) {
    double sum = 0.0;
    for (std::size_t c = 0; c < symbols; ++c) {
      double x = u(rng);
      if (peaky) x = std::pow(x, 6.0);
      p.at(t, c) = x + 1e-6;
      sum += p.at(t, c);
    }
    for (std::size_t c = 0; c < symbols; ++c) p.at(t, c) /= sum;
  }
  return p;
}

// Every length-T frame labelling over `alphabet` (vocabulary indices),
// visited depth-first. `fn` receives the labelling.
inline void for_each_labelling(std::size_t frames, const std::vector<int>& alphabet,
                               const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> path(frames);
  std::function<void(std::size_t)> rec = [&](std::size_t t) {
    if (t == frames) {
      fn(path);
      return;
    }
    for (int c : alphabet) {
      path[t] = c;
      rec(t + 1);
    }
  };
  rec(0);
}

// CTC collapse: merge repeats, then drop blanks.
inline std::string collapse(const std::vector<int>& path, const Vocabulary& vocab) {
  std::string out;
  int prev = -1;
  for (int c : path) {
    if (c != prev && c != vocab.blank()) out.push_back(vocab.symbol(c));
    prev = c;
  }
  return out;
}

// Best-scoring labellings of `transcript` under smoothed log posteriors, by
// exhaustive enumeration.
struct AlignmentOracle {
  double best = -INFINITY;
  std::vector<std::vector<int>> optima;
};

inline AlignmentOracle brute_force_align(std::string_view transcript, const FramePosteriors& p,
                                         const Vocabulary& vocab, double tolerance = 1e-9) {
  const auto logp = finemerge::smooth(p);
  std::vector<int> alphabet{vocab.blank()};
  for (char c : transcript) {
    const int i = vocab.index(c);
    if (std::find(alphabet.begin(), alphabet.end(), i) == alphabet.end()) alphabet.push_back(i);
  }
  std::vector<std::pair<double, std::vector<int>>> scored;
  for_each_labelling(p.frames(), alphabet, [&](const std::vector<int>& path) {
    if (collapse(path, vocab) != transcript) return;
    double s = 0.0;
    for (std::size_t t = 0; t < path.size(); ++t) s += logp.at(t, static_cast<std::size_t>(path[t]));
    scored.emplace_back(s, path);
  });
  AlignmentOracle out;
  for (const auto& [s, path] : scored) out.best = std::max(out.best, s);
  for (const auto& [s, path] : scored) {
    if (s >= out.best - tolerance) out.optima.push_back(path);
  }
  return out;
}

// Probability of every collapsed string, summed over all T-frame labellings.
inline std::map<std::string, double> brute_force_ctc(const FramePosteriors& p, const Vocabulary& vocab) {
  std::vector<int> alphabet;
  for (std::size_t c = 0; c < vocab.size(); ++c) alphabet.push_back(static_cast<int>(c));
  std::map<std::string, double> mass;
  for_each_labelling(p.frames(), alphabet, [&](const std::vector<int>& path) {
    double prob = 1.0;
    for (std::size_t t = 0; t < path.size(); ++t) prob *= p.at(t, static_cast<std::size_t>(path[t]));
    mass[collapse(path, vocab)] += prob;
  });
  return mass;
}

// Word-level fusion score of a raw (uncollapsed-space) transcript, computed
// directly from the LM tables: every non-empty word adds alpha * score + beta
// and the sentence end adds alpha * end score.
inline double fusion_bonus(const std::string& raw, const finemerge::NGramLM* lm, double alpha, double beta) {
  double bonus = 0.0;
  finemerge::NGramLM::State state;
  std::string word;
  auto close = [&] {
    if (word.empty()) return;
    bonus += beta;
    if (lm && alpha != 0.0) bonus += alpha * lm->score(state, word, &state);
    word.clear();
  };
  for (char c : raw) {
    if (c == ' ') {
      close();
    } else {
      word.push_back(c);
    }
  }
  close();
  if (lm && alpha != 0.0) bonus += alpha * lm->end_score(state);
  return bonus;
}

// Normalized-text form of a raw beam prefix.
inline std::string squeeze(const std::string& raw) { return finemerge::normalize_text(raw); }

// Random non-empty transcript of at most `max_len` non-blank symbols.
inline std::string random_transcript(std::mt19937_64& rng, const finemerge::Vocabulary& v, std::size_t max_len) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> sym(1, static_cast<int>(v.size()) - 1);
  std::string s;
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) s.push_back(v.symbol(sym(rng)));
  return s;
}

// Best raw string under acoustic mass plus fusion bonus; ties go to the
// lexicographically smaller string.
inline std::pair<std::string, double> oracle_best(const FramePosteriors& p, const Vocabulary& v,
                                                  const finemerge::NGramLM* lm, double alpha, double beta) {
  std::string best;
  double best_score = -INFINITY;
  for (const auto& [raw, mass] : brute_force_ctc(p, v)) {
    const double s = std::log(mass) + fusion_bonus(raw, lm, alpha, beta);
    if (s > best_score) {
      best_score = s;
      best = raw;
    }
  }
  return {best, best_score};
}

// Published rows of the worked "posted" example, one map per frame. Frame 4
// keeps 'o' as its mode (0.63) as the second published row states; 'a' gets
// a little mass so the gold word stays reachable. P(p) on frame 1 and P(_)
// on frame 2 are kept tiny so "_ p" beats "p _" at the start.
// Leftover mass of each row sits on 'q', which no word in the example uses,
// so unlisted symbols cannot open alternative paths.
inline std::vector<std::map<char, double>> with_sink(std::vector<std::map<char, double>> rows) {
  for (auto& row : rows) {
    double listed = 0.0;
    for (const auto& [c, prob] : row) listed += c == 'q' ? 0.0 : prob;
    row['q'] = 1.0 - listed;
  }
  return rows;
}

inline std::vector<std::map<char, double>> posted_example_rows() {
  return with_sink({
      {{'t', 0.99}, {'_', 6e-5}, {'p', 1e-9}},
      {{'t', 0.99}, {'p', 1e-11}, {'_', 1e-9}},
      {{'o', 1.0 - 2.8e-7}},
      {{'o', 0.63}, {'_', 0.34}, {'a', 0.02}},
      {{' ', 0.98}, {'_', 0.01}},
      {{'s', 0.93}, {'_', 0.05}},
      {{'t', 0.99}, {'_', 0.005}},
      {{'a', 0.55}, {'e', 0.44}},
      {{'t', 0.64}, {'d', 0.29}, {'_', 0.05}},
      {{'d', 0.98}, {'_', 0.01}},
  });
}

// Alignment published for the example, frame by frame.
inline std::vector<char> posted_alignment() { return {'_', 'p', 'o', '_', '_', 's', 't', 'e', 'd', 'd'}; }

}  // namespace testing
