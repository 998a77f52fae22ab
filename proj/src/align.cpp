#include "finemerge/align.hpp"

#include <cmath>
#include <limits>

namespace finemerge {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

LogPosteriors smooth(const FramePosteriors& posteriors, double eps) {
  if (!(eps > 0.0)) throw InputError("smoothing epsilon must be positive");
  std::vector<double> values;
  values.reserve(posteriors.data().size());
  for (double p : posteriors.data()) values.push_back(std::log(p + eps));
  return {posteriors.frames(), posteriors.symbols(), std::move(values)};
}

AugmentedLabels AugmentedLabels::expand(std::string_view transcript, const Vocabulary& vocab) {
  const std::vector<int> labels = vocab.encode(transcript);
  AugmentedLabels out;
  out.states.reserve(2 * labels.size() + 1);
  out.source_positions.reserve(2 * labels.size() + 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out.states.push_back(vocab.blank());
    out.source_positions.push_back(std::nullopt);
    out.states.push_back(labels[i]);
    out.source_positions.push_back(i);
  }
  out.states.push_back(vocab.blank());
  out.source_positions.push_back(std::nullopt);
  return out;
}

std::size_t min_frames(std::string_view transcript) {
  std::size_t n = transcript.size();
  for (std::size_t i = 1; i < transcript.size(); ++i) {
    if (transcript[i] == transcript[i - 1]) ++n;
  }
  return n;
}

FrameAlignment viterbi_align(std::string_view transcript, const LogPosteriors& log_posteriors,
                             const Vocabulary& vocab) {
  if (transcript.empty()) throw InputError("cannot align an empty transcript");
  if (log_posteriors.symbols() != vocab.size()) {
    throw InputError("posterior width does not match the vocabulary");
  }
  const std::size_t frames = log_posteriors.frames();
  const std::size_t needed = min_frames(transcript);
  if (frames < needed) {
    throw InfeasibleAlignment("transcript needs " + std::to_string(needed) + " frames, only " +
                              std::to_string(frames) + " available");
  }

  const AugmentedLabels labels = AugmentedLabels::expand(transcript, vocab);
  const std::size_t n = labels.states.size();

  std::vector<double> score(frames * n, kNegInf);
  std::vector<int> back(frames * n, -1);

  score[0] = log_posteriors.at(0, labels.states[0]);
  score[1] = log_posteriors.at(0, labels.states[1]);

  for (std::size_t t = 1; t < frames; ++t) {
    const double* prev = &score[(t - 1) * n];
    double* cur = &score[t * n];
    int* from = &back[t * n];
    for (std::size_t j = 0; j < n; ++j) {
      const bool can_skip = j >= 2 && labels.states[j] != vocab.blank() &&
                            labels.states[j] != labels.states[j - 2];
      // Candidates visited in increasing state order; strict '>' keeps the
      // smallest index on ties.
      std::size_t lo = can_skip ? j - 2 : (j >= 1 ? j - 1 : j);
      double best = kNegInf;
      int best_state = -1;
      for (std::size_t i = lo; i <= j; ++i) {
        if (prev[i] > best) {
          best = prev[i];
          best_state = static_cast<int>(i);
        }
      }
      if (best_state < 0) continue;
      cur[j] = best + log_posteriors.at(t, labels.states[j]);
      from[j] = best_state;
    }
  }

  const double* last = &score[(frames - 1) * n];
  std::size_t state = last[n - 2] >= last[n - 1] ? n - 2 : n - 1;
  if (last[state] == kNegInf) {
    throw InfeasibleAlignment("no valid expansion of '" + std::string(transcript) + "'");
  }

  FrameAlignment out;
  out.log_prob = last[state];
  out.states.resize(frames);
  out.source_positions.resize(frames);
  for (std::size_t t = frames; t-- > 0;) {
    out.states[t] = labels.states[state];
    out.source_positions[t] = labels.source_positions[state];
    if (t > 0) state = static_cast<std::size_t>(back[t * n + state]);
  }
  return out;
}

}  // namespace finemerge
