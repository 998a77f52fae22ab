#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "finemerge/core.hpp"

namespace finemerge {

// Thrown when a transcript cannot be expanded over the available frames.
class InfeasibleAlignment : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Elementwise log(p + eps) of a posterior matrix. Same shape as the input.
class LogPosteriors {
 public:
  LogPosteriors(std::size_t frames, std::size_t symbols, std::vector<double> values)
      : frames_(frames), symbols_(symbols), values_(std::move(values)) {}

  std::size_t frames() const { return frames_; }
  std::size_t symbols() const { return symbols_; }
  double at(std::size_t t, std::size_t c) const { return values_[t * symbols_ + c]; }

 private:
  std::size_t frames_;
  std::size_t symbols_;
  std::vector<double> values_;
};

inline constexpr double kSmoothingEpsilon = 1e-20;

LogPosteriors smooth(const FramePosteriors& posteriors, double eps = kSmoothingEpsilon);

// Blank-interleaved CTC state sequence: _, s1, _, s2, ..., sk, _.
struct AugmentedLabels {
  std::vector<int> states;
  std::vector<std::optional<std::size_t>> source_positions;

  static AugmentedLabels expand(std::string_view transcript, const Vocabulary& vocab);
};

// Fewest frames a CTC path for `transcript` can occupy: one per character
// plus a separating blank for each adjacent repeated pair.
std::size_t min_frames(std::string_view transcript);

// Highest-probability CTC expansion of `transcript` over `log_posteriors`.
//
// Paths start in the first blank or first label and end in the last label or
// final blank. Score ties pick the predecessor with the smallest state index.
// Throws InfeasibleAlignment when frames < min_frames(transcript) and
// InputError on an empty or out-of-vocabulary transcript.
FrameAlignment viterbi_align(std::string_view transcript, const LogPosteriors& log_posteriors,
                             const Vocabulary& vocab);

}  // namespace finemerge
