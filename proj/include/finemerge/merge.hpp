#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "finemerge/core.hpp"

namespace finemerge {

// Hyperparameters of the selective posterior revision.
struct MergeParams {
  double psi = 1e-3;    // lower gate on the aligned symbol's probability, in (0, 1)
  double omega = 0.5;   // service weight for non-blank frames, in [0, 1]
  double gamma = 0.2;   // mixing weight on blank-aligned frames, in [0, 1]

  void validate() const;
};

// Word index of every character of a normalized transcript. A space belongs
// to the word before it.
std::vector<std::size_t> word_index_map(std::string_view transcript);

// Pulls each frame of `posteriors` toward the aligned service symbol.
//
// A frame t with aligned symbol S is revised only when
// psi < P_t[S] < max_c P_t[c]; it then becomes (1 - w) * P_t + w * onehot(S)
// with w = gamma on blank frames and omega * confidence(word of S) otherwise.
// Frames failing the gate are copied unchanged.
FramePosteriors revise(const FramePosteriors& posteriors, const FrameAlignment& alignment,
                       std::string_view transcript, std::span<const double> word_confidences,
                       const MergeParams& params, const Vocabulary& vocab = Vocabulary::english());

}  // namespace finemerge
