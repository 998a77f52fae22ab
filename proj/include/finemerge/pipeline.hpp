#pragma once

#include <string>

#include "finemerge/core.hpp"
#include "finemerge/decode.hpp"
#include "finemerge/lm.hpp"
#include "finemerge/merge.hpp"

namespace finemerge {

enum class Fallback {
  kNone,
  kEmptyService,        // service transcript empty after normalization
  kInfeasibleAlignment  // fewer frames than the transcript needs
};

const char* to_string(Fallback fallback);

struct MergeResult {
  std::string transcript;
  double score = 0.0;
  Fallback fallback = Fallback::kNone;
  FramePosteriors revised;  // equals the input when a fallback was taken
  FrameAlignment alignment;  // empty when a fallback was taken
};

// Service-guided local decoding: align the normalized service transcript to
// the smoothed posteriors, revise the posteriors toward it, then beam-decode
// with the local LM. When the service transcript is empty or cannot be
// aligned, decodes the untouched posteriors and flags the fallback.
MergeResult finemerge(const FramePosteriors& posteriors, const ServiceHypothesis& service,
                      const MergeParams& params, const BeamParams& beam, const NGramLM* lm,
                      const Vocabulary& vocab = Vocabulary::english());

// Revision step alone (align + revise, no decoding).
MergeResult revise_with_service(const FramePosteriors& posteriors, const ServiceHypothesis& service,
                                const MergeParams& params,
                                const Vocabulary& vocab = Vocabulary::english());

}  // namespace finemerge
