#include "finemerge/pipeline.hpp"

#include "finemerge/align.hpp"

namespace finemerge {

const char* to_string(Fallback fallback) {
  switch (fallback) {
    case Fallback::kNone: return "none";
    case Fallback::kEmptyService: return "empty-service";
    case Fallback::kInfeasibleAlignment: return "infeasible-alignment";
  }
  return "unknown";
}

MergeResult revise_with_service(const FramePosteriors& posteriors, const ServiceHypothesis& service,
                                const MergeParams& params, const Vocabulary& vocab) {
  params.validate();
  MergeResult result;
  const std::string text = normalize_text(service.transcript, vocab);
  // Normalization may drop whole words, in which case the original
  // confidences no longer line up and default to 1.0.
  std::vector<double> confidences = service.word_confidences;
  if (!confidences.empty() && confidences.size() != word_count(text)) confidences.clear();

  if (text.empty()) {
    result.fallback = Fallback::kEmptyService;
  } else if (posteriors.frames() < min_frames(text)) {
    result.fallback = Fallback::kInfeasibleAlignment;
  }
  if (result.fallback != Fallback::kNone) {
    result.revised = posteriors;
    return result;
  }
  result.alignment = viterbi_align(text, smooth(posteriors), vocab);
  result.revised = revise(posteriors, result.alignment, text, confidences, params, vocab);
  return result;
}

MergeResult finemerge(const FramePosteriors& posteriors, const ServiceHypothesis& service,
                      const MergeParams& params, const BeamParams& beam, const NGramLM* lm,
                      const Vocabulary& vocab) {
  MergeResult result = revise_with_service(posteriors, service, params, vocab);
  const auto decoded = beam_decode(result.revised, lm, beam, vocab);
  result.transcript = decoded.front().transcript;
  result.score = decoded.front().score;
  return result;
}

}  // namespace finemerge
