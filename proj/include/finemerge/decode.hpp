#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "finemerge/core.hpp"
#include "finemerge/lm.hpp"

namespace finemerge {

struct BeamParams {
  std::size_t width = 100;
  double alpha = 0.0;  // LM weight
  double beta = 0.0;   // per-word insertion bonus
  std::size_t nbest = 1;
  // Non-blank symbols below this probability are not used to extend prefixes
  // on a frame. Zero disables the cutoff.
  double symbol_cutoff = 1e-4;

  void validate() const;
};

struct ScoredTranscript {
  std::string transcript;
  double score = 0.0;          // acoustic + alpha * LM + beta * words
  double acoustic = 0.0;       // CTC log mass of the prefix
};

// Per-frame argmax (lowest index on ties), collapse repeats, drop blanks.
std::string greedy_decode(const FramePosteriors& posteriors, const Vocabulary& vocab = Vocabulary::english());

// Log of the total CTC probability of `transcript` over all its expansions.
// Throws InfeasibleAlignment when the transcript cannot fit in the frames.
double ctc_logprob(const FramePosteriors& posteriors, std::string_view transcript,
                   const Vocabulary& vocab = Vocabulary::english());

// Word-level LM fusion bonus of a transcript: alpha * logprob(words) +
// beta * |words|, with empty words (repeated spaces) ignored. The beam search
// accumulates exactly this quantity incrementally.
double lm_bonus(std::string_view transcript, const NGramLM* lm, double alpha, double beta);

// CTC prefix beam search with shallow word-level LM fusion.
//
// Prefixes carry separate blank- and non-blank-ending log masses. When a
// space closes a word, or at the final frame, the prefix gains
// alpha * LM(word | two previous words) + beta; the end-of-sentence
// transition is added at finalization. After every frame only the `width`
// best prefixes by combined score survive, ties broken lexicographically.
// Returns up to `nbest` normalized transcripts, best first. `lm` may be null,
// in which case only beta contributes.
std::vector<ScoredTranscript> beam_decode(const FramePosteriors& posteriors, const NGramLM* lm,
                                          const BeamParams& params,
                                          const Vocabulary& vocab = Vocabulary::english());

// Word confidences of a local transcript: force-align it, then take the
// geometric mean of the aligned character probabilities of each word.
// Falls back to 0.5 per word when the alignment is infeasible.
LocalHypothesis local_confidences(const FramePosteriors& posteriors, std::string_view transcript,
                                  const Vocabulary& vocab = Vocabulary::english());

}  // namespace finemerge
