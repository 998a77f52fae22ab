#pragma once

#include <string>

#include "finemerge/core.hpp"
#include "finemerge/lm.hpp"

namespace finemerge {

enum class TiePreference { kService, kLocal };

struct RoverParams {
  double conf_null = 0.45;  // confidence of the empty (deletion) arc
  TiePreference prefer_on_tie = TiePreference::kService;

  void validate() const;
};

// Two-system ROVER. The hypotheses are aligned by minimum word edit distance
// (ties toward the diagonal) and each aligned slot emits the candidate with
// the higher confidence; a missing side competes with `conf_null` and an
// empty winner emits nothing. Absent confidences default to 1.0.
std::string rover_words(const Hypothesis& service, const Hypothesis& local, const RoverParams& params);

// Same vote over characters. Each character carries its word's confidence;
// a space carries the confidence of the word before it.
std::string rover_chars(const Hypothesis& service, const Hypothesis& local, const RoverParams& params);

// Candidate maximizing lambda * service score + LM log-probability; ties go
// to the earlier N-best entry. Throws InputError on an empty list.
std::string rescore_nbest(const ServiceHypothesis& service, const NGramLM& lm, double lambda);

}  // namespace finemerge
