#pragma once

#include <span>
#include <string>
#include <vector>

#include "finemerge/dataset.hpp"
#include "finemerge/io.hpp"
#include "finemerge/lm.hpp"

namespace finemerge {

struct TuneGrids {
  std::vector<double> psi{1e-4, 1e-3, 1e-2, 0.05, 0.1};
  std::vector<double> omega{0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<double> gamma{0.05, 0.1, 0.2, 0.4};
  std::vector<double> alpha{0.5, 1.0, 1.5, 2.0};
  std::vector<double> beta{0.0, 0.5, 1.0, 1.5};
  std::vector<double> conf_null{0.3, 0.45, 0.6};
  std::vector<double> lambda{0.0, 0.5, 1.0, 2.0, 5.0};

  void validate() const;
};

struct TracePoint {
  std::string stage;  // "local", "finemerge", "rover" or "rescore"
  io::ParameterSet params;
  double wer = 0.0;
};

struct TuneResult {
  io::ParameterSet best;
  double local_wer = 0.0;
  double finemerge_wer = 0.0;
  double rover_wer = 0.0;
  double rescore_wer = 0.0;
  double service_wer = 0.0;
  std::vector<TracePoint> trace;
};

// Per-utterance outputs of every method for one parameter set.
struct SystemOutputs {
  std::vector<std::string> local;          // beam decode of the raw posteriors
  std::vector<std::string> local_greedy;   // before LM decoding
  std::vector<std::string> service;        // normalized service transcript
  std::vector<std::string> finemerge;      // beam decode of the revised posteriors
  std::vector<std::string> revised_greedy; // modes of the revised posteriors
  std::vector<std::string> rover_words;
  std::vector<std::string> rover_chars;
  std::vector<std::string> rescore;        // empty when no N-best lists are present
  std::size_t fallbacks = 0;
};

SystemOutputs run_systems(std::span<const Utterance> data, const NGramLM& lm, const io::ParameterSet& params,
                          std::size_t jobs);

// Two-stage exhaustive search minimizing corpus WER on `val`:
//   1. alpha x beta on local-only beam decoding;
//   2. psi x omega x gamma on the full merge with alpha, beta frozen;
// then conf_null for ROVER and lambda for N-best rescoring. Ties keep the
// earliest point in grid order. `base` supplies the beam width and cutoff.
TuneResult grid_search(std::span<const Utterance> val, const NGramLM& lm, const TuneGrids& grids,
                       const io::ParameterSet& base = {}, std::size_t jobs = 1);

std::string trace_to_json(const TuneResult& result);

}  // namespace finemerge
