#include "finemerge/merge.hpp"

#include <algorithm>

namespace finemerge {

void MergeParams::validate() const {
  // psi >= 1 is accepted: the gate then never fires.
  if (!(psi > 0.0)) throw InputError("psi must be positive");
  if (!(omega >= 0.0 && omega <= 1.0)) throw InputError("omega must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("gamma must lie in [0, 1]");
}

std::vector<std::size_t> word_index_map(std::string_view transcript) {
  std::vector<std::size_t> out;
  out.reserve(transcript.size());
  std::size_t word = 0;
  bool in_word = false;
  bool seen_word = false;
  for (char c : transcript) {
    if (c == ' ') {
      in_word = false;
      out.push_back(seen_word ? word : 0);
      continue;
    }
    if (!in_word && seen_word) ++word;
    in_word = true;
    seen_word = true;
    out.push_back(word);
  }
  return out;
}

FramePosteriors revise(const FramePosteriors& posteriors, const FrameAlignment& alignment,
                       std::string_view transcript, std::span<const double> word_confidences,
                       const MergeParams& params, const Vocabulary& vocab) {
  params.validate();
  if (alignment.states.size() != posteriors.frames() ||
      alignment.source_positions.size() != posteriors.frames()) {
    throw InputError("alignment length does not match the posterior frame count");
  }
  const std::vector<double> confidences = resolve_confidences(transcript, word_confidences);
  const std::vector<std::size_t> word_of = word_index_map(transcript);

  FramePosteriors out = posteriors;
  for (std::size_t t = 0; t < posteriors.frames(); ++t) {
    const auto row = posteriors.row(t);
    const int aligned = alignment.states[t];
    const double p_aligned = row[static_cast<std::size_t>(aligned)];
    const double p_max = *std::max_element(row.begin(), row.end());
    if (!(params.psi < p_aligned && p_aligned < p_max)) continue;

    double weight = params.gamma;
    if (aligned != vocab.blank()) {
      const auto& pos = alignment.source_positions[t];
      if (!pos || *pos >= word_of.size()) {
        throw InputError("alignment source position out of range");
      }
      weight = params.omega * confidences[word_of[*pos]];
    }
    auto revised = out.row(t);
    for (std::size_t c = 0; c < revised.size(); ++c) revised[c] = (1.0 - weight) * row[c];
    revised[static_cast<std::size_t>(aligned)] += weight;
  }
  return out;
}

}  // namespace finemerge
