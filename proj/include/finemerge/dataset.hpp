#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "finemerge/core.hpp"
#include "finemerge/io.hpp"

namespace finemerge {

// One evaluation utterance: local posteriors, the service output and the
// reference transcript.
struct Utterance {
  std::string id;
  std::string reference;
  FramePosteriors posteriors;
  ServiceHypothesis service;
};

namespace io {

// A split directory holds posteriors.fmpb (or posteriors.json), service.jsonl
// and refs.jsonl, all in the same utterance order.
void save_split(const std::filesystem::path& dir, std::span<const Utterance> utterances,
                Format format = Format::kBinary, const Vocabulary& vocab = Vocabulary::english());

// Loads and validates a split. Utterances follow the posterior file order;
// service and reference records are matched by id. Throws InputError when a
// record is missing or a line is malformed.
std::vector<Utterance> load_split(const std::filesystem::path& dir,
                                  const Vocabulary& vocab = Vocabulary::english());

std::filesystem::path posterior_path(const std::filesystem::path& dir);

}  // namespace io
}  // namespace finemerge
