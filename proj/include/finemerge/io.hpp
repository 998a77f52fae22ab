#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "finemerge/baselines.hpp"
#include "finemerge/core.hpp"
#include "finemerge/decode.hpp"
#include "finemerge/merge.hpp"

namespace finemerge::io {

// Posterior archive: a sequence of records, each
//   "FMPB" | u16 version | u32 id length | id bytes | u32 T | u32 V |
//   u32 vocabulary length | vocabulary bytes | T*V f32, row-major
// with all integers and floats little-endian. The JSON mirror is one object
// {"id", "vocab", "probs": [[...], ...]} or an array of them.
inline constexpr std::uint16_t kPosteriorVersion = 1;

enum class Format { kBinary, kJson };

Format parse_format(const std::string& name);

struct PosteriorRecord {
  FramePosteriors posteriors;
  std::string vocabulary;  // symbols in index order, blank as '_'
};

void write_posterior_record(std::ostream& out, const FramePosteriors& posteriors, const Vocabulary& vocab);
// Reads one binary record. Throws InputError on bad magic, version or size.
PosteriorRecord read_posterior_record(std::istream& in);

void save_posteriors(const std::filesystem::path& path, std::span<const FramePosteriors> items,
                     const Vocabulary& vocab, Format format = Format::kBinary);

// Loads a binary or JSON archive (detected from the first byte) and checks
// that every record uses `vocab`. Values are returned as stored; callers run
// validate_posteriors.
std::vector<FramePosteriors> load_posteriors(const std::filesystem::path& path,
                                             const Vocabulary& vocab = Vocabulary::english());

// JSON-lines hypothesis and reference files.
struct LineError {
  std::size_t line = 0;  // 1-based
  std::string message;
};

template <typename T>
struct ReadResult {
  std::vector<T> records;
  std::vector<LineError> errors;
};

struct Reference {
  std::string id;
  std::string transcript;
};

ReadResult<ServiceHypothesis> read_hypotheses(std::istream& in);
ReadResult<ServiceHypothesis> read_hypotheses(const std::filesystem::path& path);
void write_hypotheses(std::ostream& out, std::span<const ServiceHypothesis> items);
void write_hypotheses(const std::filesystem::path& path, std::span<const ServiceHypothesis> items);

ReadResult<Reference> read_references(std::istream& in);
ReadResult<Reference> read_references(const std::filesystem::path& path);
void write_references(const std::filesystem::path& path, std::span<const Reference> items);

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path, std::span<const std::string> lines);

// Tuned parameters consumed by the merge, decode, rover and rescore commands.
struct ParameterSet {
  MergeParams merge;
  BeamParams beam;
  RoverParams rover;
  double rescore_lambda = 1.0;
};

inline constexpr int kParamsVersion = 1;

ParameterSet load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const ParameterSet& params);
std::string params_to_json(const ParameterSet& params);

}  // namespace finemerge::io
