#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace finemerge {

enum class EditOp : char { kMatch = 'M', kSubstitute = 'S', kDelete = 'D', kInsert = 'I' };

struct EditAlignment {
  std::size_t distance = 0;
  std::vector<EditOp> ops;  // reference-to-hypothesis, left to right
};

// Unit-cost Levenshtein distance and one optimal alignment. Backtrace prefers
// match, then substitution, deletion, insertion.
EditAlignment edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp);
EditAlignment edit_distance(std::string_view ref, std::string_view hyp);  // characters

struct ErrorCounts {
  std::size_t edits = 0;
  std::size_t reference_length = 0;
  double rate() const {
    return reference_length ? static_cast<double>(edits) / static_cast<double>(reference_length) : 0.0;
  }
  ErrorCounts& operator+=(const ErrorCounts& o) {
    edits += o.edits;
    reference_length += o.reference_length;
    return *this;
  }
};

ErrorCounts word_errors(std::string_view ref, std::string_view hyp);
ErrorCounts char_errors(std::string_view ref, std::string_view hyp);

// Corpus-level rates: total edits over total reference length. Throw
// InputError on a length mismatch or an empty reference corpus.
double wer(std::span<const std::string> refs, std::span<const std::string> hyps);
double cer(std::span<const std::string> refs, std::span<const std::string> hyps);

struct WordErrorRow {
  std::string word;
  std::size_t occurrences = 0;
  double error_a = 0.0;
  double error_b = 0.0;
  double reduction() const { return error_a - error_b; }
};

// For every reference word seen at least `min_count` times, the fraction of
// its occurrences not matched by each system under the optimal alignment.
// Sorted by error_a - error_b descending, then by word.
std::vector<WordErrorRow> per_word_error_reduction(std::span<const std::string> refs,
                                                   std::span<const std::string> hyps_a,
                                                   std::span<const std::string> hyps_b,
                                                   std::size_t min_count = 5);

}  // namespace finemerge
