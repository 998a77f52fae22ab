#include "finemerge/metrics.hpp"

#include <algorithm>
#include <map>

#include "finemerge/core.hpp"

namespace finemerge {

namespace {

template <typename Seq>
EditAlignment levenshtein(const Seq& ref, const Seq& hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  EditAlignment out;
  out.distance = at(n, m);
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i, j) == at(i - 1, j - 1)) {
      out.ops.push_back(EditOp::kMatch);
      --i, --j;
    } else if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + 1) {
      out.ops.push_back(EditOp::kSubstitute);
      --i, --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      out.ops.push_back(EditOp::kDelete);
      --i;
    } else {
      out.ops.push_back(EditOp::kInsert);
      --j;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

void check_corpus(std::span<const std::string> refs, std::span<const std::string> hyps) {
  if (refs.size() != hyps.size()) {
    throw InputError("reference and hypothesis counts differ (" + std::to_string(refs.size()) +
                     " vs " + std::to_string(hyps.size()) + ")");
  }
  if (refs.empty()) throw InputError("empty reference corpus");
}

}  // namespace

EditAlignment edit_distance(std::span<const std::string> ref, std::span<const std::string> hyp) {
  return levenshtein(ref, hyp);
}

EditAlignment edit_distance(std::string_view ref, std::string_view hyp) {
  return levenshtein(ref, hyp);
}

ErrorCounts word_errors(std::string_view ref, std::string_view hyp) {
  const auto r = split_words(ref);
  const auto h = split_words(hyp);
  return {edit_distance(r, h).distance, r.size()};
}

ErrorCounts char_errors(std::string_view ref, std::string_view hyp) {
  return {edit_distance(ref, hyp).distance, ref.size()};
}

double wer(std::span<const std::string> refs, std::span<const std::string> hyps) {
  check_corpus(refs, hyps);
  ErrorCounts total;
  for (std::size_t i = 0; i < refs.size(); ++i) total += word_errors(refs[i], hyps[i]);
  if (total.reference_length == 0) throw InputError("reference corpus has no words");
  return total.rate();
}

double cer(std::span<const std::string> refs, std::span<const std::string> hyps) {
  check_corpus(refs, hyps);
  ErrorCounts total;
  for (std::size_t i = 0; i < refs.size(); ++i) total += char_errors(refs[i], hyps[i]);
  if (total.reference_length == 0) throw InputError("reference corpus has no characters");
  return total.rate();
}

std::vector<WordErrorRow> per_word_error_reduction(std::span<const std::string> refs,
                                                   std::span<const std::string> hyps_a,
                                                   std::span<const std::string> hyps_b,
                                                   std::size_t min_count) {
  check_corpus(refs, hyps_a);
  check_corpus(refs, hyps_b);
  struct Tally {
    std::size_t seen = 0, missed_a = 0, missed_b = 0;
  };
  std::map<std::string, Tally> tallies;

  auto count_misses = [&](const std::vector<std::string>& ref_words, std::string_view hyp, bool is_a) {
    const auto hyp_words = split_words(hyp);
    const auto alignment = edit_distance(ref_words, hyp_words);
    std::size_t r = 0;
    for (EditOp op : alignment.ops) {
      if (op == EditOp::kInsert) continue;
      if (op != EditOp::kMatch) {
        auto& t = tallies[ref_words[r]];
        ++(is_a ? t.missed_a : t.missed_b);
      }
      ++r;
    }
  };

  for (std::size_t i = 0; i < refs.size(); ++i) {
    const auto ref_words = split_words(refs[i]);
    for (const auto& w : ref_words) ++tallies[w].seen;
    count_misses(ref_words, hyps_a[i], true);
    count_misses(ref_words, hyps_b[i], false);
  }

  std::vector<WordErrorRow> rows;
  for (const auto& [word, t] : tallies) {
    if (t.seen < min_count) continue;
    const double n = static_cast<double>(t.seen);
    rows.push_back({word, t.seen, static_cast<double>(t.missed_a) / n, static_cast<double>(t.missed_b) / n});
  }
  std::stable_sort(rows.begin(), rows.end(), [](const WordErrorRow& a, const WordErrorRow& b) {
    return a.reduction() > b.reduction();
  });
  return rows;
}

}  // namespace finemerge
