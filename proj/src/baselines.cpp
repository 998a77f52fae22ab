#include "finemerge/baselines.hpp"

#include <optional>

#include "finemerge/merge.hpp"
#include "finemerge/metrics.hpp"

namespace finemerge {

namespace {

struct Vote {
  std::optional<std::string> token;
  double confidence;
};

// Returns the winning token of one slot, or nullopt when the null arc wins.
std::optional<std::string> vote(const Vote& service, const Vote& local, const RoverParams& params) {
  if (service.token && local.token && *service.token == *local.token) return service.token;
  if (service.confidence > local.confidence) return service.token;
  if (local.confidence > service.confidence) return local.token;
  return params.prefer_on_tie == TiePreference::kService ? service.token : local.token;
}

// `a` and `b` are token sequences with one confidence each.
std::vector<std::string> rover(const std::vector<std::string>& a, const std::vector<double>& conf_a,
                               const std::vector<std::string>& b, const std::vector<double>& conf_b,
                               const RoverParams& params) {
  const EditAlignment alignment = edit_distance(a, b);
  std::vector<std::string> out;
  std::size_t i = 0, j = 0;
  for (EditOp op : alignment.ops) {
    Vote va{std::nullopt, params.conf_null};
    Vote vb{std::nullopt, params.conf_null};
    if (op != EditOp::kInsert) va = {a[i], conf_a[i]}, ++i;
    if (op != EditOp::kDelete) vb = {b[j], conf_b[j]}, ++j;
    if (auto winner = vote(va, vb, params)) out.push_back(std::move(*winner));
  }
  return out;
}

std::vector<std::string> chars_of(const std::string& text) {
  std::vector<std::string> out;
  for (char c : text) out.emplace_back(1, c);
  return out;
}

std::vector<double> char_confidences(const std::string& text, const std::vector<double>& word_conf) {
  std::vector<double> out;
  for (std::size_t w : word_index_map(text)) out.push_back(word_conf.empty() ? 1.0 : word_conf[w]);
  return out;
}

}  // namespace

void RoverParams::validate() const {
  if (!(conf_null >= 0.0 && conf_null <= 1.0)) throw InputError("conf_null must lie in [0, 1]");
}

std::string rover_words(const Hypothesis& service, const Hypothesis& local, const RoverParams& params) {
  params.validate();
  const auto words = rover(split_words(service.transcript),
                           resolve_confidences(service.transcript, service.word_confidences),
                           split_words(local.transcript),
                           resolve_confidences(local.transcript, local.word_confidences), params);
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

std::string rover_chars(const Hypothesis& service, const Hypothesis& local, const RoverParams& params) {
  params.validate();
  const std::string a = normalize_text(service.transcript);
  const std::string b = normalize_text(local.transcript);
  auto conf_a = resolve_confidences(a, service.word_confidences);
  auto conf_b = resolve_confidences(b, local.word_confidences);
  std::string joined;
  for (const auto& c : rover(chars_of(a), char_confidences(a, conf_a), chars_of(b),
                             char_confidences(b, conf_b), params)) {
    joined += c;
  }
  return normalize_text(joined);
}

std::string rescore_nbest(const ServiceHypothesis& service, const NGramLM& lm, double lambda) {
  if (service.nbest.empty()) throw InputError("N-best list for '" + service.id + "' is empty");
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < service.nbest.size(); ++i) {
    const auto& entry = service.nbest[i];
    const double score = lambda * entry.score + lm.sentence_logprob(normalize_text(entry.transcript));
    if (i == 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return service.nbest[best].transcript;
}

}  // namespace finemerge
