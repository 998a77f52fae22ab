#include "finemerge/dataset.hpp"

#include <unordered_map>

namespace finemerge::io {

namespace {

template <typename T>
void require_clean(const ReadResult<T>& result, const std::filesystem::path& path) {
  if (result.errors.empty()) return;
  const auto& e = result.errors.front();
  throw InputError(path.string() + ":" + std::to_string(e.line) + ": " + e.message);
}

}  // namespace

std::filesystem::path posterior_path(const std::filesystem::path& dir) {
  const auto binary = dir / "posteriors.fmpb";
  if (std::filesystem::exists(binary)) return binary;
  const auto json = dir / "posteriors.json";
  if (std::filesystem::exists(json)) return json;
  return binary;
}

void save_split(const std::filesystem::path& dir, std::span<const Utterance> utterances, Format format,
                const Vocabulary& vocab) {
  std::filesystem::create_directories(dir);
  std::vector<FramePosteriors> posteriors;
  std::vector<ServiceHypothesis> service;
  std::vector<Reference> refs;
  for (const auto& u : utterances) {
    posteriors.push_back(u.posteriors);
    service.push_back(u.service);
    refs.push_back({u.id, u.reference});
  }
  save_posteriors(dir / (format == Format::kBinary ? "posteriors.fmpb" : "posteriors.json"), posteriors,
                  vocab, format);
  write_hypotheses(dir / "service.jsonl", service);
  write_references(dir / "refs.jsonl", refs);
}

std::vector<Utterance> load_split(const std::filesystem::path& dir, const Vocabulary& vocab) {
  auto posteriors = load_posteriors(posterior_path(dir), vocab);
  const auto service = read_hypotheses(dir / "service.jsonl");
  require_clean(service, dir / "service.jsonl");
  const auto refs = read_references(dir / "refs.jsonl");
  require_clean(refs, dir / "refs.jsonl");

  std::unordered_map<std::string, const ServiceHypothesis*> service_by_id;
  for (const auto& s : service.records) service_by_id.emplace(s.id, &s);
  std::unordered_map<std::string, const Reference*> ref_by_id;
  for (const auto& r : refs.records) ref_by_id.emplace(r.id, &r);

  std::vector<Utterance> out;
  out.reserve(posteriors.size());
  for (auto& p : posteriors) {
    auto s = service_by_id.find(p.id());
    if (s == service_by_id.end()) throw InputError("no service hypothesis for '" + p.id() + "'");
    auto r = ref_by_id.find(p.id());
    if (r == ref_by_id.end()) throw InputError("no reference for '" + p.id() + "'");
    Utterance u;
    u.id = p.id();
    u.reference = normalize_text(r->second->transcript, vocab);
    u.service = *s->second;
    u.posteriors = validate_posteriors(std::move(p), vocab);
    out.push_back(std::move(u));
  }
  return out;
}

}  // namespace finemerge::io
