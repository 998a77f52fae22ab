#include "finemerge/io.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "finemerge/binary.hpp"

namespace finemerge::io {

using nlohmann::json;

namespace {

constexpr char kPosteriorMagic[4] = {'F', 'M', 'P', 'B'};

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

FramePosteriors posteriors_from_json(const json& j, const Vocabulary& vocab) {
  const std::string id = j.at("id").get<std::string>();
  if (j.at("vocab").get<std::string>() != vocab.symbols()) {
    throw InputError("posteriors for '" + id + "' use a different vocabulary");
  }
  const auto& rows = j.at("probs");
  const std::size_t frames = rows.size();
  std::vector<double> values;
  values.reserve(frames * vocab.size());
  for (const auto& row : rows) {
    if (row.size() != vocab.size()) {
      throw InputError("posteriors for '" + id + "' have a row of width " + std::to_string(row.size()));
    }
    for (const auto& v : row) values.push_back(static_cast<double>(v.get<float>()));
  }
  return FramePosteriors(id, frames, vocab.size(), std::move(values));
}

json posteriors_to_json(const FramePosteriors& p, const Vocabulary& vocab) {
  json rows = json::array();
  for (std::size_t t = 0; t < p.frames(); ++t) {
    json row = json::array();
    for (double v : p.row(t)) row.push_back(static_cast<float>(v));
    rows.push_back(std::move(row));
  }
  return json{{"id", p.id()}, {"vocab", vocab.symbols()}, {"probs", std::move(rows)}};
}

template <typename T, typename Parse>
ReadResult<T> read_jsonl(std::istream& in, Parse parse) {
  ReadResult<T> result;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      result.records.push_back(parse(json::parse(line)));
    } catch (const std::exception& e) {
      result.errors.push_back({number, e.what()});
    }
  }
  return result;
}

ServiceHypothesis hypothesis_from_json(const json& j) {
  ServiceHypothesis h;
  h.id = j.at("id").get<std::string>();
  h.transcript = j.at("transcript").get<std::string>();
  if (auto it = j.find("word_confidences"); it != j.end() && !it->is_null()) {
    h.word_confidences = it->get<std::vector<double>>();
    resolve_confidences(normalize_text(h.transcript), h.word_confidences);
  }
  if (auto it = j.find("nbest"); it != j.end() && !it->is_null()) {
    for (const auto& e : *it) {
      h.nbest.push_back({e.at("transcript").get<std::string>(), e.at("score").get<double>()});
    }
  }
  return h;
}

}  // namespace

Format parse_format(const std::string& name) {
  if (name == "binary") return Format::kBinary;
  if (name == "json") return Format::kJson;
  throw InputError("unknown format '" + name + "' (expected binary or json)");
}

void write_posterior_record(std::ostream& out, const FramePosteriors& p, const Vocabulary& vocab) {
  if (p.symbols() != vocab.size()) throw InputError("posterior width does not match the vocabulary");
  out.write(kPosteriorMagic, 4);
  binary::write_le<std::uint16_t>(out, kPosteriorVersion);
  binary::write_string(out, p.id());
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.frames()));
  binary::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.symbols()));
  binary::write_string(out, vocab.symbols());
  for (double v : p.data()) binary::write_le<float>(out, static_cast<float>(v));
}

PosteriorRecord read_posterior_record(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kPosteriorMagic)) {
    throw InputError("not a posterior record (bad magic)");
  }
  const auto version = binary::read_le<std::uint16_t>(in, "posterior version");
  if (version != kPosteriorVersion) {
    throw InputError("unsupported posterior format version " + std::to_string(version));
  }
  std::string id = binary::read_string(in, "utterance id");
  const auto frames = binary::read_le<std::uint32_t>(in, "frame count");
  const auto symbols = binary::read_le<std::uint32_t>(in, "vocabulary size");
  std::string vocab = binary::read_string(in, "vocabulary", 4096);
  if (vocab.size() != symbols) {
    throw InputError("posterior record '" + id + "' declares V=" + std::to_string(symbols) +
                     " but a vocabulary of " + std::to_string(vocab.size()) + " symbols");
  }
  const std::uint64_t count = static_cast<std::uint64_t>(frames) * symbols;
  if (count > (1ull << 32)) throw InputError("posterior record '" + id + "' is implausibly large");
  std::vector<double> values(count);
  for (auto& v : values) {
    v = static_cast<double>(binary::read_le<float>(in, "posterior values (dimension mismatch)"));
  }
  return {FramePosteriors(std::move(id), frames, symbols, std::move(values)), std::move(vocab)};
}

void save_posteriors(const std::filesystem::path& path, std::span<const FramePosteriors> items,
                     const Vocabulary& vocab, Format format) {
  if (format == Format::kBinary) {
    auto out = open_out(path, std::ios::binary);
    for (const auto& p : items) write_posterior_record(out, p, vocab);
    if (!out) throw InputError("failed writing " + path.string());
    return;
  }
  json all = json::array();
  for (const auto& p : items) all.push_back(posteriors_to_json(p, vocab));
  auto out = open_out(path);
  out << all.dump() << '\n';
}

std::vector<FramePosteriors> load_posteriors(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto in = open_in(path, std::ios::binary);
  std::vector<FramePosteriors> out;
  const int first = in.peek();
  if (first == '{' || first == '[') {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError(path.string() + ": " + e.what());
    }
    try {
      if (j.is_array()) {
        for (const auto& item : j) out.push_back(posteriors_from_json(item, vocab));
      } else {
        out.push_back(posteriors_from_json(j, vocab));
      }
    } catch (const json::exception& e) {
      throw InputError(path.string() + ": " + e.what());
    }
    return out;
  }
  while (in.peek() != std::char_traits<char>::eof()) {
    PosteriorRecord record = read_posterior_record(in);
    if (record.vocabulary != vocab.symbols()) {
      throw InputError("posteriors for '" + record.posteriors.id() + "' use vocabulary '" +
                       record.vocabulary + "'");
    }
    out.push_back(std::move(record.posteriors));
  }
  return out;
}

ReadResult<ServiceHypothesis> read_hypotheses(std::istream& in) {
  return read_jsonl<ServiceHypothesis>(in, hypothesis_from_json);
}

ReadResult<ServiceHypothesis> read_hypotheses(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_hypotheses(in);
}

void write_hypotheses(std::ostream& out, std::span<const ServiceHypothesis> items) {
  for (const auto& h : items) {
    json j{{"id", h.id}, {"transcript", h.transcript}};
    if (!h.word_confidences.empty()) j["word_confidences"] = h.word_confidences;
    if (!h.nbest.empty()) {
      json list = json::array();
      for (const auto& e : h.nbest) list.push_back({{"transcript", e.transcript}, {"score", e.score}});
      j["nbest"] = std::move(list);
    }
    out << j.dump() << '\n';
  }
}

void write_hypotheses(const std::filesystem::path& path, std::span<const ServiceHypothesis> items) {
  auto out = open_out(path);
  write_hypotheses(out, items);
}

ReadResult<Reference> read_references(std::istream& in) {
  return read_jsonl<Reference>(in, [](const json& j) {
    return Reference{j.at("id").get<std::string>(), j.at("transcript").get<std::string>()};
  });
}

ReadResult<Reference> read_references(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_references(in);
}

void write_references(const std::filesystem::path& path, std::span<const Reference> items) {
  auto out = open_out(path);
  for (const auto& r : items) out << json{{"id", r.id}, {"transcript", r.transcript}}.dump() << '\n';
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

void write_lines(const std::filesystem::path& path, std::span<const std::string> lines) {
  auto out = open_out(path);
  for (const auto& l : lines) out << l << '\n';
}

std::string params_to_json(const ParameterSet& p) {
  json j{{"format", "finemerge-params"},
         {"version", kParamsVersion},
         {"merge", {{"psi", p.merge.psi}, {"omega", p.merge.omega}, {"gamma", p.merge.gamma}}},
         {"beam",
          {{"width", p.beam.width},
           {"alpha", p.beam.alpha},
           {"beta", p.beam.beta},
           {"nbest", p.beam.nbest},
           {"symbol_cutoff", p.beam.symbol_cutoff}}},
         {"rover",
          {{"conf_null", p.rover.conf_null},
           {"prefer_on_tie", p.rover.prefer_on_tie == TiePreference::kService ? "service" : "local"}}},
         {"rescore", {{"lambda", p.rescore_lambda}}}};
  return j.dump(2);
}

void save_params(const std::filesystem::path& path, const ParameterSet& params) {
  auto out = open_out(path);
  out << params_to_json(params) << '\n';
}

ParameterSet load_params(const std::filesystem::path& path) {
  auto in = open_in(path);
  ParameterSet p;
  try {
    const json j = json::parse(in);
    if (j.value("format", "") != "finemerge-params") throw InputError(path.string() + " is not a parameter file");
    if (j.at("version").get<int>() != kParamsVersion) {
      throw InputError("unsupported parameter file version in " + path.string());
    }
    if (auto m = j.find("merge"); m != j.end()) {
      p.merge.psi = m->value("psi", p.merge.psi);
      p.merge.omega = m->value("omega", p.merge.omega);
      p.merge.gamma = m->value("gamma", p.merge.gamma);
    }
    if (auto b = j.find("beam"); b != j.end()) {
      p.beam.width = b->value("width", p.beam.width);
      p.beam.alpha = b->value("alpha", p.beam.alpha);
      p.beam.beta = b->value("beta", p.beam.beta);
      p.beam.nbest = b->value("nbest", p.beam.nbest);
      p.beam.symbol_cutoff = b->value("symbol_cutoff", p.beam.symbol_cutoff);
    }
    if (auto r = j.find("rover"); r != j.end()) {
      p.rover.conf_null = r->value("conf_null", p.rover.conf_null);
      const std::string tie = r->value("prefer_on_tie", std::string("service"));
      if (tie != "service" && tie != "local") throw InputError("prefer_on_tie must be service or local");
      p.rover.prefer_on_tie = tie == "service" ? TiePreference::kService : TiePreference::kLocal;
    }
    if (auto r = j.find("rescore"); r != j.end()) p.rescore_lambda = r->value("lambda", p.rescore_lambda);
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  p.merge.validate();
  p.beam.validate();
  p.rover.validate();
  return p;
}

}  // namespace finemerge::io
