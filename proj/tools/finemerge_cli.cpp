// finemerge: command-line front end for alignment, decoding, service-guided
// merging, baselines, evaluation, tuning and synthetic data generation.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "finemerge/align.hpp"
#include "finemerge/baselines.hpp"
#include "finemerge/dataset.hpp"
#include "finemerge/decode.hpp"
#include "finemerge/io.hpp"
#include "finemerge/lm.hpp"
#include "finemerge/metrics.hpp"
#include "finemerge/parallel.hpp"
#include "finemerge/pipeline.hpp"
#include "finemerge/synth.hpp"
#include "finemerge/tune.hpp"

namespace fs = std::filesystem;
using namespace finemerge;

namespace {

struct Globals {
  std::string params_file;
  std::string lm_file;
  std::uint64_t seed = 7;
  std::size_t jobs = 1;
  std::string format = "binary";
};

// Command-line overrides layered over the parameter file.
struct Overrides {
  std::optional<double> psi, omega, gamma, alpha, beta, conf_null, lambda;
  std::optional<std::size_t> width;

  void add_merge(CLI::App* cmd) {
    cmd->add_option("--psi", psi, "service probability threshold");
    cmd->add_option("--omega", omega, "service weight");
    cmd->add_option("--gamma", gamma, "blank mixing weight");
  }
  void add_beam(CLI::App* cmd) {
    cmd->add_option("--alpha", alpha, "LM weight");
    cmd->add_option("--beta", beta, "word insertion bonus");
    cmd->add_option("--width", width, "beam width");
  }
};

io::ParameterSet resolve_params(const Globals& g, const Overrides& o) {
  io::ParameterSet p = g.params_file.empty() ? io::ParameterSet{} : io::load_params(g.params_file);
  if (o.psi) p.merge.psi = *o.psi;
  if (o.omega) p.merge.omega = *o.omega;
  if (o.gamma) p.merge.gamma = *o.gamma;
  if (o.alpha) p.beam.alpha = *o.alpha;
  if (o.beta) p.beam.beta = *o.beta;
  if (o.width) p.beam.width = *o.width;
  if (o.conf_null) p.rover.conf_null = *o.conf_null;
  if (o.lambda) p.rescore_lambda = *o.lambda;
  p.merge.validate();
  p.beam.validate();
  p.rover.validate();
  return p;
}

std::optional<NGramLM> load_lm(const Globals& g, bool required) {
  if (g.lm_file.empty()) {
    if (required) throw InputError("this command needs --lm");
    return std::nullopt;
  }
  return NGramLM::load(g.lm_file);
}

std::vector<FramePosteriors> load_validated(const std::string& path) {
  auto items = io::load_posteriors(path);
  for (auto& p : items) p = validate_posteriors(std::move(p), Vocabulary::english());
  return items;
}

template <typename T>
std::vector<T> load_clean(const io::ReadResult<T>& result, const std::string& path) {
  for (const auto& e : result.errors) {
    std::cerr << path << ":" << e.line << ": skipped malformed line: " << e.message << '\n';
  }
  return result.records;
}

std::map<std::string, ServiceHypothesis> by_id(const std::vector<ServiceHypothesis>& items) {
  std::map<std::string, ServiceHypothesis> out;
  for (const auto& h : items) out.emplace(h.id, h);
  return out;
}

void write_output(const std::string& path, const std::vector<ServiceHypothesis>& items) {
  if (path.empty() || path == "-") {
    io::write_hypotheses(std::cout, items);
  } else {
    io::write_hypotheses(fs::path(path), items);
  }
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

// ---- subcommands ---------------------------------------------------------

int cmd_align(const Globals&, const std::string& posteriors_path, const std::string& service_path,
              const std::string& out_path) {
  const auto posteriors = load_validated(posteriors_path);
  const auto service = by_id(load_clean(io::read_hypotheses(fs::path(service_path)), service_path));
  const Vocabulary& vocab = Vocabulary::english();
  std::ostringstream out;
  for (const auto& p : posteriors) {
    auto it = service.find(p.id());
    if (it == service.end()) throw InputError("no service hypothesis for '" + p.id() + "'");
    const std::string text = normalize_text(it->second.transcript);
    out << "utterance " << p.id() << " service \"" << text << "\"\n";
    if (text.empty() || p.frames() < min_frames(text)) {
      out << "  infeasible: " << p.frames() << " frames, needs " << min_frames(text) << "\n";
      continue;
    }
    const FrameAlignment a = viterbi_align(text, smooth(p), vocab);
    out << "  log_prob " << std::setprecision(10) << a.log_prob << "\n";
    for (std::size_t t = 0; t < p.frames(); ++t) {
      const auto row = p.row(t);
      const auto best = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
      out << "  " << std::setw(4) << t << "  S=" << vocab.symbol(a.states[t]) << " p="
          << std::setprecision(4) << p.at(t, static_cast<std::size_t>(a.states[t])) << "  argmax="
          << vocab.symbol(best) << " p=" << row[static_cast<std::size_t>(best)] << "\n";
    }
  }
  if (out_path.empty() || out_path == "-") {
    std::cout << out.str();
  } else {
    std::ofstream f(out_path);
    if (!f) throw InputError("cannot write " + out_path);
    f << out.str();
  }
  return 0;
}

int cmd_decode(const Globals& g, const Overrides& o, const std::string& posteriors_path, bool beam,
               const std::string& out_path) {
  const auto params = resolve_params(g, o);
  const auto lm = load_lm(g, false);
  const auto posteriors = load_validated(posteriors_path);
  std::vector<ServiceHypothesis> out(posteriors.size());
  parallel_for(posteriors.size(), g.jobs, [&](std::size_t i) {
    const auto& p = posteriors[i];
    const std::string text = beam ? beam_decode(p, lm ? &*lm : nullptr, params.beam).front().transcript
                                  : normalize_text(greedy_decode(p));
    const LocalHypothesis h = local_confidences(p, text);
    out[i] = {p.id(), h.transcript, h.word_confidences, {}};
  });
  write_output(out_path, out);
  return 0;
}

int cmd_merge(const Globals& g, const Overrides& o, const std::string& posteriors_path,
              const std::string& service_path, const std::string& out_path) {
  const auto params = resolve_params(g, o);
  const auto lm = load_lm(g, false);
  const auto posteriors = load_validated(posteriors_path);
  const auto service = by_id(load_clean(io::read_hypotheses(fs::path(service_path)), service_path));
  std::vector<ServiceHypothesis> out(posteriors.size());
  std::vector<Fallback> fallbacks(posteriors.size(), Fallback::kNone);
  parallel_for(posteriors.size(), g.jobs, [&](std::size_t i) {
    const auto& p = posteriors[i];
    auto it = service.find(p.id());
    const ServiceHypothesis svc = it == service.end() ? ServiceHypothesis{p.id(), "", {}, {}} : it->second;
    const MergeResult r = finemerge::finemerge(p, svc, params.merge, params.beam, lm ? &*lm : nullptr);
    fallbacks[i] = r.fallback;
    // Confidences from the untouched posteriors so that a merge which
    // revised nothing reproduces local decoding exactly.
    const LocalHypothesis h = local_confidences(p, r.transcript);
    out[i] = {p.id(), h.transcript, h.word_confidences, {}};
  });
  for (std::size_t i = 0; i < fallbacks.size(); ++i) {
    if (fallbacks[i] != Fallback::kNone) {
      std::cerr << "merge: " << posteriors[i].id() << ": fell back to local decoding ("
                << to_string(fallbacks[i]) << ")\n";
    }
  }
  write_output(out_path, out);
  return 0;
}

int cmd_rover(const Globals& g, const Overrides& o, const std::string& service_path,
              const std::string& local_path, const std::string& mode, const std::string& out_path) {
  const auto params = resolve_params(g, o);
  const auto service = load_clean(io::read_hypotheses(fs::path(service_path)), service_path);
  const auto local = by_id(load_clean(io::read_hypotheses(fs::path(local_path)), local_path));
  std::vector<ServiceHypothesis> out;
  for (const auto& s : service) {
    auto it = local.find(s.id);
    if (it == local.end()) throw InputError("no local hypothesis for '" + s.id + "'");
    Hypothesis a{normalize_text(s.transcript), s.word_confidences};
    if (a.word_confidences.size() != word_count(a.transcript)) a.word_confidences.clear();
    Hypothesis b{normalize_text(it->second.transcript), it->second.word_confidences};
    if (b.word_confidences.size() != word_count(b.transcript)) b.word_confidences.clear();
    const std::string text = mode == "char" ? rover_chars(a, b, params.rover) : rover_words(a, b, params.rover);
    out.push_back({s.id, text, {}, {}});
  }
  write_output(out_path, out);
  return 0;
}

int cmd_rescore(const Globals& g, const Overrides& o, const std::string& service_path,
                const std::string& out_path) {
  const auto params = resolve_params(g, o);
  const auto lm = load_lm(g, true);
  const auto service = load_clean(io::read_hypotheses(fs::path(service_path)), service_path);
  std::vector<ServiceHypothesis> out;
  for (const auto& s : service) {
    ServiceHypothesis candidate = s;
    if (candidate.nbest.empty()) candidate.nbest.push_back({s.transcript, 0.0});
    out.push_back({s.id, normalize_text(rescore_nbest(candidate, *lm, params.rescore_lambda)), {}, {}});
  }
  write_output(out_path, out);
  return 0;
}

int cmd_eval(const std::string& refs_path, const std::string& hyp_path, const std::string& compare_path,
             std::size_t min_count, const std::string& report_path, const std::string& diff_path) {
  const auto refs = load_clean(io::read_references(fs::path(refs_path)), refs_path);
  auto load_hyps = [&](const std::string& path) {
    const auto items = by_id(load_clean(io::read_hypotheses(fs::path(path)), path));
    std::vector<std::string> out;
    for (const auto& r : refs) {
      auto it = items.find(r.id);
      out.push_back(it == items.end() ? std::string() : normalize_text(it->second.transcript));
    }
    return out;
  };
  std::vector<std::string> ref_text;
  for (const auto& r : refs) ref_text.push_back(normalize_text(r.transcript));
  const auto hyps = load_hyps(hyp_path);
  const double w = wer(ref_text, hyps);
  const double c = cer(ref_text, hyps);
  std::cout << "WER " << fixed(w) << "\nCER " << fixed(c) << "\n";

  nlohmann::json report{{"utterances", refs.size()}, {"wer", w}, {"cer", c}};
  if (!compare_path.empty()) {
    // Rows rank words by how much `hyp` improves on `compare`.
    const auto baseline = load_hyps(compare_path);
    const auto rows = per_word_error_reduction(ref_text, baseline, hyps, min_count);
    nlohmann::json table = nlohmann::json::array();
    std::cout << "word\tcount\terr_baseline\terr_system\treduction\n";
    for (const auto& r : rows) {
      std::cout << r.word << '\t' << r.occurrences << '\t' << fixed(r.error_a) << '\t' << fixed(r.error_b)
                << '\t' << fixed(r.reduction()) << '\n';
      table.push_back({{"word", r.word},
                       {"count", r.occurrences},
                       {"err_baseline", r.error_a},
                       {"err_system", r.error_b},
                       {"reduction", r.reduction()}});
    }
    report["baseline_wer"] = wer(ref_text, baseline);
    report["per_word"] = std::move(table);
  }
  if (!report_path.empty()) {
    std::ofstream f(report_path);
    if (!f) throw InputError("cannot write " + report_path);
    f << report.dump(2) << '\n';
  }
  if (!diff_path.empty()) {
    std::ofstream f(diff_path);
    if (!f) throw InputError("cannot write " + diff_path);
    for (std::size_t i = 0; i < refs.size(); ++i) {
      const auto r = split_words(ref_text[i]);
      const auto h = split_words(hyps[i]);
      const auto a = edit_distance(r, h);
      std::string ref_line, hyp_line, op_line;
      std::size_t ri = 0, hi = 0;
      for (EditOp op : a.ops) {
        const std::string rw = op == EditOp::kInsert ? "***" : r[ri++];
        const std::string hw = op == EditOp::kDelete ? "***" : h[hi++];
        const std::size_t width = std::max(rw.size(), hw.size());
        auto pad = [&](std::string s) { return s + std::string(width - s.size() + 1, ' '); };
        ref_line += pad(rw);
        hyp_line += pad(hw);
        op_line += pad(std::string(1, static_cast<char>(op)));
      }
      f << "id:  " << refs[i].id << "\nREF: " << ref_line << "\nHYP: " << hyp_line << "\nOP:  " << op_line
        << "\n\n";
    }
  }
  return 0;
}

int cmd_tune(const Globals& g, const Overrides& o, const std::string& data_dir, const std::string& out_path,
             const std::string& trace_path, TuneGrids grids) {
  const auto base = resolve_params(g, o);
  const auto lm = load_lm(g, true);
  const auto val = io::load_split(data_dir);
  const TuneResult r = grid_search(val, *lm, grids, base, g.jobs);
  io::save_params(out_path, r.best);
  if (!trace_path.empty()) {
    std::ofstream f(trace_path);
    if (!f) throw InputError("cannot write " + trace_path);
    f << trace_to_json(r) << '\n';
  }
  std::cout << "validation utterances " << val.size() << "\n"
            << "service WER   " << fixed(r.service_wer, 4) << "\n"
            << "local WER     " << fixed(r.local_wer, 4) << " (alpha " << r.best.beam.alpha << ", beta "
            << r.best.beam.beta << ")\n"
            << "finemerge WER " << fixed(r.finemerge_wer, 4) << " (psi " << r.best.merge.psi << ", omega "
            << r.best.merge.omega << ", gamma " << r.best.merge.gamma << ")\n"
            << "rover WER     " << fixed(r.rover_wer, 4) << " (conf_null " << r.best.rover.conf_null << ")\n"
            << "rescore WER   " << fixed(r.rescore_wer, 4) << " (lambda " << r.best.rescore_lambda << ")\n";
  return 0;
}

int cmd_synth(const Globals& g, const std::string& out_dir, std::size_t n) {
  SynthConfig cfg;
  cfg.seed = g.seed;
  std::cerr << "synth: seed " << cfg.seed << "\n";
  const SynthDataset data = gen_dataset(cfg, n);
  save_dataset(out_dir, data, cfg, io::parse_format(g.format));
  std::cout << "train " << data.train_sentences.size() << " val " << data.val.size() << " test "
            << data.test.size() << "\n";
  return 0;
}

int cmd_lm_train(const std::string& corpus, const std::string& out) {
  std::vector<std::string> sentences;
  for (const auto& line : io::read_lines(corpus)) {
    std::string s = normalize_text(line);
    if (!s.empty()) sentences.push_back(std::move(s));
  }
  const NGramLM lm = NGramLM::train(sentences);
  lm.save(out);
  std::cout << "sentences " << sentences.size() << " words " << lm.vocabulary_size() - 2 << " tokens "
            << lm.token_count() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finemerge: service-guided CTC decoding toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--params", g.params_file, "parameter file written by `tune`");
  app.add_option("--lm", g.lm_file, "language model written by `lm-train`");
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "posterior output format")
      ->check(CLI::IsMember({"binary", "json"}))
      ->capture_default_str();

  Overrides o;
  std::string posteriors, service, local, out, mode = "word", refs, hyp, compare, report, diff, data_dir, trace,
                                               corpus;
  std::size_t n = 20000, min_count = 5;
  bool beam = false;
  TuneGrids grids;

  auto* align = app.add_subcommand("align", "dump the forced alignment of service transcripts");
  align->add_option("--posteriors", posteriors)->required();
  align->add_option("--service", service)->required();
  align->add_option("--out", out);

  auto* decode = app.add_subcommand("decode", "local decoding (greedy, or beam with --beam)");
  decode->add_option("--posteriors", posteriors)->required();
  decode->add_flag("--beam", beam, "prefix beam search with the LM");
  decode->add_option("--out", out);
  o.add_beam(decode);

  auto* merge = app.add_subcommand("merge", "service-guided decoding");
  merge->add_option("--posteriors", posteriors)->required();
  merge->add_option("--service", service)->required();
  merge->add_option("--out", out);
  o.add_merge(merge);
  o.add_beam(merge);

  auto* rover = app.add_subcommand("rover", "two-system ROVER combination");
  rover->add_option("--service", service)->required();
  rover->add_option("--local", local)->required();
  rover->add_option("--mode", mode)->check(CLI::IsMember({"word", "char"}))->capture_default_str();
  rover->add_option("--conf-null", o.conf_null, "confidence of the null arc");
  rover->add_option("--out", out);

  auto* rescore = app.add_subcommand("rescore", "LM rescoring of service N-best lists");
  rescore->add_option("--service", service)->required();
  rescore->add_option("--lambda", o.lambda, "service score weight");
  rescore->add_option("--out", out);

  auto* eval = app.add_subcommand("eval", "WER/CER and per-word error report");
  eval->add_option("--refs", refs)->required();
  eval->add_option("--hyp", hyp)->required();
  eval->add_option("--compare", compare, "baseline hypotheses for the per-word table");
  eval->add_option("--min-count", min_count)->capture_default_str();
  eval->add_option("--report", report, "JSON report path");
  eval->add_option("--diff", diff, "aligned text diff path");

  auto* tune = app.add_subcommand("tune", "grid search on a validation split");
  tune->add_option("--data", data_dir, "split directory")->required();
  tune->add_option("--out", out, "parameter file to write")->required();
  tune->add_option("--trace", trace, "grid trace JSON");
  tune->add_option("--psi-grid", grids.psi)->delimiter(',');
  tune->add_option("--omega-grid", grids.omega)->delimiter(',');
  tune->add_option("--gamma-grid", grids.gamma)->delimiter(',');
  tune->add_option("--alpha-grid", grids.alpha)->delimiter(',');
  tune->add_option("--beta-grid", grids.beta)->delimiter(',');
  tune->add_option("--conf-null-grid", grids.conf_null)->delimiter(',');
  tune->add_option("--lambda-grid", grids.lambda)->delimiter(',');
  tune->add_option("--width", o.width, "beam width");

  auto* synth = app.add_subcommand("synth", "generate the synthetic accent benchmark");
  synth->add_option("--out", out)->required();
  synth->add_option("--n", n, "total utterances")->capture_default_str();

  auto* lm_train = app.add_subcommand("lm-train", "train the trigram LM");
  lm_train->add_option("--corpus", corpus, "one sentence per line")->required();
  lm_train->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*align) return cmd_align(g, posteriors, service, out);
    if (*decode) return cmd_decode(g, o, posteriors, beam, out);
    if (*merge) return cmd_merge(g, o, posteriors, service, out);
    if (*rover) return cmd_rover(g, o, service, local, mode, out);
    if (*rescore) return cmd_rescore(g, o, service, out);
    if (*eval) return cmd_eval(refs, hyp, compare, min_count, report, diff);
    if (*tune) return cmd_tune(g, o, data_dir, out, trace, grids);
    if (*synth) return cmd_synth(g, out, n);
    if (*lm_train) return cmd_lm_train(corpus, out);
  } catch (const InputError& e) {
    std::cerr << "finemerge: " << e.what() << '\n';
    return 1;
  } catch (const InfeasibleAlignment& e) {
    std::cerr << "finemerge: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "finemerge: internal error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
