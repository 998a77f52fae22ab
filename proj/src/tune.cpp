#include "finemerge/tune.hpp"

#include <bit>
#include <json.hpp>
#include <optional>
#include <unordered_map>

#include "finemerge/align.hpp"
#include "finemerge/baselines.hpp"
#include "finemerge/decode.hpp"
#include "finemerge/merge.hpp"
#include "finemerge/metrics.hpp"
#include "finemerge/parallel.hpp"
#include "finemerge/pipeline.hpp"

namespace finemerge {

namespace {

Hypothesis normalized_service(const ServiceHypothesis& s) {
  Hypothesis h{normalize_text(s.transcript), s.word_confidences};
  if (h.word_confidences.size() != word_count(h.transcript)) h.word_confidences.clear();
  return h;
}

std::vector<std::string> references(std::span<const Utterance> data) {
  std::vector<std::string> refs;
  refs.reserve(data.size());
  for (const auto& u : data) refs.push_back(u.reference);
  return refs;
}

template <typename T>
void require_nonempty(const std::vector<T>& grid, const char* name) {
  if (grid.empty()) throw InputError(std::string("tuning grid for ") + name + " is empty");
}

// Service alignment is independent of psi/omega/gamma, so it is computed once
// per utterance.
struct AlignedService {
  std::string transcript;
  std::vector<double> confidences;
  std::optional<FrameAlignment> alignment;
};

// Fingerprint of a revised matrix; different grid points often gate the same
// frames of an utterance and need not be decoded twice.
std::uint64_t fingerprint(const FramePosteriors& p) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double x : p.data()) {
    h ^= std::bit_cast<std::uint64_t>(x);
    h *= 0x100000001b3ull;
    h ^= h >> 29;
  }
  return h;
}

AlignedService align_service(const Utterance& u) {
  AlignedService a;
  const Hypothesis h = normalized_service(u.service);
  a.transcript = h.transcript;
  a.confidences = h.word_confidences;
  if (!a.transcript.empty() && u.posteriors.frames() >= min_frames(a.transcript)) {
    a.alignment = viterbi_align(a.transcript, smooth(u.posteriors), Vocabulary::english());
  }
  return a;
}

}  // namespace

void TuneGrids::validate() const {
  require_nonempty(psi, "psi");
  require_nonempty(omega, "omega");
  require_nonempty(gamma, "gamma");
  require_nonempty(alpha, "alpha");
  require_nonempty(beta, "beta");
  require_nonempty(conf_null, "conf_null");
  require_nonempty(lambda, "lambda");
  // Reject out-of-range values before any decoding starts.
  for (double x : psi) MergeParams{x, 0.0, 0.0}.validate();
  for (double x : omega) MergeParams{1e-3, x, 0.0}.validate();
  for (double x : gamma) MergeParams{1e-3, 0.0, x}.validate();
  for (double x : alpha) {
    BeamParams b;
    b.alpha = x;
    b.validate();
  }
  for (double x : conf_null) {
    RoverParams r;
    r.conf_null = x;
    r.validate();
  }
}

SystemOutputs run_systems(std::span<const Utterance> data, const NGramLM& lm, const io::ParameterSet& params,
                          std::size_t jobs) {
  const std::size_t n = data.size();
  SystemOutputs out;
  out.local.resize(n);
  out.local_greedy.resize(n);
  out.service.resize(n);
  out.finemerge.resize(n);
  out.revised_greedy.resize(n);
  out.rover_words.resize(n);
  out.rover_chars.resize(n);
  out.rescore.resize(n);
  std::vector<char> fell_back(n, 0);
  bool have_nbest = true;
  for (const auto& u : data) have_nbest = have_nbest && !u.service.nbest.empty();

  parallel_for(n, jobs, [&](std::size_t i) {
    const Utterance& u = data[i];
    const Hypothesis service = normalized_service(u.service);
    out.service[i] = service.transcript;
    out.local[i] = beam_decode(u.posteriors, &lm, params.beam).front().transcript;
    out.local_greedy[i] = normalize_text(greedy_decode(u.posteriors));

    const MergeResult merged = finemerge(u.posteriors, u.service, params.merge, params.beam, &lm);
    out.finemerge[i] = merged.transcript;
    out.revised_greedy[i] = normalize_text(greedy_decode(merged.revised));
    fell_back[i] = merged.fallback != Fallback::kNone;

    const LocalHypothesis local = local_confidences(u.posteriors, out.local[i]);
    out.rover_words[i] = rover_words(service, local, params.rover);
    const LocalHypothesis local_chars = local_confidences(u.posteriors, out.local_greedy[i]);
    out.rover_chars[i] = rover_chars(service, local_chars, params.rover);
    if (have_nbest) out.rescore[i] = normalize_text(rescore_nbest(u.service, lm, params.rescore_lambda));
  });
  for (char f : fell_back) out.fallbacks += f ? 1 : 0;
  if (!have_nbest) out.rescore.clear();
  return out;
}

TuneResult grid_search(std::span<const Utterance> val, const NGramLM& lm, const TuneGrids& grids,
                       const io::ParameterSet& base, std::size_t jobs) {
  grids.validate();
  if (val.empty()) throw InputError("validation set is empty");
  const std::vector<std::string> refs = references(val);
  const std::size_t n = val.size();

  TuneResult result;
  result.best = base;
  io::ParameterSet& best = result.best;
  std::vector<std::string> hyps(n);

  // Stage 1: LM weight and word bonus on local decoding.
  std::optional<double> best_wer;
  for (double alpha : grids.alpha) {
    for (double beta : grids.beta) {
      io::ParameterSet p = best;
      p.beam.alpha = alpha;
      p.beam.beta = beta;
      parallel_for(n, jobs, [&](std::size_t i) {
        hyps[i] = beam_decode(val[i].posteriors, &lm, p.beam).front().transcript;
      });
      const double w = wer(refs, hyps);
      result.trace.push_back({"local", p, w});
      if (!best_wer || w < *best_wer) {
        best_wer = w;
        result.local_wer = w;
        best.beam.alpha = alpha;
        best.beam.beta = beta;
      }
    }
  }
  const BeamParams frozen = best.beam;

  // Stage 2: merge parameters with the decoder frozen.
  std::vector<AlignedService> aligned(n);
  std::vector<std::unordered_map<std::uint64_t, std::string>> decoded(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    aligned[i] = align_service(val[i]);
    decoded[i].emplace(fingerprint(val[i].posteriors), beam_decode(val[i].posteriors, &lm, frozen).front().transcript);
  });
  best_wer.reset();
  for (double psi : grids.psi) {
    for (double omega : grids.omega) {
      for (double gamma : grids.gamma) {
        io::ParameterSet p = best;
        p.merge = {psi, omega, gamma};
        parallel_for(n, jobs, [&](std::size_t i) {
          const auto& a = aligned[i];
          if (!a.alignment) {
            hyps[i] = decoded[i].at(fingerprint(val[i].posteriors));
            return;
          }
          const FramePosteriors revised = revise(val[i].posteriors, *a.alignment, a.transcript, a.confidences, p.merge);
          const std::uint64_t key = fingerprint(revised);
          auto it = decoded[i].find(key);
          if (it == decoded[i].end()) {
            it = decoded[i].emplace(key, beam_decode(revised, &lm, frozen).front().transcript).first;
          }
          hyps[i] = it->second;
        });
        const double w = wer(refs, hyps);
        result.trace.push_back({"finemerge", p, w});
        if (!best_wer || w < *best_wer) {
          best_wer = w;
          result.finemerge_wer = w;
          best.merge = p.merge;
        }
      }
    }
  }

  // ROVER null-arc confidence, using the tuned local decoder's output.
  std::vector<std::string> service(n);
  std::vector<LocalHypothesis> local(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    service[i] = normalize_text(val[i].service.transcript);
    const std::string& text = decoded[i].at(fingerprint(val[i].posteriors));
    local[i] = local_confidences(val[i].posteriors, text);
  });
  result.service_wer = wer(refs, service);
  best_wer.reset();
  for (double conf_null : grids.conf_null) {
    io::ParameterSet p = best;
    p.rover.conf_null = conf_null;
    for (std::size_t i = 0; i < n; ++i) {
      hyps[i] = rover_words(normalized_service(val[i].service), local[i], p.rover);
    }
    const double w = wer(refs, hyps);
    result.trace.push_back({"rover", p, w});
    if (!best_wer || w < *best_wer) {
      best_wer = w;
      result.rover_wer = w;
      best.rover.conf_null = conf_null;
    }
  }

  // N-best rescoring weight, when the service supplied alternatives.
  bool have_nbest = true;
  for (const auto& u : val) have_nbest = have_nbest && !u.service.nbest.empty();
  if (have_nbest) {
    best_wer.reset();
    for (double lambda : grids.lambda) {
      io::ParameterSet p = best;
      p.rescore_lambda = lambda;
      for (std::size_t i = 0; i < n; ++i) hyps[i] = normalize_text(rescore_nbest(val[i].service, lm, lambda));
      const double w = wer(refs, hyps);
      result.trace.push_back({"rescore", p, w});
      if (!best_wer || w < *best_wer) {
        best_wer = w;
        result.rescore_wer = w;
        best.rescore_lambda = lambda;
      }
    }
  }
  return result;
}

std::string trace_to_json(const TuneResult& result) {
  using nlohmann::json;
  json points = json::array();
  for (const auto& t : result.trace) {
    points.push_back({{"stage", t.stage},
                      {"psi", t.params.merge.psi},
                      {"omega", t.params.merge.omega},
                      {"gamma", t.params.merge.gamma},
                      {"alpha", t.params.beam.alpha},
                      {"beta", t.params.beam.beta},
                      {"conf_null", t.params.rover.conf_null},
                      {"lambda", t.params.rescore_lambda},
                      {"wer", t.wer}});
  }
  json j{{"format", "finemerge-tune-trace"},
         {"version", 1},
         {"best", json::parse(io::params_to_json(result.best))},
         {"objective",
          {{"local", result.local_wer},
           {"service", result.service_wer},
           {"finemerge", result.finemerge_wer},
           {"rover", result.rover_wer},
           {"rescore", result.rescore_wer}}},
         {"trace", std::move(points)}};
  return j.dump(2);
}

}  // namespace finemerge
