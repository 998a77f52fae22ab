#include "finemerge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <unordered_set>

#include "finemerge/metrics.hpp"

namespace finemerge {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t kSentenceStream = 0xFFFFFFFFull;
constexpr std::uint64_t kGrammarStream = 0x100000000ull;  // + word rank

struct Frame {
  int target;         // symbol carrying the peak
  int truth;          // symbol actually spoken
  double residual;    // share of the peak left on `truth` when target != truth
};

class Generator {
 public:
  Generator(const SynthConfig& cfg, const Vocabulary& vocab)
      : cfg_(cfg), vocab_(vocab), space_(vocab.index(' ')) {
    words_ = cfg.words.empty() ? default_word_list() : cfg.words;
    known_.insert(words_.begin(), words_.end());
    double total = 0.0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), cfg.zipf_exponent);
      cumulative_.push_back(total);
    }
    // Each word gets a short, fixed list of likely successors, so sentences
    // have the local structure a word trigram model can pick up.
    if (cfg.successors > 0) {
      double mass = 0.0;
      for (std::size_t k = 0; k < cfg.successors; ++k) {
        mass += 1.0 / static_cast<double>(k + 1);
        successor_cumulative_.push_back(mass);
      }
      successors_.resize(words_.size());
      for (std::size_t i = 0; i < words_.size(); ++i) {
        Rng rng = Rng::for_stream(cfg.seed, kGrammarStream + i);
        for (std::size_t k = 0; k < cfg.successors; ++k) successors_[i].push_back(zipf_rank(rng));
      }
    }
  }

  std::vector<std::string> sentences(std::size_t n) {
    Rng rng = Rng::for_stream(cfg_.seed, kSentenceStream);
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    const std::size_t max_attempts = 50 * n + 1000;
    for (std::size_t attempt = 0; out.size() < n && attempt < max_attempts; ++attempt) {
      std::string s = cfg_.sentences.empty() ? random_sentence(rng)
                                             : normalize_text(cfg_.sentences[rng.below(cfg_.sentences.size())]);
      if (s.empty() || !seen.insert(s).second) continue;
      out.push_back(std::move(s));
    }
    if (out.size() < n) {
      throw InputError("could only draw " + std::to_string(out.size()) + " distinct sentences of " +
                       std::to_string(n) + " requested");
    }
    return out;
  }

  Utterance utterance(const std::string& id, const std::string& reference, std::uint64_t stream) {
    Rng rng = Rng::for_stream(cfg_.seed, stream);
    Utterance u;
    u.id = id;
    u.reference = reference;
    u.posteriors = posteriors(id, reference, rng);
    u.service = service(id, reference, rng);
    return u;
  }

 private:
  std::string random_sentence(Rng& rng) {
    const std::size_t span = cfg_.max_words - cfg_.min_words + 1;
    const std::size_t count = cfg_.min_words + rng.below(span);
    std::string s;
    std::size_t rank = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (i == 0 || successors_.empty() || rng.chance(cfg_.successor_escape)) {
        rank = zipf_rank(rng);
      } else {
        const double u = rng.uniform() * successor_cumulative_.back();
        auto it = std::upper_bound(successor_cumulative_.begin(), successor_cumulative_.end(), u);
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - successor_cumulative_.begin()),
                                             cfg_.successors - 1);
        rank = successors_[rank][k];
      }
      if (!s.empty()) s.push_back(' ');
      s += words_[rank];
    }
    return normalize_text(s, vocab_);
  }

  std::size_t zipf_rank(Rng& rng) const {
    const double u = rng.uniform() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), words_.size() - 1);
  }

  std::vector<Frame> frame_path(const std::string& reference, Rng& rng) {
    std::vector<Frame> path;
    const int blank = vocab_.blank();
    for (std::size_t k = 0; k < reference.size(); ++k) {
      const char c = reference[k];
      const int truth = vocab_.index(c);
      const bool repeat = k > 0 && reference[k - 1] == c;
      if (repeat || rng.chance(cfg_.blank_insertion)) path.push_back({blank, blank, 0.0});

      int target = truth;
      double residual = 0.0;
      if (c != ' ' && rng.chance(cfg_.local_confusion_rate)) {
        auto it = cfg_.local_confusions.find(c);
        if (it != cfg_.local_confusions.end() && !it->second.empty()) {
          const char sub = it->second[rng.below(it->second.size())];
          target = vocab_.index(sub);
          residual = rng.uniform(0.02, 0.5);
        }
      }
      const std::size_t dwell = cfg_.dwell_min + rng.below(cfg_.dwell_max - cfg_.dwell_min + 1);
      for (std::size_t d = 0; d < dwell; ++d) path.push_back({target, truth, residual});
    }
    if (reference.empty() || rng.chance(cfg_.blank_insertion)) path.push_back({blank, blank, 0.0});
    return path;
  }

  FramePosteriors posteriors(const std::string& id, const std::string& reference, Rng& rng) {
    const auto path = frame_path(reference, rng);
    const std::size_t v = vocab_.size();
    FramePosteriors p(id, path.size(), v);
    for (std::size_t t = 0; t < path.size(); ++t) {
      const Frame& f = path[t];
      auto row = p.row(t);
      const double noise = f.truth == space_ ? cfg_.boundary_noise : cfg_.local_noise;
      const double eps = noise * rng.uniform(0.5, 1.5);
      const double peak = 1.0 - eps;
      if (f.target != f.truth) {
        row[static_cast<std::size_t>(f.truth)] += peak * f.residual;
        row[static_cast<std::size_t>(f.target)] += peak * (1.0 - f.residual);
      } else {
        row[static_cast<std::size_t>(f.target)] += peak;
      }

      // Leakage: half onto the neighbouring path symbol, most of the rest onto
      // symbols confusable with the target, a sliver spread evenly.
      int neighbour = vocab_.blank();
      for (std::size_t d = 1; d <= path.size(); ++d) {
        if (t >= d && path[t - d].target != f.target) {
          neighbour = path[t - d].target;
          break;
        }
        if (t + d < path.size() && path[t + d].target != f.target) {
          neighbour = path[t + d].target;
          break;
        }
        if (t < d && t + d >= path.size()) break;
      }
      row[static_cast<std::size_t>(neighbour)] += 0.5 * eps;

      std::string confusable;
      if (f.target != vocab_.blank()) {
        auto it = cfg_.local_confusions.find(vocab_.symbol(f.target));
        if (it != cfg_.local_confusions.end()) confusable = it->second;
      }
      if (confusable.empty()) {
        row[static_cast<std::size_t>(vocab_.blank())] += 0.499 * eps;
      } else {
        for (char c : confusable) {
          row[static_cast<std::size_t>(vocab_.index(c))] += 0.499 * eps / static_cast<double>(confusable.size());
        }
      }
      for (double& x : row) x += 0.001 * eps / static_cast<double>(v);

      // Stored precision is f32; renormalize after rounding.
      double sum = 0.0;
      for (double& x : row) {
        x = static_cast<double>(static_cast<float>(x));
        sum += x;
      }
      for (double& x : row) x /= sum;
    }
    return validate_posteriors(std::move(p), vocab_);
  }

  std::string perturb_word(const std::string& word, Rng& rng) {
    if (auto it = cfg_.homophones.find(word); it != cfg_.homophones.end() && rng.chance(cfg_.homophone_rate)) {
      return it->second;
    }
    std::string out;
    std::size_t i = 0;
    while (i < word.size()) {
      bool replaced = false;
      for (const auto& rule : cfg_.service_confusions) {
        if (rule.from.empty() || word.compare(i, rule.from.size(), rule.from) != 0) continue;
        if (rng.chance(rule.rate)) {
          out += rule.to;
          i += rule.from.size();
          replaced = true;
          break;
        }
      }
      if (!replaced) out.push_back(word[i++]);
    }
    if (out != word && cfg_.snap_to_words && !known_.count(out)) out = nearest_word(out);
    return out;
  }

  // Closest vocabulary word by character edit distance; earlier (more
  // frequent) words win ties.
  std::string nearest_word(const std::string& s) const {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    const std::string* best_word = &s;
    for (const auto& w : words_) {
      const std::size_t gap = w.size() > s.size() ? w.size() - s.size() : s.size() - w.size();
      if (gap >= best) continue;
      const std::size_t d = edit_distance(s, w).distance;
      if (d < best) {
        best = d;
        best_word = &w;
      }
    }
    return *best_word;
  }

  struct Perturbed {
    std::vector<std::string> words;
    std::vector<bool> changed;
  };

  Perturbed perturb_sentence(const std::vector<std::string>& words, Rng& rng) {
    Perturbed p;
    for (const auto& w : words) {
      std::string out = perturb_word(w, rng);
      p.changed.push_back(out != w);
      p.words.push_back(std::move(out));
    }
    return p;
  }

  static std::string join(const std::vector<std::string>& words) {
    std::string s;
    for (const auto& w : words) {
      if (w.empty()) continue;
      if (!s.empty()) s.push_back(' ');
      s += w;
    }
    return s;
  }

  ServiceHypothesis service(const std::string& id, const std::string& reference, Rng& rng) {
    const auto words = split_words(reference);
    const Perturbed top = perturb_sentence(words, rng);
    ServiceHypothesis h;
    h.id = id;
    h.transcript = join(top.words);
    for (std::size_t i = 0; i < top.words.size(); ++i) {
      if (top.words[i].empty()) continue;
      const double mean = top.changed[i] ? cfg_.confidence_error : cfg_.confidence_correct;
      const double c = std::clamp(rng.normal(mean, cfg_.confidence_sd), 0.01, 1.0);
      h.word_confidences.push_back(std::round(c * 1e4) / 1e4);
    }
    if (cfg_.nbest > 0) {
      h.nbest.push_back({h.transcript, 0.0});
      std::unordered_set<std::string> seen{h.transcript};
      for (std::size_t attempt = 0; attempt < 4 * cfg_.nbest && h.nbest.size() < cfg_.nbest; ++attempt) {
        std::string alt = join(perturb_sentence(words, rng).words);
        if (!seen.insert(alt).second) continue;
        const double score = -0.5 * static_cast<double>(h.nbest.size()) - 0.5 * rng.uniform();
        h.nbest.push_back({std::move(alt), std::round(score * 1e4) / 1e4});
      }
    }
    return h;
  }

  const SynthConfig& cfg_;
  const Vocabulary& vocab_;
  int space_;
  std::vector<std::string> words_;
  std::unordered_set<std::string> known_;
  std::vector<double> cumulative_;
  std::vector<std::vector<std::size_t>> successors_;
  std::vector<double> successor_cumulative_;
};

}  // namespace

Rng Rng::for_stream(std::uint64_t seed, std::uint64_t stream) {
  return Rng(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ull)));
}

double Rng::normal(double mean, double sd) {
  // Box-Muller; one draw per call keeps the stream layout simple.
  double u1 = uniform();
  const double u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

SynthConfig::SynthConfig() {
  local_confusions = {
      {'a', "eo"}, {'b', "pd"}, {'c', "ks"}, {'d', "tb"}, {'e', "ai"}, {'f', "s"},  {'g', "kj"},
      {'h', "_"},  {'i', "ey"}, {'j', "g"},  {'k', "cg"}, {'l', "r"},  {'m', "n"},  {'n', "m"},
      {'o', "au"}, {'p', "b"},  {'q', "k"},  {'r', "l"},  {'s', "zc"}, {'t', "d"},  {'u', "o"},
      {'v', "fb"}, {'w', "u"},  {'x', "s"},  {'y', "i"},  {'z', "s"},  {'\'', "_"},
  };
  homophones = {
      {"were", "where"}, {"where", "were"}, {"there", "their"}, {"their", "there"}, {"to", "too"},
      {"too", "to"},     {"then", "than"},  {"than", "then"},   {"weather", "whether"},
      {"whether", "weather"}, {"hear", "here"}, {"here", "hear"}, {"know", "no"}, {"no", "know"},
      {"right", "write"}, {"write", "right"}, {"sea", "see"}, {"see", "sea"}, {"vest", "west"},
      {"west", "vest"}, {"wine", "vine"}, {"vine", "wine"}, {"veil", "wail"}, {"wail", "veil"},
  };
}

void SynthConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string(name) + " must lie in [0, 1]");
  };
  prob(blank_insertion, "blank_insertion");
  prob(local_noise, "local_noise");
  prob(boundary_noise, "boundary_noise");
  prob(local_confusion_rate, "local_confusion_rate");
  prob(homophone_rate, "homophone_rate");
  prob(successor_escape, "successor_escape");
  prob(confidence_correct, "confidence_correct");
  prob(confidence_error, "confidence_error");
  for (const auto& r : service_confusions) prob(r.rate, "service confusion rate");
  if (dwell_min < 1 || dwell_max < dwell_min) throw InputError("dwell range must satisfy 1 <= min <= max");
  if (min_words < 1 || max_words < min_words) throw InputError("sentence length range is invalid");
  if (confidence_sd < 0.0) throw InputError("confidence_sd must be non-negative");
  const Vocabulary& vocab = Vocabulary::english();
  for (const auto& [from, targets] : local_confusions) {
    if (!vocab.contains(from)) throw InputError("local confusion source outside the vocabulary");
    for (char c : targets) {
      if (vocab.index(c) < 0) throw InputError("local confusion target outside the vocabulary");
    }
  }
  for (const auto& r : service_confusions) {
    if (normalize_text(r.from) != r.from || normalize_text(r.to) != r.to || r.to.find(' ') != std::string::npos) {
      throw InputError("service confusion '" + r.from + "' -> '" + r.to + "' leaves the vocabulary");
    }
  }
}

SynthDataset gen_dataset(const SynthConfig& cfg, std::size_t n) {
  cfg.validate();
  if (n < 3) throw InputError("need at least 3 utterances to form train/val/test splits");
  const Vocabulary& vocab = Vocabulary::english();
  Generator gen(cfg, vocab);
  const auto sentences = gen.sentences(n);

  const std::size_t n_train = static_cast<std::size_t>(std::llround(0.85 * static_cast<double>(n)));
  const std::size_t n_val = static_cast<std::size_t>(std::llround(0.05 * static_cast<double>(n)));

  SynthDataset data;
  auto make = [&](std::size_t i, const char* split) {
    char id[32];
    std::snprintf(id, sizeof id, "%s-%06zu", split, i);
    return gen.utterance(id, sentences[i], i);
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (i < n_train) {
      data.train_sentences.push_back(sentences[i]);
      if (cfg.train_utterances) data.train.push_back(make(i, "train"));
    } else if (i < n_train + n_val) {
      data.val.push_back(make(i, "val"));
    } else {
      data.test.push_back(make(i, "test"));
    }
  }
  return data;
}

void save_dataset(const std::filesystem::path& dir, const SynthDataset& data, const SynthConfig& cfg,
                  io::Format format) {
  std::filesystem::create_directories(dir / "train");
  io::write_lines(dir / "train" / "sentences.txt", data.train_sentences);
  if (!data.train.empty()) io::save_split(dir / "train", data.train, format);
  io::save_split(dir / "val", data.val, format);
  io::save_split(dir / "test", data.test, format);

  nlohmann::json confusions = nlohmann::json::array();
  for (const auto& r : cfg.service_confusions) {
    confusions.push_back({{"from", r.from}, {"to", r.to}, {"rate", r.rate}});
  }
  nlohmann::json manifest{
      {"format", "finemerge-synth"},
      {"version", 1},
      {"seed", cfg.seed},
      {"vocabulary", Vocabulary::english().symbols()},
      {"splits",
       {{"train", data.train_sentences.size()}, {"val", data.val.size()}, {"test", data.test.size()}}},
      {"config",
       {{"zipf_exponent", cfg.zipf_exponent},
        {"successors", cfg.successors},
        {"successor_escape", cfg.successor_escape},
        {"dwell_min", cfg.dwell_min},
        {"dwell_max", cfg.dwell_max},
        {"blank_insertion", cfg.blank_insertion},
        {"local_noise", cfg.local_noise},
        {"boundary_noise", cfg.boundary_noise},
        {"local_confusion_rate", cfg.local_confusion_rate},
        {"service_confusions", confusions},
        {"homophone_rate", cfg.homophone_rate},
        {"confidence_correct", cfg.confidence_correct},
        {"confidence_error", cfg.confidence_error},
        {"confidence_sd", cfg.confidence_sd},
        {"nbest", cfg.nbest}}}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw InputError("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace finemerge
