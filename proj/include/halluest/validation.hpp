#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "halluest/error.hpp"
#include "halluest/estimator.hpp"
#include "halluest/labeling.hpp"
#include "halluest/metrics.hpp"
#include "halluest/synth.hpp"
#include "halluest/types.hpp"
#include "halluest/utf8.hpp"

// Ground-truth experiments: synthesize a corpus with a known token
// hallucination rate, run a simulated detector, measure P/R on a labeled
// split and check that the corrected estimate recovers the true rate.

namespace halluest::validation {

namespace lexicon {

inline constexpr std::array<std::string_view, 12> kPlaces = {
    "Argentina", "Portugal", "Norway",  "Kenya",   "Peru",  "Vietnam",
    "Morocco",   "Finland",  "Chile",   "Ireland", "Nepal", "Uruguay"};
inline constexpr std::array<std::string_view, 12> kNames = {
    "Alvarez", "Okafor", "Lindqvist", "Moreau",  "Tanaka", "Kowalski",
    "Haddad",  "Ferreira", "Novak",   "Mbeki",   "Larsen", "Quispe"};
inline constexpr std::array<std::string_view, 10> kNouns = {
    "bridge", "library", "cathedral", "museum", "harbor",
    "school", "theater", "railway",   "market", "observatory"};
inline constexpr std::array<std::string_view, 8> kAdjectives = {
    "old", "famous", "restored", "modest", "northern", "central", "wooden", "public"};

// Every template holds at least one place or name (ENT sites) and most hold
// a negatable verb (REL sites).
inline constexpr std::array<std::string_view, 6> kSentences = {
    "The {noun} of {place} was built by {name} in {year}.",
    "{name} is known for the {adj} {noun} near {place}.",
    "In {year} the council of {place} approved a new {noun}.",
    "{name} was born in {place} and later moved to {place2}.",
    "Records show that the {adj} {noun} has {num} rooms.",
    "Visitors from {place} can reach the {noun} by train.",
};

}  // namespace lexicon

struct CorpusSpec {
  std::size_t n_docs = 500;
  std::size_t tokens_per_doc = 200;
  double target_rate = 0.12;  // fraction of hallucinated tokens
  std::uint64_t seed = 42;
  std::string language = "en";
  std::string id_prefix = "doc";
};

struct SynthDocument {
  std::string id;
  std::string language;
  std::string reference;
  AnnotatedText answer;
};

namespace detail {

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& arr, synth::Rng& rng) {
  return arr[rng.index(N)];
}

inline std::string replace_all(std::string s, std::string_view key, std::string_view value) {
  for (auto at = s.find(key); at != std::string::npos; at = s.find(key, at + value.size())) {
    s.replace(at, key.size(), value);
  }
  return s;
}

inline std::string clean_sentence(synth::Rng& rng) {
  std::string s(pick(lexicon::kSentences, rng));
  s = replace_all(s, "{noun}", pick(lexicon::kNouns, rng));
  s = replace_all(s, "{adj}", pick(lexicon::kAdjectives, rng));
  s = replace_all(s, "{place2}", pick(lexicon::kPlaces, rng));
  s = replace_all(s, "{place}", pick(lexicon::kPlaces, rng));
  s = replace_all(s, "{name}", pick(lexicon::kNames, rng));
  s = replace_all(s, "{year}", std::to_string(1700 + rng.index(320)));
  s = replace_all(s, "{num}", std::to_string(3 + rng.index(90)));
  return s;
}

inline std::size_t count_tokens(std::string_view s) {
  return labeling::tokenize(s, labeling::TokenizerMode::Whitespace).size();
}

}  // namespace detail

/// Gazetteer swapping every place/name for a different one of the same kind.
inline synth::Lexicon default_gazetteer() {
  synth::Lexicon g;
  for (std::size_t i = 0; i < lexicon::kPlaces.size(); ++i) {
    g.emplace_back(lexicon::kPlaces[i], lexicon::kPlaces[(i + 5) % lexicon::kPlaces.size()]);
  }
  for (std::size_t i = 0; i < lexicon::kNames.size(); ++i) {
    g.emplace_back(lexicon::kNames[i], lexicon::kNames[(i + 7) % lexicon::kNames.size()]);
  }
  return g;
}

/// Builds one document whose whitespace-token hallucination count equals
/// round(target_rate * total tokens). Template sentences are inserted while
/// they fit; single-token ENT/REL substitutions fill the remainder.
inline SynthDocument synthesize_document(const CorpusSpec& spec, std::size_t index) {
  const std::string id = spec.id_prefix + "-" + std::to_string(index);
  synth::Rng rng(spec.seed, id);
  const double q = spec.target_rate;
  if (!(q >= 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidParams, "target rate must be in [0,1)");

  const auto clean_goal = static_cast<std::size_t>(
      std::lround(static_cast<double>(spec.tokens_per_doc) * (1.0 - q)));
  std::string clean;
  std::size_t clean_tokens = 0;
  while (clean_tokens < std::max<std::size_t>(clean_goal, 1)) {
    const auto s = detail::clean_sentence(rng);
    if (!clean.empty()) clean.push_back(' ');
    clean += s;
    clean_tokens += detail::count_tokens(s);
  }

  const std::u32string text = utf8::decode(clean);
  const auto templates = synth::default_templates();
  const auto ref_sentences = synth::split_sentences(text);
  const auto boundaries = synth::sentence_boundaries(text);
  constexpr std::array<HallucinationType, 4> kSentenceTypes = {
      HallucinationType::INV, HallucinationType::UNV, HallucinationType::SUB,
      HallucinationType::CON};

  std::vector<synth::Edit> edits;
  std::size_t inserted = 0;
  for (int attempts = 0; attempts < 64; ++attempts) {
    const auto type = kSentenceTypes[rng.index(kSentenceTypes.size())];
    const auto& pool = templates.at(type);
    std::u32string sentence;
    if (type == HallucinationType::CON) {
      sentence = synth::detail::fill_claim(pool[rng.index(pool.size())],
                                           ref_sentences[rng.index(ref_sentences.size())]);
    } else {
      sentence = utf8::decode(pool[rng.index(pool.size())]);
    }
    const std::size_t len = detail::count_tokens(utf8::encode(sentence));
    const double total = static_cast<double>(clean_tokens + inserted + len);
    if (static_cast<double>(inserted + len) > q * total) break;
    const std::size_t at = type == HallucinationType::CON ? text.size()
                                                          : boundaries[rng.index(boundaries.size())];
    edits.push_back({at, 0, std::move(sentence), type, edits.size()});
    inserted += len;
  }

  const auto total = static_cast<double>(clean_tokens + inserted);
  const auto goal = static_cast<std::size_t>(std::lround(q * total));
  const std::size_t fill = goal > inserted ? goal - inserted : 0;
  std::vector<char> used(text.size(), 0);
  synth::InjectionReport report;
  const std::size_t ent = fill - fill / 3;
  synth::detail::choose_substitutions(text, default_gazetteer(), HallucinationType::ENT, ent, rng,
                                      edits, used, report);
  const std::size_t got_ent = report.emitted[0];
  synth::detail::choose_substitutions(text, synth::default_negations(), HallucinationType::REL,
                                      fill - got_ent, rng, edits, used, report);

  SynthDocument doc;
  doc.id = id;
  doc.language = spec.language;
  doc.reference = clean;
  doc.answer = synth::apply_edits(text, std::move(edits));
  return doc;
}

inline std::vector<SynthDocument> synthesize_corpus(const CorpusSpec& spec) {
  std::vector<SynthDocument> out;
  out.reserve(spec.n_docs);
  for (std::size_t i = 0; i < spec.n_docs; ++i) out.push_back(synthesize_document(spec, i));
  return out;
}

/// Gold binary labels for every document.
inline std::vector<labeling::TokenLabels> gold_labels(
    const std::vector<SynthDocument>& docs,
    labeling::TokenizerMode mode = labeling::TokenizerMode::Whitespace) {
  std::vector<labeling::TokenLabels> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    out.push_back(labeling::project_labels(d.answer, labeling::tokenize(d.answer.text, mode),
                                           Task::Binary));
  }
  return out;
}

/// Fraction (percent) of positive tokens, i.e. the true hallucination rate.
inline double true_rate_percent(const std::vector<labeling::TokenLabels>& gold) {
  const auto c = estimator::count_detections(gold);
  return 100.0 * static_cast<double>(c.h_det) / static_cast<double>(c.n);
}

struct RecoveryConfig {
  double q = 0.12;
  double fp = 0.05;
  double fn = 0.25;
  std::size_t n_docs = 500;
  std::size_t tokens_per_doc = 200;
  std::size_t silver_docs = 100;
  std::uint64_t corpus_seed = 42;
  std::uint64_t detector_seed = 42;
};

struct RecoveryResult {
  double true_rate = 0.0;  // realized on the estimation split, percent
  double precision = 0.0;
  double recall = 0.0;
  std::uint64_t h_det = 0;
  std::uint64_t n = 0;
  double hr_est = 0.0;
  double naive = 0.0;
  double abs_error = 0.0;        // |hr_est - 100 q|
  double naive_abs_error = 0.0;  // |naive - 100 q|
};

/// Measures P/R on the first `silver_docs` documents and applies the
/// correction to the rest.
inline RecoveryResult run_recovery(const RecoveryConfig& cfg) {
  if (cfg.silver_docs == 0 || cfg.silver_docs >= cfg.n_docs) {
    throw Error(ErrorKind::InvalidParams, "silver split must be non-empty and leave documents");
  }
  CorpusSpec spec;
  spec.n_docs = cfg.n_docs;
  spec.tokens_per_doc = cfg.tokens_per_doc;
  spec.target_rate = cfg.q;
  spec.seed = cfg.corpus_seed;
  const auto docs = synthesize_corpus(spec);
  const auto gold = gold_labels(docs);
  const synth::NoiseSpec noise{cfg.fp, cfg.fn, cfg.detector_seed};

  std::vector<labeling::TokenLabels> pred;
  pred.reserve(gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    pred.push_back(synth::simulate_detector(gold[i], noise, docs[i].id));
  }
  const auto split = static_cast<std::ptrdiff_t>(cfg.silver_docs);
  const std::vector<labeling::TokenLabels> silver_gold(gold.begin(), gold.begin() + split);
  const std::vector<labeling::TokenLabels> silver_pred(pred.begin(), pred.begin() + split);
  const std::vector<labeling::TokenLabels> est_gold(gold.begin() + split, gold.end());
  const std::vector<labeling::TokenLabels> est_pred(pred.begin() + split, pred.end());

  const auto score = metrics::score_corpus(silver_gold, silver_pred, Task::Binary);
  const auto counts = estimator::count_detections(est_pred);
  const auto rate = estimator::estimate_rate(score.precision, score.recall, counts.h_det, counts.n);

  RecoveryResult r;
  r.true_rate = true_rate_percent(est_gold);
  r.precision = score.precision;
  r.recall = score.recall;
  r.h_det = counts.h_det;
  r.n = counts.n;
  r.hr_est = rate.hr_est;
  r.naive = rate.naive;
  r.abs_error = std::fabs(rate.hr_est - 100.0 * cfg.q);
  r.naive_abs_error = std::fabs(rate.naive - 100.0 * cfg.q);
  return r;
}

/// One simulated generating model for the aggregation protocol.
struct SimulatedModel {
  std::string model_id;
  double q = 0.1;
};

struct ProtocolConfig {
  std::vector<std::string> languages = {"en"};
  std::vector<SimulatedModel> models = {{"model-a", 0.1}};
  std::vector<std::int64_t> generation_seeds = {42, 43, 44, 47, 49};
  std::vector<std::uint64_t> detector_seeds = {1, 2, 3};
  double fp = 0.05;
  double fn = 0.25;
  std::size_t n_docs = 120;
  std::size_t silver_docs = 40;
  std::size_t tokens_per_doc = 200;
};

struct ProtocolOutput {
  std::vector<estimator::DetectorPerformance> performance;
  std::vector<estimator::DetectionRun> runs;
  estimator::EstimationOutput estimation;
};

/// Detector instances × generation seeds per (language, model) cell. Each
/// detector instance gets its own P/R from a silver corpus per language.
inline ProtocolOutput run_protocol(const ProtocolConfig& cfg) {
  ProtocolOutput out;
  for (const auto& lang : cfg.languages) {
    CorpusSpec silver_spec;
    silver_spec.n_docs = cfg.silver_docs;
    silver_spec.tokens_per_doc = cfg.tokens_per_doc;
    silver_spec.target_rate = 0.12;
    silver_spec.seed = synth::derive_seed(0x5EED, lang + "/silver");
    silver_spec.language = lang;
    silver_spec.id_prefix = lang + "-silver";
    const auto silver_docs = synthesize_corpus(silver_spec);
    const auto silver_gold = gold_labels(silver_docs);
    for (const auto det_seed : cfg.detector_seeds) {
      const std::string instance = "hd-" + std::to_string(det_seed);
      std::vector<labeling::TokenLabels> pred;
      for (std::size_t i = 0; i < silver_gold.size(); ++i) {
        pred.push_back(synth::simulate_detector(silver_gold[i], {cfg.fp, cfg.fn, det_seed},
                                                silver_docs[i].id));
      }
      const auto s = metrics::score_corpus(silver_gold, pred, Task::Binary);
      out.performance.push_back({lang, s.precision, s.recall, "silver", Task::Binary, instance});
    }
    for (const auto& model : cfg.models) {
      for (const auto gen_seed : cfg.generation_seeds) {
        CorpusSpec spec;
        spec.n_docs = cfg.n_docs;
        spec.tokens_per_doc = cfg.tokens_per_doc;
        spec.target_rate = model.q;
        spec.seed = static_cast<std::uint64_t>(gen_seed);
        spec.language = lang;
        spec.id_prefix = lang + "-" + model.model_id;
        const auto docs = synthesize_corpus(spec);
        const auto gold = gold_labels(docs);
        for (const auto det_seed : cfg.detector_seeds) {
          std::vector<labeling::TokenLabels> pred;
          pred.reserve(gold.size());
          for (std::size_t i = 0; i < gold.size(); ++i) {
            pred.push_back(synth::simulate_detector(gold[i], {cfg.fp, cfg.fn, det_seed},
                                                    docs[i].id));
          }
          const auto c = estimator::count_detections(pred);
          out.runs.push_back({lang, model.model_id, gen_seed, "hd-" + std::to_string(det_seed),
                              c.h_det, c.n});
        }
      }
    }
  }
  out.estimation =
      estimator::estimate_from_runs(out.runs, estimator::PerformanceTable(out.performance));
  return out;
}

}  // namespace halluest::validation
