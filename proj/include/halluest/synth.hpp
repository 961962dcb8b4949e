#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "halluest/error.hpp"
#include "halluest/labeling.hpp"
#include "halluest/types.hpp"
#include "halluest/utf8.hpp"

namespace halluest::synth {

// ---------------------------------------------------------------------------
// Random streams. Seeds are derived per document from (seed, doc id), so the
// draws for one document never depend on processing order.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream_id) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char c : stream_id) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return splitmix64(splitmix64(seed) ^ h);
}

/// xoshiro256** with fixed output-to-double mapping, so streams are identical
/// on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    for (auto& s : state_) {
      seed = splitmix64(seed);
      s = seed;
    }
  }
  Rng(std::uint64_t seed, std::string_view stream_id) : Rng(derive_seed(seed, stream_id)) {}

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  /// Standard normal via Box-Muller.
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> state_{};
};

/// floor(mean) plus one more with probability frac(mean); expectation == mean.
inline std::size_t stochastic_round(double mean, Rng& rng) {
  const double fl = std::floor(mean);
  return static_cast<std::size_t>(fl) + (rng.bernoulli(mean - fl) ? 1 : 0);
}

// ---------------------------------------------------------------------------
// Injection plans

using Lexicon = std::vector<std::pair<std::string, std::string>>;

struct InjectionPlan {
  std::array<double, 6> intensity{};  // expected spans per document, by HallucinationType
  Lexicon gazetteer;                  // ENT: surface -> replacement
  Lexicon negations;                  // REL: verb -> negated verb
  std::map<HallucinationType, std::vector<std::string>> templates;  // INV, CON, UNV, SUB
  std::uint64_t seed = 42;

  double& operator[](HallucinationType t) { return intensity[static_cast<std::size_t>(t)]; }
  double operator[](HallucinationType t) const { return intensity[static_cast<std::size_t>(t)]; }
};

inline void validate_plan(const InjectionPlan& plan) {
  for (double v : plan.intensity) {
    if (!(v >= 0.0) || std::isinf(v)) throw Error(ErrorKind::InvalidParams, "intensity must be >= 0");
  }
  for (const auto& [surface, replacement] : plan.gazetteer) {
    if (surface.empty() || surface == replacement) {
      throw Error(ErrorKind::InvalidParams, "gazetteer entry '" + surface + "' is degenerate");
    }
  }
  for (const auto& [surface, replacement] : plan.negations) {
    if (surface.empty() || surface == replacement) {
      throw Error(ErrorKind::InvalidParams, "negation entry '" + surface + "' is degenerate");
    }
  }
}

inline Lexicon default_negations() {
  return {{"is", "isn't"},     {"was", "wasn't"},   {"are", "aren't"},  {"were", "weren't"},
          {"has", "hasn't"},   {"have", "haven't"}, {"can", "can't"},   {"did", "didn't"},
          {"does", "doesn't"}, {"will", "won't"}};
}

/// CON templates take the contradicted reference sentence as {claim}.
inline std::map<HallucinationType, std::vector<std::string>> default_templates() {
  return {
      {HallucinationType::SUB,
       {"It is widely regarded as the most beautiful example of its kind.",
        "Most visitors agree that it is the finest achievement of the era.",
        "It is arguably the most overrated landmark in the region."}},
      {HallucinationType::UNV,
       {"According to unpublished family letters, the work was secretly funded by a foreign prince.",
        "Some sources claim that the original plans were lost in a fire.",
        "Rumors suggest that a second version was hidden in a private collection."}},
      {HallucinationType::INV,
       {"It also hosts the annual Velmoran Festival of Harmonic Lanterns.",
        "The site is protected by the Ordrevian Heritage Accord of 1743.",
        "Scholars refer to this period as the Quintessal Revival."}},
      {HallucinationType::CON,
       {"It is not true that {claim}.", "Contrary to common accounts, it never happened that {claim}."}},
  };
}

/// Reads "surface<TAB>replacement" lines; blank lines and '#' comments are skipped.
inline Lexicon load_lexicon_tsv(std::istream& in) {
  Lexicon out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw Error(ErrorKind::SchemaViolation, "expected surface<TAB>replacement", lineno);
    }
    out.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  return out;
}

/// One template per line.
inline std::vector<std::string> load_templates(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Edit machinery

struct Edit {
  std::size_t pos = 0;  // scalar offset into the original text
  std::size_t len = 0;  // replaced scalars; 0 for a sentence insertion
  std::u32string replacement;
  HallucinationType type = HallucinationType::ENT;
  std::size_t order = 0;
};

/// Applies non-overlapping edits and returns the edited text with one span
/// per edit. Insertions are preceded by a single space that stays outside
/// the span.
inline AnnotatedText apply_edits(std::u32string_view text, std::vector<Edit> edits) {
  std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) {
    if (a.pos != b.pos) return a.pos < b.pos;
    if ((a.len == 0) != (b.len == 0)) return a.len == 0;
    return a.order < b.order;
  });
  std::u32string out;
  out.reserve(text.size() + 64 * edits.size());
  std::vector<Span> spans;
  std::size_t cursor = 0;
  for (const auto& e : edits) {
    if (e.pos < cursor || e.pos + e.len > text.size()) {
      throw Error(ErrorKind::InvalidSpans, "overlapping or out-of-range edit");
    }
    out.append(text.substr(cursor, e.pos - cursor));
    if (e.len == 0) out.push_back(U' ');
    const std::size_t start = out.size();
    out.append(e.replacement);
    spans.push_back({start, out.size(), e.type});
    cursor = e.pos + e.len;
  }
  out.append(text.substr(cursor));
  return {utf8::encode(out), std::move(spans)};
}

inline bool is_word_boundary(std::u32string_view s, std::size_t pos) {
  if (pos == 0 || pos >= s.size()) return true;
  return utf8::is_space(s[pos]) || utf8::is_edge_punct(s[pos]);
}

/// Whole-word occurrences of `needle` in `hay`.
inline std::vector<std::size_t> find_words(std::u32string_view hay, std::u32string_view needle) {
  std::vector<std::size_t> out;
  if (needle.empty()) return out;
  for (std::size_t p = hay.find(needle); p != std::u32string_view::npos;
       p = hay.find(needle, p + 1)) {
    const bool left = p == 0 || is_word_boundary(hay, p - 1);
    const bool right = p + needle.size() == hay.size() || is_word_boundary(hay, p + needle.size());
    if (left && right) out.push_back(p);
  }
  return out;
}

inline bool is_terminator(char32_t c) {
  return c == U'.' || c == U'!' || c == U'?' || c == 0x3002 || c == 0xFF01 || c == 0xFF1F;
}

/// Offsets just past each sentence terminator that is followed by whitespace
/// or the end of text; the end of text is always included.
inline std::vector<std::size_t> sentence_boundaries(std::u32string_view text) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (is_terminator(text[i]) && (i + 1 == text.size() || utf8::is_space(text[i + 1]))) {
      out.push_back(i + 1);
    }
  }
  if (out.empty() || out.back() != text.size()) out.push_back(text.size());
  return out;
}

inline std::vector<std::u32string> split_sentences(std::u32string_view text) {
  std::vector<std::u32string> out;
  std::size_t start = 0;
  for (std::size_t b : sentence_boundaries(text)) {
    std::size_t s = start;
    while (s < b && utf8::is_space(text[s])) ++s;
    if (s < b) out.emplace_back(text.substr(s, b - s));
    start = b;
  }
  return out;
}

struct SourceDocument {
  std::string id;
  std::string language;
  std::string text;       // clean answer to corrupt
  std::string reference;  // supporting reference text
};

struct InjectionReport {
  std::array<std::size_t, 6> requested{};
  std::array<std::size_t, 6> emitted{};
  std::vector<std::string> notes;  // NoApplicableSite messages
};

struct InjectionResult {
  AnnotatedText doc;
  InjectionReport report;
};

namespace detail {

inline void choose_substitutions(std::u32string_view text, const Lexicon& lexicon,
                                 HallucinationType type, std::size_t wanted, Rng& rng,
                                 std::vector<Edit>& edits, std::vector<char>& used,
                                 InjectionReport& report) {
  if (wanted == 0) return;
  struct Site {
    std::size_t pos;
    std::size_t len;
    std::size_t entry;
  };
  std::vector<Site> sites;
  std::vector<std::u32string> replacements;
  for (std::size_t k = 0; k < lexicon.size(); ++k) {
    const auto surface = utf8::decode(lexicon[k].first);
    replacements.push_back(utf8::decode(lexicon[k].second));
    for (std::size_t p : find_words(text, surface)) sites.push_back({p, surface.size(), k});
  }
  rng.shuffle(sites);
  std::size_t emitted = 0;
  for (const auto& s : sites) {
    if (emitted == wanted) break;
    if (std::any_of(used.begin() + static_cast<std::ptrdiff_t>(s.pos),
                    used.begin() + static_cast<std::ptrdiff_t>(s.pos + s.len),
                    [](char c) { return c != 0; })) {
      continue;
    }
    std::fill(used.begin() + static_cast<std::ptrdiff_t>(s.pos),
              used.begin() + static_cast<std::ptrdiff_t>(s.pos + s.len), 1);
    edits.push_back({s.pos, s.len, replacements[s.entry], type, edits.size()});
    ++emitted;
  }
  report.emitted[static_cast<std::size_t>(type)] += emitted;
  if (emitted < wanted) {
    report.notes.push_back("NoApplicableSite: " + std::string(code(type)) + " requested " +
                           std::to_string(wanted) + ", emitted " + std::to_string(emitted));
  }
}

inline std::u32string fill_claim(const std::string& tmpl, std::u32string claim) {
  while (!claim.empty() && (is_terminator(claim.back()) || utf8::is_space(claim.back()))) {
    claim.pop_back();
  }
  auto t = utf8::decode(tmpl);
  const std::u32string key = U"{claim}";
  const auto at = t.find(key);
  if (at != std::u32string::npos) t.replace(at, key.size(), claim);
  return t;
}

}  // namespace detail

/// Rule-based hallucination injection. Deterministic in (doc.id, plan.seed).
/// ENT/REL substitute whole words from the gazetteer / negation table; INV,
/// UNV and SUB insert template sentences at sentence boundaries; CON appends
/// a template sentence negating a sampled reference sentence.
inline InjectionResult inject(const SourceDocument& doc, const InjectionPlan& plan) {
  validate_plan(plan);
  if (doc.text.empty()) throw Error(ErrorKind::InvalidParams, "document '" + doc.id + "' is empty");
  const std::u32string text = utf8::decode(doc.text);
  Rng rng(plan.seed, doc.id);
  InjectionResult result;
  auto& report = result.report;
  for (auto t : kAllTypes) {
    report.requested[static_cast<std::size_t>(t)] = stochastic_round(plan[t], rng);
  }
  auto wanted = [&](HallucinationType t) { return report.requested[static_cast<std::size_t>(t)]; };

  std::vector<Edit> edits;
  std::vector<char> used(text.size(), 0);
  detail::choose_substitutions(text, plan.gazetteer, HallucinationType::ENT,
                               wanted(HallucinationType::ENT), rng, edits, used, report);
  detail::choose_substitutions(text, plan.negations, HallucinationType::REL,
                               wanted(HallucinationType::REL), rng, edits, used, report);

  const auto boundaries = sentence_boundaries(text);
  for (auto t : {HallucinationType::INV, HallucinationType::UNV, HallucinationType::SUB}) {
    const std::size_t k = wanted(t);
    if (k == 0) continue;
    const auto it = plan.templates.find(t);
    if (it == plan.templates.end() || it->second.empty()) {
      report.notes.push_back("NoApplicableSite: no templates for " + std::string(code(t)));
      continue;
    }
    for (std::size_t i = 0; i < k; ++i) {
      const auto& tmpl = it->second[rng.index(it->second.size())];
      const std::size_t at = boundaries[rng.index(boundaries.size())];
      edits.push_back({at, 0, utf8::decode(tmpl), t, edits.size()});
    }
    report.emitted[static_cast<std::size_t>(t)] += k;
  }

  if (const std::size_t k = wanted(HallucinationType::CON); k > 0) {
    const auto ref_sentences = split_sentences(utf8::decode(doc.reference));
    const auto it = plan.templates.find(HallucinationType::CON);
    if (ref_sentences.empty() || it == plan.templates.end() || it->second.empty()) {
      report.notes.push_back("NoApplicableSite: CON needs reference sentences and templates");
    } else {
      for (std::size_t i = 0; i < k; ++i) {
        const auto& tmpl = it->second[rng.index(it->second.size())];
        const auto& claim = ref_sentences[rng.index(ref_sentences.size())];
        edits.push_back({text.size(), 0, detail::fill_claim(tmpl, claim), HallucinationType::CON,
                         edits.size()});
      }
      report.emitted[static_cast<std::size_t>(HallucinationType::CON)] += k;
    }
  }

  result.doc = apply_edits(text, std::move(edits));
  return result;
}

// ---------------------------------------------------------------------------
// Detector simulation

struct NoiseSpec {
  double fp_rate = 0.0;  // P(flag | truly O)
  double fn_rate = 0.0;  // P(miss | truly hallucinated)
  std::uint64_t seed = 42;
};

/// Flips gold labels independently per token; output is binary (O/H). The
/// stream for a document depends only on (noise.seed, doc_id).
inline labeling::TokenLabels simulate_detector(const labeling::TokenLabels& gold,
                                               const NoiseSpec& noise, std::string_view doc_id) {
  if (!(noise.fp_rate >= 0.0 && noise.fp_rate <= 1.0 && noise.fn_rate >= 0.0 &&
        noise.fn_rate <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "noise rates must lie in [0,1]");
  }
  Rng rng(noise.seed, doc_id);
  labeling::TokenLabels out;
  out.tokens = gold.tokens;
  out.task = Task::Binary;
  out.labels.reserve(gold.labels.size());
  for (Label g : gold.labels) {
    const double u = rng.uniform();
    if (is_positive(g)) out.labels.push_back(u < noise.fn_rate ? Label::O : Label::H);
    else out.labels.push_back(u < noise.fp_rate ? Label::H : Label::O);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference-overlap baseline detector

struct BaselineConfig {
  std::size_t min_token_len = 3;
  std::size_t smoothing_window = 1;  // odd; even values widen to the next odd size
};

/// Casefolded token with edge punctuation removed.
inline std::u32string normalize_token(std::u32string_view tok) {
  std::size_t a = 0, b = tok.size();
  while (a < b && utf8::is_edge_punct(tok[a])) ++a;
  while (b > a && utf8::is_edge_punct(tok[b - 1])) --b;
  return utf8::fold(tok.substr(a, b - a));
}

struct U32Hash {
  std::size_t operator()(const std::u32string& s) const noexcept {
    return std::hash<std::u32string>{}(s);
  }
};

/// Flags answer tokens whose normalized form never occurs in the reference,
/// smoothed by a centered majority vote. Tokens shorter than min_token_len
/// are never flagged.
inline labeling::TokenLabels baseline_detect(std::string_view reference, std::string_view answer,
                                             const BaselineConfig& cfg = {}) {
  if (reference.empty() || answer.empty()) {
    throw Error(ErrorKind::InvalidParams, "baseline detector needs non-empty texts");
  }
  std::unordered_set<std::u32string, U32Hash> vocab;
  const auto ref = utf8::decode(reference);
  for (const auto& t : labeling::tokenize(std::u32string_view(ref), labeling::TokenizerMode::Whitespace)) {
    vocab.insert(normalize_token(std::u32string_view(ref).substr(t.start, t.end - t.start)));
  }
  const auto ans = utf8::decode(answer);
  labeling::TokenLabels out;
  out.task = Task::Binary;
  out.tokens = labeling::tokenize(std::u32string_view(ans), labeling::TokenizerMode::Whitespace);
  const std::size_t n = out.tokens.size();
  std::vector<char> raw(n, 0), eligible(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto norm = normalize_token(
        std::u32string_view(ans).substr(out.tokens[i].start, out.tokens[i].end - out.tokens[i].start));
    eligible[i] = norm.size() >= cfg.min_token_len;
    raw[i] = eligible[i] && !vocab.count(norm);
  }
  const std::size_t half = std::max<std::size_t>(cfg.smoothing_window, 1) / 2;
  out.labels.assign(n, Label::O);
  for (std::size_t i = 0; i < n; ++i) {
    if (!eligible[i]) continue;
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    std::size_t votes = 0;
    for (std::size_t j = lo; j < hi; ++j) votes += raw[j];
    if (2 * votes > hi - lo) out.labels[i] = Label::H;
  }
  return out;
}

}  // namespace halluest::synth
