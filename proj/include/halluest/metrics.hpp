#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "halluest/error.hpp"
#include "halluest/labeling.hpp"
#include "halluest/types.hpp"

namespace halluest::metrics {

using labeling::TokenLabels;

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
  // Category task only: per-class counts keyed by label.
  std::map<Label, std::array<std::size_t, 3>> per_class;  // {tp, fp, fn}

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    for (const auto& [k, v] : o.per_class) {
      auto& mine = per_class[k];
      for (std::size_t i = 0; i < 3; ++i) mine[i] += v[i];
    }
    return *this;
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct ScoreReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
  Task task = Task::Binary;
};

inline void require_same_stream(const TokenLabels& a, const TokenLabels& b) {
  if (a.tokens.size() != b.tokens.size() || a.labels.size() != a.tokens.size() ||
      b.labels.size() != b.tokens.size()) {
    throw Error(ErrorKind::TokenMismatch, "token streams differ in length");
  }
  for (std::size_t i = 0; i < a.tokens.size(); ++i) {
    if (a.tokens[i].start != b.tokens[i].start || a.tokens[i].end != b.tokens[i].end) {
      throw Error(ErrorKind::TokenMismatch, "token offsets differ at index " + std::to_string(i));
    }
  }
}

inline double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

inline ScoreReport report_from_counts(ConfusionCounts c, Task task) {
  ScoreReport r;
  r.precision = safe_ratio(c.tp, c.tp + c.fp);
  r.recall = safe_ratio(c.tp, c.tp + c.fn);
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  r.counts = std::move(c);
  r.task = task;
  return r;
}

/// Raw token counts. Binary: positive means any non-O label. Category: a
/// positive prediction with the wrong class is one FP and one FN.
inline ConfusionCounts count_confusion(const TokenLabels& gold, const TokenLabels& pred,
                                       Task task) {
  require_same_stream(gold, pred);
  ConfusionCounts c;
  for (std::size_t i = 0; i < gold.labels.size(); ++i) {
    const Label g = gold.labels[i];
    const Label p = pred.labels[i];
    const bool gp = is_positive(g);
    const bool pp = is_positive(p);
    if (task == Task::Binary) {
      if (gp && pp) ++c.tp;
      else if (pp) ++c.fp;
      else if (gp) ++c.fn;
      else ++c.tn;
      continue;
    }
    if (!gp && !pp) {
      ++c.tn;
    } else if (gp && pp && g == p) {
      ++c.tp;
      ++c.per_class[g][0];
    } else {
      if (pp) {
        ++c.fp;
        ++c.per_class[p][1];
      }
      if (gp) {
        ++c.fn;
        ++c.per_class[g][2];
      }
    }
  }
  return c;
}

/// Token-level precision/recall/F1; category scores are micro-averaged over
/// the hallucination classes with O excluded.
inline ScoreReport score_tokens(const TokenLabels& gold, const TokenLabels& pred, Task task) {
  return report_from_counts(count_confusion(gold, pred, task), task);
}

/// Corpus-level score: counts summed over aligned document pairs.
inline ScoreReport score_corpus(const std::vector<TokenLabels>& gold,
                                const std::vector<TokenLabels>& pred, Task task) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorKind::TokenMismatch, "document counts differ");
  }
  ConfusionCounts total;
  for (std::size_t d = 0; d < gold.size(); ++d) total += count_confusion(gold[d], pred[d], task);
  return report_from_counts(std::move(total), task);
}

struct AgreementResult {
  double kappa = 0.0;
  double observed = 0.0;  // p_o
  double expected = 0.0;  // p_e
  Task mode = Task::Category;
};

namespace detail {

inline AgreementResult kappa_from_labels(const std::vector<Label>& a, const std::vector<Label>& b,
                                         Task mode) {
  if (a.empty()) throw Error(ErrorKind::EmptyInput, "kappa over zero tokens");
  constexpr std::size_t kLabels = 8;
  std::array<std::size_t, kLabels> ca{};
  std::array<std::size_t, kLabels> cb{};
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Label la = mode == Task::Binary ? binarize(a[i]) : a[i];
    const Label lb = mode == Task::Binary ? binarize(b[i]) : b[i];
    ++ca[static_cast<std::size_t>(la)];
    ++cb[static_cast<std::size_t>(lb)];
    if (la == lb) ++agree;
  }
  const double n = static_cast<double>(a.size());
  AgreementResult r;
  r.mode = mode;
  r.observed = static_cast<double>(agree) / n;
  for (std::size_t k = 0; k < kLabels; ++k) {
    r.expected += (static_cast<double>(ca[k]) / n) * (static_cast<double>(cb[k]) / n);
  }
  // p_e == 1 only when both raters use one identical label throughout.
  if (ca == cb && std::count(ca.begin(), ca.end(), a.size()) == 1) {
    r.expected = 1.0;
    r.kappa = r.observed == 1.0 ? 1.0 : 0.0;
  } else {
    r.kappa = (r.observed - r.expected) / (1.0 - r.expected);
  }
  return r;
}

inline std::vector<Label> concat_labels(const std::vector<TokenLabels>& docs) {
  std::vector<Label> out;
  for (const auto& d : docs) out.insert(out.end(), d.labels.begin(), d.labels.end());
  return out;
}

}  // namespace detail

/// Token-level Cohen's kappa. In binary mode labels are merged to O/H first.
inline AgreementResult cohen_kappa(const TokenLabels& a, const TokenLabels& b,
                                   Task mode = Task::Category) {
  require_same_stream(a, b);
  return detail::kappa_from_labels(a.labels, b.labels, mode);
}

/// Kappa over several documents, concatenating tokens first.
inline AgreementResult cohen_kappa(const std::vector<TokenLabels>& a,
                                   const std::vector<TokenLabels>& b, Task mode = Task::Category) {
  if (a.size() != b.size()) throw Error(ErrorKind::TokenMismatch, "document counts differ");
  for (std::size_t d = 0; d < a.size(); ++d) require_same_stream(a[d], b[d]);
  return detail::kappa_from_labels(detail::concat_labels(a), detail::concat_labels(b), mode);
}

struct PairKappa {
  std::size_t a = 0;
  std::size_t b = 0;
  double kappa = 0.0;
};

struct IaaResult {
  double mean_kappa = 0.0;
  std::vector<PairKappa> pairs;
};

/// Unweighted mean of kappa over all unordered annotator pairs. Each
/// annotator supplies one labeling per document.
inline IaaResult pairwise_iaa(const std::vector<std::vector<TokenLabels>>& annotators,
                              Task mode = Task::Category) {
  if (annotators.size() < 2) throw Error(ErrorKind::EmptyInput, "need at least two annotators");
  IaaResult out;
  double sum = 0.0;
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    for (std::size_t j = i + 1; j < annotators.size(); ++j) {
      const double k = cohen_kappa(annotators[i], annotators[j], mode).kappa;
      out.pairs.push_back({i, j, k});
      sum += k;
    }
  }
  out.mean_kappa = sum / static_cast<double>(out.pairs.size());
  return out;
}

inline IaaResult pairwise_iaa(const std::vector<TokenLabels>& single_doc,
                              Task mode = Task::Category) {
  std::vector<std::vector<TokenLabels>> wrapped;
  wrapped.reserve(single_doc.size());
  for (const auto& tl : single_doc) wrapped.push_back({tl});
  return pairwise_iaa(wrapped, mode);
}

struct AnnotatorAgreement {
  double kappa = 0.0;
  double observed = 0.0;
  bool flagged = false;
};

struct Adjudication {
  std::string chosen;
  std::map<std::string, AnnotatorAgreement> agreement;
};

/// Screens annotators on raw observed agreement with the silver labels
/// (p_o < threshold is flagged) and picks the unflagged annotator with the
/// highest kappa. Ties go to the lexicographically smallest id.
inline Adjudication adjudicate(const std::map<std::string, std::vector<TokenLabels>>& annotators,
                               const std::vector<TokenLabels>& silver, double screen_threshold,
                               Task mode = Task::Category) {
  if (!(screen_threshold >= 0.0 && screen_threshold <= 1.0)) {
    throw Error(ErrorKind::InvalidParams, "screen threshold must lie in [0,1]");
  }
  if (annotators.empty()) throw Error(ErrorKind::EmptyInput, "no annotators");
  Adjudication out;
  double best = -2.0;
  for (const auto& [id, labels] : annotators) {
    const auto r = cohen_kappa(labels, silver, mode);
    AnnotatorAgreement ag{r.kappa, r.observed, r.observed < screen_threshold};
    out.agreement[id] = ag;
    // std::map iterates ids in ascending order, so strict > keeps the smallest on ties.
    if (!ag.flagged && ag.kappa > best) {
      best = ag.kappa;
      out.chosen = id;
    }
  }
  if (out.chosen.empty()) {
    throw Error(ErrorKind::AllScreenedOut,
                "every annotator fell below the screening threshold");
  }
  return out;
}

inline Adjudication adjudicate(const std::map<std::string, TokenLabels>& annotators,
                               const TokenLabels& silver, double screen_threshold,
                               Task mode = Task::Category) {
  std::map<std::string, std::vector<TokenLabels>> wrapped;
  for (const auto& [id, tl] : annotators) wrapped[id] = {tl};
  return adjudicate(wrapped, {silver}, screen_threshold, mode);
}

/// Span counts per (language, type), shaped like a gold-data summary table.
struct SpanTable {
  std::map<std::string, std::array<std::size_t, 6>> rows;

  std::size_t row_total(const std::string& lang) const {
    const auto it = rows.find(lang);
    if (it == rows.end()) return 0;
    std::size_t s = 0;
    for (auto v : it->second) s += v;
    return s;
  }
  std::array<std::size_t, 6> column_totals() const {
    std::array<std::size_t, 6> out{};
    for (const auto& [lang, row] : rows) {
      for (std::size_t i = 0; i < 6; ++i) out[i] += row[i];
    }
    return out;
  }
  std::size_t grand_total() const {
    std::size_t s = 0;
    for (auto v : column_totals()) s += v;
    return s;
  }
  std::size_t count(const std::string& lang, HallucinationType t) const {
    const auto it = rows.find(lang);
    return it == rows.end() ? 0 : it->second[static_cast<std::size_t>(t)];
  }
};

inline SpanTable span_stats(const std::map<std::string, std::vector<AnnotatedText>>& by_language) {
  SpanTable table;
  for (const auto& [lang, docs] : by_language) {
    auto& row = table.rows[lang];
    for (const auto& d : docs) {
      for (const auto& s : d.spans) ++row[static_cast<std::size_t>(s.htype)];
    }
  }
  return table;
}

inline void write_span_table_csv(std::ostream& os, const SpanTable& t) {
  os << "language";
  for (auto ht : kAllTypes) os << ',' << code(ht);
  os << ",Total\n";
  for (const auto& [lang, row] : t.rows) {
    os << lang;
    for (auto v : row) os << ',' << v;
    os << ',' << t.row_total(lang) << '\n';
  }
  os << "Total";
  for (auto v : t.column_totals()) os << ',' << v;
  os << ',' << t.grand_total() << '\n';
}

inline constexpr std::array<const char*, 5> kLikertLevels = {
    "Very Unlikely", "Unlikely", "Neutral", "Likely", "Very Likely"};

/// Percentage of ratings at each Likert level 1..5.
inline std::array<double, 5> likert_distribution(const std::vector<int>& ratings) {
  if (ratings.empty()) throw Error(ErrorKind::EmptyInput, "no ratings");
  std::array<std::size_t, 5> counts{};
  for (int r : ratings) {
    if (r < 1 || r > 5) throw Error(ErrorKind::OutOfRange, "rating " + std::to_string(r));
    ++counts[static_cast<std::size_t>(r - 1)];
  }
  std::array<double, 5> out{};
  for (std::size_t i = 0; i < 5; ++i) {
    out[i] = 100.0 * static_cast<double>(counts[i]) / static_cast<double>(ratings.size());
  }
  return out;
}

inline std::string format_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

inline void write_likert_csv(std::ostream& os, const std::array<double, 5>& pct) {
  for (std::size_t i = 0; i < 5; ++i) os << (i ? "," : "") << kLikertLevels[i];
  os << '\n';
  for (std::size_t i = 0; i < 5; ++i) os << (i ? "," : "") << format_fixed(pct[i], 1);
  os << '\n';
}

struct ScoreRow {
  std::string language;
  Task task = Task::Binary;
  std::string source;
  ScoreReport report;
};

inline void write_scores_csv(std::ostream& os, const std::vector<ScoreRow>& rows) {
  os << "language,task,source,precision,recall,f1\n";
  for (const auto& r : rows) {
    os << r.language << ',' << to_string(r.task) << ',' << r.source << ','
       << format_fixed(r.report.precision, 6) << ',' << format_fixed(r.report.recall, 6) << ','
       << format_fixed(r.report.f1, 6) << '\n';
  }
}

}  // namespace halluest::metrics
