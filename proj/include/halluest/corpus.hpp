#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "halluest/error.hpp"
#include "halluest/estimator.hpp"
#include "halluest/labeling.hpp"
#include "halluest/synth.hpp"
#include "halluest/types.hpp"
#include "halluest/utf8.hpp"

// JSONL persistence. Each record type has a Schema<> specialization giving
// its name, canonical field order and validation. Writers emit one compact
// object per line with fields in that fixed order.

namespace halluest::corpus {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct ArticleRecord {
  std::string id;
  std::string language;
  std::string text;
  std::size_t char_len = 0;
  double depth = 0.0;
  friend bool operator==(const ArticleRecord&, const ArticleRecord&) = default;
};

inline ArticleRecord make_article(std::string id, std::string language, std::string text,
                                  double depth) {
  const auto len = utf8::length(text);
  return {std::move(id), std::move(language), std::move(text), len, depth};
}

struct QueryRecord {
  std::string id;
  std::string article_id;
  std::string language;
  std::string text;
  friend bool operator==(const QueryRecord&, const QueryRecord&) = default;
};

struct ResponseRecord {
  std::string id;
  std::string query_id;
  std::string model_id;
  std::int64_t seed = 0;
  std::optional<std::string> answer;
  std::optional<std::string> answer_markup;
  std::optional<std::vector<Label>> labels;
  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

/// Optional pipeline metadata carried from responses through labels to runs.
struct Provenance {
  std::optional<std::string> model_id;
  std::optional<std::int64_t> seed;
  std::optional<std::string> detector_instance;
  std::optional<std::string> annotator;
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct AnnotatedRecord {
  std::string id;
  std::string language;
  AnnotatedText doc;
  Provenance meta;
  friend bool operator==(const AnnotatedRecord&, const AnnotatedRecord&) = default;
};

struct LabelsRecord {
  std::string id;
  std::string language;
  labeling::TokenizerMode tokenizer = labeling::TokenizerMode::Whitespace;
  std::string text;
  labeling::TokenLabels labels;
  Provenance meta;
  friend bool operator==(const LabelsRecord&, const LabelsRecord&) = default;
};

using PerfRecord = estimator::DetectorPerformance;
using RunRecord = estimator::DetectionRun;
using RateRecord = estimator::RateEstimate;
using SourceRecord = synth::SourceDocument;

template <typename R>
struct Schema;

namespace detail {

[[noreturn]] inline void violation(const std::string& msg, std::size_t line) {
  throw Error(ErrorKind::SchemaViolation, msg, line);
}

inline const json& field(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) violation("missing field '" + std::string(key) + "'", line);
  return *it;
}

inline std::string get_string(const json& obj, const char* key, std::size_t line) {
  const auto& v = field(obj, key, line);
  if (!v.is_string()) violation("field '" + std::string(key) + "' must be a string", line);
  return v.get<std::string>();
}

inline std::optional<std::string> opt_string(const json& obj, const char* key, std::size_t line) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_string(obj, key, line);
}

inline std::int64_t get_int(const json& obj, const char* key, std::size_t line) {
  const auto& v = field(obj, key, line);
  if (!v.is_number_integer()) violation("field '" + std::string(key) + "' must be an integer", line);
  return v.get<std::int64_t>();
}

inline std::optional<std::int64_t> opt_int(const json& obj, const char* key, std::size_t line) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_int(obj, key, line);
}

inline std::uint64_t get_count(const json& obj, const char* key, std::size_t line) {
  const auto v = get_int(obj, key, line);
  if (v < 0) violation("field '" + std::string(key) + "' must be non-negative", line);
  return static_cast<std::uint64_t>(v);
}

inline double get_number(const json& obj, const char* key, std::size_t line) {
  const auto& v = field(obj, key, line);
  if (!v.is_number()) violation("field '" + std::string(key) + "' must be a number", line);
  return v.get<double>();
}

inline Label parse_label(const json& v, std::size_t line) {
  if (!v.is_string()) violation("labels must be strings", line);
  const auto l = label_from_string(v.get<std::string>());
  if (!l) violation("unknown label '" + v.get<std::string>() + "'", line);
  return *l;
}

inline std::vector<Label> get_labels(const json& obj, const char* key, std::size_t line) {
  const auto& arr = field(obj, key, line);
  if (!arr.is_array()) violation("field '" + std::string(key) + "' must be an array", line);
  std::vector<Label> out;
  out.reserve(arr.size());
  for (const auto& v : arr) out.push_back(parse_label(v, line));
  return out;
}

inline json labels_json(const std::vector<Label>& labels) {
  json arr = json::array();
  for (Label l : labels) arr.push_back(std::string(to_string(l)));
  return arr;
}

inline void put_meta(ordered_json& j, const Provenance& m) {
  if (m.model_id) j["model_id"] = *m.model_id;
  if (m.seed) j["seed"] = *m.seed;
  if (m.detector_instance) j["detector_instance"] = *m.detector_instance;
  if (m.annotator) j["annotator"] = *m.annotator;
}

inline Provenance get_meta(const json& j, std::size_t line) {
  return {opt_string(j, "model_id", line), opt_int(j, "seed", line),
          opt_string(j, "detector_instance", line), opt_string(j, "annotator", line)};
}

inline void require_utf8(const std::string& s, const char* key, std::size_t line) {
  try {
    (void)utf8::decode(s);
  } catch (const Error&) {
    violation("field '" + std::string(key) + "' is not valid UTF-8", line);
  }
}

}  // namespace detail

template <>
struct Schema<ArticleRecord> {
  static constexpr std::string_view name = "article";
  static ordered_json to_json(const ArticleRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["language"] = r.language;
    j["text"] = r.text;
    j["depth"] = r.depth;
    return j;
  }
  static ArticleRecord from_json(const json& j, std::size_t line) {
    ArticleRecord r;
    r.id = detail::get_string(j, "id", line);
    r.language = detail::get_string(j, "language", line);
    r.text = detail::get_string(j, "text", line);
    detail::require_utf8(r.text, "text", line);
    r.depth = detail::get_number(j, "depth", line);
    if (r.depth < 0.0) detail::violation("depth must be non-negative", line);
    r.char_len = utf8::length(r.text);
    if (j.contains("char_len") &&
        detail::get_int(j, "char_len", line) != static_cast<std::int64_t>(r.char_len)) {
      detail::violation("char_len disagrees with text length", line);
    }
    return r;
  }
};

template <>
struct Schema<QueryRecord> {
  static constexpr std::string_view name = "query";
  static ordered_json to_json(const QueryRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["article_id"] = r.article_id;
    j["language"] = r.language;
    j["text"] = r.text;
    return j;
  }
  static QueryRecord from_json(const json& j, std::size_t line) {
    return {detail::get_string(j, "id", line), detail::get_string(j, "article_id", line),
            detail::get_string(j, "language", line), detail::get_string(j, "text", line)};
  }
};

template <>
struct Schema<ResponseRecord> {
  static constexpr std::string_view name = "response";
  static ordered_json to_json(const ResponseRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["query_id"] = r.query_id;
    j["model_id"] = r.model_id;
    j["seed"] = r.seed;
    if (r.answer) j["answer"] = *r.answer;
    if (r.answer_markup) j["answer_markup"] = *r.answer_markup;
    if (r.labels) j["labels"] = detail::labels_json(*r.labels);
    return j;
  }
  static ResponseRecord from_json(const json& j, std::size_t line) {
    ResponseRecord r;
    r.id = detail::get_string(j, "id", line);
    r.query_id = detail::get_string(j, "query_id", line);
    r.model_id = detail::get_string(j, "model_id", line);
    r.seed = detail::get_int(j, "seed", line);
    r.answer = detail::opt_string(j, "answer", line);
    r.answer_markup = detail::opt_string(j, "answer_markup", line);
    if (r.answer.has_value() == r.answer_markup.has_value()) {
      detail::violation("exactly one of 'answer' and 'answer_markup' is required", line);
    }
    if (j.contains("labels")) r.labels = detail::get_labels(j, "labels", line);
    return r;
  }
};

template <>
struct Schema<AnnotatedRecord> {
  static constexpr std::string_view name = "annotated";
  static ordered_json to_json(const AnnotatedRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["language"] = r.language;
    j["answer_text"] = r.doc.text;
    json spans = json::array();
    for (const auto& s : r.doc.spans) {
      spans.push_back(json::array({s.start, s.end, std::string(code(s.htype))}));
    }
    j["spans"] = spans;
    detail::put_meta(j, r.meta);
    return j;
  }
  static AnnotatedRecord from_json(const json& j, std::size_t line) {
    AnnotatedRecord r;
    r.id = detail::get_string(j, "id", line);
    r.language = detail::get_string(j, "language", line);
    r.doc.text = detail::get_string(j, "answer_text", line);
    detail::require_utf8(r.doc.text, "answer_text", line);
    const auto& spans = detail::field(j, "spans", line);
    if (!spans.is_array()) detail::violation("'spans' must be an array", line);
    for (const auto& s : spans) {
      if (!s.is_array() || s.size() != 3 || !s[0].is_number_unsigned() ||
          !s[1].is_number_unsigned() || !s[2].is_string()) {
        detail::violation("span must be [start, end, TYPE]", line);
      }
      const auto type = type_from_code(s[2].get<std::string>());
      if (!type) detail::violation("unknown span type '" + s[2].get<std::string>() + "'", line);
      r.doc.spans.push_back({s[0].get<std::size_t>(), s[1].get<std::size_t>(), *type});
    }
    try {
      validate_spans(r.doc.spans, utf8::length(r.doc.text));
    } catch (const Error& e) {
      detail::violation(e.what(), line);
    }
    r.meta = detail::get_meta(j, line);
    return r;
  }
};

template <>
struct Schema<LabelsRecord> {
  static constexpr std::string_view name = "labels";
  static ordered_json to_json(const LabelsRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["language"] = r.language;
    j["task"] = std::string(to_string(r.labels.task));
    j["tokenizer"] = std::string(labeling::to_string(r.tokenizer));
    j["text"] = r.text;
    json toks = json::array();
    for (const auto& t : r.labels.tokens) toks.push_back(json::array({t.start, t.end}));
    j["tokens"] = toks;
    j["labels"] = detail::labels_json(r.labels.labels);
    detail::put_meta(j, r.meta);
    return j;
  }
  static LabelsRecord from_json(const json& j, std::size_t line) {
    LabelsRecord r;
    r.id = detail::get_string(j, "id", line);
    r.language = detail::get_string(j, "language", line);
    try {
      r.labels.task = task_from_string(detail::get_string(j, "task", line));
      r.tokenizer = labeling::tokenizer_from_string(detail::get_string(j, "tokenizer", line));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SchemaViolation) throw;
      detail::violation(e.what(), line);
    }
    r.text = detail::get_string(j, "text", line);
    detail::require_utf8(r.text, "text", line);
    const auto& toks = detail::field(j, "tokens", line);
    if (!toks.is_array()) detail::violation("'tokens' must be an array", line);
    std::vector<std::pair<std::size_t, std::size_t>> offsets;
    for (const auto& t : toks) {
      if (!t.is_array() || t.size() != 2 || !t[0].is_number_unsigned() ||
          !t[1].is_number_unsigned()) {
        detail::violation("token must be [start, end]", line);
      }
      offsets.emplace_back(t[0].get<std::size_t>(), t[1].get<std::size_t>());
    }
    try {
      r.labels.tokens = labeling::tokens_from_offsets(r.text, offsets);
    } catch (const Error& e) {
      detail::violation(e.what(), line);
    }
    r.labels.labels = detail::get_labels(j, "labels", line);
    if (r.labels.labels.size() != r.labels.tokens.size()) {
      detail::violation("labels and tokens differ in length", line);
    }
    r.meta = detail::get_meta(j, line);
    return r;
  }
};

template <>
struct Schema<PerfRecord> {
  static constexpr std::string_view name = "perf";
  static ordered_json to_json(const PerfRecord& r) {
    ordered_json j;
    j["language"] = r.language;
    j["task"] = std::string(to_string(r.task));
    j["source"] = r.source;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    if (!r.detector_instance.empty()) j["detector_instance"] = r.detector_instance;
    return j;
  }
  static PerfRecord from_json(const json& j, std::size_t line) {
    PerfRecord r;
    r.language = detail::get_string(j, "language", line);
    const auto task = detail::get_string(j, "task", line);
    if (task != "binary" && task != "category") detail::violation("task must be binary|category", line);
    r.task = task_from_string(task);
    r.source = detail::get_string(j, "source", line);
    if (r.source != "silver" && r.source != "gold") detail::violation("source must be silver|gold", line);
    r.precision = detail::get_number(j, "precision", line);
    r.recall = detail::get_number(j, "recall", line);
    if (!(r.precision >= 0.0 && r.precision <= 1.0) || !(r.recall >= 0.0 && r.recall <= 1.0)) {
      detail::violation("precision and recall must lie in [0,1]", line);
    }
    r.detector_instance = detail::opt_string(j, "detector_instance", line).value_or("");
    return r;
  }
};

template <>
struct Schema<RunRecord> {
  static constexpr std::string_view name = "run";
  static ordered_json to_json(const RunRecord& r) {
    ordered_json j;
    j["language"] = r.language;
    j["model_id"] = r.model_id;
    j["seed"] = r.seed;
    j["detector_instance"] = r.detector_instance;
    j["h_det"] = r.h_det;
    j["n"] = r.n;
    return j;
  }
  static RunRecord from_json(const json& j, std::size_t line) {
    RunRecord r;
    r.language = detail::get_string(j, "language", line);
    r.model_id = detail::get_string(j, "model_id", line);
    r.seed = detail::get_int(j, "seed", line);
    r.detector_instance = detail::get_string(j, "detector_instance", line);
    r.h_det = detail::get_count(j, "h_det", line);
    r.n = detail::get_count(j, "n", line);
    if (r.n == 0 || r.h_det > r.n) detail::violation("need 0 <= h_det <= n and n > 0", line);
    return r;
  }
};

template <>
struct Schema<RateRecord> {
  static constexpr std::string_view name = "rate";
  static ordered_json to_json(const RateRecord& r) {
    ordered_json j;
    j["language"] = r.language;
    j["model_id"] = r.model_id;
    j["mean"] = r.mean;
    j["std"] = r.std;
    j["n_runs"] = r.n_runs;
    j["flags"] = r.flags;
    return j;
  }
  static RateRecord from_json(const json& j, std::size_t line) {
    RateRecord r;
    r.language = detail::get_string(j, "language", line);
    r.model_id = detail::get_string(j, "model_id", line);
    r.mean = detail::get_number(j, "mean", line);
    r.std = detail::get_number(j, "std", line);
    r.n_runs = detail::get_count(j, "n_runs", line);
    const auto& flags = detail::field(j, "flags", line);
    if (!flags.is_array()) detail::violation("'flags' must be an array", line);
    for (const auto& f : flags) {
      if (!f.is_string()) detail::violation("flags must be strings", line);
      r.flags.push_back(f.get<std::string>());
    }
    return r;
  }
};

template <>
struct Schema<SourceRecord> {
  static constexpr std::string_view name = "source";
  static ordered_json to_json(const SourceRecord& r) {
    ordered_json j;
    j["id"] = r.id;
    j["language"] = r.language;
    j["text"] = r.text;
    j["reference"] = r.reference;
    return j;
  }
  static SourceRecord from_json(const json& j, std::size_t line) {
    SourceRecord r{detail::get_string(j, "id", line), detail::get_string(j, "language", line),
                   detail::get_string(j, "text", line), detail::get_string(j, "reference", line)};
    detail::require_utf8(r.text, "text", line);
    detail::require_utf8(r.reference, "reference", line);
    return r;
  }
};

/// Streaming reader; validates each line as it is read. Blank lines are
/// skipped.
template <typename R>
class JsonlReader {
 public:
  explicit JsonlReader(std::istream& in) : in_(in) {}

  std::optional<R> next() {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      if (!text.empty() && text.back() == '\r') text.pop_back();
      if (text.find_first_not_of(" \t") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(text);
      } catch (const json::parse_error& e) {
        throw Error(ErrorKind::MalformedJson, e.what(), line_);
      }
      if (!j.is_object()) {
        throw Error(ErrorKind::SchemaViolation,
                    std::string(Schema<R>::name) + " record must be a JSON object", line_);
      }
      return Schema<R>::from_json(j, line_);
    }
    return std::nullopt;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

template <typename R>
std::vector<R> read_jsonl(std::istream& in) {
  JsonlReader<R> reader(in);
  std::vector<R> out;
  while (auto r = reader.next()) out.push_back(std::move(*r));
  return out;
}

template <typename R>
std::vector<R> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path + "'");
  try {
    return read_jsonl<R>(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what(), e.position());
  }
}

/// Canonical single-line serialization of one record.
template <typename R>
std::string to_jsonl_line(const R& record) {
  try {
    return Schema<R>::to_json(record).dump();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::IoFailure, e.what());
  }
}

template <typename R>
std::size_t write_jsonl(std::ostream& out, const std::vector<R>& records) {
  for (const auto& r : records) out << to_jsonl_line(r) << '\n';
  if (!out) throw Error(ErrorKind::IoFailure, "write failed");
  return records.size();
}

template <typename R>
std::size_t store_jsonl(const std::vector<R>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open '" + path + "' for writing");
  const auto n = write_jsonl(out, records);
  out.flush();
  if (!out) throw Error(ErrorKind::IoFailure, "write to '" + path + "' failed");
  return n;
}

// ---------------------------------------------------------------------------
// Article filter

struct FilterThresholds {
  std::size_t min_len = 2000;  // Unicode scalar values
  double min_depth = 5.0;
};

struct FilterReport {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t dropped = 0;
  std::size_t dropped_length = 0;  // records failing the length threshold
  std::size_t dropped_depth = 0;   // records failing the depth threshold
};

inline bool passes(const ArticleRecord& a, const FilterThresholds& t) {
  return a.char_len >= t.min_len && a.depth >= t.min_depth;
}

/// Keeps articles with char_len >= min_len and depth >= min_depth. A record
/// failing both thresholds counts under both reasons.
inline std::vector<ArticleRecord> filter_articles(const std::vector<ArticleRecord>& records,
                                                  const FilterThresholds& t,
                                                  FilterReport* report = nullptr) {
  std::vector<ArticleRecord> kept;
  FilterReport rep;
  for (const auto& a : records) {
    ++rep.total;
    const bool len_ok = a.char_len >= t.min_len;
    const bool depth_ok = a.depth >= t.min_depth;
    if (len_ok && depth_ok) {
      ++rep.kept;
      kept.push_back(a);
      continue;
    }
    ++rep.dropped;
    if (!len_ok) ++rep.dropped_length;
    if (!depth_ok) ++rep.dropped_depth;
  }
  if (report) *report = rep;
  return kept;
}

// ---------------------------------------------------------------------------
// Referential integrity

struct IntegrityReport {
  std::vector<std::string> dangling_queries;    // query ids whose article is missing
  std::vector<std::string> dangling_responses;  // response ids whose query is missing
  std::vector<std::string> single_query_articles;  // warning only

  bool ok() const { return dangling_queries.empty() && dangling_responses.empty(); }
};

inline IntegrityReport verify_references(const std::vector<ArticleRecord>& articles,
                                         const std::vector<QueryRecord>& queries,
                                         const std::vector<ResponseRecord>& responses) {
  IntegrityReport rep;
  std::set<std::string> article_ids;
  for (const auto& a : articles) article_ids.insert(a.id);
  std::map<std::string, std::size_t> per_article;
  std::set<std::string> query_ids;
  for (const auto& q : queries) {
    query_ids.insert(q.id);
    if (!article_ids.count(q.article_id)) rep.dangling_queries.push_back(q.id);
    else ++per_article[q.article_id];
  }
  for (const auto& r : responses) {
    if (!query_ids.count(r.query_id)) rep.dangling_responses.push_back(r.id);
  }
  for (const auto& a : articles) {
    if (per_article[a.id] == 1) rep.single_query_articles.push_back(a.id);
  }
  return rep;
}

}  // namespace halluest::corpus
