#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "halluest/corpus.hpp"
#include "halluest/error.hpp"
#include "halluest/estimator.hpp"
#include "halluest/labeling.hpp"
#include "halluest/markup.hpp"
#include "halluest/metrics.hpp"
#include "halluest/plot.hpp"
#include "halluest/stats.hpp"
#include "halluest/synth.hpp"
#include "halluest/validation.hpp"

// Command-line front end. Stages exchange JSONL files:
//   parse -> project -> {score, iaa, adjudicate, simulate} -> count -> estimate
// plus inject, filter, analyze {corr,ttest,lmm} and validate.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

namespace halluest::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kDataError = 2;

using json = nlohmann::ordered_json;

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error(ErrorKind::IoFailure, "write to '" + path + "' failed");
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open '" + path + "'");
  return in;
}

/// Splits "k=v,k=v" lists.
inline std::map<std::string, std::string> parse_pairs(const std::string& spec) {
  std::map<std::string, std::string> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::InvalidParams, "expected key=value, got '" + item + "'");
    }
    out[item.substr(0, eq)] = item.substr(eq + 1);
  }
  return out;
}

inline HallucinationType parse_type(const std::string& s) {
  if (auto t = type_from_code(s)) return *t;
  if (auto t = type_from_tag(s)) return *t;
  throw Error(ErrorKind::InvalidParams, "unknown hallucination type '" + s + "'");
}

/// Options of the invoked subcommand, recorded next to every output.
inline json run_config(const CLI::App& sub, const std::vector<std::string>& path) {
  json cfg;
  std::string name;
  for (const auto& p : path) name += (name.empty() ? "" : " ") + p;
  cfg["subcommand"] = name;
  json opts = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& key = opt->get_lnames().front();
    if (key == "help") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      if (res.size() == 1 && opt->get_expected_max() <= 1) opts[key] = res.front();
      else opts[key] = res;
    } else if (!opt->get_default_str().empty()) {
      opts[key] = opt->get_default_str();
    }
  }
  cfg["options"] = opts;
  return cfg;
}

/// Reads generic JSON lines, keeping each object's line number.
inline std::vector<std::pair<std::size_t, nlohmann::json>> read_json_lines(const std::string& path) {
  auto in = open_in(path);
  std::vector<std::pair<std::size_t, nlohmann::json>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (!j.is_object()) throw Error(ErrorKind::SchemaViolation, path + ": expected object", lineno);
      out.emplace_back(lineno, std::move(j));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::MalformedJson, path + ": " + e.what(), lineno);
    }
  }
  return out;
}

template <typename R>
std::vector<R> load(const std::string& path) {
  return corpus::load_jsonl<R>(path);
}

inline std::map<std::string, corpus::LabelsRecord> by_id(std::vector<corpus::LabelsRecord> recs,
                                                         const std::string& path) {
  std::map<std::string, corpus::LabelsRecord> out;
  for (auto& r : recs) {
    const auto id = r.id;
    if (!out.emplace(id, std::move(r)).second) {
      throw Error(ErrorKind::SchemaViolation, path + ": duplicate id '" + id + "'");
    }
  }
  return out;
}

}  // namespace detail

struct Context {
  std::ostream& out;
  std::ostream& err;
};

/// Runs one invocation. `args` excludes the program name.
inline int dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"halluest: detector-corrected hallucination-rate estimation", "halluest"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // Shared option storage.
  std::string input, output, perf_path, lang = "und", tokenizer = "whitespace",
                                        tokenizer_map, task = "binary";
  std::vector<std::int64_t> seeds = {42, 43, 44, 47, 49};

  auto add_io = [&](CLI::App* sub, bool need_output) {
    sub->add_option("--input", input, "Input file")->required()->check(CLI::ExistingFile);
    auto* o = sub->add_option("--output", output, "Output file");
    if (need_output) o->required();
  };

  // parse
  auto* parse = app.add_subcommand("parse", "Tagged markup JSONL -> annotated JSONL");
  add_io(parse, true);
  parse->add_option("--lang", lang, "Language when records carry none")->capture_default_str();

  // project
  auto* project = app.add_subcommand("project", "Annotated JSONL -> token labels JSONL");
  add_io(project, true);
  project->add_option("--tokenizer", tokenizer, "Default tokenizer")
      ->check(CLI::IsMember({"whitespace", "per_codepoint"}))
      ->capture_default_str();
  project->add_option("--tokenizer-map", tokenizer_map,
                      "Per-language tokenizers, e.g. zh=per_codepoint,ja=per_codepoint");
  project->add_option("--task", task)->check(CLI::IsMember({"binary", "category"}))->capture_default_str();

  // score
  std::string gold_path, pred_path, source = "silver", perf_out;
  auto* score = app.add_subcommand("score", "Gold vs predicted labels -> precision/recall/F1 CSV");
  score->add_option("--gold", gold_path)->required()->check(CLI::ExistingFile);
  score->add_option("--pred", pred_path)->required()->check(CLI::ExistingFile);
  score->add_option("--output", output, "CSV output (stdout if omitted)");
  score->add_option("--task", task)->check(CLI::IsMember({"binary", "category"}))->capture_default_str();
  score->add_option("--source", source)->check(CLI::IsMember({"silver", "gold"}))->capture_default_str();
  score->add_option("--perf-output", perf_out, "Also write perf JSONL");

  // iaa
  std::vector<std::string> annotator_files;
  auto* iaa = app.add_subcommand("iaa", "Pairwise-averaged Cohen's kappa across annotators");
  iaa->add_option("--annotator", annotator_files, "Labels JSONL, one per annotator")
      ->required()
      ->check(CLI::ExistingFile);
  iaa->add_option("--output", output, "JSON report (stdout if omitted)");
  iaa->add_option("--task", task)->check(CLI::IsMember({"binary", "category"}))->capture_default_str();

  // adjudicate
  std::vector<std::string> annotator_specs;
  std::string silver_path;
  double threshold = 0.4;
  auto* adjud = app.add_subcommand("adjudicate", "Pick the annotator agreeing best with silver labels");
  adjud->add_option("--annotator", annotator_specs, "id=labels.jsonl")->required();
  adjud->add_option("--silver", silver_path)->required()->check(CLI::ExistingFile);
  adjud->add_option("--threshold", threshold, "Screening threshold on observed agreement")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  adjud->add_option("--output", output, "JSON report (stdout if omitted)");
  adjud->add_option("--task", task)->check(CLI::IsMember({"binary", "category"}))->capture_default_str();

  // inject
  std::string gazetteer_path, negations_path, intensity_spec = "ENT=1";
  std::vector<std::string> template_specs;
  std::uint64_t seed = 42;
  std::string markup_out;
  auto* inj = app.add_subcommand("inject", "Rule-based hallucination injection with exact spans");
  add_io(inj, true);
  inj->add_option("--gazetteer", gazetteer_path, "surface<TAB>replacement TSV")->check(CLI::ExistingFile);
  inj->add_option("--negations", negations_path, "verb<TAB>negated TSV")->check(CLI::ExistingFile);
  inj->add_option("--templates", template_specs, "TYPE=file with one template per line");
  inj->add_option("--intensity", intensity_spec, "Expected spans per document, e.g. ENT=1,SUB=0.5")
      ->capture_default_str();
  inj->add_option("--seed", seed)->capture_default_str();
  inj->add_option("--markup-output", markup_out, "Also write tagged markup JSONL");

  // simulate
  double fp = 0.05, fn = 0.25;
  std::string instance;
  auto* sim = app.add_subcommand("simulate", "Noisy detector over gold labels");
  add_io(sim, true);
  sim->add_option("--fp", fp)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sim->add_option("--fn", fn)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sim->add_option("--seed", seed)->capture_default_str();
  sim->add_option("--detector-instance", instance, "Instance id (default hd-<seed>)");

  // count
  std::string model_id;
  std::int64_t gen_seed = 0;
  auto* count = app.add_subcommand("count", "Predicted labels -> detection runs JSONL");
  add_io(count, true);
  count->add_option("--model-id", model_id, "Model id for records without one");
  count->add_option("--gen-seed", gen_seed, "Generation seed for records without one");
  count->add_option("--detector-instance", instance, "Detector instance for records without one");

  // estimate
  std::string rates_out, heatmap;
  auto* est = app.add_subcommand("estimate", "Corrected rates, aggregated per language x model");
  add_io(est, true);
  est->add_option("--perf", perf_path)->required()->check(CLI::ExistingFile);
  est->add_option("--task", task)->check(CLI::IsMember({"binary", "category"}))->capture_default_str();
  est->add_option("--rates-output", rates_out, "Also write rate JSONL");
  est->add_option("--heatmap", heatmap, "Write an SVG heatmap");

  // analyze
  std::string x_col, y_col = "rate", by_col = "size_class", group_by = "language",
                     variant = "pooled", plot_path;
  auto* analyze = app.add_subcommand("analyze", "Correlation, t-test and mixed-model analyses");
  analyze->require_subcommand(1);
  auto* corr = analyze->add_subcommand("corr", "Pearson correlation");
  add_io(corr, false);
  corr->add_option("--x", x_col)->required();
  corr->add_option("--y", y_col)->capture_default_str();
  corr->add_option("--plot", plot_path, "Write an SVG scatter plot");
  auto* ttest = analyze->add_subcommand("ttest", "Two-sample t-test of rate split by a column");
  add_io(ttest, false);
  ttest->add_option("--value", y_col)->capture_default_str();
  ttest->add_option("--by", by_col, "Column with exactly two distinct values")->capture_default_str();
  ttest->add_option("--variant", variant)->check(CLI::IsMember({"pooled", "welch"}))->capture_default_str();
  auto* lmm = analyze->add_subcommand("lmm", "Random-intercept model: main effects vs two-way interactions");
  add_io(lmm, false);
  lmm->add_option("--group-by", group_by)->check(CLI::IsMember({"language", "model_id"}))->capture_default_str();
  lmm->add_option("--plot", plot_path, "Write an SVG interaction chart");

  // filter
  std::size_t min_len = 2000;
  double min_depth = 5.0;
  auto* filt = app.add_subcommand("filter", "Keep articles by length and depth");
  add_io(filt, true);
  filt->add_option("--min-len", min_len)->capture_default_str();
  filt->add_option("--min-depth", min_depth)->capture_default_str();

  // validate
  double q = 0.12;
  std::size_t docs = 500, tokens = 200, silver_docs = 100, replications = 1;
  bool protocol = false;
  auto* val = app.add_subcommand("validate", "End-to-end synthetic recovery experiment");
  val->add_option("--q", q, "True token hallucination rate")->check(CLI::Range(0.0, 0.99))->capture_default_str();
  val->add_option("--fp", fp)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  val->add_option("--fn", fn)->check(CLI::Range(0.0, 0.999))->capture_default_str();
  val->add_option("--docs", docs)->capture_default_str();
  val->add_option("--tokens", tokens)->capture_default_str();
  val->add_option("--silver", silver_docs)->capture_default_str();
  val->add_option("--seed", seed)->capture_default_str();
  val->add_option("--replications", replications)->check(CLI::PositiveNumber)->capture_default_str();
  val->add_option("--seeds", seeds, "Generation seeds for --protocol")->delimiter(',')->capture_default_str();
  val->add_flag("--protocol", protocol, "Run the detector-instance x seed aggregation protocol");
  val->add_option("--output", output, "JSON report");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  const CLI::App* active = app.get_subcommands().front();
  std::vector<std::string> path = {active->get_name()};
  if (active == analyze) {
    active = analyze->get_subcommands().front();
    path.push_back(active->get_name());
  }
  json config = detail::run_config(*active, path);
  if (active == val) config["seeds"] = seeds;
  if (active == inj || active == sim || active == val) config["seed"] = seed;
  auto write_sidecar = [&](const std::string& artifact) {
    if (!artifact.empty()) detail::write_file(artifact + ".config.json", config.dump(2) + "\n");
  };
  auto emit = [&](const std::string& content) {
    if (output.empty()) {
      out << content;
    } else {
      detail::write_file(output, content);
      write_sidecar(output);
    }
  };

  try {
    const Task task_kind = task_from_string(task);

    if (active == parse) {
      std::vector<corpus::AnnotatedRecord> recs;
      for (const auto& [lineno, j] : detail::read_json_lines(input)) {
        if (!j.contains("id") || !j["id"].is_string() || !j.contains("answer_markup") ||
            !j["answer_markup"].is_string()) {
          throw Error(ErrorKind::SchemaViolation, input + ": need string 'id' and 'answer_markup'",
                      lineno);
        }
        std::vector<markup::Warning> warnings;
        corpus::AnnotatedRecord r;
        r.id = j["id"].get<std::string>();
        r.language = j.value("language", lang);
        try {
          r.doc = markup::parse_markup(j["answer_markup"].get<std::string>(), &warnings);
        } catch (const Error& e) {
          throw Error(e.kind(), input + ": record '" + r.id + "': " + e.what(), lineno);
        }
        for (const auto& w : warnings) err << "warning: " << r.id << ": " << w.message << '\n';
        r.meta = corpus::detail::get_meta(j, lineno);
        recs.push_back(std::move(r));
      }
      corpus::store_jsonl(recs, output);
      write_sidecar(output);
      return kOk;
    }

    if (active == project) {
      const auto default_mode = labeling::tokenizer_from_string(tokenizer);
      std::map<std::string, labeling::TokenizerMode> per_lang;
      for (const auto& [k, v] : detail::parse_pairs(tokenizer_map)) {
        per_lang[k] = labeling::tokenizer_from_string(v);
      }
      std::vector<corpus::LabelsRecord> recs;
      for (const auto& a : detail::load<corpus::AnnotatedRecord>(input)) {
        const auto it = per_lang.find(a.language);
        const auto mode = it == per_lang.end() ? default_mode : it->second;
        corpus::LabelsRecord r;
        r.id = a.id;
        r.language = a.language;
        r.tokenizer = mode;
        r.text = a.doc.text;
        r.labels = labeling::project_labels(a.doc, labeling::tokenize(a.doc.text, mode), task_kind);
        r.meta = a.meta;
        recs.push_back(std::move(r));
      }
      corpus::store_jsonl(recs, output);
      write_sidecar(output);
      return kOk;
    }

    if (active == score) {
      const auto gold = detail::by_id(detail::load<corpus::LabelsRecord>(gold_path), gold_path);
      const auto pred = detail::by_id(detail::load<corpus::LabelsRecord>(pred_path), pred_path);
      std::map<std::string, metrics::ConfusionCounts> per_lang;
      for (const auto& [id, g] : gold) {
        const auto it = pred.find(id);
        if (it == pred.end()) {
          throw Error(ErrorKind::TokenMismatch, pred_path + ": no prediction for '" + id + "'");
        }
        try {
          per_lang[g.language] += metrics::count_confusion(g.labels, it->second.labels, task_kind);
        } catch (const Error& e) {
          throw Error(e.kind(), "document '" + id + "': " + e.what());
        }
      }
      std::vector<metrics::ScoreRow> rows;
      std::vector<corpus::PerfRecord> perf;
      for (auto& [l, c] : per_lang) {
        const auto rep = metrics::report_from_counts(c, task_kind);
        rows.push_back({l, task_kind, source, rep});
        perf.push_back({l, rep.precision, rep.recall, source, task_kind, ""});
      }
      std::ostringstream csv;
      metrics::write_scores_csv(csv, rows);
      emit(csv.str());
      if (!perf_out.empty()) {
        corpus::store_jsonl(perf, perf_out);
        write_sidecar(perf_out);
      }
      return kOk;
    }

    if (active == iaa) {
      std::vector<std::map<std::string, corpus::LabelsRecord>> ann;
      for (const auto& f : annotator_files) ann.push_back(detail::by_id(detail::load<corpus::LabelsRecord>(f), f));
      if (ann.size() < 2) throw Error(ErrorKind::EmptyInput, "need at least two annotators");
      std::map<std::string, std::vector<std::string>> ids_by_lang;
      for (const auto& [id, r] : ann.front()) {
        bool everywhere = true;
        for (const auto& a : ann) everywhere = everywhere && a.count(id);
        if (everywhere) ids_by_lang[r.language].push_back(id);
      }
      json report;
      report["mode"] = std::string(to_string(task_kind));
      report["annotators"] = annotator_files;
      json langs = json::object();
      for (const auto& [l, ids] : ids_by_lang) {
        std::vector<std::vector<labeling::TokenLabels>> per_ann(ann.size());
        for (std::size_t k = 0; k < ann.size(); ++k) {
          for (const auto& id : ids) per_ann[k].push_back(ann[k].at(id).labels);
        }
        const auto res = metrics::pairwise_iaa(per_ann, task_kind);
        json pairs = json::array();
        for (const auto& p : res.pairs) {
          pairs.push_back({{"a", annotator_files[p.a]}, {"b", annotator_files[p.b]}, {"kappa", p.kappa}});
        }
        langs[l] = {{"documents", ids.size()}, {"mean_kappa", res.mean_kappa}, {"pairs", pairs}};
      }
      report["languages"] = langs;
      emit(report.dump(2) + "\n");
      return kOk;
    }

    if (active == adjud) {
      const auto silver = detail::by_id(detail::load<corpus::LabelsRecord>(silver_path), silver_path);
      std::map<std::string, std::vector<labeling::TokenLabels>> ann;
      std::vector<labeling::TokenLabels> silver_docs_labels;
      std::vector<std::pair<std::string, std::map<std::string, corpus::LabelsRecord>>> loaded;
      for (const auto& spec : annotator_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::InvalidParams, "--annotator expects id=path");
        const auto file = spec.substr(eq + 1);
        loaded.emplace_back(spec.substr(0, eq), detail::by_id(detail::load<corpus::LabelsRecord>(file), file));
      }
      for (const auto& [id, s] : silver) {
        silver_docs_labels.push_back(s.labels);
        for (const auto& [ann_id, recs] : loaded) {
          const auto it = recs.find(id);
          if (it == recs.end()) {
            throw Error(ErrorKind::TokenMismatch, "annotator '" + ann_id + "' lacks document '" + id + "'");
          }
          ann[ann_id].push_back(it->second.labels);
        }
      }
      const auto res = metrics::adjudicate(ann, silver_docs_labels, threshold, task_kind);
      json report;
      report["chosen"] = res.chosen;
      report["threshold"] = threshold;
      json ag = json::object();
      for (const auto& [id, a] : res.agreement) {
        ag[id] = {{"kappa", a.kappa}, {"observed", a.observed}, {"flagged", a.flagged}};
      }
      report["agreement"] = ag;
      emit(report.dump(2) + "\n");
      return kOk;
    }

    if (active == inj) {
      synth::InjectionPlan plan;
      plan.seed = seed;
      plan.negations = synth::default_negations();
      plan.templates = synth::default_templates();
      plan.gazetteer = validation::default_gazetteer();
      if (!gazetteer_path.empty()) {
        auto in = detail::open_in(gazetteer_path);
        plan.gazetteer = synth::load_lexicon_tsv(in);
      }
      if (!negations_path.empty()) {
        auto in = detail::open_in(negations_path);
        plan.negations = synth::load_lexicon_tsv(in);
      }
      for (const auto& spec : template_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::InvalidParams, "--templates expects TYPE=path");
        auto in = detail::open_in(spec.substr(eq + 1));
        plan.templates[detail::parse_type(spec.substr(0, eq))] = synth::load_templates(in);
      }
      for (const auto& [k, v] : detail::parse_pairs(intensity_spec)) {
        plan[detail::parse_type(k)] = std::stod(v);
      }
      std::vector<corpus::AnnotatedRecord> recs;
      std::ostringstream markup_lines;
      for (const auto& src : detail::load<corpus::SourceRecord>(input)) {
        auto res = synth::inject(src, plan);
        for (const auto& note : res.report.notes) err << "note: " << src.id << ": " << note << '\n';
        if (!markup_out.empty()) {
          json m;
          m["id"] = src.id;
          m["language"] = src.language;
          m["answer_markup"] = markup::render_markup(res.doc);
          markup_lines << m.dump() << '\n';
        }
        recs.push_back({src.id, src.language, std::move(res.doc), {}});
      }
      corpus::store_jsonl(recs, output);
      write_sidecar(output);
      if (!markup_out.empty()) {
        detail::write_file(markup_out, markup_lines.str());
        write_sidecar(markup_out);
      }
      return kOk;
    }

    if (active == sim) {
      const std::string inst = instance.empty() ? "hd-" + std::to_string(seed) : instance;
      std::vector<corpus::LabelsRecord> recs;
      for (auto r : detail::load<corpus::LabelsRecord>(input)) {
        r.labels = synth::simulate_detector(r.labels, {fp, fn, seed}, r.id);
        r.meta.detector_instance = inst;
        recs.push_back(std::move(r));
      }
      corpus::store_jsonl(recs, output);
      write_sidecar(output);
      return kOk;
    }

    if (active == count) {
      struct Key {
        std::string lang, model, inst;
        std::int64_t seed;
        auto operator<=>(const Key&) const = default;
      };
      std::map<Key, std::vector<labeling::TokenLabels>> groups;
      for (auto& r : detail::load<corpus::LabelsRecord>(input)) {
        Key k{r.language, r.meta.model_id.value_or(model_id),
              r.meta.detector_instance.value_or(instance), r.meta.seed.value_or(gen_seed)};
        if (k.model.empty()) {
          throw Error(ErrorKind::SchemaViolation, input + ": record '" + r.id + "' has no model_id (use --model-id)");
        }
        groups[k].push_back(std::move(r.labels));
      }
      std::vector<corpus::RunRecord> runs;
      for (const auto& [k, preds] : groups) {
        const auto c = estimator::count_detections(preds);
        runs.push_back({k.lang, k.model, k.seed, k.inst, c.h_det, c.n});
      }
      corpus::store_jsonl(runs, output);
      write_sidecar(output);
      return kOk;
    }

    if (active == est) {
      const auto runs = detail::load<corpus::RunRecord>(input);
      const estimator::PerformanceTable perf(detail::load<corpus::PerfRecord>(perf_path));
      const auto res = estimator::estimate_from_runs(runs, perf, task_kind);
      std::ostringstream csv;
      estimator::write_rate_matrix_csv(csv, res.estimates);
      emit(csv.str());
      for (const auto& e : res.estimates) {
        if (!e.flags.empty()) err << "warning: " << e.language << "/" << e.model_id << " exceeds 100%\n";
      }
      if (!rates_out.empty()) {
        corpus::store_jsonl(res.estimates, rates_out);
        write_sidecar(rates_out);
      }
      if (!heatmap.empty()) {
        detail::write_file(heatmap, plot::heatmap_svg(res.estimates));
        write_sidecar(heatmap);
      }
      return kOk;
    }

    if (active == corr || active == ttest || active == lmm) {
      auto in = detail::open_in(input);
      stats::AnalysisFrame frame;
      try {
        frame = stats::read_frame_csv(in);
      } catch (const Error& e) {
        throw Error(e.kind(), input + ": " + e.what(), e.position());
      }
      json report;
      if (active == corr) {
        const auto x = stats::column(frame, x_col);
        const auto y = stats::column(frame, y_col);
        const auto c = stats::pearson(x, y);
        report = {{"test", "pearson"}, {"x", x_col}, {"y", y_col}, {"n", c.n}, {"r", c.r}, {"p", c.p_value}};
        if (!plot_path.empty()) {
          std::vector<std::string> labels;
          for (const auto& r : frame) labels.push_back(r.language + "/" + r.model_id);
          detail::write_file(plot_path, plot::scatter_svg(x, y, labels, x_col, y_col, c));
          write_sidecar(plot_path);
        }
      } else if (active == ttest) {
        std::map<std::string, std::vector<double>> split;
        for (const auto& r : frame) {
          const std::string key = stats::is_numeric_column(by_col)
                                      ? metrics::format_fixed(stats::numeric_value(r, by_col), 6)
                                      : stats::label_value(r, by_col);
          split[key].push_back(stats::numeric_value(r, y_col));
        }
        if (split.size() != 2) {
          throw Error(ErrorKind::InvalidParams, "--by column must have exactly two distinct values");
        }
        const auto& [ka, a] = *split.begin();
        const auto& [kb, b] = *split.rbegin();
        const auto t = stats::ttest_two_sample(a, b, stats::variant_from_string(variant));
        report = {{"test", "ttest"}, {"variant", variant}, {"value", y_col}, {"by", by_col},
                  {"group_a", ka}, {"group_b", kb}, {"n_a", a.size()}, {"n_b", b.size()},
                  {"mean_a", stats::mean(a)}, {"mean_b", stats::mean(b)},
                  {"t", t.statistic}, {"df", t.df}, {"p", t.p_value}};
      } else {
        const auto main_fit = stats::fit_lmm(frame, stats::main_effects(), group_by);
        const auto full_fit = stats::fit_lmm(frame, stats::with_two_way_interactions(), group_by);
        const auto lr = stats::lr_test(full_fit, main_fit);
        auto fit_json = [](const stats::ModelFit& f) {
          json coefs = json::array();
          for (std::size_t i = 0; i < f.names.size(); ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double z = f.betas[k] / f.std_errors[k];
            coefs.push_back({{"term", f.names[i]}, {"beta", f.betas[k]}, {"se", f.std_errors[k]},
                             {"z", z}, {"p", 2.0 * (1.0 - dist::normal_cdf(std::fabs(z)))}});
          }
          return json{{"coefficients", coefs}, {"sigma2", f.sigma2}, {"sigma_b2", f.sigma_b2},
                      {"lambda", f.lambda}, {"loglik", f.loglik}, {"n", f.n}, {"p", f.p},
                      {"groups", f.n_groups}, {"flags", f.flags}};
        };
        report = {{"test", "lmm"}, {"group_by", group_by}, {"estimation", "ML"},
                  {"coding", "size_class 0/1; continuous predictors z-scored"},
                  {"main_effects", fit_json(main_fit)}, {"interactions", fit_json(full_fit)},
                  {"lr_test", {{"statistic", lr.statistic}, {"df", lr.df}, {"p", lr.p_value}}}};
        if (!plot_path.empty()) {
          std::string svg = plot::interaction_svg(full_fit, "n_supported_langs");
          detail::write_file(plot_path, svg);
          const auto dot = plot_path.rfind('.');
          const auto second = (dot == std::string::npos ? plot_path : plot_path.substr(0, dot)) +
                              "_length.svg";
          detail::write_file(second, plot::interaction_svg(full_fit, "mean_response_len"));
          write_sidecar(plot_path);
        }
      }
      emit(report.dump(2) + "\n");
      return kOk;
    }

    if (active == filt) {
      corpus::FilterReport rep;
      const auto kept = corpus::filter_articles(detail::load<corpus::ArticleRecord>(input),
                                                {min_len, min_depth}, &rep);
      corpus::store_jsonl(kept, output);
      write_sidecar(output);
      err << "filter: total " << rep.total << ", kept " << rep.kept << ", dropped " << rep.dropped
          << " (length " << rep.dropped_length << ", depth " << rep.dropped_depth << ")\n";
      return kOk;
    }

    if (active == val) {
      json report;
      if (protocol) {
        validation::ProtocolConfig pc;
        pc.generation_seeds = seeds;
        pc.fp = fp;
        pc.fn = fn;
        pc.models = {{"sim-model", q}};
        pc.tokens_per_doc = tokens;
        pc.n_docs = docs;
        pc.silver_docs = silver_docs;
        const auto res = validation::run_protocol(pc);
        std::ostringstream csv;
        estimator::write_rate_matrix_csv(csv, res.estimation.estimates, 3);
        out << csv.str();
        const auto& e = res.estimation.estimates.front();
        report = {{"mode", "protocol"}, {"q_percent", 100.0 * q}, {"n_runs", e.n_runs},
                  {"mean", e.mean}, {"std", e.std}};
      } else {
        json reps = json::array();
        std::size_t wins = 0;
        for (std::size_t k = 0; k < replications; ++k) {
          validation::RecoveryConfig rc;
          rc.q = q;
          rc.fp = fp;
          rc.fn = fn;
          rc.n_docs = docs;
          rc.tokens_per_doc = tokens;
          rc.silver_docs = silver_docs;
          rc.corpus_seed = seed + k;
          rc.detector_seed = synth::splitmix64(seed + k);
          const auto r = validation::run_recovery(rc);
          wins += r.abs_error < r.naive_abs_error ? 1 : 0;
          out << "replication " << k << ": true " << metrics::format_fixed(r.true_rate, 3)
              << "%  P " << metrics::format_fixed(r.precision, 4) << "  R "
              << metrics::format_fixed(r.recall, 4) << "  HR_est "
              << metrics::format_fixed(r.hr_est, 3) << "%  naive "
              << metrics::format_fixed(r.naive, 3) << "%  |error| "
              << metrics::format_fixed(r.abs_error, 3) << "  naive |error| "
              << metrics::format_fixed(r.naive_abs_error, 3) << "\n";
          reps.push_back({{"true_rate", r.true_rate}, {"precision", r.precision},
                          {"recall", r.recall}, {"h_det", r.h_det}, {"n", r.n},
                          {"hr_est", r.hr_est}, {"naive", r.naive}, {"abs_error", r.abs_error},
                          {"naive_abs_error", r.naive_abs_error}});
        }
        report = {{"mode", "recovery"}, {"q_percent", 100.0 * q}, {"replications", reps},
                  {"corrected_better", wins}};
      }
      if (!output.empty()) {
        detail::write_file(output, report.dump(2) + "\n");
        write_sidecar(output);
      }
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  err << app.help();
  return kUsage;
}

}  // namespace halluest::cli
