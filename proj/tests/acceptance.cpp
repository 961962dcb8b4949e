// Acceptance suite: one PASS/FAIL line per criterion. Exit status is
// non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "halluest/corpus.hpp"
#include "halluest/distributions.hpp"
#include "halluest/estimator.hpp"
#include "halluest/labeling.hpp"
#include "halluest/markup.hpp"
#include "halluest/metrics.hpp"
#include "halluest/stats.hpp"
#include "halluest/synth.hpp"
#include "halluest/validation.hpp"
#include "lmm_fixture.hpp"
#include "oracles.hpp"

using namespace halluest;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED{" << what << "}";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// 1. Identity: equal precision and recall reproduce the naive rate.
Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  synth::Rng rng(2024);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double p = 0.001 + 0.999 * rng.uniform();
    const std::uint64_t n = 1 + rng.index(1000000);
    const std::uint64_t h = rng.index(n + 1);
    const auto r = estimator::estimate_rate(p, p, h, n);
    worst = std::max(worst, std::fabs(r.hr_est - r.naive));
  }
  const auto exact = estimator::estimate_rate(1.0, 1.0, 10, 100);
  const double secs = seconds_since(t0);
  o.check(worst <= 1e-12, "max |HR_est - naive| <= 1e-12");
  o.check(exact.hr_est == 10.0 && exact.naive == 10.0, "P=R=1, H=10, N=100 gives exactly 10.0");
  o.check(secs < 1.0, "runtime < 1 s");
  o.detail << " max|diff|=" << num(worst) << " example=" << num(exact.hr_est, 17) << " time=" << num(secs, 3)
           << "s";
  return o;
}

// 2. End-to-end recovery on synthetic corpora.
Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  int wins = 0;
  int within = 0;
  double worst = 0.0, sum_err = 0.0, sum_naive = 0.0;
  for (int k = 0; k < 100; ++k) {
    validation::RecoveryConfig cfg;
    cfg.q = 0.12;
    cfg.fp = 0.05;
    cfg.fn = 0.25;
    cfg.n_docs = 500;
    cfg.tokens_per_doc = 200;
    cfg.silver_docs = 100;
    cfg.corpus_seed = 1000 + static_cast<std::uint64_t>(k);
    cfg.detector_seed = synth::splitmix64(static_cast<std::uint64_t>(k));
    const auto r = validation::run_recovery(cfg);
    wins += r.abs_error < r.naive_abs_error;
    within += r.abs_error <= 1.5;
    worst = std::max(worst, r.abs_error);
    sum_err += r.abs_error;
    sum_naive += r.naive_abs_error;
  }
  const double secs = seconds_since(t0);
  o.check(within == 100, "|HR_est - 12.0| <= 1.5 in every replication");
  o.check(wins >= 90, "corrected error < naive error in >= 90/100");
  o.check(secs < 30.0, "runtime < 30 s");
  o.detail << " within=" << within << "/100 max|err|=" << num(worst, 4) << " mean|err|=" << num(sum_err / 100, 4)
           << " mean|naive err|=" << num(sum_naive / 100, 4) << " wins=" << wins << "/100 time=" << num(secs, 3)
           << "s";
  return o;
}

// 3. Aggregation: 3 detector instances x 5 generation seeds per cell.
Outcome criterion3() {
  Outcome o;
  estimator::PerformanceTable perf;
  const std::vector<std::pair<std::string, std::pair<double, double>>> inst = {
      {"hd-1", {0.8, 0.5}}, {"hd-2", {0.6, 0.75}}, {"hd-3", {0.9, 0.9}}};
  for (const std::string lang : {"en", "de"}) {
    for (const auto& [id, pr] : inst) perf.add({lang, pr.first, pr.second, "silver", Task::Binary, id});
  }
  std::vector<estimator::DetectionRun> runs;
  const std::vector<std::int64_t> seeds = {42, 43, 44, 47, 49};
  for (const auto& [lang, base, step, n] : std::vector<std::tuple<std::string, int, int, int>>{
           {"en", 10, 1, 200}, {"de", 20, 3, 500}}) {
    int k = 0;
    for (const auto& [id, pr] : inst) {
      for (auto s : seeds) {
        runs.push_back({lang, "model", s, id, static_cast<std::uint64_t>(base + step * k), static_cast<std::uint64_t>(n)});
        ++k;
      }
    }
  }
  const auto est = estimator::estimate_from_runs(runs, perf).estimates;
  // Exact rational arithmetic, rounded to double.
  const double de_mean = 8.693333333333333333, de_std = 2.235897603925120547;
  const double en_mean = 9.133333333333333333, en_std = 2.004162335407655212;
  o.check(est.size() == 2, "two cells");
  double worst = 0.0;
  if (est.size() == 2) {
    o.check(est[0].language == "de" && est[1].language == "en", "cells sorted");
    o.check(est[0].n_runs == 15 && est[1].n_runs == 15, "15 runs per fixture cell");
    worst = std::max({std::fabs(est[0].mean - de_mean), std::fabs(est[0].std - de_std),
                      std::fabs(est[1].mean - en_mean), std::fabs(est[1].std - en_std)});
    o.check(worst <= 1e-9, "mean and std within 1e-9 of the exact values");
  }

  validation::ProtocolConfig cfg;
  cfg.languages = {"en", "de"};
  cfg.models = {{"model-a", 0.08}, {"model-b", 0.12}};
  cfg.n_docs = 40;
  cfg.silver_docs = 40;
  const auto proto = validation::run_protocol(cfg);
  bool all15 = proto.estimation.estimates.size() == 4;
  for (const auto& e : proto.estimation.estimates) all15 = all15 && e.n_runs == 15;
  o.check(all15, "simulated protocol yields exactly 15 estimates in each of 4 cells");
  o.detail << " fixture max|diff|=" << num(worst) << " de=" << num(est[0].mean, 10) << "±" << num(est[0].std, 10)
           << " en=" << num(est[1].mean, 10) << "±" << num(est[1].std, 10)
           << " protocol cells=" << proto.estimation.estimates.size();
  return o;
}

// 4. Token metrics and kappa against enumeration and closed forms.
Outcome criterion4() {
  Outcome o;
  synth::Rng rng(4444);
  std::size_t count_mismatch = 0, score_mismatch = 0;
  double kappa_worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const bool category = i % 2 == 1;
    const Task task = category ? Task::Category : Task::Binary;
    const std::size_t n = 1 + rng.index(12);
    const auto g = oracle::random_labels(rng, n, category);
    const auto p = oracle::random_labels(rng, n, category);
    const auto r = metrics::score_tokens(oracle::labeled(g, task), oracle::labeled(p, task), task);
    const auto c = oracle::enumerate_counts(g, p, category);
    if (r.counts.tp != c.tp || r.counts.fp != c.fp || r.counts.fn != c.fn || r.counts.tn != c.tn) ++count_mismatch;
    const double prec = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    const double rec = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    const double f1 = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
    if (r.precision != prec || r.recall != rec || r.f1 != f1) ++score_mismatch;
    const double k = metrics::cohen_kappa(oracle::labeled(g, task), oracle::labeled(p, task), task).kappa;
    kappa_worst = std::max(kappa_worst, std::fabs(k - static_cast<double>(oracle::kappa(g, p))));
  }
  using L = Label;
  const auto ex = metrics::score_tokens(oracle::labeled({L::O, L::H, L::H, L::O, L::O}),
                                        oracle::labeled({L::H, L::H, L::O, L::O, L::O}), Task::Binary);
  const auto k0 = metrics::cohen_kappa(oracle::labeled({L::O, L::O, L::H, L::H}),
                                       oracle::labeled({L::O, L::H, L::O, L::H}));
  o.check(count_mismatch == 0, "confusion counts equal enumeration");
  o.check(score_mismatch == 0, "P/R/F1 equal enumeration exactly");
  o.check(kappa_worst <= 1e-12, "kappa within 1e-12 of closed form");
  o.check(ex.precision == 0.5 && ex.recall == 0.5 && ex.f1 == 0.5, "P=R=F1=0.5 fixture");
  o.check(k0.kappa == 0.0 && k0.observed == 0.5 && k0.expected == 0.5, "kappa=0 fixture");
  o.detail << " count mismatches=" << count_mismatch << " score mismatches=" << score_mismatch
           << " max|kappa diff|=" << num(kappa_worst);
  return o;
}

// 5. Statistics kernels against quadrature and closed forms.
Outcome criterion5() {
  Outcome o;
  synth::Rng rng(5555);
  double worst_pearson = 0.0, worst_ttest = 0.0, worst_cdf = 0.0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t n = 3 + rng.index(30);
    std::vector<double> x(n), y(n);
    const double slope = 2.0 * rng.uniform() - 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      x[j] = rng.normal();
      y[j] = slope * x[j] + rng.normal();
    }
    const auto c = stats::pearson(x, y);
    const auto oc = oracle::pearson(x, y);
    worst_pearson = std::max({worst_pearson, std::fabs(c.r - static_cast<double>(oc.r)),
                              std::fabs(c.p_value - static_cast<double>(oc.p))});
  }
  for (int i = 0; i < 50; ++i) {
    std::vector<double> a(2 + rng.index(20)), b(2 + rng.index(20));
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = 0.5 + (0.5 + rng.uniform()) * rng.normal();
    const bool welch = i % 2 == 1;
    const auto t = stats::ttest_two_sample(a, b, welch ? stats::TTestVariant::Welch : stats::TTestVariant::Pooled);
    const auto ot = oracle::ttest(a, b, welch);
    worst_ttest = std::max({worst_ttest, std::fabs(t.statistic - static_cast<double>(ot.t)),
                            std::fabs(t.p_value - static_cast<double>(ot.p))});
  }
  for (int i = 0; i < 50; ++i) {
    double got = 0.0, want = 0.0;
    switch (i % 3) {
      case 0: {
        const double mean = rng.normal(), sd = 0.1 + 3.0 * rng.uniform();
        const double x = mean + sd * 6.0 * (rng.uniform() - 0.5);
        got = dist::dist_cdf(dist::Distribution::Normal, x, {1.0, mean, sd});
        want = static_cast<double>(oracle::normal_cdf(x, mean, sd));
        break;
      }
      case 1: {
        const double df = 0.5 + 50.0 * rng.uniform();
        const double x = 10.0 * (rng.uniform() - 0.5);
        got = dist::dist_cdf(dist::Distribution::StudentT, x, {df});
        want = static_cast<double>(oracle::student_t_cdf(x, df));
        break;
      }
      default: {
        const double df = 0.5 + 30.0 * rng.uniform();
        const double x = 3.0 * df * rng.uniform();
        got = dist::dist_cdf(dist::Distribution::ChiSquare, x, {df});
        want = static_cast<double>(oracle::chi_square_cdf(x, df));
      }
    }
    worst_cdf = std::max(worst_cdf, std::fabs(got - want));
  }
  const auto lr = stats::lr_test(-500.0, -511.07, 3.0);
  const double oracle_p = static_cast<double>(1 - oracle::chi_square_cdf(22.14L, 3));
  o.check(worst_pearson <= 1e-9, "pearson r and p within 1e-9");
  o.check(worst_ttest <= 1e-9, "t statistic and p within 1e-9");
  o.check(worst_cdf <= 1e-9, "dist_cdf within 1e-9");
  o.check(std::fabs(lr.statistic - 22.14) <= 1e-9, "LR = 22.14 from a gap of 11.07");
  o.check(lr.df == 3.0 && lr.p_value < 0.001, "df = 3 and p < 0.001");
  o.check(std::fabs(lr.p_value - oracle_p) <= 1e-9, "LR p matches chi-square quadrature");
  o.detail << " pearson=" << num(worst_pearson) << " ttest=" << num(worst_ttest) << " cdf=" << num(worst_cdf)
           << " LR=" << num(lr.statistic, 6) << " p=" << num(lr.p_value, 4);
  return o;
}

// 6. Random-intercept model validity.
Outcome criterion6() {
  Outcome o;
  const auto t0 = Clock::now();
  const Eigen::Map<const Eigen::VectorXd> planted(fixture::kPlanted.data(), 7);

  // Zero between-group variance: residual group means removed exactly.
  auto zero = fixture::simulate_frame(606, 30, 11, 0.0, 1.0);
  Eigen::VectorXd e = zero.design.y - zero.design.X * planted;
  for (int g = 0; g < 30; ++g) e.segment(g * 11, 11).array() -= e.segment(g * 11, 11).mean();
  const Eigen::VectorXd y0 = zero.design.X * planted + e;
  const auto lmm0 = stats::fit_random_intercept(zero.design.X, y0, zero.design.groups);
  const auto ols0 = stats::fit_ols(zero.design.X, y0);
  const double ols_gap = (lmm0.betas - ols0.betas).cwiseAbs().maxCoeff();
  o.check(ols_gap <= 1e-6, "sigma_b^2 = 0 data gives OLS betas within 1e-6");

  int covered = 0, rejected = 0;
  double worst_beta_gap = 0.0;
  const auto idx = static_cast<Eigen::Index>(4);  // size_class:n_supported_langs
  for (int rep = 0; rep < 100; ++rep) {
    auto sim = fixture::simulate_frame(7000 + static_cast<std::uint64_t>(rep));
    const auto full = stats::fit_lmm(sim.frame, stats::with_two_way_interactions());
    const auto reduced = stats::fit_lmm(sim.frame, stats::main_effects());
    const auto grid = oracle::grid_lmm(sim.design.X, sim.design.y, sim.design.groups, 10000);
    worst_beta_gap = std::max(worst_beta_gap, std::fabs(full.betas[idx] - grid.beta[idx]));
    covered += std::fabs(full.betas[idx] - 1.33) <= 1.96 * grid.se[idx];
    rejected += stats::lr_test(full, reduced).p_value < 0.001;
  }
  const double secs = seconds_since(t0);
  o.check(covered >= 90, "planted 1.33 inside the oracle 95% CI in >= 90/100");
  o.check(rejected >= 95, "LR rejects the no-interaction null at 0.001 in >= 95/100");
  o.check(secs < 120.0, "runtime < 2 min");
  o.detail << " OLS gap=" << num(ols_gap) << " coverage=" << covered << "/100 rejections=" << rejected
           << "/100 max|beta - grid beta|=" << num(worst_beta_gap) << " time=" << num(secs, 3) << "s";
  return o;
}

// 7. Markup round trips and projection coverage laws.
Outcome criterion7() {
  Outcome o;
  synth::Rng rng(7777);
  std::size_t roundtrip_fail = 0, law_fail = 0;
  for (int i = 0; i < 10000; ++i) {
    std::string text;
    do {
      text = oracle::random_text(rng, 60);
    } while (markup::contains_tag_like(utf8::decode(text)));
    const AnnotatedText doc{text, oracle::random_spans(rng, utf8::length(text))};
    const auto tagged = markup::render_markup(doc);
    const auto back = markup::parse_markup(tagged);
    if (!(back == doc) || markup::render_markup(back) != tagged) ++roundtrip_fail;

    const auto mode = i % 2 ? labeling::TokenizerMode::PerCodepoint : labeling::TokenizerMode::Whitespace;
    const auto toks = labeling::tokenize(doc.text, mode);
    const auto cat = labeling::project_labels(doc, toks, Task::Category);
    const auto bin = labeling::project_labels(doc, toks, Task::Binary);
    bool ok = cat.labels.size() == toks.size() && labeling::to_binary(cat).labels == bin.labels;
    for (std::size_t t = 0; ok && t < toks.size(); ++t) {
      bool overlaps = false, typed = false;
      for (const auto& s : doc.spans) {
        if (s.start < toks[t].end && toks[t].start < s.end) {
          overlaps = true;
          typed = typed || to_label(s.htype) == cat.labels[t];
        }
      }
      ok = is_positive(cat.labels[t]) == overlaps && (!overlaps || typed);
    }
    law_fail += !ok;
  }
  o.check(roundtrip_fail == 0, "render/parse round trip byte-exact");
  o.check(law_fail == 0, "projection coverage laws");
  o.detail << " round-trip failures=" << roundtrip_fail << " coverage-law failures=" << law_fail;
  return o;
}

// 8. Article filter thresholds.
Outcome criterion8() {
  Outcome o;
  auto article = [](const std::string& id, std::size_t len, double depth) {
    std::string text;
    for (std::size_t i = 0; i < len; ++i) text += i % 2 ? "é" : "a";
    return corpus::make_article(id, "en", text, depth);
  };
  corpus::FilterReport rep;
  const auto kept = corpus::filter_articles(
      {article("len1999", 1999, 5.0), article("len2000", 2000, 5.0), article("depth4", 3000, 4.0),
       article("depth5", 3000, 5.0)},
      {}, &rep);
  std::string ids;
  for (const auto& a : kept) ids += a.id + " ";
  o.check(kept.size() == 2 && kept[0].id == "len2000" && kept[1].id == "depth5", "kept exactly len2000 and depth5");
  o.check(rep.dropped_length == 1 && rep.dropped_depth == 1, "one drop per reason");
  o.detail << " kept=[" << ids << "] dropped length=" << rep.dropped_length << " depth=" << rep.dropped_depth;
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 rate identity", criterion1},     {"2 end-to-end recovery", criterion2},
      {"3 aggregation protocol", criterion3}, {"4 metrics oracle", criterion4},
      {"5 statistics kernels", criterion5},   {"6 mixed-model validity", criterion6},
      {"7 markup round trips", criterion7},   {"8 corpus filter", criterion8}};
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " exception: " << e.what();
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << name << ":" << o.detail.str() << std::endl;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
