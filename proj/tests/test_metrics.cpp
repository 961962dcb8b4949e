#include <gtest/gtest.h>

#include <sstream>

#include "halluest/metrics.hpp"
#include "oracles.hpp"

using namespace halluest;
using oracle::labeled;
using L = Label;

TEST(Score, HandCountedBinaryExample) {
  const auto r = metrics::score_tokens(labeled({L::O, L::H, L::H, L::O, L::O}),
                                       labeled({L::H, L::H, L::O, L::O, L::O}), Task::Binary);
  EXPECT_EQ(r.counts.tp, 1u);
  EXPECT_EQ(r.counts.fp, 1u);
  EXPECT_EQ(r.counts.fn, 1u);
  EXPECT_EQ(r.counts.tn, 2u);
  EXPECT_EQ(r.precision, 0.5);
  EXPECT_EQ(r.recall, 0.5);
  EXPECT_EQ(r.f1, 0.5);
}

TEST(Score, IdentityIsPerfect) {
  const auto g = labeled({L::O, L::ENT, L::SUB, L::O}, Task::Category);
  for (auto task : {Task::Binary, Task::Category}) {
    const auto r = metrics::score_tokens(g, g, task);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.f1, 1.0);
  }
}

TEST(Score, WrongClassCountsTwice) {
  const auto r = metrics::score_tokens(labeled({L::ENT, L::O}, Task::Category),
                                       labeled({L::REL, L::O}, Task::Category), Task::Category);
  EXPECT_EQ(r.counts.fp, 1u);
  EXPECT_EQ(r.counts.fn, 1u);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  // The same pair is a hit in binary mode.
  EXPECT_EQ(metrics::score_tokens(labeled({L::ENT, L::O}), labeled({L::REL, L::O}), Task::Binary).f1,
            1.0);
}

TEST(Score, MismatchedStreams) {
  EXPECT_THROW(metrics::score_tokens(labeled({L::O}), labeled({L::O, L::O}), Task::Binary), Error);
  auto b = labeled({L::O, L::O});
  b.tokens[1].start = 3;
  try {
    metrics::score_tokens(labeled({L::O, L::O}), b, Task::Binary);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TokenMismatch);
  }
}

TEST(Score, CorpusSumsCounts) {
  const std::vector<labeling::TokenLabels> g = {labeled({L::H, L::O}), labeled({L::H, L::H, L::O})};
  const std::vector<labeling::TokenLabels> p = {labeled({L::H, L::H}), labeled({L::O, L::H, L::O})};
  const auto r = metrics::score_corpus(g, p, Task::Binary);
  EXPECT_EQ(r.counts.tp, 2u);
  EXPECT_EQ(r.counts.fp, 1u);
  EXPECT_EQ(r.counts.fn, 1u);
  EXPECT_DOUBLE_EQ(r.precision, 2.0 / 3.0);
}

TEST(Kappa, Examples) {
  EXPECT_EQ(metrics::cohen_kappa(labeled({L::O, L::H, L::O, L::H}), labeled({L::O, L::H, L::O, L::H})).kappa,
            1.0);
  const auto k = metrics::cohen_kappa(labeled({L::O, L::O, L::H, L::H}), labeled({L::O, L::H, L::O, L::H}));
  EXPECT_EQ(k.observed, 0.5);
  EXPECT_EQ(k.expected, 0.5);
  EXPECT_EQ(k.kappa, 0.0);
  EXPECT_EQ(metrics::cohen_kappa(labeled(std::vector<L>(4, L::O)), labeled(std::vector<L>(4, L::O))).kappa,
            1.0);
}

TEST(Kappa, DegenerateAndErrors) {
  const auto empty = labeled({});
  try {
    metrics::cohen_kappa(empty, empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
  }
  // Binary mode merges ENT and REL.
  const auto a = labeled({L::ENT, L::O}, Task::Category);
  const auto b = labeled({L::REL, L::O}, Task::Category);
  EXPECT_LT(metrics::cohen_kappa(a, b, Task::Category).kappa, 1.0);
  EXPECT_EQ(metrics::cohen_kappa(a, b, Task::Binary).kappa, 1.0);
}

TEST(Iaa, Examples) {
  const auto a = labeled({L::O, L::H, L::O});
  const auto c = labeled({L::H, L::O, L::H});
  const auto two = metrics::pairwise_iaa(std::vector<labeling::TokenLabels>{a, c});
  EXPECT_EQ(two.mean_kappa, metrics::cohen_kappa(a, c).kappa);
  const auto three = metrics::pairwise_iaa(std::vector<labeling::TokenLabels>{a, a, c});
  ASSERT_EQ(three.pairs.size(), 3u);
  EXPECT_DOUBLE_EQ(three.pairs[0].kappa, 1.0);
  EXPECT_NEAR(three.pairs[1].kappa, -0.8, 1e-12);
  EXPECT_NEAR(three.pairs[2].kappa, -0.8, 1e-12);
  EXPECT_NEAR(three.mean_kappa, -0.2, 1e-12);
  EXPECT_EQ(metrics::pairwise_iaa(std::vector<labeling::TokenLabels>{a, a, a}).mean_kappa, 1.0);
  EXPECT_THROW(metrics::pairwise_iaa(std::vector<labeling::TokenLabels>{a}), Error);
}

TEST(Adjudicate, PicksHighestKappaWithTieBreak) {
  const auto silver = labeled({L::O, L::H, L::H, L::O, L::O, L::H, L::O, L::O, L::H, L::O});
  // A disagrees on two tokens, B on one.
  const auto a = labeled({L::H, L::O, L::H, L::O, L::O, L::H, L::O, L::O, L::H, L::O});
  const auto b = labeled({L::O, L::O, L::H, L::O, L::O, L::H, L::O, L::O, L::H, L::O});
  auto res = metrics::adjudicate({{"A", a}, {"B", b}}, silver, 0.4);
  EXPECT_EQ(res.chosen, "B");
  EXPECT_GT(res.agreement.at("B").kappa, res.agreement.at("A").kappa);
  res = metrics::adjudicate({{"B", b}, {"A", b}}, silver, 0.4);
  EXPECT_EQ(res.chosen, "A");
}

TEST(Adjudicate, ScreensOnObservedAgreement) {
  // 20 tokens, annotator agrees on 7: p_o = 0.35.
  std::vector<L> s(20, L::O), x(20, L::H);
  for (int i = 0; i < 7; ++i) x[i] = L::O;
  const auto silver = labeled(s);
  const auto low = labeled(x);
  const auto res = metrics::adjudicate({{"good", silver}, {"low", low}}, silver, 0.40);
  EXPECT_DOUBLE_EQ(res.agreement.at("low").observed, 0.35);
  EXPECT_TRUE(res.agreement.at("low").flagged);
  EXPECT_FALSE(res.agreement.at("good").flagged);
  try {
    metrics::adjudicate({{"low", low}}, silver, 0.40);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AllScreenedOut);
  }
}

TEST(SpanStats, CountsPerLanguageAndType) {
  const AnnotatedText doc{"abcdef", {{0, 1, HallucinationType::ENT}, {2, 3, HallucinationType::ENT},
                                     {4, 5, HallucinationType::SUB}}};
  const auto t = metrics::span_stats({{"en", {doc}}});
  EXPECT_EQ(t.count("en", HallucinationType::ENT), 2u);
  EXPECT_EQ(t.count("en", HallucinationType::SUB), 1u);
  EXPECT_EQ(t.row_total("en"), 3u);
  EXPECT_EQ(t.grand_total(), 3u);
  const auto none = metrics::span_stats({});
  EXPECT_EQ(none.grand_total(), 0u);
  std::ostringstream os;
  metrics::write_span_table_csv(os, t);
  EXPECT_NE(os.str().find("en,2,0,0,0,0,1,3"), std::string::npos) << os.str();
}

TEST(Likert, Distribution) {
  EXPECT_EQ(metrics::likert_distribution({1, 1, 2, 3}), (std::array<double, 5>{50.0, 25.0, 25.0, 0.0, 0.0}));
  EXPECT_EQ(metrics::likert_distribution({3}), (std::array<double, 5>{0.0, 0.0, 100.0, 0.0, 0.0}));
  EXPECT_THROW(metrics::likert_distribution({0}), Error);
  EXPECT_THROW(metrics::likert_distribution({6}), Error);
  std::ostringstream os;
  metrics::write_likert_csv(os, metrics::likert_distribution({1, 1, 2}));
  EXPECT_NE(os.str().find("66.7"), std::string::npos);
}

TEST(MetricsProperty, MatchesEnumerationOracle) {
  synth::Rng rng(3);
  for (int iter = 0; iter < 3000; ++iter) {
    const bool category = rng.bernoulli(0.5);
    const std::size_t n = 1 + rng.index(12);
    const auto g = oracle::random_labels(rng, n, category);
    const auto p = oracle::random_labels(rng, n, category);
    const Task task = category ? Task::Category : Task::Binary;
    const auto r = metrics::score_tokens(labeled(g, task), labeled(p, task), task);
    const auto o = oracle::enumerate_counts(g, p, category);
    EXPECT_EQ(r.counts.tp, o.tp);
    EXPECT_EQ(r.counts.fp, o.fp);
    EXPECT_EQ(r.counts.fn, o.fn);
    EXPECT_EQ(r.counts.tn, o.tn);
    const double k = metrics::cohen_kappa(labeled(g, task), labeled(p, task), task).kappa;
    EXPECT_NEAR(k, static_cast<double>(oracle::kappa(g, p)), 1e-12);
    EXPECT_GE(k, -1.0);
    EXPECT_LE(k, 1.0);
  }
}
