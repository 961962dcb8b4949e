#include <gtest/gtest.h>

#include "halluest/labeling.hpp"
#include "halluest/markup.hpp"
#include "oracles.hpp"

using namespace halluest;
using labeling::TokenizerMode;

namespace {

std::vector<std::tuple<std::string, std::size_t, std::size_t>> triples(
    const std::vector<labeling::Token>& toks) {
  std::vector<std::tuple<std::string, std::size_t, std::size_t>> out;
  for (const auto& t : toks) out.emplace_back(t.text, t.start, t.end);
  return out;
}

using L = Label;

}  // namespace

TEST(Tokenize, Examples) {
  using T = std::vector<std::tuple<std::string, std::size_t, std::size_t>>;
  EXPECT_EQ(triples(labeling::tokenize("a b", TokenizerMode::Whitespace)),
            (T{{"a", 0, 1}, {"b", 2, 3}}));
  EXPECT_TRUE(labeling::tokenize("", TokenizerMode::Whitespace).empty());
  EXPECT_EQ(triples(labeling::tokenize("你好 x", TokenizerMode::PerCodepoint)),
            (T{{"你", 0, 1}, {"好", 1, 2}, {"x", 3, 4}}));
  EXPECT_EQ(triples(labeling::tokenize("  é　ß\n", TokenizerMode::Whitespace)),
            (T{{"é", 2, 3}, {"ß", 4, 5}}));
}

TEST(Tokenize, OffsetsRoundTrip) {
  const std::string text = "Messi is an American";
  const auto toks = labeling::tokenize(text, TokenizerMode::Whitespace);
  std::vector<std::pair<std::size_t, std::size_t>> offs;
  for (const auto& t : toks) offs.emplace_back(t.start, t.end);
  const auto rebuilt = labeling::tokens_from_offsets(text, offs);
  EXPECT_EQ(triples(rebuilt), triples(toks));
  EXPECT_THROW(labeling::tokens_from_offsets(text, {{18, 21}}), Error);
}

TEST(Project, MessiExample) {
  const auto doc = markup::parse_markup("Messi is an <entity>American</entity> soccer player.");
  const auto tl = labeling::project_labels(doc, labeling::tokenize(doc.text, TokenizerMode::Whitespace),
                                           Task::Category);
  EXPECT_EQ(tl.labels, (std::vector<L>{L::O, L::O, L::O, L::ENT, L::O, L::O}));
  const auto bin = labeling::project_labels(doc, tl.tokens, Task::Binary);
  EXPECT_EQ(bin.labels, (std::vector<L>{L::O, L::O, L::O, L::H, L::O, L::O}));
}

TEST(Project, NoSpansAllOutside) {
  const AnnotatedText doc{"a b c", {}};
  const auto tl = labeling::project_labels(doc, labeling::tokenize(doc.text, TokenizerMode::Whitespace),
                                           Task::Category);
  EXPECT_EQ(tl.labels, std::vector<L>(3, L::O));
}

TEST(Project, PartialOverlapLabelsWholeToken) {
  const AnnotatedText doc{"Messi is an American soccer player.", {{12, 16, HallucinationType::ENT}}};
  const auto tl = labeling::project_labels(doc, labeling::tokenize(doc.text, TokenizerMode::Whitespace),
                                           Task::Category);
  EXPECT_EQ(tl.labels[3], L::ENT);
  EXPECT_EQ(std::count(tl.labels.begin(), tl.labels.end(), L::O), 5);
}

TEST(Project, LargestOverlapThenLeftmost) {
  // Token "abcdef" touched by REL over 2 chars and SUB over 4 chars.
  const AnnotatedText doc{"abcdef", {{0, 2, HallucinationType::REL}, {2, 6, HallucinationType::SUB}}};
  auto toks = labeling::tokenize(doc.text, TokenizerMode::Whitespace);
  EXPECT_EQ(labeling::project_labels(doc, toks, Task::Category).labels[0], L::SUB);
  const AnnotatedText tie{"abcd", {{0, 2, HallucinationType::REL}, {2, 4, HallucinationType::SUB}}};
  toks = labeling::tokenize(tie.text, TokenizerMode::Whitespace);
  EXPECT_EQ(labeling::project_labels(tie, toks, Task::Category).labels[0], L::REL);
}

TEST(Project, TokenOutsideTextIsOffsetMismatch) {
  const AnnotatedText doc{"ab", {}};
  try {
    labeling::project_labels(doc, {{"x", 1, 3}}, Task::Binary);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::OffsetMismatch);
  }
}

TEST(LabelsToSpans, Examples) {
  labeling::TokenLabels tl;
  tl.tokens = {{"a", 0, 1}, {"bcd", 2, 5}, {"efg", 6, 9}, {"h", 10, 11}};
  tl.labels = {L::O, L::ENT, L::ENT, L::O};
  tl.task = Task::Category;
  EXPECT_EQ(labeling::labels_to_spans(tl), (std::vector<Span>{{2, 9, HallucinationType::ENT}}));
  tl.labels = {L::O, L::O, L::O, L::O};
  EXPECT_TRUE(labeling::labels_to_spans(tl).empty());
  tl.labels = {L::O, L::ENT, L::REL, L::O};
  EXPECT_EQ(labeling::labels_to_spans(tl),
            (std::vector<Span>{{2, 5, HallucinationType::ENT}, {6, 9, HallucinationType::REL}}));
}

TEST(LabelingProperty, CoverageLaws) {
  synth::Rng rng(11);
  for (int iter = 0; iter < 2000; ++iter) {
    const auto text = oracle::random_text(rng, 50);
    const AnnotatedText doc{text, oracle::random_spans(rng, utf8::length(text))};
    for (auto mode : {TokenizerMode::Whitespace, TokenizerMode::PerCodepoint}) {
      const auto toks = labeling::tokenize(doc.text, mode);
      const auto cat = labeling::project_labels(doc, toks, Task::Category);
      const auto bin = labeling::project_labels(doc, toks, Task::Binary);
      ASSERT_EQ(cat.labels.size(), toks.size());
      EXPECT_EQ(labeling::to_binary(cat).labels, bin.labels);
      for (std::size_t t = 0; t < toks.size(); ++t) {
        bool overlaps = false;
        bool type_matches = false;
        for (const auto& s : doc.spans) {
          if (s.start < toks[t].end && toks[t].start < s.end) {
            overlaps = true;
            type_matches = type_matches || to_label(s.htype) == cat.labels[t];
          }
        }
        EXPECT_EQ(is_positive(cat.labels[t]), overlaps);
        if (overlaps) EXPECT_TRUE(type_matches);
      }
      // Every recovered span lies within tokens that touch an original span.
      for (const auto& s : labeling::labels_to_spans(cat)) EXPECT_LT(s.start, s.end);
    }
  }
}
