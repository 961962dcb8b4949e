#include <gtest/gtest.h>

#include <sstream>

#include "halluest/corpus.hpp"
#include "oracles.hpp"

using namespace halluest;
using namespace halluest::corpus;

namespace {

template <typename R>
std::vector<R> parse(const std::string& text) {
  std::istringstream in(text);
  return read_jsonl<R>(in);
}

template <typename R>
std::string dump(const std::vector<R>& recs) {
  std::ostringstream out;
  write_jsonl(out, recs);
  return out.str();
}

std::string repeat(const std::string& unit, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += unit;
  return s;
}

}  // namespace

TEST(Jsonl, EmptyStreamAndFormat) {
  EXPECT_TRUE(parse<ArticleRecord>("").empty());
  EXPECT_TRUE(parse<ArticleRecord>("\n  \n").empty());
  EXPECT_EQ(dump(std::vector<RunRecord>{}), "");
  const std::vector<RunRecord> runs = {{"en", "m", 42, "hd-1", 3, 10},
                                       {"en", "m", 43, "hd-1", 4, 10},
                                       {"de", "m", 42, "hd-2", 5, 10}};
  const auto text = dump(runs);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  EXPECT_EQ(text.back(), '\n');
  EXPECT_EQ(parse<RunRecord>(text), runs);
}

TEST(Jsonl, MissingFieldReportsLine) {
  const std::string text =
      "{\"id\":\"a\",\"language\":\"en\",\"text\":\"x\",\"depth\":5}\n"
      "{\"id\":\"b\",\"text\":\"y\",\"depth\":5}\n";
  try {
    parse<ArticleRecord>(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaViolation);
    EXPECT_EQ(e.position(), 2u);
  }
}

TEST(Jsonl, MalformedAndWrongTypes) {
  try {
    parse<RunRecord>("{\"language\": \n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MalformedJson);
    EXPECT_EQ(e.position(), 1u);
  }
  EXPECT_THROW(parse<RunRecord>("[1,2]\n"), Error);
  EXPECT_THROW(parse<RunRecord>(
                   "{\"language\":\"en\",\"model_id\":\"m\",\"seed\":1,\"detector_instance\":\"d\",\"h_det\":\"3\",\"n\":4}\n"),
               Error);
  EXPECT_THROW(parse<RunRecord>(
                   "{\"language\":\"en\",\"model_id\":\"m\",\"seed\":1,\"detector_instance\":\"d\",\"h_det\":5,\"n\":4}\n"),
               Error);
  EXPECT_THROW(parse<ResponseRecord>(
                   "{\"id\":\"r\",\"query_id\":\"q\",\"model_id\":\"m\",\"seed\":1}\n"),
               Error);
  EXPECT_THROW(parse<AnnotatedRecord>(
                   "{\"id\":\"a\",\"language\":\"en\",\"answer_text\":\"ab\",\"spans\":[[0,3,\"ENT\"]]}\n"),
               Error);
  EXPECT_THROW(parse<PerfRecord>(
                   "{\"language\":\"en\",\"task\":\"binary\",\"source\":\"silver\",\"precision\":1.2,\"recall\":0.5}\n"),
               Error);
}

TEST(Jsonl, AnnotatedAndLabelsRoundTrip) {
  synth::Rng rng(31);
  std::vector<AnnotatedRecord> ann;
  std::vector<LabelsRecord> labels;
  for (int i = 0; i < 200; ++i) {
    const auto text = oracle::random_text(rng, 30);
    AnnotatedRecord a{"doc" + std::to_string(i), i % 2 ? "zh" : "en",
                      {text, oracle::random_spans(rng, utf8::length(text))}, {}};
    if (i % 3 == 0) a.meta.model_id = "m" + std::to_string(i);
    if (i % 5 == 0) a.meta.seed = 42 + i;
    ann.push_back(a);
    const auto mode = i % 2 ? labeling::TokenizerMode::PerCodepoint : labeling::TokenizerMode::Whitespace;
    LabelsRecord l{a.id, a.language, mode, text,
                   labeling::project_labels(a.doc, labeling::tokenize(text, mode), Task::Category),
                   a.meta};
    labels.push_back(l);
  }
  const auto ann_text = dump(ann);
  EXPECT_EQ(dump(parse<AnnotatedRecord>(ann_text)), ann_text);
  const auto back = parse<AnnotatedRecord>(ann_text);
  for (std::size_t i = 0; i < ann.size(); ++i) EXPECT_EQ(back[i].doc, ann[i].doc);
  const auto lab_text = dump(labels);
  EXPECT_EQ(dump(parse<LabelsRecord>(lab_text)), lab_text);
  const auto lback = parse<LabelsRecord>(lab_text);
  for (std::size_t i = 0; i < labels.size(); ++i) EXPECT_EQ(lback[i].labels.labels, labels[i].labels.labels);
}

TEST(Jsonl, OtherRecordsRoundTrip) {
  const std::vector<ResponseRecord> resp = {
      {"r1", "q1", "m", 42, std::string("plain"), std::nullopt, std::nullopt},
      {"r2", "q1", "m", 43, std::nullopt, std::string("<entity>x</entity>"),
       std::vector<Label>{Label::ENT}}};
  EXPECT_EQ(dump(parse<ResponseRecord>(dump(resp))), dump(resp));
  const std::vector<PerfRecord> perf = {{"en", 0.5, 0.25, "gold", Task::Category, "hd-1"}};
  EXPECT_EQ(dump(parse<PerfRecord>(dump(perf))), dump(perf));
  const std::vector<RateRecord> rates = {{"en", "m", 10.5, 0.25, 15, {"exceeds-100"}}};
  EXPECT_EQ(dump(parse<RateRecord>(dump(rates))), dump(rates));
  const std::vector<QueryRecord> qs = {{"q1", "a1", "en", "Who?"}};
  EXPECT_EQ(dump(parse<QueryRecord>(dump(qs))), dump(qs));
  const std::vector<SourceRecord> src = {{"s", "en", "text", "ref"}};
  EXPECT_EQ(dump(parse<SourceRecord>(dump(src))), dump(src));
}

TEST(Filter, BoundaryCases) {
  const auto a1999 = make_article("a", "en", repeat("x", 1999), 5.0);
  const auto a2000 = make_article("b", "en", repeat("x", 2000), 5.0);
  const auto deep4 = make_article("c", "en", repeat("x", 3000), 4.0);
  FilterReport rep;
  const auto kept = filter_articles({a1999, a2000, deep4}, {}, &rep);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].id, "b");
  EXPECT_EQ(rep.total, 3u);
  EXPECT_EQ(rep.dropped_length, 1u);
  EXPECT_EQ(rep.dropped_depth, 1u);
  // Length counts scalar values, not bytes.
  const auto cjk = make_article("d", "zh", repeat("文", 2000), 5.0);
  EXPECT_EQ(cjk.char_len, 2000u);
  EXPECT_TRUE(passes(cjk, {}));
  EXPECT_FALSE(passes(make_article("e", "zh", repeat("文", 1999), 9.0), {}));
}

TEST(Integrity, DanglingReferences) {
  const std::vector<ArticleRecord> arts = {make_article("a1", "en", "x", 5), make_article("a2", "en", "y", 5)};
  const std::vector<QueryRecord> qs = {{"q1", "a1", "en", "?"}, {"q2", "a1", "en", "?"}, {"q3", "zz", "en", "?"},
                                       {"q4", "a2", "en", "?"}};
  const std::vector<ResponseRecord> rs = {{"r1", "q1", "m", 1, std::string("x"), std::nullopt, std::nullopt},
                                          {"r2", "q9", "m", 1, std::string("x"), std::nullopt, std::nullopt}};
  const auto rep = verify_references(arts, qs, rs);
  EXPECT_FALSE(rep.ok());
  EXPECT_EQ(rep.dangling_queries, std::vector<std::string>{"q3"});
  EXPECT_EQ(rep.dangling_responses, std::vector<std::string>{"r2"});
  EXPECT_EQ(rep.single_query_articles, std::vector<std::string>{"a2"});
}
