#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "halluest/error.hpp"
#include "halluest/types.hpp"
#include "halluest/utf8.hpp"

namespace halluest::labeling {

enum class TokenizerMode { Whitespace, PerCodepoint };

inline std::string_view to_string(TokenizerMode m) {
  return m == TokenizerMode::Whitespace ? "whitespace" : "per_codepoint";
}

inline TokenizerMode tokenizer_from_string(std::string_view s) {
  if (s == "whitespace") return TokenizerMode::Whitespace;
  if (s == "per_codepoint") return TokenizerMode::PerCodepoint;
  throw Error(ErrorKind::InvalidParams, "unknown tokenizer '" + std::string(s) + "'");
}

struct Token {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

struct TokenLabels {
  std::vector<Token> tokens;
  std::vector<Label> labels;
  Task task = Task::Binary;

  std::size_t size() const { return tokens.size(); }
  friend bool operator==(const TokenLabels&, const TokenLabels&) = default;
};

inline std::vector<Token> tokenize(std::u32string_view text, TokenizerMode mode) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (utf8::is_space(text[i])) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (mode == TokenizerMode::Whitespace) {
      while (j < text.size() && !utf8::is_space(text[j])) ++j;
    }
    out.push_back({utf8::encode(text.substr(i, j - i)), i, j});
    i = j;
  }
  return out;
}

/// Splits on Unicode whitespace runs, or emits one token per non-space
/// scalar value. Offsets index scalar values of `text`.
inline std::vector<Token> tokenize(std::string_view text, TokenizerMode mode) {
  return tokenize(std::u32string_view(utf8::decode(text)), mode);
}

/// Rebuilds tokens from stored offsets.
inline std::vector<Token> tokens_from_offsets(
    std::string_view text, const std::vector<std::pair<std::size_t, std::size_t>>& offsets) {
  const auto u = utf8::decode(text);
  std::vector<Token> out;
  out.reserve(offsets.size());
  for (auto [s, e] : offsets) {
    if (s >= e || e > u.size()) {
      throw Error(ErrorKind::OffsetMismatch,
                  "token [" + std::to_string(s) + "," + std::to_string(e) +
                      ") outside text of length " + std::to_string(u.size()));
    }
    out.push_back({utf8::encode(std::u32string_view(u).substr(s, e - s)), s, e});
  }
  return out;
}

/// Inside-Out projection. A token takes the label of a span it overlaps by at
/// least one character; when several spans touch one token, the span with
/// the largest overlap wins and ties go to the leftmost span.
inline TokenLabels project_labels(const AnnotatedText& doc, const std::vector<Token>& tokens,
                                  Task task) {
  const std::size_t text_len = utf8::length(doc.text);
  TokenLabels out;
  out.task = task;
  out.tokens = tokens;
  out.labels.assign(tokens.size(), Label::O);

  std::size_t first_span = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const auto& tok = tokens[t];
    if (tok.end > text_len || tok.start >= tok.end) {
      throw Error(ErrorKind::OffsetMismatch,
                  "token [" + std::to_string(tok.start) + "," + std::to_string(tok.end) +
                      ") outside text of length " + std::to_string(text_len));
    }
    while (first_span < doc.spans.size() && doc.spans[first_span].end <= tok.start) ++first_span;
    std::size_t best_overlap = 0;
    for (std::size_t s = first_span; s < doc.spans.size() && doc.spans[s].start < tok.end; ++s) {
      const auto& sp = doc.spans[s];
      const std::size_t lo = std::max(sp.start, tok.start);
      const std::size_t hi = std::min(sp.end, tok.end);
      if (hi > lo && hi - lo > best_overlap) {
        best_overlap = hi - lo;
        out.labels[t] = task == Task::Binary ? Label::H : to_label(sp.htype);
      }
    }
  }
  return out;
}

/// Maps every positive label to H and marks the labeling binary.
inline TokenLabels to_binary(TokenLabels tl) {
  for (auto& l : tl.labels) l = binarize(l);
  tl.task = Task::Binary;
  return tl;
}

/// Maximal runs of one non-O label become spans. H runs carry no type and
/// come back as ENT spans.
inline std::vector<Span> labels_to_spans(const TokenLabels& tl) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < tl.labels.size()) {
    const Label l = tl.labels[i];
    if (!is_positive(l)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tl.labels.size() && tl.labels[j] == l) ++j;
    out.push_back({tl.tokens[i].start, tl.tokens[j - 1].end,
                   type_of(l).value_or(HallucinationType::ENT)});
    i = j;
  }
  return out;
}

}  // namespace halluest::labeling
