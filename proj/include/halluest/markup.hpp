#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "halluest/error.hpp"
#include "halluest/types.hpp"
#include "halluest/utf8.hpp"

// Inline tag markup for hallucination spans:
//   "Messi is an <entity>American</entity> soccer player."
// Tags never nest. Tag names match case-insensitively and render lowercase.

namespace halluest::markup {

struct Warning {
  std::size_t offset;  // scalar offset in the tagged input
  std::string message;
};

namespace detail {

struct TagToken {
  bool closing = false;
  std::u32string name;
  std::size_t length = 0;  // scalars consumed, including brackets
};

inline bool is_ascii_alpha(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

/// Recognizes `<name>` or `</name>` starting at `pos`. Anything else starting
/// with '<' is plain text.
inline std::optional<TagToken> scan_tag(std::u32string_view s, std::size_t pos) {
  if (pos >= s.size() || s[pos] != U'<') return std::nullopt;
  TagToken tok;
  std::size_t i = pos + 1;
  if (i < s.size() && s[i] == U'/') {
    tok.closing = true;
    ++i;
  }
  const std::size_t name_start = i;
  while (i < s.size() && is_ascii_alpha(s[i])) ++i;
  if (i == name_start || i >= s.size() || s[i] != U'>') return std::nullopt;
  tok.name.assign(s.substr(name_start, i - name_start));
  tok.length = i + 1 - pos;
  return tok;
}

inline std::string narrow(std::u32string_view ascii) {
  std::string out;
  for (char32_t c : ascii) out.push_back(static_cast<char>(c));
  return out;
}

}  // namespace detail

/// Strips tags and returns the clean text with one span per tag pair.
/// Zero-length tag pairs are dropped and reported through `warnings`.
inline AnnotatedText parse_markup(std::string_view tagged,
                                  std::vector<Warning>* warnings = nullptr) {
  const std::u32string in = utf8::decode(tagged);
  std::u32string clean;
  clean.reserve(in.size());
  AnnotatedText doc;

  struct Open {
    bool active = false;
    HallucinationType type = HallucinationType::ENT;
    std::size_t tag_offset = 0;
    std::size_t clean_start = 0;
  } open;

  std::size_t i = 0;
  while (i < in.size()) {
    auto tag = detail::scan_tag(in, i);
    if (!tag) {
      clean.push_back(in[i]);
      ++i;
      continue;
    }
    const auto name = detail::narrow(tag->name);
    const auto type = type_from_tag(name);
    if (!type) throw Error(ErrorKind::UnknownTag, "tag '" + name + "'", i);

    if (!tag->closing) {
      if (open.active) {
        throw Error(ErrorKind::NestedTag,
                    "<" + name + "> opened inside <" + std::string(tag_name(open.type)) + ">", i);
      }
      open = Open{true, *type, i, clean.size()};
    } else {
      if (!open.active) throw Error(ErrorKind::UnbalancedTag, "</" + name + "> without opening tag", i);
      if (open.type != *type) {
        throw Error(ErrorKind::UnbalancedTag,
                    "</" + name + "> closes <" + std::string(tag_name(open.type)) + ">", i);
      }
      if (clean.size() == open.clean_start) {
        if (warnings) {
          warnings->push_back({open.tag_offset, "dropped zero-length <" +
                                                     std::string(tag_name(open.type)) + "> span"});
        }
      } else {
        doc.spans.push_back({open.clean_start, clean.size(), open.type});
      }
      open.active = false;
    }
    i += tag->length;
  }
  if (open.active) {
    throw Error(ErrorKind::UnbalancedTag,
                "<" + std::string(tag_name(open.type)) + "> never closed", open.tag_offset);
  }
  doc.text = utf8::encode(clean);
  return doc;
}

/// True if `text` contains a substring that parse_markup would read as a tag.
inline bool contains_tag_like(std::u32string_view text) {
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == U'<' && detail::scan_tag(text, i)) return true;
  }
  return false;
}

/// Inverse of parse_markup for valid documents.
inline std::string render_markup(const AnnotatedText& doc) {
  const std::u32string text = utf8::decode(doc.text);
  validate_spans(doc.spans, text.size());
  if (contains_tag_like(text)) {
    throw Error(ErrorKind::InvalidText, "text contains a tag-like sequence and cannot round-trip");
  }
  std::string out;
  out.reserve(doc.text.size() + doc.spans.size() * 24);
  std::size_t cursor = 0;
  auto emit = [&](std::size_t from, std::size_t to) {
    for (std::size_t k = from; k < to; ++k) utf8::append(out, text[k]);
  };
  for (const auto& s : doc.spans) {
    emit(cursor, s.start);
    const auto name = tag_name(s.htype);
    out.append("<").append(name).append(">");
    emit(s.start, s.end);
    out.append("</").append(name).append(">");
    cursor = s.end;
  }
  emit(cursor, text.size());
  return out;
}

}  // namespace halluest::markup
