#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "halluest/error.hpp"

namespace halluest {

/// The six fine-grained hallucination categories of the FAVA taxonomy.
enum class HallucinationType : std::uint8_t { ENT, REL, INV, CON, UNV, SUB };

inline constexpr std::array<HallucinationType, 6> kAllTypes = {
    HallucinationType::ENT, HallucinationType::REL, HallucinationType::INV,
    HallucinationType::CON, HallucinationType::UNV, HallucinationType::SUB};

/// Canonical lowercase tag name used in markup.
inline constexpr std::string_view tag_name(HallucinationType t) {
  constexpr std::array<std::string_view, 6> names = {
      "entity", "relation", "invented", "contradictory", "unverifiable", "subjective"};
  return names[static_cast<std::size_t>(t)];
}

inline constexpr std::string_view code(HallucinationType t) {
  constexpr std::array<std::string_view, 6> codes = {"ENT", "REL", "INV", "CON", "UNV", "SUB"};
  return codes[static_cast<std::size_t>(t)];
}

/// Looks up a tag name, ASCII case-insensitively.
inline std::optional<HallucinationType> type_from_tag(std::string_view name) {
  for (auto t : kAllTypes) {
    const auto canon = tag_name(t);
    if (canon.size() != name.size()) continue;
    bool eq = true;
    for (std::size_t i = 0; i < name.size() && eq; ++i) {
      char c = name[i];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      eq = c == canon[i];
    }
    if (eq) return t;
  }
  return std::nullopt;
}

inline std::optional<HallucinationType> type_from_code(std::string_view c) {
  for (auto t : kAllTypes) {
    if (code(t) == c) return t;
  }
  return std::nullopt;
}

/// Half-open range [start, end) of scalar-value offsets into a host text.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  HallucinationType htype = HallucinationType::ENT;

  std::size_t length() const { return end - start; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct AnnotatedText {
  std::string text;
  std::vector<Span> spans;

  friend bool operator==(const AnnotatedText&, const AnnotatedText&) = default;
};

/// Checks the AnnotatedText invariants against a text of `text_len` scalars.
inline void validate_spans(const std::vector<Span>& spans, std::size_t text_len) {
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto& s = spans[i];
    if (s.start >= s.end || s.end > text_len) {
      throw Error(ErrorKind::InvalidSpans,
                  "span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                      ") is empty or exceeds text length " + std::to_string(text_len));
    }
    if (i > 0 && spans[i - 1].end > s.start) {
      throw Error(ErrorKind::InvalidSpans,
                  "spans unsorted or overlapping at index " + std::to_string(i));
    }
  }
}

enum class Task : std::uint8_t { Binary, Category };

inline constexpr std::string_view to_string(Task t) {
  return t == Task::Binary ? "binary" : "category";
}

inline Task task_from_string(std::string_view s) {
  if (s == "binary") return Task::Binary;
  if (s == "category") return Task::Category;
  throw Error(ErrorKind::InvalidParams, "unknown task '" + std::string(s) + "'");
}

/// Per-token label: O, one of the six types, or H (the merged binary class).
enum class Label : std::uint8_t { O, ENT, REL, INV, CON, UNV, SUB, H };

inline constexpr Label to_label(HallucinationType t) {
  return static_cast<Label>(static_cast<std::uint8_t>(t) + 1);
}

inline constexpr bool is_positive(Label l) { return l != Label::O; }

inline constexpr Label binarize(Label l) { return l == Label::O ? Label::O : Label::H; }

inline constexpr std::string_view to_string(Label l) {
  constexpr std::array<std::string_view, 8> names = {"O",   "ENT", "REL", "INV",
                                                     "CON", "UNV", "SUB", "H"};
  return names[static_cast<std::size_t>(l)];
}

inline std::optional<Label> label_from_string(std::string_view s) {
  for (std::uint8_t i = 0; i < 8; ++i) {
    if (to_string(static_cast<Label>(i)) == s) return static_cast<Label>(i);
  }
  return std::nullopt;
}

/// Type carried by a typed label; nullopt for O and H.
inline constexpr std::optional<HallucinationType> type_of(Label l) {
  if (l == Label::O || l == Label::H) return std::nullopt;
  return static_cast<HallucinationType>(static_cast<std::uint8_t>(l) - 1);
}

}  // namespace halluest
