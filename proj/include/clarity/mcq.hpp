#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace clarity {

inline constexpr int kMaxOptions = 26;

inline bool ascii_alnum(char c) {
  return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') ||
         (c >= 'a' && c <= 'z');
}

inline bool valid_option_letter(char c, int option_count) {
  return c >= 'A' && c < static_cast<char>('A' + option_count);
}

// Set of option letters, stored as a bitmask over A..Z.
struct OptionSet {
  uint32_t bits = 0;

  static OptionSet of(std::initializer_list<char> letters) {
    OptionSet s;
    for (char c : letters) s.insert(c);
    return s;
  }

  void insert(char letter) { bits |= 1u << (letter - 'A'); }
  bool contains(char letter) const { return bits & (1u << (letter - 'A')); }
  bool empty() const { return bits == 0; }
  int size() const { return __builtin_popcount(bits); }
  bool subset_of(OptionSet other) const { return (bits & ~other.bits) == 0; }
  bool strict_subset_of(OptionSet other) const {
    return subset_of(other) && bits != other.bits;
  }

  // Sorted letter run, e.g. "AC".
  std::string letters() const {
    std::string out;
    for (int i = 0; i < kMaxOptions; ++i)
      if (bits & (1u << i)) out.push_back(static_cast<char>('A' + i));
    return out;
  }

  std::string braced() const { return "{" + letters() + "}"; }

  friend bool operator==(OptionSet a, OptionSet b) { return a.bits == b.bits; }
};

struct MCQOption {
  char label;
  std::string text;
};

enum class Origin { original, reformulated };

struct MCQInstance {
  std::string id;
  std::string stem;
  std::vector<MCQOption> options;
  OptionSet answer;
  std::optional<double> pass_rate;
  Origin origin = Origin::original;
  std::vector<std::string> source_ids;  // non-empty iff reformulated

  int option_count() const { return static_cast<int>(options.size()); }
};

struct Proposition {
  std::string id;
  std::string statement;
  bool is_correct = false;
  std::string source_instance;
  char source_label = 'A';
  bool polished = false;
};

struct ParsedResponse {
  std::string thinking;
  OptionSet final_answer;
  bool has_think_tag = false;
  bool has_answer_tag = false;
};

// Collect valid option letters from a text span, deduplicated.
inline OptionSet letters_in(std::string_view text, int option_count) {
  OptionSet out;
  for (char c : text)
    if (valid_option_letter(c, option_count)) out.insert(c);
  return out;
}

// Valid letters occurring standalone, i.e. not adjacent to another ASCII
// alphanumeric. CJK bytes are non-ASCII so Latin labels embedded in Chinese
// text still match.
inline OptionSet standalone_letters(std::string_view text, int option_count) {
  OptionSet out;
  for (size_t i = 0; i < text.size(); ++i) {
    if (!valid_option_letter(text[i], option_count)) continue;
    if (i > 0 && ascii_alnum(text[i - 1])) continue;
    if (i + 1 < text.size() && ascii_alnum(text[i + 1])) continue;
    out.insert(text[i]);
  }
  return out;
}

// Option-set extraction with an unparseable signal: nullopt when the text
// has no brace group and no standalone valid letter. When brace groups are
// present, the last one wins even if it is empty ("{}").
inline std::optional<OptionSet> find_option_set(std::string_view text,
                                                int option_count) {
  size_t last_open = std::string_view::npos;
  size_t last_len = 0;
  size_t pos = 0;
  while (true) {
    const size_t open = text.find('{', pos);
    if (open == std::string_view::npos) break;
    const size_t close = text.find('}', open + 1);
    if (close == std::string_view::npos) break;
    last_open = open + 1;
    last_len = close - open - 1;
    pos = close + 1;
  }
  if (last_open != std::string_view::npos)
    return letters_in(text.substr(last_open, last_len), option_count);
  const OptionSet fallback = standalone_letters(text, option_count);
  if (fallback.empty()) return std::nullopt;
  return fallback;
}

inline OptionSet extract_option_set(std::string_view text, int option_count) {
  return find_option_set(text, option_count).value_or(OptionSet{});
}

// First <tag>...</tag> span; nullopt when the pair is absent or unclosed.
inline std::optional<std::string_view> first_tag_span(std::string_view text,
                                                      std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">";
  const std::string close = "</" + std::string(tag) + ">";
  const size_t begin = text.find(open);
  if (begin == std::string_view::npos) return std::nullopt;
  const size_t body = begin + open.size();
  const size_t end = text.find(close, body);
  if (end == std::string_view::npos) return std::nullopt;
  return text.substr(body, end - body);
}

// Never fails: malformed input yields unset flags and empty fields.
inline ParsedResponse parse_response(std::string_view raw, int option_count) {
  ParsedResponse out;
  if (auto think = first_tag_span(raw, "think")) {
    out.has_think_tag = true;
    out.thinking = std::string(*think);
  }
  if (auto answer = first_tag_span(raw, "answer")) {
    out.has_answer_tag = true;
    out.final_answer = extract_option_set(*answer, option_count);
  }
  return out;
}

inline std::vector<std::string> validate_instance(const MCQInstance& inst) {
  std::vector<std::string> violations;
  const int m = inst.option_count();
  if (m < 1 || m > kMaxOptions)
    violations.push_back("option count out of range");
  for (int i = 0; i < m; ++i) {
    if (inst.options[i].label != static_cast<char>('A' + i)) {
      violations.push_back("labels not consecutive");
      break;
    }
  }
  for (int i = 0; i < kMaxOptions; ++i) {
    if ((inst.answer.bits & (1u << i)) && i >= m) {
      violations.push_back("answer label out of range");
      break;
    }
  }
  if (inst.pass_rate && (*inst.pass_rate < 0.0 || *inst.pass_rate > 1.0))
    violations.push_back("pass_rate outside [0,1]");
  if (inst.origin == Origin::reformulated && inst.source_ids.empty())
    violations.push_back("reformulated instance without source_ids");
  if (inst.origin == Origin::original && !inst.source_ids.empty())
    violations.push_back("original instance with source_ids");
  return violations;
}

}  // namespace clarity
