#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace proofaudit {

// Whitespace-delimited view of a text. Tokens never contain whitespace and
// are never empty; source_len is the character count of the original text.
struct TokenSeq {
  std::vector<std::string> tokens;
  std::size_t source_len = 0;

  bool empty() const { return tokens.empty(); }
  std::size_t size() const { return tokens.size(); }
};

inline bool is_token_separator(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r';
}

// Splits on maximal runs of whitespace (space, tab, LF, CR). Empty or
// whitespace-only input yields an empty sequence.
inline TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  seq.source_len = text.size();
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    while (i < n && is_token_separator(text[i])) ++i;
    std::size_t start = i;
    while (i < n && !is_token_separator(text[i])) ++i;
    if (i > start) seq.tokens.emplace_back(text.substr(start, i - start));
  }
  return seq;
}

inline std::string join_tokens(const TokenSeq& seq) {
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i) out += ' ';
    out += seq.tokens[i];
  }
  return out;
}

// CRLF and bare CR become LF.
inline std::string normalize_newlines(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r') {
      out += '\n';
      if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
    } else {
      out += s[i];
    }
  }
  return out;
}

// Name of the statement introduced by the first "lemma"/"theorem" keyword
// token: the following token, truncated at its first ':'. Absent when there
// is no keyword, the candidate starts with '"' (an unnamed quoted
// statement), or nothing is left after truncation. The result never
// contains whitespace or ':'.
inline std::optional<std::string> extract_name(std::string_view lemma_text) {
  TokenSeq seq = tokenize(lemma_text);
  for (std::size_t i = 0; i + 1 < seq.tokens.size(); ++i) {
    if (seq.tokens[i] != "lemma" && seq.tokens[i] != "theorem") continue;
    const std::string& candidate = seq.tokens[i + 1];
    if (candidate.empty() || candidate.front() == '"') return std::nullopt;
    std::string name = candidate.substr(0, candidate.find(':'));
    if (name.empty()) return std::nullopt;
    return name;
  }
  return std::nullopt;
}

// Contiguous-substring containment after LF-normalizing both sides.
// Comments are not stripped; tolerance for cosmetic edits is the job of
// name matching.
inline bool verbatim_used(std::string_view lemma_text, std::string_view solution) {
  if (lemma_text.empty()) return false;
  std::string needle = normalize_newlines(lemma_text);
  std::string haystack = normalize_newlines(solution);
  return haystack.find(needle) != std::string::npos;
}

enum class NameMatch {
  whole_word,  // delimited by non-identifier characters or string boundaries
  substring,   // raw containment, the permissive reading
};

// Isabelle identifier characters.
inline bool is_identifier_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '\'';
}

// True iff `name` occurs in `solution`; whole-word mode rejects occurrences
// embedded in a longer identifier (e.g. sum_of_powers inside
// prod_sum_of_powers).
inline bool name_used(std::string_view name, std::string_view solution,
                      NameMatch mode = NameMatch::whole_word) {
  if (name.empty()) return false;
  std::size_t pos = 0;
  while ((pos = solution.find(name, pos)) != std::string_view::npos) {
    if (mode == NameMatch::substring) return true;
    bool left_ok = pos == 0 || !is_identifier_char(solution[pos - 1]);
    std::size_t end = pos + name.size();
    bool right_ok = end == solution.size() || !is_identifier_char(solution[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

}  // namespace proofaudit
