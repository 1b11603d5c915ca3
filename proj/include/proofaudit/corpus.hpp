#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "proofaudit/lexref.hpp"
#include "proofaudit/rng.hpp"
#include "proofaudit/runlog.hpp"

namespace proofaudit {

// ---------------------------------------------------------------------------
// Lemma extraction from Isabelle theory text.
//
// This reproduces, operationally, the backtracking-regex semantics of
//
//   (?:lemma|theorem)\s+[^:]+?\s*:(?:[\s\S](?!lemma|theorem))+?qed
//
// under leftmost non-overlapping matching: a block starts at a literal
// "lemma"/"theorem" followed by whitespace, runs through the first ':' (at
// least one character after the whitespace), then consumes body characters
// one at a time -- each consumed character must not be immediately followed
// by a new "lemma"/"theorem" start -- until the first "qed". The pattern's
// known quirks (premature truncation at an early "qed", failure when a
// keyword appears in the body, matches starting inside longer words) are
// deliberate: the baseline population must be built the same way.
// ---------------------------------------------------------------------------

struct ExtractedLemma {
  std::string text;
  std::size_t begin = 0;  // byte offsets into the source
  std::size_t end = 0;
  std::string source_path;
};

namespace detail {

// Python-re \s over ASCII.
inline bool is_scan_ws(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool starts_keyword(std::string_view text, std::size_t pos) {
  return text.compare(pos, 5, "lemma") == 0 ||
         text.compare(pos, 7, "theorem") == 0;
}

// End offset of a match starting exactly at `i`, or npos.
inline std::size_t match_block_at(std::string_view text, std::size_t i) {
  constexpr std::size_t npos = std::string_view::npos;
  const std::size_t n = text.size();
  std::size_t k;
  if (text.compare(i, 5, "lemma") == 0) k = i + 5;
  else if (text.compare(i, 7, "theorem") == 0) k = i + 7;
  else return npos;
  if (k >= n || !is_scan_ws(text[k])) return npos;
  std::size_t colon = text.find(':', k);
  if (colon == npos || colon - k < 2) return npos;  // \s+ then >=1 name char
  // Body: consume at least one character; after consuming the character at
  // p, position p+1 must not start a keyword; stop at the first "qed".
  std::size_t e = colon + 1;
  while (true) {
    if (e >= n) return npos;
    if (starts_keyword(text, e + 1)) return npos;
    ++e;
    if (text.compare(e, 3, "qed") == 0) return e + 3;
  }
}

}  // namespace detail

inline std::vector<ExtractedLemma> extract_lemmas(std::string_view source,
                                                  std::string source_path = {}) {
  std::vector<ExtractedLemma> out;
  std::size_t i = 0;
  while (i < source.size()) {
    std::size_t end = detail::match_block_at(source, i);
    if (end == std::string_view::npos) {
      ++i;
      continue;
    }
    ExtractedLemma lem;
    lem.text = std::string(source.substr(i, end - i));
    lem.begin = i;
    lem.end = end;
    lem.source_path = source_path;
    out.push_back(std::move(lem));
    i = end;
  }
  return out;
}

// Uniform sample without replacement, deterministic under seed (Fisher-Yates
// driven by SplitMix64). Extractions that tokenize to nothing are dropped
// before sampling. sample_size == all keeps everything, shuffled.
inline std::vector<LemmaRecord> build_population(
    const std::vector<ExtractedLemma>& extractions, std::size_t sample_size,
    std::uint64_t seed) {
  std::vector<const ExtractedLemma*> usable;
  usable.reserve(extractions.size());
  for (const auto& e : extractions)
    if (!tokenize(e.text).empty()) usable.push_back(&e);
  if (sample_size > usable.size())
    throw std::invalid_argument(
        "sample_size " + std::to_string(sample_size) + " exceeds " +
        std::to_string(usable.size()) + " usable extractions");
  SplitMix64 rng(seed);
  for (std::size_t i = usable.size(); i > 1; --i)
    std::swap(usable[i - 1], usable[rng.below(i)]);
  std::vector<LemmaRecord> out;
  out.reserve(sample_size);
  for (std::size_t i = 0; i < sample_size; ++i) {
    const ExtractedLemma& e = *usable[i];
    std::string id = e.source_path.empty()
                         ? "corpus:" + std::to_string(e.begin)
                         : e.source_path + ":" + std::to_string(e.begin);
    out.push_back(make_lemma(std::move(id), extract_name(e.text), e.text,
                             Population::corpus));
  }
  return out;
}

}  // namespace proofaudit
