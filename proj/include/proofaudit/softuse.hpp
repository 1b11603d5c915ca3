#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <utility>
#include <vector>

#include "proofaudit/lexref.hpp"
#include "proofaudit/runlog.hpp"

namespace proofaudit {

// ---------------------------------------------------------------------------
// Soft-use scoring.
//
// The distance between a lemma and a solution is a Levenshtein variant over
// whitespace tokens where deleting or substituting a lemma token costs 1 and
// inserting a solution token costs 0. Free insertions mean the value ranges
// from 0 (every lemma token appears, in order, somewhere in the solution) to
// N, the lemma's token count (nothing survives). The normalized score is
// 1 - distance/N, so 1.0 is verbatim-grade reproduction and 0.0 is no
// order-respecting overlap at all.
//
// Equivalently distance = N - LCS(lemma, solution). The scalar operation
// runs the weighted recurrence directly; batch scoring runs a bit-parallel
// kernel built on the LCS identity. The two routes are pinned to each other
// and to an independent oracle in the tests.
// ---------------------------------------------------------------------------

struct SoftUseScore {
  std::size_t raw_distance = 0;
  std::size_t lemma_len = 0;  // N
  double score = 0.0;         // 1 - raw_distance / N

  bool operator==(const SoftUseScore&) const = default;
};

namespace detail {

// Maps solution tokens to dense ids so the DP inner loop compares integers.
// Lemma tokens that occur in no solution map to -1; the DP only ever
// compares lemma tokens against solution tokens, so -1 can never match.
// Keys view the caller's token storage, which must outlive the interner.
class TokenInterner {
 public:
  std::int32_t add(std::string_view token) {
    auto [it, fresh] =
        ids_.emplace(token, static_cast<std::int32_t>(ids_.size()));
    return it->second;
  }

  std::int32_t find(std::string_view token) const {
    auto it = ids_.find(token);
    return it == ids_.end() ? -1 : it->second;
  }

 private:
  std::unordered_map<std::string_view, std::int32_t> ids_;
};

inline std::vector<std::int32_t> intern_add(TokenInterner& interner,
                                            const TokenSeq& seq) {
  std::vector<std::int32_t> out;
  out.reserve(seq.size());
  for (const auto& t : seq.tokens) out.push_back(interner.add(t));
  return out;
}

inline std::vector<std::int32_t> intern_find(const TokenInterner& interner,
                                             const TokenSeq& seq) {
  std::vector<std::int32_t> out;
  out.reserve(seq.size());
  for (const auto& t : seq.tokens) out.push_back(interner.find(t));
  return out;
}

inline std::uint64_t add_carry(std::uint64_t a, std::uint64_t b,
                               std::uint64_t& carry) {
  std::uint64_t s = a + b;
  std::uint64_t c = s < a ? 1u : 0u;
  std::uint64_t out = s + carry;
  carry = c | (out < s ? 1u : 0u);
  return out;
}

inline std::uint64_t sub_borrow(std::uint64_t a, std::uint64_t b,
                                std::uint64_t& borrow) {
  std::uint64_t d = a - b;
  std::uint64_t c = a < b ? 1u : 0u;
  std::uint64_t out = d - borrow;
  borrow = c | (d < borrow ? 1u : 0u);
  return out;
}

// Bit-parallel distance kernel for one lemma against many solutions.
//
// With free insertions the distance is N - LCS, and LCS length admits the
// classic bit-vector recurrence over the lemma positions: keep V (N bits,
// initially all ones), and per solution token with match mask M,
//
//   U = V & M;  V = (V + U) | (V - U)
//
// after which the distance is popcount(V). Solution tokens that occur
// nowhere in the lemma leave V unchanged and are skipped outright, so a
// pair costs O(occurrences * N/64) plus one hash probe per solution token.
class BitLcsKernel {
 public:
  explicit BitLcsKernel(std::span<const std::int32_t> lemma_ids)
      : n_(lemma_ids.size()), words_((lemma_ids.size() + 63) / 64) {
    top_mask_ = (n_ % 64 == 0) ? ~0ull : ((1ull << (n_ % 64)) - 1);
    for (std::size_t i = 0; i < n_; ++i) {
      std::int32_t id = lemma_ids[i];
      if (id < 0) continue;  // occurs in no solution, can never match
      auto [it, fresh] = offsets_.emplace(id, masks_.size());
      if (fresh) masks_.resize(masks_.size() + words_, 0);
      masks_[it->second + i / 64] |= 1ull << (i % 64);
    }
  }

  std::size_t lemma_len() const { return n_; }

  std::size_t distance(std::span<const std::int32_t> solution_ids,
                       std::vector<std::uint64_t>& scratch) const {
    if (n_ == 0) return 0;
    scratch.assign(words_, ~0ull);
    scratch[words_ - 1] = top_mask_;
    for (std::int32_t id : solution_ids) {
      if (id < 0) continue;
      auto it = offsets_.find(id);
      if (it == offsets_.end()) continue;
      const std::uint64_t* mask = masks_.data() + it->second;
      std::uint64_t carry = 0, borrow = 0;
      for (std::size_t w = 0; w < words_; ++w) {
        std::uint64_t v = scratch[w];
        std::uint64_t u = v & mask[w];
        scratch[w] = add_carry(v, u, carry) | sub_borrow(v, u, borrow);
      }
      scratch[words_ - 1] &= top_mask_;
    }
    std::size_t bits = 0;
    for (std::uint64_t w : scratch) bits += std::popcount(w);
    return bits;
  }

  std::size_t distance(std::span<const std::int32_t> solution_ids) const {
    std::vector<std::uint64_t> scratch;
    return distance(solution_ids, scratch);
  }

 private:
  std::size_t n_;
  std::size_t words_;
  std::uint64_t top_mask_;
  std::unordered_map<std::int32_t, std::size_t> offsets_;
  std::vector<std::uint64_t> masks_;
};

// col[i] = cost of turning lemma[0..i) into the solution prefix consumed so
// far; col[0] stays 0 because insertions are free.
inline std::size_t weighted_embed_distance(
    std::span<const std::int32_t> lemma,
    std::span<const std::int32_t> solution) {
  const std::size_t n = lemma.size();
  std::vector<std::uint32_t> col(n + 1);
  for (std::size_t i = 0; i <= n; ++i) col[i] = static_cast<std::uint32_t>(i);
  for (std::int32_t sol_token : solution) {
    std::uint32_t diag = col[0];
    for (std::size_t i = 1; i <= n; ++i) {
      std::uint32_t up = col[i];
      std::uint32_t best = col[i];  // insert the solution token, cost 0
      std::uint32_t del = col[i - 1] + 1;
      if (del < best) best = del;
      std::uint32_t sub = diag + (lemma[i - 1] == sol_token ? 0u : 1u);
      if (sub < best) best = sub;
      col[i] = best;
      diag = up;
    }
  }
  return col[n];
}

}  // namespace detail

// Minimum cost to embed `lemma` in `solution` (delete 1, substitute 1,
// insert 0). Token comparison is exact string equality. O(N*M) time,
// O(N) memory.
inline std::size_t modified_levenshtein(const TokenSeq& lemma,
                                        const TokenSeq& solution) {
  if (lemma.empty())
    throw std::invalid_argument(
        "modified_levenshtein: empty lemma (score denominator would be 0)");
  detail::TokenInterner interner;
  std::vector<std::int32_t> sol_ids = detail::intern_add(interner, solution);
  std::vector<std::int32_t> lemma_ids = detail::intern_find(interner, lemma);
  return detail::weighted_embed_distance(lemma_ids, sol_ids);
}

inline SoftUseScore soft_use_score(const TokenSeq& lemma,
                                   const TokenSeq& solution) {
  SoftUseScore s;
  s.lemma_len = lemma.size();
  s.raw_distance = modified_levenshtein(lemma, solution);
  s.score = 1.0 - static_cast<double>(s.raw_distance) /
                      static_cast<double>(s.lemma_len);
  return s;
}

inline SoftUseScore soft_use_score(std::string_view lemma_text,
                                   std::string_view solution) {
  return soft_use_score(tokenize(lemma_text), tokenize(solution));
}

inline SoftUseScore soft_use_score(const LemmaRecord& lemma,
                                   std::string_view solution) {
  TokenSeq lt = tokenize(lemma.text);
  if (lt.empty())
    throw std::invalid_argument("lemma \"" + lemma.lemma_id +
                                "\" tokenizes to nothing");
  return soft_use_score(lt, tokenize(solution));
}

// ---------------------------------------------------------------------------
// Batch scoring. One cell per (lemma, solution) pair, row-major. Workers
// split rows; the integer DP makes results identical for any worker count.
// ---------------------------------------------------------------------------

struct ScoreMatrix {
  std::vector<std::string> lemma_ids;  // rows
  std::vector<std::string> task_ids;   // columns
  std::vector<SoftUseScore> cells;     // row-major, rows x columns

  const SoftUseScore& at(std::size_t row, std::size_t col) const {
    return cells[row * task_ids.size() + col];
  }
};

inline ScoreMatrix score_matrix(
    std::span<const LemmaRecord> lemmas,
    std::span<const std::pair<std::string, std::string>> solutions,
    unsigned workers = 1) {
  ScoreMatrix out;
  out.lemma_ids.reserve(lemmas.size());
  std::vector<TokenSeq> lemma_tokens;
  lemma_tokens.reserve(lemmas.size());
  for (const auto& l : lemmas) {
    TokenSeq t = tokenize(l.text);
    if (t.empty())
      throw std::invalid_argument("lemma \"" + l.lemma_id +
                                  "\" tokenizes to nothing");
    out.lemma_ids.push_back(l.lemma_id);
    lemma_tokens.push_back(std::move(t));
  }
  std::vector<TokenSeq> solution_tokens;
  solution_tokens.reserve(solutions.size());
  for (const auto& [task_id, text] : solutions) {
    out.task_ids.push_back(task_id);
    solution_tokens.push_back(tokenize(text));
  }
  out.cells.resize(lemmas.size() * solutions.size());

  // One shared dictionary: each text is interned once, and every pairwise
  // DP runs over integer ids.
  detail::TokenInterner interner;
  std::vector<std::vector<std::int32_t>> solution_ids;
  solution_ids.reserve(solution_tokens.size());
  for (const auto& seq : solution_tokens)
    solution_ids.push_back(detail::intern_add(interner, seq));
  std::vector<std::vector<std::int32_t>> lemma_ids;
  lemma_ids.reserve(lemma_tokens.size());
  for (const auto& seq : lemma_tokens)
    lemma_ids.push_back(detail::intern_find(interner, seq));

  auto score_rows = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint64_t> scratch;
    for (std::size_t r = begin; r < end; ++r) {
      detail::BitLcsKernel kernel(lemma_ids[r]);
      for (std::size_t c = 0; c < solution_ids.size(); ++c) {
        SoftUseScore& cell = out.cells[r * solution_ids.size() + c];
        cell.lemma_len = kernel.lemma_len();
        cell.raw_distance = kernel.distance(solution_ids[c], scratch);
        cell.score = 1.0 - static_cast<double>(cell.raw_distance) /
                               static_cast<double>(cell.lemma_len);
      }
    }
  };

  if (workers <= 1 || lemmas.size() < 2) {
    score_rows(0, lemmas.size());
    return out;
  }
  unsigned count = std::min<std::size_t>(workers, lemmas.size());
  std::vector<std::thread> pool;
  pool.reserve(count);
  std::size_t chunk = (lemmas.size() + count - 1) / count;
  for (unsigned w = 0; w < count; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(lemmas.size(), begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(score_rows, begin, end);
  }
  for (auto& t : pool) t.join();
  return out;
}

}  // namespace proofaudit
