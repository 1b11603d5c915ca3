#pragma once

// Independent reference implementations used only as test oracles. These are
// written against the definitions, not against the library code, so a bug in
// the production path cannot hide here.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "proofaudit/runlog.hpp"

namespace oracles {

// Textbook full-matrix longest-common-subsequence length.
inline std::size_t lcs_length(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<std::size_t>> dp(n + 1,
                                           std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      dp[i][j] = a[i - 1] == b[j - 1]
                     ? dp[i - 1][j - 1] + 1
                     : std::max(dp[i - 1][j], dp[i][j - 1]);
  return dp[n][m];
}

// A second whitespace splitter, kept deliberately different in style from
// the library's.
inline std::vector<std::string> split_ws(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Fraction of solved tasks whose verified-attempt prompts share a lemma with
// another solved task's verified-attempt prompts (direct enumeration).
inline double cross_task_sharing_fraction(const proofaudit::RunBundle& bundle) {
  std::map<std::string, std::set<std::string>> prompts_by_task;
  for (const auto& a : bundle.attempts) {
    if (!a.verified) continue;
    auto& s = prompts_by_task[a.task_id];
    for (const auto& id : a.prompt_lemmas) s.insert(id);
  }
  if (prompts_by_task.empty()) return 0.0;
  std::size_t sharing = 0;
  for (const auto& [task, lemmas] : prompts_by_task) {
    bool shared = false;
    for (const auto& [other_task, other_lemmas] : prompts_by_task) {
      if (other_task == task) continue;
      for (const auto& id : lemmas)
        if (other_lemmas.count(id)) {
          shared = true;
          break;
        }
      if (shared) break;
    }
    if (shared) ++sharing;
  }
  return static_cast<double>(sharing) /
         static_cast<double>(prompts_by_task.size());
}

}  // namespace oracles
