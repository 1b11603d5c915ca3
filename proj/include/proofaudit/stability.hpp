#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "proofaudit/budget.hpp"
#include "proofaudit/runlog.hpp"

namespace proofaudit {

// ---------------------------------------------------------------------------
// Prompt-stability metrics over a problems x runs solve matrix whose columns
// are partitioned into baseline-prompt trials and paraphrased-prompt trials.
// "Solved by a partition" means solved in at least one of its runs.
// ---------------------------------------------------------------------------

struct SolveMatrix {
  std::vector<std::string> problems;       // row labels
  std::vector<std::string> run_ids;        // column labels
  std::vector<bool> is_baseline;           // per column
  std::vector<std::vector<bool>> solved;   // rows x columns

  std::size_t baseline_columns() const {
    return static_cast<std::size_t>(
        std::count(is_baseline.begin(), is_baseline.end(), true));
  }

  void check() const {
    if (problems.empty()) throw std::invalid_argument("empty problem set");
    if (run_ids.size() != is_baseline.size() || solved.size() != problems.size())
      throw std::invalid_argument("solve matrix shape mismatch");
    for (const auto& row : solved)
      if (row.size() != run_ids.size())
        throw std::invalid_argument("ragged solve matrix row");
    std::size_t nb = baseline_columns();
    if (nb == 0 || nb == run_ids.size())
      throw std::invalid_argument(
          "need at least one baseline and one paraphrase column");
  }
};

// CSV layout:
//   partition,baseline,baseline,...,paraphrase
//   problem,run_a,run_b,...,run_j
//   <problem_id>,1,0,...,1
inline SolveMatrix solve_matrix_from_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
  };
  SolveMatrix m;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty solve matrix file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = split(line);
  if (header.empty() || header[0] != "partition")
    throw std::runtime_error("first line must declare the partition");
  for (std::size_t i = 1; i < header.size(); ++i) {
    if (header[i] == "baseline") m.is_baseline.push_back(true);
    else if (header[i] == "paraphrase") m.is_baseline.push_back(false);
    else throw std::runtime_error("partition entries must be baseline|paraphrase");
  }
  if (!std::getline(in, line)) throw std::runtime_error("missing run-id line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto ids = split(line);
  if (ids.size() != m.is_baseline.size() + 1)
    throw std::runtime_error("run-id line width does not match partition line");
  m.run_ids.assign(ids.begin() + 1, ids.end());
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != m.run_ids.size() + 1)
      throw std::runtime_error("row \"" + cells[0] + "\" has wrong width");
    m.problems.push_back(cells[0]);
    std::vector<bool> row;
    for (std::size_t i = 1; i < cells.size(); ++i) {
      if (cells[i] == "1") row.push_back(true);
      else if (cells[i] == "0") row.push_back(false);
      else throw std::runtime_error("cells must be 0 or 1, got \"" + cells[i] + "\"");
    }
    m.solved.push_back(std::move(row));
  }
  m.check();
  return m;
}

// Baseline columns from one bundle's runs, paraphrase columns from the
// other's. Problems are the union of task ids; a missing task is unsolved.
inline SolveMatrix solve_matrix_from_bundles(const RunBundle& baseline,
                                             const RunBundle& paraphrase) {
  SolveMatrix m;
  std::set<std::string> problems;
  std::vector<std::set<std::string>> solved_by_col;
  auto add_bundle = [&](const RunBundle& b, bool is_baseline) {
    std::map<std::string, std::set<std::string>> per_run;
    for (const auto& a : b.attempts) {
      problems.insert(a.task_id);
      auto& solved = per_run[a.run_id];
      if (a.verified) solved.insert(a.task_id);
    }
    for (auto& [run, solved] : per_run) {
      m.run_ids.push_back(run);
      m.is_baseline.push_back(is_baseline);
      solved_by_col.push_back(std::move(solved));
    }
  };
  add_bundle(baseline, true);
  add_bundle(paraphrase, false);
  m.problems.assign(problems.begin(), problems.end());
  for (const auto& p : m.problems) {
    std::vector<bool> row;
    row.reserve(solved_by_col.size());
    for (const auto& solved : solved_by_col) row.push_back(solved.count(p) > 0);
    m.solved.push_back(std::move(row));
  }
  m.check();
  return m;
}

namespace detail {

inline bool solved_in_partition(const SolveMatrix& m, std::size_t row,
                                bool baseline) {
  for (std::size_t c = 0; c < m.run_ids.size(); ++c)
    if (m.is_baseline[c] == baseline && m.solved[row][c]) return true;
  return false;
}

}  // namespace detail

// Fraction of problems solved by some paraphrase run and no baseline run.
inline double max_potential_gain(const SolveMatrix& m) {
  m.check();
  std::size_t hits = 0;
  for (std::size_t r = 0; r < m.problems.size(); ++r)
    if (detail::solved_in_partition(m, r, false) &&
        !detail::solved_in_partition(m, r, true))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(m.problems.size());
}

// Fraction of problems solved by some baseline run and no paraphrase run.
inline double max_potential_loss(const SolveMatrix& m) {
  m.check();
  std::size_t hits = 0;
  for (std::size_t r = 0; r < m.problems.size(); ++r)
    if (detail::solved_in_partition(m, r, true) &&
        !detail::solved_in_partition(m, r, false))
      ++hits;
  return static_cast<double>(hits) / static_cast<double>(m.problems.size());
}

struct StabilityReport {
  double baseline_mean = 0.0;
  double baseline_std = 0.0;
  double paraphrase_mean = 0.0;
  double paraphrase_std = 0.0;
  double max_potential_gain = 0.0;
  double max_potential_loss = 0.0;
};

inline StabilityReport stability_report(const SolveMatrix& m) {
  m.check();
  std::vector<double> base_acc, para_acc;
  for (std::size_t c = 0; c < m.run_ids.size(); ++c) {
    std::size_t solved = 0;
    for (std::size_t r = 0; r < m.problems.size(); ++r)
      if (m.solved[r][c]) ++solved;
    double acc = static_cast<double>(solved) /
                 static_cast<double>(m.problems.size());
    (m.is_baseline[c] ? base_acc : para_acc).push_back(acc);
  }
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  StabilityReport rep;
  rep.baseline_mean = mean(base_acc);
  rep.baseline_std = detail::sample_std(base_acc, rep.baseline_mean);
  rep.paraphrase_mean = mean(para_acc);
  rep.paraphrase_std = detail::sample_std(para_acc, rep.paraphrase_mean);
  rep.max_potential_gain = max_potential_gain(m);
  rep.max_potential_loss = max_potential_loss(m);
  return rep;
}

inline nlohmann::json to_json(const StabilityReport& r) {
  return nlohmann::json{{"baseline_mean", r.baseline_mean},
                        {"baseline_std", r.baseline_std},
                        {"paraphrase_mean", r.paraphrase_mean},
                        {"paraphrase_std", r.paraphrase_std},
                        {"max_potential_gain", r.max_potential_gain},
                        {"max_potential_loss", r.max_potential_loss}};
}

}  // namespace proofaudit
