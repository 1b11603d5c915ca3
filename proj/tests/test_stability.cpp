#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "proofaudit/rng.hpp"
#include "proofaudit/stability.hpp"

using namespace proofaudit;

namespace {

// 5 baseline + 5 paraphrase columns over `problems` problems; each set lists
// the problems a column solves.
SolveMatrix matrix_from_sets(std::size_t problems,
                             const std::vector<std::set<int>>& baseline,
                             const std::vector<std::set<int>>& paraphrase) {
  SolveMatrix m;
  for (std::size_t p = 0; p < problems; ++p)
    m.problems.push_back("p" + std::to_string(p));
  std::size_t col = 0;
  auto add = [&](const std::vector<std::set<int>>& cols, bool is_baseline) {
    for (const auto& solved : cols) {
      m.run_ids.push_back((is_baseline ? "base" : "para") + std::to_string(col++));
      m.is_baseline.push_back(is_baseline);
      (void)solved;
    }
  };
  add(baseline, true);
  add(paraphrase, false);
  for (std::size_t p = 0; p < problems; ++p) {
    std::vector<bool> row;
    for (const auto& solved : baseline)
      row.push_back(solved.count(static_cast<int>(p)) > 0);
    for (const auto& solved : paraphrase)
      row.push_back(solved.count(static_cast<int>(p)) > 0);
    m.solved.push_back(row);
  }
  m.check();
  return m;
}

std::set<int> range_set(int n) {
  std::set<int> s;
  for (int i = 0; i < n; ++i) s.insert(i);
  return s;
}

}  // namespace

TEST_CASE("degenerate matrices") {
  SolveMatrix all = matrix_from_sets(4, {range_set(4)}, {range_set(4)});
  StabilityReport r = stability_report(all);
  CHECK(r.baseline_mean == 1.0);
  CHECK(r.paraphrase_mean == 1.0);
  CHECK(r.baseline_std == 0.0);
  CHECK(r.max_potential_gain == 0.0);
  CHECK(r.max_potential_loss == 0.0);

  SolveMatrix none = matrix_from_sets(4, {{}}, {{}});
  CHECK(max_potential_gain(none) == 0.0);
  CHECK(max_potential_loss(none) == 0.0);
}

TEST_CASE("gain and loss definitions") {
  // 6 problems, exactly one solved only by a paraphrase run
  SolveMatrix m = matrix_from_sets(6, {{0, 1}, {0}}, {{0, 1, 2}, {1}});
  CHECK_THAT(max_potential_gain(m), Catch::Matchers::WithinAbs(1.0 / 6, 1e-12));
  CHECK(max_potential_loss(m) == 0.0);

  // paraphrase solves a superset: loss 0
  SolveMatrix superset = matrix_from_sets(5, {{1}}, {{1, 2, 3}});
  CHECK(max_potential_loss(superset) == 0.0);

  // one baseline-only problem among 10
  SolveMatrix one_loss = matrix_from_sets(10, {{0, 4}}, {{0}});
  CHECK_THAT(max_potential_loss(one_loss), Catch::Matchers::WithinAbs(0.10, 1e-12));
}

TEST_CASE("trial-table matrices reproduce the reported figures") {
  struct Row {
    const char* label;
    std::vector<std::set<int>> baseline, paraphrase;
    double base_mean, base_std, para_mean, para_std, gain, loss;
  };
  // 12-problem, 5+5-run matrices reverse-engineered from the reported
  // mean/std/gain/loss figures (percent, sample std over runs).
  std::vector<Row> rows = {
      {"baseline-system-val",
       {range_set(6), range_set(6), range_set(6), range_set(6), range_set(6)},
       {range_set(6), range_set(6), range_set(6), range_set(6), range_set(5)},
       50.0, 0.0, 48.3, 3.7, 0.0, 0.0},
      {"learner-system-val",
       {range_set(5), range_set(5), range_set(5), range_set(4), range_set(4)},
       {range_set(5), range_set(5), range_set(5), range_set(4), range_set(4)},
       38.3, 4.6, 38.3, 4.6, 0.0, 0.0},
      {"baseline-system-test",
       {{0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1}},
       {{0, 1}, {0, 1}, {0, 1}, {0, 1, 2}, {0, 1, 3}},
       16.7, 0.0, 20.0, 4.6, 16.7, 0.0},
      {"learner-system-test",
       {{0, 1}, {0, 1}, {0, 1}, {0, 1}, {0, 1, 2}},
       {{0}, {0, 1}, {0, 1}, {0, 1}, {0, 1, 2}},
       18.3, 3.7, 16.7, 5.9, 0.0, 0.0},
  };
  for (const auto& row : rows) {
    INFO(row.label);
    SolveMatrix m = matrix_from_sets(12, row.baseline, row.paraphrase);
    StabilityReport r = stability_report(m);
    CHECK_THAT(100 * r.baseline_mean, Catch::Matchers::WithinAbs(row.base_mean, 0.05));
    CHECK_THAT(100 * r.baseline_std, Catch::Matchers::WithinAbs(row.base_std, 0.05));
    CHECK_THAT(100 * r.paraphrase_mean, Catch::Matchers::WithinAbs(row.para_mean, 0.05));
    CHECK_THAT(100 * r.paraphrase_std, Catch::Matchers::WithinAbs(row.para_std, 0.05));
    CHECK_THAT(100 * r.max_potential_gain, Catch::Matchers::WithinAbs(row.gain, 0.05));
    CHECK_THAT(100 * r.max_potential_loss, Catch::Matchers::WithinAbs(row.loss, 0.05));
  }
}

TEST_CASE("stability_report equals brute-force recomputation on random matrices") {
  SplitMix64 rng(606);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t problems = 1 + rng.below(20);
    std::size_t base_cols = 1 + rng.below(5);
    std::size_t para_cols = 1 + rng.below(5);
    SolveMatrix m;
    for (std::size_t p = 0; p < problems; ++p)
      m.problems.push_back("p" + std::to_string(p));
    for (std::size_t c = 0; c < base_cols + para_cols; ++c) {
      m.run_ids.push_back("r" + std::to_string(c));
      m.is_baseline.push_back(c < base_cols);
    }
    for (std::size_t p = 0; p < problems; ++p) {
      std::vector<bool> row;
      for (std::size_t c = 0; c < base_cols + para_cols; ++c)
        row.push_back(rng.bernoulli(0.4));
      m.solved.push_back(row);
    }
    StabilityReport r = stability_report(m);

    // independent enumeration
    double gain = 0, loss = 0, both = 0, neither = 0;
    for (std::size_t p = 0; p < problems; ++p) {
      bool in_base = false, in_para = false;
      for (std::size_t c = 0; c < m.run_ids.size(); ++c) {
        if (m.solved[p][c]) (m.is_baseline[c] ? in_base : in_para) = true;
      }
      if (in_para && !in_base) gain += 1;
      if (in_base && !in_para) loss += 1;
      if (in_base && in_para) both += 1;
      if (!in_base && !in_para) neither += 1;
    }
    CHECK_THAT(r.max_potential_gain,
               Catch::Matchers::WithinAbs(gain / problems, 1e-12));
    CHECK_THAT(r.max_potential_loss,
               Catch::Matchers::WithinAbs(loss / problems, 1e-12));
    // the partition identity
    CHECK_THAT((gain + loss + both + neither) / problems,
               Catch::Matchers::WithinAbs(1.0, 1e-12));

    // permuting columns within a partition changes nothing
    SolveMatrix shuffled = m;
    if (base_cols > 1) {
      for (auto& row : shuffled.solved) {
        std::vector<bool> r2(row);
        r2[0] = row[base_cols - 1];
        r2[base_cols - 1] = row[0];
        row = r2;
      }
    }
    StabilityReport rs = stability_report(shuffled);
    CHECK_THAT(rs.baseline_mean, Catch::Matchers::WithinAbs(r.baseline_mean, 1e-12));
    CHECK_THAT(rs.baseline_std, Catch::Matchers::WithinAbs(r.baseline_std, 1e-12));
    CHECK_THAT(rs.max_potential_gain,
               Catch::Matchers::WithinAbs(r.max_potential_gain, 1e-12));

    // a paraphrase column that solves nothing never helps gain or hurts loss
    SolveMatrix extended = m;
    extended.run_ids.push_back("dead");
    extended.is_baseline.push_back(false);
    for (auto& row : extended.solved) row.push_back(false);
    CHECK(max_potential_gain(extended) <= r.max_potential_gain);
    CHECK(max_potential_loss(extended) >= r.max_potential_loss);
  }
}

TEST_CASE("solve matrix CSV parsing") {
  std::string csv =
      "partition,baseline,baseline,paraphrase\n"
      "problem,run1,run2,run3\n"
      "p1,1,0,1\n"
      "p2,0,0,1\n";
  std::istringstream in(csv);
  SolveMatrix m = solve_matrix_from_csv(in);
  REQUIRE(m.problems.size() == 2);
  REQUIRE(m.run_ids.size() == 3);
  CHECK(m.is_baseline == std::vector<bool>{true, true, false});
  CHECK(m.solved[0] == std::vector<bool>{true, false, true});
  CHECK_THAT(max_potential_gain(m), Catch::Matchers::WithinAbs(0.5, 1e-12));

  std::istringstream bad_cell(
      "partition,baseline,paraphrase\nproblem,a,b\np1,2,0\n");
  CHECK_THROWS(solve_matrix_from_csv(bad_cell));
  std::istringstream no_para("partition,baseline\nproblem,a\np1,1\n");
  CHECK_THROWS(solve_matrix_from_csv(no_para));
  std::istringstream empty("partition,baseline,paraphrase\nproblem,a,b\n");
  CHECK_THROWS_WITH(solve_matrix_from_csv(empty),
                    Catch::Matchers::ContainsSubstring("empty problem set"));
}

TEST_CASE("solve matrix from two bundles") {
  auto attempt = [](const std::string& run, const std::string& task,
                    bool verified) {
    Attempt a;
    a.run_id = run;
    a.system = SystemTag::parse("baseline");
    a.model = "m";
    a.task_id = task;
    a.attempt_index = 1;
    a.solution_text = "s";
    a.verified = verified;
    return a;
  };
  RunBundle base, para;
  base.attempts = {attempt("b1", "t1", true), attempt("b1", "t2", false),
                   attempt("b2", "t1", false)};
  para.attempts = {attempt("q1", "t1", false), attempt("q1", "t3", true)};
  SolveMatrix m = solve_matrix_from_bundles(base, para);
  // union of tasks, alphabetical
  REQUIRE(m.problems == std::vector<std::string>{"t1", "t2", "t3"});
  REQUIRE(m.run_ids.size() == 3);
  CHECK(m.baseline_columns() == 2);
  StabilityReport r = stability_report(m);
  CHECK_THAT(r.max_potential_gain, Catch::Matchers::WithinAbs(1.0 / 3, 1e-12));
  CHECK_THAT(r.max_potential_loss, Catch::Matchers::WithinAbs(1.0 / 3, 1e-12));
}
