#pragma once

// Hand-constructed bundles with known detector outcomes.

#include <string>
#include <vector>

#include "proofaudit/runlog.hpp"

namespace fixtures {

using proofaudit::Attempt;
using proofaudit::LemmaRecord;
using proofaudit::Population;
using proofaudit::RunBundle;
using proofaudit::SystemTag;

inline Attempt basic_attempt(const std::string& run, const std::string& task,
                             int idx, bool verified,
                             const std::string& solution,
                             std::vector<std::string> prompt = {}) {
  Attempt a;
  a.run_id = run;
  a.system = SystemTag::parse("library_learner");
  a.model = "fixture-model";
  a.task_id = task;
  a.attempt_index = idx;
  a.prompt_lemmas = std::move(prompt);
  a.solution_text = solution;
  a.verified = verified;
  a.tokens_in = 1000;
  a.tokens_out = 200;
  return a;
}

// A 3-run bundle with 189 successful attempts embedding exactly:
//   - 13 lemmas copied verbatim into one task's solution each (5/4/4 per run)
//   - 33 lemmas whose name alone appears in one task's solution each
//   - 1 lemma whose name appears in the solutions of two tasks of one run
// so the detector summary reads verbatim 13/189, name 47/189, one name
// reused once, and no other reuse. Every planted lemma rides in the prompt
// of the attempts it hits; two filler lemmas pad each prompt.
inline RunBundle detector_count_bundle() {
  RunBundle b;
  const int verbatim_per_run[3] = {5, 4, 4};
  const int name_only_per_run = 11;
  const int verified_per_run = 63;

  for (int r = 1; r <= 3; ++r) {
    std::string run = "run_" + std::to_string(r);
    int task_no = 0;
    auto next_task = [&] {
      ++task_no;
      std::string id = "t";
      if (task_no < 10) id += "00";
      else if (task_no < 100) id += "0";
      return id + std::to_string(task_no) + "_r" + std::to_string(r);
    };

    std::vector<std::pair<std::string, std::string>> planned;  // task, solution
    std::vector<std::vector<std::string>> prompts;

    // filler lemmas: prompted everywhere, never matching anything
    std::string fill_a = "fill_a_r" + std::to_string(r);
    std::string fill_b = "fill_b_r" + std::to_string(r);
    b.lemmas.push_back(proofaudit::make_lemma(
        fill_a, "fa_r" + std::to_string(r),
        "lemma fa_r" + std::to_string(r) + ": shows filler_stmt_a by simp",
        Population::retrieved));
    b.lemmas.push_back(proofaudit::make_lemma(
        fill_b, "fb_r" + std::to_string(r),
        "lemma fb_r" + std::to_string(r) + ": shows filler_stmt_b by simp",
        Population::retrieved));

    for (int i = 0; i < verbatim_per_run[r - 1]; ++i) {
      std::string name = "vlem_r" + std::to_string(r) + "_" + std::to_string(i);
      std::string text = "lemma " + name + ":\n  shows \"stmt_" + name +
                         "\"\n  by simp";
      b.lemmas.push_back(
          proofaudit::make_lemma(name, name, text, Population::retrieved));
      planned.emplace_back(next_task(),
                           "theory x begin\n" + text + "\nrest qed end");
      prompts.push_back({name, fill_a, fill_b});
    }
    for (int i = 0; i < name_only_per_run; ++i) {
      std::string name = "nlem_r" + std::to_string(r) + "_" + std::to_string(i);
      std::string text = "lemma " + name + ":\n  shows \"stmt_" + name +
                         "\"\n  by auto";
      b.lemmas.push_back(
          proofaudit::make_lemma(name, name, text, Population::retrieved));
      planned.emplace_back(next_task(),
                           "theory y begin proof using " + name +
                               " by blast qed end");
      prompts.push_back({name, fill_a, fill_b});
    }
    if (r == 1) {
      // the one reused name: mentioned in two distinct tasks' solutions
      std::string name = "reused_name_lemma";
      std::string text =
          "lemma reused_name_lemma:\n  shows \"stmt_reused\"\n  by metis";
      b.lemmas.push_back(
          proofaudit::make_lemma(name, name, text, Population::retrieved));
      for (int copy = 0; copy < 2; ++copy) {
        planned.emplace_back(next_task(), "theory z begin apply " + name +
                                              " done qed end");
        prompts.push_back({name, fill_a, fill_b});
      }
    }
    // plain solved tasks with no detector hits
    while (static_cast<int>(planned.size()) < verified_per_run) {
      planned.emplace_back(next_task(),
                           "theory plain begin trivial_" +
                               std::to_string(planned.size()) + " qed end");
      prompts.push_back({fill_a, fill_b});
    }
    for (std::size_t i = 0; i < planned.size(); ++i) {
      // one failed attempt before each success, for texture
      b.attempts.push_back(basic_attempt(run, planned[i].first, 1, false,
                                         "sorry", prompts[i]));
      b.attempts.push_back(basic_attempt(run, planned[i].first, 2, true,
                                         planned[i].second, prompts[i]));
    }
    // unsolved tasks
    for (int i = 0; i < 15; ++i) {
      std::string task = next_task();
      b.attempts.push_back(
          basic_attempt(run, task, 1, false, "sorry", {fill_a, fill_b}));
      b.attempts.push_back(
          basic_attempt(run, task, 2, false, "sorry again", {fill_a}));
    }
  }
  return b;
}

}  // namespace fixtures
