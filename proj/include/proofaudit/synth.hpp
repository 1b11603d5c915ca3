#pragma once

#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "proofaudit/rng.hpp"
#include "proofaudit/runlog.hpp"

namespace proofaudit {

// ---------------------------------------------------------------------------
// Deterministic synthetic run-log generator. It plants known use/reuse
// relationships into an otherwise random bundle and reports them as ground
// truth, so the downstream analyses can be checked end to end against an
// oracle that is independent of any scoring code.
//
// Token namespaces are disjoint by construction: lemma tokens ("L<i>w<j>"),
// solution filler ("f<n>"), and perturbation replacements ("X<n>") never
// collide, so a perturbed copy's score is exactly its surviving-token
// fraction and accidental matches cannot occur.
//
// Draw order is part of the generator's contract (fixtures must reproduce
// bit-for-bit from a seed): plant task assignments first, then per
// (run, task) the solve roll and solving-attempt index, then per attempt the
// solution filler and token usage, in bundle order.
// ---------------------------------------------------------------------------

struct TokenUsageModel {
  double mean_in = 0.0;
  double mean_out = 0.0;
};

struct PlantedDirectConfig {
  int count = 0;
  int tasks_per_lemma = 2;
};

struct PlantedSoftConfig {
  int count = 0;
  double perturbation_rate = 0.0;  // per-token replacement probability
  int tasks_per_lemma = 2;
};

struct SynthConfig {
  std::uint64_t seed = 0;
  int n_tasks = 1;
  int n_runs = 1;
  int attempts_per_task = 1;
  double solve_probability = 0.0;
  int lemmas_per_prompt = 3;
  int lemma_pool = 0;       // total retrieved lemmas, planted ones included
  int tokens_per_lemma = 20;
  PlantedDirectConfig planted_direct;
  PlantedSoftConfig planted_soft;
  TokenUsageModel usage;
  std::string system_label = "library_learner";
  std::string model = "synth-model";
};

struct PlantedLemma {
  std::string lemma_id;
  std::vector<std::string> task_ids;      // solved tasks carrying a copy
  bool verbatim = false;
  std::vector<double> kept_fraction;      // per copy; 1.0 for verbatim
};

struct GroundTruth {
  std::vector<PlantedLemma> direct;
  std::vector<PlantedLemma> soft;
};

struct SynthResult {
  RunBundle bundle;
  GroundTruth truth;
};

inline nlohmann::json to_json(const GroundTruth& gt) {
  auto planted = [](const std::vector<PlantedLemma>& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : v)
      arr.push_back({{"lemma_id", p.lemma_id},
                     {"task_ids", p.task_ids},
                     {"verbatim", p.verbatim},
                     {"kept_fraction", p.kept_fraction}});
    return arr;
  };
  return nlohmann::json{{"direct", planted(gt.direct)},
                        {"soft", planted(gt.soft)}};
}

namespace detail {

inline std::string padded(std::string_view prefix, int value, int width = 4) {
  std::string digits = std::to_string(value);
  std::string out(prefix);
  if (static_cast<int>(digits.size()) < width)
    out.append(width - digits.size(), '0');
  out += digits;
  return out;
}

inline void validate_config(const SynthConfig& c) {
  auto fail = [](const std::string& why) {
    throw std::invalid_argument("synth config: " + why);
  };
  if (c.n_tasks < 1 || c.n_runs < 1 || c.attempts_per_task < 1)
    fail("task, run, and attempt counts must be >= 1");
  if (c.solve_probability < 0.0 || c.solve_probability > 1.0)
    fail("solve_probability must be in [0,1]");
  if (c.planted_soft.perturbation_rate < 0.0 ||
      c.planted_soft.perturbation_rate > 1.0)
    fail("perturbation_rate must be in [0,1]");
  if (c.lemma_pool < 0 || c.planted_direct.count < 0 || c.planted_soft.count < 0)
    fail("counts must be non-negative");
  if (c.planted_direct.count + c.planted_soft.count > c.lemma_pool)
    fail("planted counts exceed the lemma pool");
  if (c.tokens_per_lemma < 1) fail("tokens_per_lemma must be >= 1");
  if (c.lemmas_per_prompt < 0) fail("lemmas_per_prompt must be >= 0");
  if (c.planted_direct.count > 0 && c.planted_direct.tasks_per_lemma > c.n_tasks)
    fail("planted_direct.tasks_per_lemma exceeds n_tasks");
  if (c.planted_soft.count > 0 && c.planted_soft.tasks_per_lemma > c.n_tasks)
    fail("planted_soft.tasks_per_lemma exceeds n_tasks");
  if ((c.planted_direct.count > 0 && c.planted_direct.tasks_per_lemma < 1) ||
      (c.planted_soft.count > 0 && c.planted_soft.tasks_per_lemma < 1))
    fail("tasks_per_lemma must be >= 1");
}

}  // namespace detail

inline SynthResult generate(const SynthConfig& config) {
  detail::validate_config(config);
  SplitMix64 rng(config.seed);
  SynthResult result;
  RunBundle& bundle = result.bundle;
  bundle.meta["generator"] = "synth";
  bundle.meta["seed"] = std::to_string(config.seed);

  // Lemma pool. Planted lemmas occupy the front of the pool.
  const int n_direct = config.planted_direct.count;
  const int n_soft = config.planted_soft.count;
  std::vector<std::vector<std::string>> lemma_tokens(config.lemma_pool);
  for (int i = 0; i < config.lemma_pool; ++i) {
    auto& toks = lemma_tokens[i];
    toks.reserve(config.tokens_per_lemma);
    for (int j = 0; j < config.tokens_per_lemma; ++j)
      toks.push_back("L" + std::to_string(i) + "w" + std::to_string(j));
    std::string text;
    for (std::size_t j = 0; j < toks.size(); ++j) {
      if (j) text += ' ';
      text += toks[j];
    }
    bundle.lemmas.push_back(make_lemma(detail::padded("lem_", i), std::nullopt,
                                       std::move(text), Population::retrieved));
  }

  // Assign plant targets: distinct tasks per planted lemma, all in run 1.
  auto sample_tasks = [&](int k) {
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < k)
      chosen.insert(static_cast<int>(rng.below(config.n_tasks)));
    return std::vector<int>(chosen.begin(), chosen.end());
  };
  // plant_targets[task] = pool indices whose copy lands in that task's
  // run-1 solution.
  std::vector<std::vector<int>> plant_targets(config.n_tasks);
  std::set<int> forced_solved;
  GroundTruth& truth = result.truth;
  for (int i = 0; i < n_direct + n_soft; ++i) {
    const bool direct = i < n_direct;
    const int k = direct ? config.planted_direct.tasks_per_lemma
                         : config.planted_soft.tasks_per_lemma;
    PlantedLemma planted;
    planted.lemma_id = bundle.lemmas[i].lemma_id;
    planted.verbatim = direct;
    for (int task : sample_tasks(k)) {
      plant_targets[task].push_back(i);
      forced_solved.insert(task);
      planted.task_ids.push_back(detail::padded("task_", task));
    }
    (direct ? truth.direct : truth.soft).push_back(std::move(planted));
  }

  // Solve schedule: run 1 must solve every plant target; everything else is
  // a Bernoulli roll. Both draws always happen to keep the stream aligned.
  struct Slot {
    bool solved = false;
    int solve_at = 1;
  };
  std::vector<std::vector<Slot>> schedule(config.n_runs,
                                          std::vector<Slot>(config.n_tasks));
  for (int r = 0; r < config.n_runs; ++r) {
    for (int t = 0; t < config.n_tasks; ++t) {
      Slot slot;
      bool roll = rng.bernoulli(config.solve_probability);
      slot.solve_at = 1 + static_cast<int>(rng.below(config.attempts_per_task));
      slot.solved = roll || (r == 0 && forced_solved.count(t));
      schedule[r][t] = slot;
    }
  }

  // Filler (non-planted) lemmas each join exactly one solving attempt's
  // prompt, round-robin over solved slots, so each has exactly one scored
  // task and never registers as reused.
  std::vector<std::pair<int, int>> solving_slots;  // (run, task)
  for (int r = 0; r < config.n_runs; ++r)
    for (int t = 0; t < config.n_tasks; ++t)
      if (schedule[r][t].solved) solving_slots.emplace_back(r, t);
  std::vector<std::vector<int>> filler_assignment(config.n_runs * config.n_tasks);
  if (!solving_slots.empty()) {
    std::size_t slot_cursor = 0;
    for (int i = n_direct + n_soft; i < config.lemma_pool; ++i) {
      auto [r, t] = solving_slots[slot_cursor % solving_slots.size()];
      filler_assignment[r * config.n_tasks + t].push_back(i);
      ++slot_cursor;
    }
  }

  long filler_counter = 0;
  long fresh_counter = 0;
  auto filler_tokens = [&](int count) {
    std::string text;
    for (int i = 0; i < count; ++i) {
      if (i) text += ' ';
      text += "f" + std::to_string(filler_counter++);
    }
    return text;
  };
  auto draw_tokens = [&](double mean) -> std::int64_t {
    if (mean <= 0.0) return 0;
    return static_cast<std::int64_t>(std::llround(mean * (0.5 + rng.real())));
  };

  for (int r = 0; r < config.n_runs; ++r) {
    std::string run_id = "run_" + std::to_string(r + 1);
    for (int t = 0; t < config.n_tasks; ++t) {
      const Slot& slot = schedule[r][t];
      std::string task_id = detail::padded("task_", t);
      int last_attempt = slot.solved ? slot.solve_at : config.attempts_per_task;
      for (int attempt = 1; attempt <= last_attempt; ++attempt) {
        Attempt a;
        a.run_id = run_id;
        a.system = SystemTag::parse(config.system_label);
        a.model = config.model;
        a.task_id = task_id;
        a.attempt_index = attempt;
        a.verified = slot.solved && attempt == slot.solve_at;
        if (a.verified) {
          // Solution: filler, then each planted copy separated by filler.
          std::string text = filler_tokens(3 + static_cast<int>(rng.below(5)));
          if (r == 0) {
            for (int pool_idx : plant_targets[t]) {
              const bool direct = pool_idx < n_direct;
              const double p = direct ? 0.0 : config.planted_soft.perturbation_rate;
              const auto& toks = lemma_tokens[pool_idx];
              int kept = 0;
              std::string copy;
              for (std::size_t j = 0; j < toks.size(); ++j) {
                if (j) copy += ' ';
                if (p > 0.0 && rng.bernoulli(p)) {
                  copy += "X" + std::to_string(fresh_counter++);
                } else {
                  copy += toks[j];
                  ++kept;
                }
              }
              text += ' ';
              text += copy;
              text += ' ';
              text += filler_tokens(2 + static_cast<int>(rng.below(4)));
              double kept_frac =
                  static_cast<double>(kept) / static_cast<double>(toks.size());
              auto& entries = direct ? truth.direct : truth.soft;
              entries[direct ? pool_idx : pool_idx - n_direct]
                  .kept_fraction.push_back(kept_frac);
              a.prompt_lemmas.push_back(bundle.lemmas[pool_idx].lemma_id);
            }
            for (int pool_idx : filler_assignment[r * config.n_tasks + t])
              a.prompt_lemmas.push_back(bundle.lemmas[pool_idx].lemma_id);
          } else {
            for (int pool_idx : filler_assignment[r * config.n_tasks + t])
              a.prompt_lemmas.push_back(bundle.lemmas[pool_idx].lemma_id);
          }
          a.solution_text = text;
        } else {
          a.solution_text = filler_tokens(3 + static_cast<int>(rng.below(5)));
        }
        // Unverified attempts draw random prompts from the pool.
        if (!a.verified && config.lemma_pool > 0) {
          std::set<std::string> prompt;
          for (int i = 0; i < config.lemmas_per_prompt; ++i)
            prompt.insert(
                bundle.lemmas[rng.below(config.lemma_pool)].lemma_id);
          a.prompt_lemmas.assign(prompt.begin(), prompt.end());
        }
        a.tokens_in = draw_tokens(config.usage.mean_in);
        a.tokens_out = draw_tokens(config.usage.mean_out);
        bundle.attempts.push_back(std::move(a));
      }
    }
  }
  return result;
}

}  // namespace proofaudit
