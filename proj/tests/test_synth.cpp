#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <sstream>

#include "proofaudit/audit.hpp"
#include "proofaudit/softuse.hpp"
#include "proofaudit/synth.hpp"

using namespace proofaudit;

namespace {

SynthConfig small_config() {
  SynthConfig cfg;
  cfg.seed = 1234;
  cfg.n_tasks = 25;
  cfg.n_runs = 1;
  cfg.attempts_per_task = 3;
  cfg.solve_probability = 0.5;
  cfg.lemmas_per_prompt = 3;
  cfg.lemma_pool = 20;
  // long enough that a perturbed copy essentially never survives intact,
  // which keeps the planted verbatim-reuse count exact
  cfg.tokens_per_lemma = 60;
  cfg.planted_direct = {3, 2};
  cfg.planted_soft = {5, 0.1, 2};
  cfg.usage = {900, 250};
  return cfg;
}

// verified solution of a given task, run_1
const Attempt* solution_of(const RunBundle& b, const std::string& task) {
  for (const auto& a : b.attempts)
    if (a.verified && a.task_id == task && a.run_id == "run_1") return &a;
  return nullptr;
}

}  // namespace

TEST_CASE("generation is a pure function of the config") {
  SynthConfig cfg = small_config();
  SynthResult a = generate(cfg);
  SynthResult b = generate(cfg);
  CHECK(same_bundle(a.bundle, b.bundle));
  std::ostringstream sa, sb;
  serialize(a.bundle, sa);
  serialize(b.bundle, sb);
  CHECK(sa.str() == sb.str());
  CHECK(to_json(a.truth).dump() == to_json(b.truth).dump());

  cfg.seed = 1235;
  SynthResult c = generate(cfg);
  CHECK_FALSE(same_bundle(a.bundle, c.bundle));
}

TEST_CASE("generated bundles validate and plants are recoverable") {
  SynthResult r = generate(small_config());
  CHECK(validate(r.bundle).empty());
  REQUIRE(r.truth.direct.size() == 3);
  REQUIRE(r.truth.soft.size() == 5);

  UsageSummary sum = summarize_use(r.bundle);
  CHECK(sum.verbatim_reused_once == 3);
  CHECK(sum.verbatim_reused_multi == 0);
  CHECK(sum.verbatim_use_count >= 3);
  CHECK(sum.name_use_count == 0);  // synthetic lemmas carry no names

  for (const auto& planted : r.truth.direct) {
    REQUIRE(planted.task_ids.size() == 2);
    const LemmaRecord* lemma = r.bundle.find_lemma(planted.lemma_id);
    REQUIRE(lemma != nullptr);
    for (std::size_t i = 0; i < planted.task_ids.size(); ++i) {
      const Attempt* sol = solution_of(r.bundle, planted.task_ids[i]);
      REQUIRE(sol != nullptr);
      CHECK(verbatim_used(*lemma, sol->solution_text));
      CHECK(planted.kept_fraction[i] == 1.0);
      // a planted lemma rides in the prompt of the attempt it lands in
      CHECK(std::count(sol->prompt_lemmas.begin(), sol->prompt_lemmas.end(),
                       planted.lemma_id) == 1);
    }
  }
}

TEST_CASE("zero perturbation plants verbatim") {
  SynthConfig cfg = small_config();
  cfg.planted_soft = {5, 0.0, 2};
  SynthResult r = generate(cfg);
  for (const auto& planted : r.truth.soft) {
    const LemmaRecord* lemma = r.bundle.find_lemma(planted.lemma_id);
    for (const auto& task : planted.task_ids) {
      const Attempt* sol = solution_of(r.bundle, task);
      REQUIRE(sol != nullptr);
      CHECK(soft_use_score(*lemma, sol->solution_text).score == 1.0);
    }
  }
}

TEST_CASE("perturbed plant scores sit at the surviving-token fraction") {
  // 2,000 planted tokens per seed over 100 seeds: the aggregate mean score
  // must sit within 1 - p +/- 0.02. Replacement tokens are globally fresh,
  // so the score cannot fall below the kept fraction; the comparison is a
  // lower-bound check on the alignment.
  const double p = 0.1;
  double total_score = 0.0, total_kept = 0.0;
  int copies = 0;
  for (int seed = 0; seed < 100; ++seed) {
    SynthConfig cfg = small_config();
    cfg.seed = 9000 + seed;
    cfg.planted_direct = {0, 2};
    cfg.planted_soft = {10, p, 2};
    cfg.tokens_per_lemma = 100;
    cfg.lemma_pool = 12;
    SynthResult r = generate(cfg);
    for (const auto& planted : r.truth.soft) {
      const LemmaRecord* lemma = r.bundle.find_lemma(planted.lemma_id);
      for (std::size_t i = 0; i < planted.task_ids.size(); ++i) {
        const Attempt* sol = solution_of(r.bundle, planted.task_ids[i]);
        double score = soft_use_score(*lemma, sol->solution_text).score;
        CHECK(score >= planted.kept_fraction[i] - 1e-12);
        total_score += score;
        total_kept += planted.kept_fraction[i];
        ++copies;
      }
    }
  }
  REQUIRE(copies == 100 * 10 * 2);
  CHECK_THAT(total_score / copies, Catch::Matchers::WithinAbs(1.0 - p, 0.02));
  CHECK_THAT(total_kept / copies, Catch::Matchers::WithinAbs(1.0 - p, 0.02));
}

TEST_CASE("infeasible configs are rejected") {
  SynthConfig cfg = small_config();
  cfg.planted_direct.count = 30;  // exceeds the pool
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);

  cfg = small_config();
  cfg.planted_direct.tasks_per_lemma = 26;  // exceeds n_tasks
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);

  cfg = small_config();
  cfg.solve_probability = 1.5;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);

  cfg = small_config();
  cfg.tokens_per_lemma = 0;
  CHECK_THROWS_AS(generate(cfg), std::invalid_argument);
}

TEST_CASE("multi-run generation keeps plants in the first run") {
  SynthConfig cfg = small_config();
  cfg.n_runs = 3;
  SynthResult r = generate(cfg);
  CHECK(validate(r.bundle).empty());
  UsageSummary sum = summarize_use(r.bundle);
  CHECK(sum.verbatim_reused_once == 3);  // unchanged by the extra runs
  std::map<std::string, int> runs;
  for (const auto& a : r.bundle.attempts) runs[a.run_id]++;
  CHECK(runs.size() == 3);
}
