// proofaudit: batch analyses over prover run logs.
//
// Every command is a thin shell over one library operation; all outputs are
// deterministic functions of the inputs and seeds. --workers only changes
// how fast score matrices are filled, never what they contain.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "proofaudit/audit.hpp"
#include "proofaudit/budget.hpp"
#include "proofaudit/corpus.hpp"
#include "proofaudit/runlog.hpp"
#include "proofaudit/stability.hpp"
#include "proofaudit/synth.hpp"

namespace fs = std::filesystem;
using namespace proofaudit;

namespace {

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

// stdout when no --out was given.
void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty())
    std::cout << content;
  else
    write_text(out_path, content);
}

PricingTable load_pricing(const std::string& flag_path) {
  std::string path = flag_path;
  if (path.empty()) {
    if (const char* env = std::getenv("PROOFAUDIT_PRICING")) path = env;
  }
  if (path.empty())
    throw std::runtime_error(
        "no pricing file: pass --pricing or set PROOFAUDIT_PRICING");
  return PricingTable::load(path);
}

unsigned default_workers() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

struct Options {
  std::string log_path;
  std::string out_path;
  std::string pricing_path;
  std::string thresholds = "0:1:0.01";
  std::string level = "lemma";
  std::string mode = "use";
  std::string x_axis = "attempts";
  std::string dir;
  std::string system_csv;
  std::string baseline_csv;
  std::string matrix_csv;
  std::string format = "jsonl";
  std::string baseline_log;
  std::string paraphrase_log;
  std::string truth_path;
  bool substring_names = false;
  bool permissive_reuse = false;
  unsigned workers = default_workers();
  std::int64_t baseline_attempts = 0;
  double ratio = 0.0;
  std::int64_t sample = -1;  // -1: keep everything
  std::uint64_t seed = 0;
  SynthConfig synth;
};

int cmd_ingest_check(const Options& opt) {
  RunBundle bundle = ingest(fs::path(opt.log_path));
  auto violations = validate(bundle);
  for (const auto& v : violations) std::cout << "violation: " << v << '\n';
  if (!violations.empty()) return 1;
  std::cout << "ok: " << bundle.attempts.size() << " attempts, "
            << bundle.lemmas.size() << " lemmas\n";
  return 0;
}

int cmd_audit_use(const Options& opt) {
  RunBundle bundle = ingest(fs::path(opt.log_path));
  UsageSummary sum = summarize_use(
      bundle, opt.substring_names ? NameMatch::substring : NameMatch::whole_word);
  emit(opt.out_path, to_json(sum).dump(2) + "\n");
  return 0;
}

int cmd_survival(const Options& opt) {
  RunBundle bundle = ingest(fs::path(opt.log_path));
  auto grid = parse_threshold_grid(opt.thresholds);
  SurvivalMode mode;
  if (opt.mode == "use") mode = SurvivalMode::use;
  else if (opt.mode == "reuse") mode = SurvivalMode::reuse;
  else throw CLI::ValidationError("--mode must be use or reuse");
  SurvivalOptions sopts;
  sopts.workers = opt.workers;
  sopts.reuse_scope =
      opt.permissive_reuse ? ReuseScope::permissive : ReuseScope::causal;
  SurvivalCurve curve;
  if (opt.level == "lemma") curve = lemma_survival(bundle, mode, grid, sopts);
  else if (opt.level == "task") curve = task_survival(bundle, mode, grid, sopts);
  else throw CLI::ValidationError("--level must be lemma or task");
  for (const auto& w : curve.warnings) std::cerr << "warning: " << w << '\n';
  std::ostringstream csv;
  export_curve(curve, csv);
  emit(opt.out_path, csv.str());
  return 0;
}

int cmd_corpus_extract(const Options& opt) {
  std::vector<ExtractedLemma> all;
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(opt.dir))
    if (entry.is_regular_file() && entry.path().extension() == ".thy")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream text;
    text << in.rdbuf();
    std::string rel = fs::relative(file, opt.dir).generic_string();
    for (auto& lem : extract_lemmas(text.str(), rel)) all.push_back(std::move(lem));
  }
  std::vector<LemmaRecord> population;
  if (opt.sample < 0) {
    // No sampling: everything usable, in (source path, byte offset) order.
    for (const auto& e : all) {
      if (tokenize(e.text).empty()) continue;
      population.push_back(make_lemma(
          e.source_path + ":" + std::to_string(e.begin), extract_name(e.text),
          e.text, Population::corpus));
    }
  } else {
    population =
        build_population(all, static_cast<std::size_t>(opt.sample), opt.seed);
  }
  std::ostringstream out;
  for (const auto& rec : population) out << lemma_to_json(rec).dump() << '\n';
  emit(opt.out_path, out.str());
  std::cerr << "extracted " << all.size() << " blocks from " << files.size()
            << " files, emitted " << population.size() << " lemma records\n";
  return 0;
}

int cmd_cost_report(const Options& opt) {
  RunBundle bundle = ingest(fs::path(opt.log_path));
  CostReport report = cost_report(bundle, load_pricing(opt.pricing_path));
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  emit(opt.out_path, to_json(report).dump(2) + "\n");
  return 0;
}

int cmd_cost_curve(const Options& opt) {
  RunBundle bundle = ingest(fs::path(opt.log_path));
  AccuracyCurve curve;
  if (opt.x_axis == "attempts") {
    curve = accuracy_curve(bundle, XAxis::attempts);
  } else if (opt.x_axis == "cost") {
    PricingTable pricing = load_pricing(opt.pricing_path);
    curve = accuracy_curve(bundle, XAxis::cost, &pricing);
  } else {
    throw CLI::ValidationError("--x must be attempts or cost");
  }
  std::ostringstream csv;
  write_accuracy_csv(curve, csv);
  emit(opt.out_path, csv.str());
  return 0;
}

int cmd_match_budget(const Options& opt) {
  std::cout << budget_matched_attempts(opt.baseline_attempts, opt.ratio) << '\n';
  return 0;
}

int cmd_compare(const Options& opt) {
  std::ifstream sys_in(opt.system_csv), base_in(opt.baseline_csv);
  if (!sys_in) throw std::runtime_error("cannot open " + opt.system_csv);
  if (!base_in) throw std::runtime_error("cannot open " + opt.baseline_csv);
  AccuracyCurve system = read_accuracy_csv(sys_in);
  AccuracyCurve baseline = read_accuracy_csv(base_in);
  BudgetComparison cmp = compare_at_budget(system, baseline);
  std::ostringstream csv;
  write_comparison_csv(cmp, csv);
  emit(opt.out_path, csv.str());
  if (cmp.crossover_x)
    std::cout << "crossover_x: " << format_fraction(*cmp.crossover_x) << '\n';
  else
    std::cout << "crossover_x: none\n";
  return 0;
}

int cmd_stability(const Options& opt) {
  SolveMatrix matrix;
  if (!opt.matrix_csv.empty()) {
    std::ifstream in(opt.matrix_csv, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + opt.matrix_csv);
    matrix = solve_matrix_from_csv(in);
  } else if (!opt.baseline_log.empty() && !opt.paraphrase_log.empty()) {
    matrix = solve_matrix_from_bundles(ingest(fs::path(opt.baseline_log)),
                                       ingest(fs::path(opt.paraphrase_log)));
  } else {
    throw CLI::ValidationError(
        "need --matrix, or --baseline-log with --paraphrase-log");
  }
  emit(opt.out_path, to_json(stability_report(matrix)).dump(2) + "\n");
  return 0;
}

int cmd_synth_generate(const Options& opt) {
  SynthResult result = generate(opt.synth);
  std::ostringstream out;
  serialize(result.bundle, out);
  emit(opt.out_path, out.str());
  if (!opt.truth_path.empty())
    write_text(opt.truth_path, to_json(result.truth).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run-log analyses: lemma use/reuse detection, survival curves, "
               "corpus baselines, cost accounting, and prompt stability."};
  app.require_subcommand(1);
  Options opt;

  auto add_log = [&](CLI::App* cmd) {
    cmd->add_option("--log", opt.log_path, "run log (JSONL)")->required();
    cmd->add_option("--format", opt.format, "log format")
        ->check(CLI::IsMember({"jsonl"}));
  };

  auto* ingest_check = app.add_subcommand("ingest-check", "validate a run log");
  add_log(ingest_check);

  auto* audit_use =
      app.add_subcommand("audit-use", "exact-match use and reuse counts");
  add_log(audit_use);
  audit_use->add_option("--out", opt.out_path, "output file (default stdout)");
  audit_use->add_flag("--substring-names", opt.substring_names,
                      "count name hits inside longer identifiers");

  auto* survival = app.add_subcommand("survival", "soft-use survival curves");
  add_log(survival);
  survival->add_option("--level", opt.level, "lemma|task")->required();
  survival->add_option("--mode", opt.mode, "use|reuse")->required();
  survival->add_option("--thresholds", opt.thresholds, "grid start:end:step");
  survival->add_option("--out", opt.out_path, "output CSV (default stdout)");
  survival->add_option("--workers", opt.workers, "scoring threads");
  survival->add_flag("--permissive-reuse", opt.permissive_reuse,
                     "task reuse may match solutions that never saw the lemma");

  auto* corpus_extract = app.add_subcommand(
      "corpus-extract", "extract lemma blocks from a directory of .thy files");
  corpus_extract->add_option("--dir", opt.dir, "directory tree")->required();
  corpus_extract->add_option("--out", opt.out_path, "output JSONL (default stdout)");
  corpus_extract->add_option("--sample", opt.sample,
                             "sample this many lemmas (default: all)");
  corpus_extract->add_option("--seed", opt.seed, "sampling seed");

  auto* cost_rep = app.add_subcommand("cost-report", "token cost per attempt");
  add_log(cost_rep);
  cost_rep->add_option("--pricing", opt.pricing_path,
                       "pricing JSON (or PROOFAUDIT_PRICING)");
  cost_rep->add_option("--out", opt.out_path, "output file (default stdout)");

  auto* cost_curve =
      app.add_subcommand("cost-curve", "cumulative accuracy vs attempts or cost");
  add_log(cost_curve);
  cost_curve->add_option("--x", opt.x_axis, "attempts|cost");
  cost_curve->add_option("--pricing", opt.pricing_path,
                         "pricing JSON (required for --x cost)");
  cost_curve->add_option("--out", opt.out_path, "output CSV (default stdout)");

  auto* match = app.add_subcommand(
      "match-budget", "attempt cap matching a baseline's compute budget");
  match->add_option("--baseline-attempts", opt.baseline_attempts)->required();
  match->add_option("--ratio", opt.ratio, "cost-per-attempt ratio")->required();

  auto* compare = app.add_subcommand(
      "compare", "align two accuracy curves at equal budgets");
  compare->add_option("--system", opt.system_csv, "system curve CSV")->required();
  compare->add_option("--baseline", opt.baseline_csv, "baseline curve CSV")->required();
  compare->add_option("--out", opt.out_path, "output CSV (default stdout)");

  auto* stability = app.add_subcommand("stability", "prompt-paraphrase stability");
  stability->add_option("--matrix", opt.matrix_csv, "solve matrix CSV");
  stability->add_option("--baseline-log", opt.baseline_log, "baseline run log");
  stability->add_option("--paraphrase-log", opt.paraphrase_log, "paraphrase run log");
  stability->add_option("--out", opt.out_path, "output file (default stdout)");

  auto* synth = app.add_subcommand(
      "synth-generate", "deterministic synthetic run log with planted reuse");
  synth->add_option("--seed", opt.synth.seed)->required();
  synth->add_option("--tasks", opt.synth.n_tasks)->required();
  synth->add_option("--runs", opt.synth.n_runs);
  synth->add_option("--attempts", opt.synth.attempts_per_task);
  synth->add_option("--solve-prob", opt.synth.solve_probability);
  synth->add_option("--lemmas-per-prompt", opt.synth.lemmas_per_prompt);
  synth->add_option("--pool", opt.synth.lemma_pool, "total retrieved lemmas");
  synth->add_option("--tokens-per-lemma", opt.synth.tokens_per_lemma);
  synth->add_option("--direct", opt.synth.planted_direct.count,
                    "lemmas planted verbatim");
  synth->add_option("--direct-tasks", opt.synth.planted_direct.tasks_per_lemma);
  synth->add_option("--soft", opt.synth.planted_soft.count,
                    "lemmas planted with perturbation");
  synth->add_option("--soft-rate", opt.synth.planted_soft.perturbation_rate);
  synth->add_option("--soft-tasks", opt.synth.planted_soft.tasks_per_lemma);
  synth->add_option("--mean-in", opt.synth.usage.mean_in);
  synth->add_option("--mean-out", opt.synth.usage.mean_out);
  synth->add_option("--out", opt.out_path, "output JSONL (default stdout)");
  synth->add_option("--truth", opt.truth_path, "ground-truth JSON sidecar");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (ingest_check->parsed()) return cmd_ingest_check(opt);
    if (audit_use->parsed()) return cmd_audit_use(opt);
    if (survival->parsed()) return cmd_survival(opt);
    if (corpus_extract->parsed()) return cmd_corpus_extract(opt);
    if (cost_rep->parsed()) return cmd_cost_report(opt);
    if (cost_curve->parsed()) return cmd_cost_curve(opt);
    if (match->parsed()) return cmd_match_budget(opt);
    if (compare->parsed()) return cmd_compare(opt);
    if (stability->parsed()) return cmd_stability(opt);
    if (synth->parsed()) return cmd_synth_generate(opt);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
