#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "proofaudit/lexref.hpp"
#include "proofaudit/runlog.hpp"
#include "proofaudit/softuse.hpp"

namespace proofaudit {

// ---------------------------------------------------------------------------
// Headline statistics over a bundle: exact-match use/reuse counts and
// soft-use survival curves at lemma and task level.
//
// Use is counted at the lemma level: a lemma is "used" when it (or its name)
// appears in the verified solution of a task whose prompt offered it, and
// reused N times when that holds for N+1 distinct tasks. Counts are computed
// per run and summed over the bundle's runs, which mirrors how multi-trial
// results are reported.
// ---------------------------------------------------------------------------

struct UsageSummary {
  std::int64_t successful_attempts = 0;
  std::int64_t total_attempts = 0;
  std::int64_t prompt_lemma_count = 0;   // unique retrieved lemmas in verified attempts' prompts
  std::int64_t verbatim_use_count = 0;   // lemmas appearing verbatim in >= 1 task's solution
  std::int64_t name_use_count = 0;
  std::int64_t verbatim_reused_once = 0;   // exactly 2 tasks
  std::int64_t verbatim_reused_multi = 0;  // >= 3 tasks
  std::int64_t name_reused_once = 0;
  std::int64_t name_reused_multi = 0;
};

inline UsageSummary summarize_use(const RunBundle& bundle,
                                  NameMatch names = NameMatch::whole_word) {
  UsageSummary sum;
  sum.total_attempts = static_cast<std::int64_t>(bundle.attempts.size());
  auto lemmas = lemma_index(bundle);

  struct PerLemma {
    std::set<std::string_view> verbatim_tasks;
    std::set<std::string_view> name_tasks;
  };
  // run -> (lemma id -> task hits); separate runs never share counts.
  std::map<std::string_view, std::map<std::string_view, PerLemma>> runs;
  for (const auto& a : bundle.attempts) {
    if (!a.verified) continue;
    ++sum.successful_attempts;
    auto& per_run = runs[a.run_id];
    for (const auto& id : a.prompt_lemmas) {
      auto it = lemmas.find(id);
      if (it == lemmas.end() || it->second->population != Population::retrieved)
        continue;
      PerLemma& pl = per_run[it->second->lemma_id];
      if (verbatim_used(*it->second, a.solution_text))
        pl.verbatim_tasks.insert(a.task_id);
      if (name_used(*it->second, a.solution_text, names))
        pl.name_tasks.insert(a.task_id);
    }
  }
  for (const auto& [run_id, per_run] : runs) {
    sum.prompt_lemma_count += static_cast<std::int64_t>(per_run.size());
    for (const auto& [lemma_id, pl] : per_run) {
      if (!pl.verbatim_tasks.empty()) ++sum.verbatim_use_count;
      if (pl.verbatim_tasks.size() == 2) ++sum.verbatim_reused_once;
      if (pl.verbatim_tasks.size() >= 3) ++sum.verbatim_reused_multi;
      if (!pl.name_tasks.empty()) ++sum.name_use_count;
      if (pl.name_tasks.size() == 2) ++sum.name_reused_once;
      if (pl.name_tasks.size() >= 3) ++sum.name_reused_multi;
    }
  }
  return sum;
}

inline nlohmann::json to_json(const UsageSummary& s) {
  return nlohmann::json{
      {"successful_attempts", s.successful_attempts},
      {"total_attempts", s.total_attempts},
      {"prompt_lemma_count", s.prompt_lemma_count},
      {"verbatim_use_count", s.verbatim_use_count},
      {"name_use_count", s.name_use_count},
      {"verbatim_reused_once", s.verbatim_reused_once},
      {"verbatim_reused_multi", s.verbatim_reused_multi},
      {"name_reused_once", s.name_reused_once},
      {"name_reused_multi", s.name_reused_multi}};
}

// ---------------------------------------------------------------------------
// Survival curves
// ---------------------------------------------------------------------------

enum class SurvivalLevel { lemma, task };
enum class SurvivalMode { use, reuse };

// Scope of the "scores against another task's solution" test in task-level
// reuse. causal restricts to solutions whose prompts offered the lemma (a
// lemma cannot influence a solution that never saw it); permissive scores
// against every verified solution.
enum class ReuseScope { causal, permissive };

struct SurvivalOptions {
  ReuseScope reuse_scope = ReuseScope::causal;
  unsigned workers = 1;
};

struct SurvivalCurve {
  std::vector<double> thresholds;  // ascending, in [0,1]
  // population label -> surviving fraction per threshold; deterministic order
  std::vector<std::pair<std::string, std::vector<double>>> populations;
  SurvivalLevel level = SurvivalLevel::lemma;
  SurvivalMode mode = SurvivalMode::use;
  std::vector<std::string> warnings;
};

inline std::vector<double> threshold_grid(double start = 0.0, double end = 1.0,
                                          double step = 0.01) {
  if (!(step > 0.0) || start < 0.0 || end > 1.0 || start > end)
    throw std::invalid_argument("threshold grid must ascend within [0,1]");
  std::vector<double> grid;
  auto n = static_cast<long long>(std::floor((end - start) / step + 1e-9));
  grid.reserve(static_cast<std::size_t>(n) + 1);
  for (long long i = 0; i <= n; ++i) grid.push_back(start + static_cast<double>(i) * step);
  if (grid.back() > end) grid.back() = end;
  return grid;
}

// "start:end:step"
inline std::vector<double> parse_threshold_grid(std::string_view text) {
  std::array<double, 3> parts{};
  std::size_t begin = 0;
  for (int i = 0; i < 3; ++i) {
    std::size_t colon = text.find(':', begin);
    bool last = i == 2;
    if (last != (colon == std::string_view::npos))
      throw std::invalid_argument("threshold grid must be start:end:step");
    std::string piece(text.substr(begin, last ? std::string_view::npos : colon - begin));
    try {
      std::size_t used = 0;
      parts[i] = std::stod(piece, &used);
      if (used != piece.size()) throw std::invalid_argument(piece);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad threshold grid component \"" + piece + "\"");
    }
    begin = colon + 1;
  }
  return threshold_grid(parts[0], parts[1], parts[2]);
}

namespace detail {

template <typename F>
inline void parallel_for(std::size_t n, unsigned workers, F&& fn) {
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned count = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  std::size_t chunk = (n + count - 1) / count;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < count; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Immutable view of the scoring targets: verified attempts, their interned
// solution tokens, and which of them each lemma was prompted into. Shared
// read-only across scoring workers.
struct VerifiedIndex {
  std::vector<const Attempt*> attempts;
  std::vector<TokenSeq> tokens;
  std::vector<std::vector<std::int32_t>> ids;
  TokenInterner interner;
  std::unordered_map<std::string_view, std::vector<std::size_t>> prompted;

  explicit VerifiedIndex(const RunBundle& bundle) {
    for (const auto& a : bundle.attempts) {
      if (!a.verified) continue;
      std::size_t pos = attempts.size();
      attempts.push_back(&a);
      tokens.push_back(tokenize(a.solution_text));
      for (const auto& id : a.prompt_lemmas) {
        auto& v = prompted[std::string_view(id)];
        if (v.empty() || v.back() != pos) v.push_back(pos);
      }
    }
    ids.reserve(tokens.size());
    for (const auto& seq : tokens) ids.push_back(intern_add(interner, seq));
  }

  std::vector<std::int32_t> lemma_ids(const TokenSeq& lemma) const {
    return intern_find(interner, lemma);
  }
};

// Max score per task over the given target attempts.
inline std::map<std::string_view, double> per_task_max(
    const BitLcsKernel& kernel, const VerifiedIndex& vi,
    const std::vector<std::size_t>& targets) {
  std::map<std::string_view, double> best;
  std::vector<std::uint64_t> scratch;
  for (std::size_t pos : targets) {
    double s = 1.0 - static_cast<double>(kernel.distance(vi.ids[pos], scratch)) /
                         static_cast<double>(kernel.lemma_len());
    auto [it, fresh] = best.emplace(vi.attempts[pos]->task_id, s);
    if (!fresh && s > it->second) it->second = s;
  }
  return best;
}

struct TopTwo {
  double best = -1.0;         // highest per-task max
  double second = -1.0;       // highest over the remaining tasks
  std::string_view best_task;
};

inline TopTwo top_two(const std::map<std::string_view, double>& per_task) {
  TopTwo t;
  for (const auto& [task, score] : per_task) {
    if (score > t.best) {
      t.second = t.best;
      t.best = score;
      t.best_task = task;
    } else if (score > t.second) {
      t.second = score;
    }
  }
  return t;
}

}  // namespace detail

// Lemma-level survival. A lemma survives threshold t in use mode when some
// scored solution reaches t, and in reuse mode when the verified solutions
// of two distinct tasks reach t. Retrieved lemmas are scored only against
// solutions whose prompts offered them (and only such lemmas enter the
// denominator); non-retrieved and corpus lemmas are scored against every
// verified solution.
inline SurvivalCurve lemma_survival(const RunBundle& bundle, SurvivalMode mode,
                                    std::span<const double> thresholds,
                                    SurvivalOptions opts = {}) {
  SurvivalCurve curve;
  curve.thresholds.assign(thresholds.begin(), thresholds.end());
  curve.level = SurvivalLevel::lemma;
  curve.mode = mode;
  detail::VerifiedIndex vi(bundle);

  std::vector<std::size_t> all_targets(vi.attempts.size());
  for (std::size_t i = 0; i < all_targets.size(); ++i) all_targets[i] = i;

  const std::pair<Population, const char*> population_order[] = {
      {Population::retrieved, "retrieved"},
      {Population::non_retrieved, "non_retrieved"},
      {Population::corpus, "corpus"}};

  for (auto [population, label] : population_order) {
    // Candidates paired with their scoring targets.
    std::vector<std::vector<std::int32_t>> candidate_ids;
    std::vector<const std::vector<std::size_t>*> targets;
    bool population_present = false;
    for (const auto& l : bundle.lemmas) {
      if (l.population != population) continue;
      population_present = true;
      const std::vector<std::size_t>* lemma_targets = nullptr;
      if (population == Population::retrieved) {
        auto it = vi.prompted.find(std::string_view(l.lemma_id));
        if (it == vi.prompted.end()) continue;  // nothing to score against
        lemma_targets = &it->second;
      } else if (!all_targets.empty()) {
        lemma_targets = &all_targets;
      } else {
        continue;
      }
      TokenSeq lt = tokenize(l.text);
      if (lt.empty())
        throw std::invalid_argument("lemma \"" + l.lemma_id +
                                    "\" tokenizes to nothing");
      candidate_ids.push_back(vi.lemma_ids(lt));
      targets.push_back(lemma_targets);
    }
    if (candidate_ids.empty()) {
      if (population_present)
        curve.warnings.push_back(std::string(label) +
                                 ": no scorable lemmas, population omitted");
      continue;
    }
    std::vector<detail::TopTwo> stats(candidate_ids.size());
    detail::parallel_for(candidate_ids.size(), opts.workers, [&](std::size_t i) {
      detail::BitLcsKernel kernel(candidate_ids[i]);
      stats[i] = detail::top_two(detail::per_task_max(kernel, vi, *targets[i]));
    });
    std::vector<double> fractions;
    fractions.reserve(curve.thresholds.size());
    for (double t : curve.thresholds) {
      std::size_t surviving = 0;
      for (const auto& s : stats) {
        double level = mode == SurvivalMode::use ? s.best : s.second;
        if (level >= t) ++surviving;
      }
      fractions.push_back(static_cast<double>(surviving) /
                          static_cast<double>(stats.size()));
    }
    curve.populations.emplace_back(label, std::move(fractions));
  }
  return curve;
}

// Task-level survival over solved tasks. In use mode a task survives t when
// one of its prompted lemmas scores >= t against its verified solution; in
// reuse mode that lemma must additionally reach t against another task's
// verified solution (scope per SurvivalOptions).
inline SurvivalCurve task_survival(const RunBundle& bundle, SurvivalMode mode,
                                   std::span<const double> thresholds,
                                   SurvivalOptions opts = {}) {
  SurvivalCurve curve;
  curve.thresholds.assign(thresholds.begin(), thresholds.end());
  curve.level = SurvivalLevel::task;
  curve.mode = mode;
  detail::VerifiedIndex vi(bundle);
  if (vi.attempts.empty()) throw std::runtime_error("no solved tasks");

  std::vector<std::size_t> all_targets(vi.attempts.size());
  for (std::size_t i = 0; i < all_targets.size(); ++i) all_targets[i] = i;

  // Per prompted lemma: per-task maxima over its own prompted solutions, and
  // over the "other solution" scope.
  std::vector<std::string_view> prompted_ids;
  prompted_ids.reserve(vi.prompted.size());
  for (const auto& [id, _] : vi.prompted) prompted_ids.push_back(id);
  std::sort(prompted_ids.begin(), prompted_ids.end());

  auto lemmas = lemma_index(bundle);
  struct LemmaStats {
    std::map<std::string_view, double> own;  // task -> max prompted score
    detail::TopTwo other;                    // over the reuse scope
  };
  std::vector<std::vector<std::int32_t>> prompted_lemma_ids(prompted_ids.size());
  for (std::size_t i = 0; i < prompted_ids.size(); ++i) {
    auto rec = lemmas.find(prompted_ids[i]);
    if (rec == lemmas.end()) continue;  // dangling reference; validate() reports it
    TokenSeq lt = tokenize(rec->second->text);
    if (lt.empty())
      throw std::invalid_argument("lemma \"" + rec->second->lemma_id +
                                  "\" tokenizes to nothing");
    prompted_lemma_ids[i] = vi.lemma_ids(lt);
  }
  std::vector<LemmaStats> stats(prompted_ids.size());
  detail::parallel_for(prompted_ids.size(), opts.workers, [&](std::size_t i) {
    if (prompted_lemma_ids[i].empty()) return;  // unresolved reference
    detail::BitLcsKernel kernel(prompted_lemma_ids[i]);
    const auto& own_targets = vi.prompted.at(prompted_ids[i]);
    stats[i].own = detail::per_task_max(kernel, vi, own_targets);
    if (mode == SurvivalMode::reuse) {
      stats[i].other = detail::top_two(
          opts.reuse_scope == ReuseScope::causal
              ? stats[i].own
              : detail::per_task_max(kernel, vi, all_targets));
    }
  });
  std::unordered_map<std::string_view, std::size_t> lemma_slot;
  for (std::size_t i = 0; i < prompted_ids.size(); ++i)
    lemma_slot.emplace(prompted_ids[i], i);

  // Reduce to one use level and one reuse level per solved task.
  std::map<std::string_view, std::pair<double, double>> per_task;  // use, reuse
  for (std::size_t pos = 0; pos < vi.attempts.size(); ++pos) {
    const Attempt& a = *vi.attempts[pos];
    auto& [use_best, reuse_best] =
        per_task.try_emplace(std::string_view(a.task_id), -1.0, -1.0)
            .first->second;
    for (const auto& id : a.prompt_lemmas) {
      auto slot = lemma_slot.find(std::string_view(id));
      if (slot == lemma_slot.end()) continue;
      const LemmaStats& ls = stats[slot->second];
      auto own = ls.own.find(std::string_view(a.task_id));
      if (own == ls.own.end()) continue;
      use_best = std::max(use_best, own->second);
      if (mode == SurvivalMode::reuse) {
        double other = ls.other.best_task == std::string_view(a.task_id)
                           ? ls.other.second
                           : ls.other.best;
        reuse_best = std::max(reuse_best, std::min(own->second, other));
      }
    }
  }

  std::vector<double> fractions;
  fractions.reserve(curve.thresholds.size());
  for (double t : curve.thresholds) {
    std::size_t surviving = 0;
    for (const auto& [task, levels] : per_task) {
      double level = mode == SurvivalMode::use ? levels.first : levels.second;
      if (level >= t) ++surviving;
    }
    fractions.push_back(static_cast<double>(surviving) /
                        static_cast<double>(per_task.size()));
  }
  curve.populations.emplace_back("tasks", std::move(fractions));
  return curve;
}

// ---------------------------------------------------------------------------
// Curve CSV: first column `threshold`, one column per population labeled
// `<population>_<mode>`, values with 6 decimal places.
// ---------------------------------------------------------------------------

inline std::string format_fraction(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline void export_curve(const SurvivalCurve& curve, std::ostream& out) {
  const char* mode = curve.mode == SurvivalMode::use ? "use" : "reuse";
  out << "threshold";
  for (const auto& [label, _] : curve.populations) out << ',' << label << '_' << mode;
  out << '\n';
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) {
    out << format_fraction(curve.thresholds[i]);
    for (const auto& [label, fractions] : curve.populations)
      out << ',' << format_fraction(fractions[i]);
    out << '\n';
  }
}

inline void export_curve(const SurvivalCurve& curve,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  export_curve(curve, out);
}

// Reads the CSV back. Thresholds and fractions carry the file's 6-decimal
// precision; mode is recovered from the column labels, level is not stored.
inline SurvivalCurve read_curve(std::istream& in) {
  SurvivalCurve curve;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty curve file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::stringstream header(line);
  std::string cell;
  bool first = true;
  while (std::getline(header, cell, ',')) {
    if (first) {
      if (cell != "threshold")
        throw std::runtime_error("curve file must start with a threshold column");
      first = false;
      continue;
    }
    std::string label = cell;
    if (label.size() > 4 && label.substr(label.size() - 4) == "_use") {
      label.resize(label.size() - 4);
      curve.mode = SurvivalMode::use;
    } else if (label.size() > 6 && label.substr(label.size() - 6) == "_reuse") {
      label.resize(label.size() - 6);
      curve.mode = SurvivalMode::reuse;
    } else {
      throw std::runtime_error("column label \"" + cell + "\" lacks a mode suffix");
    }
    curve.populations.emplace_back(label, std::vector<double>{});
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream row(line);
    std::size_t col = 0;
    while (std::getline(row, cell, ',')) {
      double v = std::stod(cell);
      if (col == 0) curve.thresholds.push_back(v);
      else if (col <= curve.populations.size())
        curve.populations[col - 1].second.push_back(v);
      else
        throw std::runtime_error("curve row wider than header");
      ++col;
    }
    if (col != curve.populations.size() + 1)
      throw std::runtime_error("curve row narrower than header");
  }
  return curve;
}

inline SurvivalCurve read_curve(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_curve(in);
}

}  // namespace proofaudit
