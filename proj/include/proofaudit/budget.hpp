#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "proofaudit/runlog.hpp"

namespace proofaudit {

// ---------------------------------------------------------------------------
// Cost accounting. Cost is the proxy for compute: per-attempt token usage
// priced per model, totalled in a fixed order (run_id, then attempt order)
// so floating-point results are reproducible. Embedding/retrieval usage is
// not part of the attempt records and therefore never enters a cost.
// ---------------------------------------------------------------------------

struct ModelPricing {
  double usd_per_million_input = 0.0;
  double usd_per_million_output = 0.0;
};

struct PricingTable {
  std::map<std::string, ModelPricing> models;

  static PricingTable from_json(const nlohmann::json& j) {
    PricingTable t;
    if (!j.is_object())
      throw std::runtime_error("pricing file must map model -> prices");
    for (auto it = j.begin(); it != j.end(); ++it) {
      ModelPricing p;
      p.usd_per_million_input = it.value().at("usd_per_million_input").get<double>();
      p.usd_per_million_output = it.value().at("usd_per_million_output").get<double>();
      if (!(p.usd_per_million_input >= 0.0) || !(p.usd_per_million_output >= 0.0) ||
          !std::isfinite(p.usd_per_million_input) ||
          !std::isfinite(p.usd_per_million_output))
        throw std::runtime_error("pricing for \"" + it.key() +
                                 "\" must be finite and non-negative");
      t.models[it.key()] = p;
    }
    return t;
  }

  static PricingTable load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pricing file " + path.string());
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }
};

struct RunCost {
  std::string run_id;
  double cost_usd = 0.0;
  std::int64_t attempts = 0;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
};

struct CostReport {
  double total_cost_usd = 0.0;
  std::int64_t total_attempts = 0;
  double cost_per_attempt = 0.0;
  std::vector<RunCost> per_run;        // ordered by run_id
  std::vector<std::string> warnings;
};

inline CostReport cost_report(const RunBundle& bundle,
                              const PricingTable& pricing) {
  if (bundle.attempts.empty())
    throw std::runtime_error("cost_report: bundle has no attempts");
  std::map<std::string, RunCost> runs;
  for (const auto& a : bundle.attempts) {
    auto it = pricing.models.find(a.model);
    if (it == pricing.models.end())
      throw std::runtime_error("no pricing for model \"" + a.model + "\"");
    RunCost& rc = runs[a.run_id];
    rc.run_id = a.run_id;
    rc.attempts += 1;
    rc.tokens_in += a.tokens_in;
    rc.tokens_out += a.tokens_out;
    rc.cost_usd += (static_cast<double>(a.tokens_in) * it->second.usd_per_million_input +
                    static_cast<double>(a.tokens_out) * it->second.usd_per_million_output) /
                   1e6;
  }
  CostReport report;
  for (auto& [id, rc] : runs) {
    report.total_cost_usd += rc.cost_usd;
    report.total_attempts += rc.attempts;
    report.per_run.push_back(rc);
  }
  report.cost_per_attempt =
      report.total_cost_usd / static_cast<double>(report.total_attempts);
  if (report.total_cost_usd == 0.0)
    report.warnings.push_back("total cost is zero (no token usage recorded)");
  return report;
}

inline nlohmann::json to_json(const CostReport& r) {
  nlohmann::json j;
  j["total_cost_usd"] = r.total_cost_usd;
  j["total_attempts"] = r.total_attempts;
  j["cost_per_attempt"] = r.cost_per_attempt;
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& rc : r.per_run) {
    runs.push_back({{"run_id", rc.run_id},
                    {"cost_usd", rc.cost_usd},
                    {"attempts", rc.attempts},
                    {"tokens_in", rc.tokens_in},
                    {"tokens_out", rc.tokens_out}});
  }
  j["per_run"] = runs;
  j["warnings"] = r.warnings;
  return j;
}

// system cost-per-attempt over baseline cost-per-attempt.
inline double budget_ratio(const CostReport& system_report,
                           const CostReport& baseline_report) {
  if (!(baseline_report.cost_per_attempt > 0.0))
    throw std::invalid_argument("budget_ratio: baseline cost per attempt is zero");
  if (!(system_report.cost_per_attempt > 0.0))
    throw std::invalid_argument("budget_ratio: system cost per attempt is zero");
  return system_report.cost_per_attempt / baseline_report.cost_per_attempt;
}

// Attempt cap giving the system at most the baseline's spend: floor, never
// round up, minimum 1.
inline std::int64_t budget_matched_attempts(std::int64_t baseline_attempts,
                                            double ratio) {
  if (baseline_attempts < 1)
    throw std::invalid_argument("budget_matched_attempts: attempts must be >= 1");
  if (!(ratio > 0.0))
    throw std::invalid_argument("budget_matched_attempts: ratio must be > 0");
  auto capped = static_cast<std::int64_t>(
      std::floor(static_cast<double>(baseline_attempts) / ratio));
  return std::max<std::int64_t>(1, capped);
}

// ---------------------------------------------------------------------------
// Cumulative accuracy curves. Per run, accuracy after i attempts is the
// fraction of that run's tasks solved at an attempt index <= i; points carry
// the mean and sample standard deviation over runs. On the cost axis, x is
// the modeled spend: every attempt round charges cost_per_attempt for each
// problem still unsolved in that run.
// ---------------------------------------------------------------------------

enum class XAxis { attempts, cost };

struct AccuracyPoint {
  double x = 0.0;
  double mean_accuracy = 0.0;
  double std_dev = 0.0;
};

struct AccuracyCurve {
  XAxis axis = XAxis::attempts;
  std::vector<AccuracyPoint> points;  // x strictly increasing
};

namespace detail {

inline double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  bool all_equal = true;
  for (double v : xs)
    if (v != xs.front()) {
      all_equal = false;
      break;
    }
  if (all_equal) return 0.0;  // identical trials: exactly zero, no rounding dust
  double ss = 0.0;
  for (double v : xs) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

inline AccuracyCurve accuracy_curve(const RunBundle& bundle, XAxis axis,
                                    const PricingTable* pricing = nullptr) {
  if (axis == XAxis::cost && pricing == nullptr)
    throw std::invalid_argument("accuracy_curve: cost axis requires pricing");
  if (bundle.attempts.empty())
    throw std::runtime_error("accuracy_curve: bundle has no attempts");

  struct RunState {
    std::set<std::string> tasks;
    std::map<std::string, int> solve_attempt;  // task -> first verified index
    int max_attempt = 0;
  };
  std::map<std::string, RunState> runs;
  for (const auto& a : bundle.attempts) {
    RunState& rs = runs[a.run_id];
    rs.tasks.insert(a.task_id);
    rs.max_attempt = std::max(rs.max_attempt, a.attempt_index);
    if (a.verified) {
      auto it = rs.solve_attempt.find(a.task_id);
      if (it == rs.solve_attempt.end() || a.attempt_index < it->second)
        rs.solve_attempt[a.task_id] = a.attempt_index;
    }
  }

  double cost_per_attempt = 0.0;
  if (axis == XAxis::cost)
    cost_per_attempt = cost_report(bundle, *pricing).cost_per_attempt;

  int max_i = 0;
  for (const auto& [id, rs] : runs) max_i = std::max(max_i, rs.max_attempt);

  AccuracyCurve curve;
  curve.axis = axis;
  std::map<std::string, double> cum_cost;  // per run
  double prev_x = -1.0;
  for (int i = 1; i <= max_i; ++i) {
    std::vector<double> accs;
    std::vector<double> xs;
    for (const auto& [id, rs] : runs) {
      std::size_t solved = 0;
      std::size_t solved_before = 0;
      for (const auto& [task, at] : rs.solve_attempt) {
        if (at <= i) ++solved;
        if (at <= i - 1) ++solved_before;
      }
      accs.push_back(static_cast<double>(solved) /
                     static_cast<double>(rs.tasks.size()));
      if (axis == XAxis::cost) {
        if (i <= rs.max_attempt) {
          double unsolved = static_cast<double>(rs.tasks.size() - solved_before);
          cum_cost[id] += unsolved * cost_per_attempt;
        }
        xs.push_back(cum_cost[id]);
      }
    }
    double mean_acc = 0.0;
    for (double a : accs) mean_acc += a;
    mean_acc /= static_cast<double>(accs.size());
    AccuracyPoint pt;
    pt.mean_accuracy = mean_acc;
    pt.std_dev = detail::sample_std(accs, mean_acc);
    if (axis == XAxis::attempts) {
      pt.x = static_cast<double>(i);
    } else {
      double mean_x = 0.0;
      for (double x : xs) mean_x += x;
      pt.x = mean_x / static_cast<double>(xs.size());
      if (pt.x <= prev_x) continue;  // all runs idle; nothing was spent
    }
    prev_x = pt.x;
    curve.points.push_back(pt);
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Budget-aligned comparison. For every baseline point, the system's accuracy
// at the largest system x not exceeding it (step interpolation; 0 before the
// system's first point). gap = system - baseline. The crossover is the first
// baseline x where the system catches up, if it ever does.
// ---------------------------------------------------------------------------

struct BudgetComparisonRow {
  double x = 0.0;
  double baseline_mean = 0.0;
  double system_mean = 0.0;
  double gap = 0.0;
};

struct BudgetComparison {
  std::vector<BudgetComparisonRow> rows;
  std::optional<double> crossover_x;
};

// CSV: `x,mean,std` with 6 decimal places.
inline void write_accuracy_csv(const AccuracyCurve& curve, std::ostream& out) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  out << "x,mean,std\n";
  for (const auto& p : curve.points)
    out << fmt(p.x) << ',' << fmt(p.mean_accuracy) << ',' << fmt(p.std_dev) << '\n';
}

inline AccuracyCurve read_accuracy_csv(std::istream& in,
                                       XAxis axis = XAxis::attempts) {
  AccuracyCurve curve;
  curve.axis = axis;
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty curve file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x,mean,std")
    throw std::runtime_error("accuracy curve header must be x,mean,std");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    AccuracyPoint p;
    char trailing = 0;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf%c", &p.x, &p.mean_accuracy,
                    &p.std_dev, &trailing) != 3)
      throw std::runtime_error("bad accuracy curve row: " + line);
    curve.points.push_back(p);
  }
  return curve;
}

inline BudgetComparison compare_at_budget(const AccuracyCurve& system_curve,
                                          const AccuracyCurve& baseline_curve) {
  if (system_curve.axis != baseline_curve.axis)
    throw std::invalid_argument("compare_at_budget: curves use different x axes");
  BudgetComparison cmp;
  std::size_t si = 0;
  double sys_acc = 0.0;
  for (const auto& bp : baseline_curve.points) {
    while (si < system_curve.points.size() &&
           system_curve.points[si].x <= bp.x) {
      sys_acc = system_curve.points[si].mean_accuracy;
      ++si;
    }
    BudgetComparisonRow row;
    row.x = bp.x;
    row.baseline_mean = bp.mean_accuracy;
    row.system_mean = sys_acc;
    row.gap = sys_acc - bp.mean_accuracy;
    if (!cmp.crossover_x && row.gap >= 0.0) cmp.crossover_x = row.x;
    cmp.rows.push_back(row);
  }
  return cmp;
}

// CSV: `x,baseline_mean,system_mean,gap`.
inline void write_comparison_csv(const BudgetComparison& cmp, std::ostream& out) {
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return std::string(buf);
  };
  out << "x,baseline_mean,system_mean,gap\n";
  for (const auto& r : cmp.rows)
    out << fmt(r.x) << ',' << fmt(r.baseline_mean) << ',' << fmt(r.system_mean)
        << ',' << fmt(r.gap) << '\n';
}

}  // namespace proofaudit
