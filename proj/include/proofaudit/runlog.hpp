#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "proofaudit/lexref.hpp"

namespace proofaudit {

// ---------------------------------------------------------------------------
// Records
//
// A run log is a JSONL file of "lemma" and "attempt" records (plus an
// optional "meta" record). Attempts reference lemmas by id; a bundle is the
// referentially closed set of both. Bundles are immutable after construction
// and safe for concurrent readers.
// ---------------------------------------------------------------------------

enum class Population { retrieved, non_retrieved, corpus };

inline std::string_view to_string(Population p) {
  switch (p) {
    case Population::retrieved: return "retrieved";
    case Population::non_retrieved: return "non_retrieved";
    case Population::corpus: return "corpus";
  }
  return "retrieved";
}

inline std::optional<Population> parse_population(std::string_view s) {
  if (s == "retrieved") return Population::retrieved;
  if (s == "non_retrieved") return Population::non_retrieved;
  if (s == "corpus") return Population::corpus;
  return std::nullopt;
}

// Which prover family produced an attempt. Unknown labels are preserved
// verbatim under `other`.
struct SystemTag {
  enum Kind { library_learner, baseline, other };
  Kind kind = other;
  std::string label;

  static SystemTag parse(std::string s) {
    SystemTag t;
    if (s == "library_learner") t.kind = library_learner;
    else if (s == "baseline") t.kind = baseline;
    else t.kind = other;
    t.label = std::move(s);
    return t;
  }
  bool operator==(const SystemTag& o) const { return label == o.label; }
};

struct LemmaRecord {
  std::string lemma_id;
  std::optional<std::string> name;
  std::string text;
  std::size_t token_count = 0;  // whitespace-token count of text; >= 1
  Population population = Population::retrieved;

  bool operator==(const LemmaRecord&) const = default;
};

// Builds a record with the derived token count. Throws if the text has no
// tokens (the soft-use score would have a zero denominator).
inline LemmaRecord make_lemma(std::string id, std::optional<std::string> name,
                              std::string text,
                              Population population = Population::retrieved) {
  LemmaRecord rec;
  rec.token_count = tokenize(text).size();
  if (rec.token_count == 0)
    throw std::invalid_argument("lemma '" + id + "': text has no tokens");
  rec.lemma_id = std::move(id);
  rec.name = std::move(name);
  rec.text = std::move(text);
  rec.population = population;
  return rec;
}

struct Attempt {
  std::string run_id;
  SystemTag system;
  std::string model;
  std::string task_id;
  int attempt_index = 1;  // 1-based per (run_id, task_id)
  std::vector<std::string> prompt_lemmas;
  std::string solution_text;  // raw LLM output, before correction heuristics
  bool verified = false;
  std::int64_t tokens_in = 0;
  std::int64_t tokens_out = 0;
  bool tokens_missing = false;  // counts absent in the log; diagnostic only

  bool operator==(const Attempt& o) const {
    return run_id == o.run_id && system == o.system && model == o.model &&
           task_id == o.task_id && attempt_index == o.attempt_index &&
           prompt_lemmas == o.prompt_lemmas &&
           solution_text == o.solution_text && verified == o.verified &&
           tokens_in == o.tokens_in && tokens_out == o.tokens_out;
  }
};

struct RunBundle {
  std::vector<Attempt> attempts;       // ingestion order
  std::vector<LemmaRecord> lemmas;     // at most one record per lemma_id
  std::map<std::string, std::string> meta;

  const LemmaRecord* find_lemma(std::string_view id) const {
    for (const auto& l : lemmas)
      if (l.lemma_id == id) return &l;
    return nullptr;
  }
};

// Identity on everything semantic; lemma order is not (lemmas model a map).
inline bool same_bundle(const RunBundle& a, const RunBundle& b) {
  if (a.attempts != b.attempts || a.meta != b.meta) return false;
  auto sorted = [](const std::vector<LemmaRecord>& v) {
    std::vector<LemmaRecord> s = v;
    std::sort(s.begin(), s.end(), [](const LemmaRecord& x, const LemmaRecord& y) {
      return x.lemma_id < y.lemma_id;
    });
    return s;
  };
  return sorted(a.lemmas) == sorted(b.lemmas);
}

inline std::unordered_map<std::string_view, const LemmaRecord*> lemma_index(
    const RunBundle& bundle) {
  std::unordered_map<std::string_view, const LemmaRecord*> idx;
  idx.reserve(bundle.lemmas.size());
  for (const auto& l : bundle.lemmas) idx.emplace(l.lemma_id, &l);
  return idx;
}

// ---------------------------------------------------------------------------
// Ingestion
// ---------------------------------------------------------------------------

enum class LogFormat { jsonl };

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline const nlohmann::json& field(const nlohmann::json& j, const char* key,
                                   std::size_t line) {
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError(line, std::string("missing field \"") + key + "\"");
  return *it;
}

inline std::string str_field(const nlohmann::json& j, const char* key,
                             std::size_t line) {
  const auto& v = field(j, key, line);
  if (!v.is_string())
    throw ParseError(line, std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

inline std::int64_t int_field(const nlohmann::json& j, const char* key,
                              std::size_t line) {
  const auto& v = field(j, key, line);
  if (!v.is_number_integer())
    throw ParseError(line, std::string("field \"") + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

inline LemmaRecord parse_lemma(const nlohmann::json& j, std::size_t line) {
  LemmaRecord rec;
  rec.lemma_id = str_field(j, "lemma_id", line);
  auto name_it = j.find("name");
  if (name_it != j.end() && !name_it->is_null()) {
    if (!name_it->is_string())
      throw ParseError(line, "field \"name\" must be a string or null");
    std::string name = name_it->get<std::string>();
    if (name.empty())
      throw ParseError(line, "lemma name must be non-empty when present");
    for (char c : name)
      if (is_token_separator(c))
        throw ParseError(line, "lemma name must not contain whitespace");
    rec.name = std::move(name);
  }
  rec.text = str_field(j, "text", line);
  rec.token_count = tokenize(rec.text).size();
  if (rec.token_count == 0)
    throw ParseError(line, "lemma \"" + rec.lemma_id + "\" has no tokens");
  auto pop = parse_population(str_field(j, "population", line));
  if (!pop)
    throw ParseError(line, "unknown population for lemma \"" + rec.lemma_id + "\"");
  rec.population = *pop;
  return rec;
}

inline Attempt parse_attempt(const nlohmann::json& j, std::size_t line) {
  Attempt a;
  a.run_id = str_field(j, "run_id", line);
  a.system = SystemTag::parse(str_field(j, "system", line));
  a.model = str_field(j, "model", line);
  a.task_id = str_field(j, "task_id", line);
  std::int64_t idx = int_field(j, "attempt_index", line);
  if (idx < 1) throw ParseError(line, "attempt_index must be >= 1");
  a.attempt_index = static_cast<int>(idx);
  const auto& pl = field(j, "prompt_lemmas", line);
  if (!pl.is_array())
    throw ParseError(line, "field \"prompt_lemmas\" must be an array");
  for (const auto& v : pl) {
    if (!v.is_string())
      throw ParseError(line, "prompt_lemmas entries must be strings");
    a.prompt_lemmas.push_back(v.get<std::string>());
  }
  a.solution_text = str_field(j, "solution_text", line);
  const auto& ver = field(j, "verified", line);
  if (!ver.is_boolean())
    throw ParseError(line, "field \"verified\" must be a boolean");
  a.verified = ver.get<bool>();
  if (a.verified && a.solution_text.empty())
    throw ParseError(line, "verified attempt has empty solution_text");
  // Runs with incomplete usage logging are accepted, with the counts zeroed
  // and the attempt flagged.
  if (j.contains("tokens_in") || j.contains("tokens_out")) {
    std::int64_t in = int_field(j, "tokens_in", line);
    std::int64_t out = int_field(j, "tokens_out", line);
    if (in < 0 || out < 0)
      throw ParseError(line, "token counts must be non-negative");
    a.tokens_in = in;
    a.tokens_out = out;
  } else {
    a.tokens_missing = true;
  }
  return a;
}

}  // namespace detail

// Reads a JSONL run log. Lines are split on LF; a trailing CR is stripped so
// CRLF files ingest identically. Every invariant is enforced here: the
// returned bundle always validates cleanly.
inline RunBundle ingest(std::istream& in, LogFormat format = LogFormat::jsonl) {
  if (format != LogFormat::jsonl)
    throw std::invalid_argument("unsupported log format");
  RunBundle bundle;
  std::unordered_map<std::string, std::size_t> lemma_pos;   // id -> index
  std::unordered_set<std::string> attempt_keys;
  std::vector<std::pair<std::size_t, std::size_t>> refs_to_check;  // attempt, line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "record must be a JSON object");
    std::string kind = detail::str_field(j, "kind", line_no);
    if (kind == "lemma") {
      LemmaRecord rec = detail::parse_lemma(j, line_no);
      auto it = lemma_pos.find(rec.lemma_id);
      if (it != lemma_pos.end()) {
        if (!(bundle.lemmas[it->second] == rec))
          throw ParseError(line_no, "duplicate lemma_id \"" + rec.lemma_id +
                                        "\" with differing content");
        continue;  // exact duplicate line, keep the first
      }
      lemma_pos.emplace(rec.lemma_id, bundle.lemmas.size());
      bundle.lemmas.push_back(std::move(rec));
    } else if (kind == "attempt") {
      Attempt a = detail::parse_attempt(j, line_no);
      std::string key = a.run_id + '\x1f' + a.task_id + '\x1f' +
                        std::to_string(a.attempt_index);
      if (!attempt_keys.insert(key).second)
        throw ParseError(line_no, "duplicate attempt (run \"" + a.run_id +
                                      "\", task \"" + a.task_id + "\", index " +
                                      std::to_string(a.attempt_index) + ")");
      refs_to_check.emplace_back(bundle.attempts.size(), line_no);
      bundle.attempts.push_back(std::move(a));
    } else if (kind == "meta") {
      const auto& m = detail::field(j, "meta", line_no);
      if (!m.is_object()) throw ParseError(line_no, "field \"meta\" must be an object");
      for (auto it = m.begin(); it != m.end(); ++it) {
        if (!it.value().is_string())
          throw ParseError(line_no, "meta values must be strings");
        bundle.meta[it.key()] = it.value().get<std::string>();
      }
    } else {
      throw ParseError(line_no, "unknown record kind \"" + kind + "\"");
    }
  }
  for (const auto& [attempt_idx, at_line] : refs_to_check) {
    for (const auto& id : bundle.attempts[attempt_idx].prompt_lemmas) {
      if (!lemma_pos.count(id))
        throw ParseError(at_line, "attempt references unknown lemma id \"" + id + "\"");
    }
  }
  return bundle;
}

inline RunBundle ingest(const std::filesystem::path& path,
                        LogFormat format = LogFormat::jsonl) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return ingest(in, format);
}

inline nlohmann::json lemma_to_json(const LemmaRecord& rec) {
  nlohmann::json j;
  j["kind"] = "lemma";
  j["lemma_id"] = rec.lemma_id;
  if (rec.name) j["name"] = *rec.name; else j["name"] = nullptr;
  j["text"] = rec.text;
  j["population"] = std::string(to_string(rec.population));
  return j;
}

inline nlohmann::json attempt_to_json(const Attempt& a) {
  nlohmann::json j;
  j["kind"] = "attempt";
  j["run_id"] = a.run_id;
  j["system"] = a.system.label;
  j["model"] = a.model;
  j["task_id"] = a.task_id;
  j["attempt_index"] = a.attempt_index;
  j["prompt_lemmas"] = a.prompt_lemmas;
  j["solution_text"] = a.solution_text;
  j["verified"] = a.verified;
  j["tokens_in"] = a.tokens_in;
  j["tokens_out"] = a.tokens_out;
  return j;
}

// Meta first, then lemmas sorted by id, then attempts in ingestion order.
// Output is deterministic; ingest(serialize(b)) preserves b.
inline void serialize(const RunBundle& bundle, std::ostream& out) {
  if (!bundle.meta.empty()) {
    nlohmann::json j;
    j["kind"] = "meta";
    j["meta"] = bundle.meta;
    out << j.dump() << '\n';
  }
  std::vector<const LemmaRecord*> order;
  order.reserve(bundle.lemmas.size());
  for (const auto& l : bundle.lemmas) order.push_back(&l);
  std::sort(order.begin(), order.end(),
            [](const LemmaRecord* a, const LemmaRecord* b) {
              return a->lemma_id < b->lemma_id;
            });
  for (const LemmaRecord* l : order) out << lemma_to_json(*l).dump() << '\n';
  for (const Attempt& a : bundle.attempts) out << attempt_to_json(a).dump() << '\n';
}

inline void serialize(const RunBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  serialize(bundle, out);
}

// ---------------------------------------------------------------------------
// Validation. Violations are data, not failures: each entry names the
// offending record. Ingested bundles always return an empty list; this is
// for bundles assembled in memory.
// ---------------------------------------------------------------------------

inline std::vector<std::string> validate(const RunBundle& bundle) {
  std::vector<std::string> out;
  std::unordered_map<std::string_view, const LemmaRecord*> seen;
  for (const auto& l : bundle.lemmas) {
    auto [it, fresh] = seen.emplace(l.lemma_id, &l);
    if (!fresh)
      out.push_back("duplicate lemma_id \"" + l.lemma_id + "\"");
    std::size_t n = tokenize(l.text).size();
    if (n == 0)
      out.push_back("lemma \"" + l.lemma_id + "\": text has no tokens");
    else if (n != l.token_count)
      out.push_back("lemma \"" + l.lemma_id + "\": token_count " +
                    std::to_string(l.token_count) + " != recomputed " +
                    std::to_string(n));
    if (l.name) {
      if (l.name->empty())
        out.push_back("lemma \"" + l.lemma_id + "\": empty name");
      else
        for (char c : *l.name)
          if (is_token_separator(c)) {
            out.push_back("lemma \"" + l.lemma_id + "\": name contains whitespace");
            break;
          }
    }
  }
  std::unordered_set<std::string> keys;
  for (const auto& a : bundle.attempts) {
    std::string where = "attempt (run \"" + a.run_id + "\", task \"" +
                        a.task_id + "\", index " +
                        std::to_string(a.attempt_index) + ")";
    if (a.attempt_index < 1) out.push_back(where + ": attempt_index < 1");
    std::string key = a.run_id + '\x1f' + a.task_id + '\x1f' +
                      std::to_string(a.attempt_index);
    if (!keys.insert(key).second) out.push_back("duplicate " + where);
    if (a.verified && a.solution_text.empty())
      out.push_back(where + ": verified with empty solution_text");
    if (a.tokens_in < 0 || a.tokens_out < 0)
      out.push_back(where + ": negative token count");
    for (const auto& id : a.prompt_lemmas)
      if (!seen.count(id))
        out.push_back(where + ": unresolved lemma reference \"" + id + "\"");
  }
  return out;
}

// Detector overloads on records.

inline bool verbatim_used(const LemmaRecord& lemma, std::string_view solution) {
  return verbatim_used(lemma.text, solution);
}

inline bool name_used(const LemmaRecord& lemma, std::string_view solution,
                      NameMatch mode = NameMatch::whole_word) {
  if (!lemma.name) return false;
  return name_used(*lemma.name, solution, mode);
}

}  // namespace proofaudit
