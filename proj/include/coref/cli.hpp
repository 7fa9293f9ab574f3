#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "coref/backend.hpp"
#include "coref/corpus.hpp"
#include "coref/docgen.hpp"
#include "coref/error.hpp"
#include "coref/joint.hpp"
#include "coref/scorer.hpp"
#include "coref/templates.hpp"

namespace coref::cli {

// ---------------------------------------------------------------------------
// File IO helpers (canonical documents, prompt records, response records).
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("IoError", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("IoError", "cannot write '" + path + "'");
  out << content;
}

// Canonical documents: a single JSON object or JSON-lines.
inline std::vector<Document> load_documents(const std::string& path) {
  const std::string text = read_file(path);
  bool whole_json = false;
  try {
    auto parsed = nlohmann::json::parse(text);
    (void)parsed;
    whole_json = true;
  } catch (const nlohmann::json::exception&) {
    // JSON-lines
  }
  if (whole_json) return {parse_canonical(text)};
  std::vector<Document> docs;
  const auto lines = detail::split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (detail::trim(lines[i]).empty()) continue;
    try {
      docs.push_back(parse_canonical(lines[i]));
    } catch (const Error& e) {
      fail(e.kind(), path + " line " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  if (docs.empty()) fail("EmptyDocument", "'" + path + "' contains no documents");
  return docs;
}

inline void save_documents(const std::string& path, const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) out += emit_canonical(d) + "\n";
  write_file(path, out);
}

inline nlohmann::ordered_json record_to_json(const PromptRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.record_id;
  j["doc_key"] = r.doc_key;
  j["mode"] = to_string(r.mode);
  j["target"] = r.target;
  j["prompt"] = r.prompt;
  if (!r.gold_answer.empty()) j["gold"] = r.gold_answer;
  if (!r.meta.empty()) j["meta"] = r.meta;
  return j;
}

inline PromptRecord record_from_json(const nlohmann::json& j) {
  PromptRecord r;
  r.record_id = j.at("id").get<std::string>();
  r.doc_key = j.at("doc_key").get<std::string>();
  r.mode = task_mode_from_string(j.at("mode").get<std::string>());
  r.target = j.at("target").get<int>();
  r.prompt = j.at("prompt").get<std::string>();
  if (j.contains("gold")) r.gold_answer = j["gold"].get<std::string>();
  if (j.contains("meta"))
    for (const auto& [k, v] : j["meta"].items()) r.meta[k] = v.get<std::string>();
  return r;
}

inline void save_records(const std::string& path, const std::vector<PromptRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r).dump() + "\n";
  write_file(path, out);
}

inline std::vector<PromptRecord> load_records(const std::string& path) {
  std::vector<PromptRecord> out;
  for (const auto& line : detail::split_lines(read_file(path))) {
    if (detail::trim(line).empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail("SchemaViolation", path + ": " + e.what());
    }
  }
  return out;
}

inline void save_responses(const std::string& path, const std::vector<ResponseRecord>& responses) {
  std::string out;
  for (const auto& r : responses) {
    nlohmann::ordered_json j;
    j["id"] = r.record_id;
    j["doc_key"] = r.doc_key;
    j["mode"] = to_string(r.mode);
    j["target"] = r.target;
    j["raw"] = r.raw_text;
    j["latency_ms"] = r.latency_ms;
    j["attempts"] = r.attempts;
    if (!r.error.empty()) j["error"] = r.error;
    out += j.dump() + "\n";
  }
  write_file(path, out);
}

inline std::vector<ResponseRecord> load_responses(const std::string& path) {
  std::vector<ResponseRecord> out;
  for (const auto& line : detail::split_lines(read_file(path))) {
    if (detail::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ResponseRecord r;
      r.record_id = j.at("id").get<std::string>();
      r.doc_key = j.at("doc_key").get<std::string>();
      r.mode = task_mode_from_string(j.at("mode").get<std::string>());
      r.target = j.at("target").get<int>();
      r.raw_text = j.at("raw").get<std::string>();
      if (j.contains("latency_ms")) r.latency_ms = j["latency_ms"].get<double>();
      if (j.contains("attempts")) r.attempts = j["attempts"].get<int>();
      if (j.contains("error")) r.error = j["error"].get<std::string>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      fail("SchemaViolation", path + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration (declarative JSON config; unknown keys rejected).
// Secrets never live in the config: the backend carries the NAME of an
// environment variable, or `api_key` may be written as "${VAR}".
// ---------------------------------------------------------------------------

struct RunConfig {
  BackendConfig backend;
  NoiseSpec noise;
  TemplateConfig templates;
  JointConfig joint;

  static RunConfig from_json(const nlohmann::json& j) {
    RunConfig cfg;
    static const std::vector<std::string> root_keys = {"backend", "noise", "chain_len",
                                                       "backward_chain", "iter_context",
                                                       "thresholds", "instructions_dir"};
    for (const auto& [k, v] : j.items())
      if (std::find(root_keys.begin(), root_keys.end(), k) == root_keys.end())
        fail("ConfigError", "unknown config key '" + k + "'");

    if (j.contains("backend")) {
      const auto& b = j["backend"];
      static const std::vector<std::string> keys = {"kind",        "base_url",  "model",
                                                    "api_key_env", "api_key",   "temperature",
                                                    "max_tokens",  "timeout_s", "max_retries",
                                                    "parallelism"};
      for (const auto& [k, v] : b.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
          fail("ConfigError", "unknown backend config key '" + k + "'");
      if (b.contains("kind")) {
        const std::string kind = b["kind"].get<std::string>();
        if (kind == "mock") cfg.backend.kind = BackendConfig::Kind::mock;
        else if (kind == "remote") cfg.backend.kind = BackendConfig::Kind::remote;
        else fail("ConfigError", "backend.kind must be 'mock' or 'remote'");
      }
      if (b.contains("base_url")) cfg.backend.base_url = b["base_url"].get<std::string>();
      if (b.contains("model")) cfg.backend.model_name = b["model"].get<std::string>();
      if (b.contains("api_key_env")) cfg.backend.api_key_env = b["api_key_env"].get<std::string>();
      if (b.contains("api_key")) {
        // env-var interpolation for secrets: only the "${VAR}" form is accepted
        const std::string v = b["api_key"].get<std::string>();
        if (v.size() > 3 && v.substr(0, 2) == "${" && v.back() == '}')
          cfg.backend.api_key_env = v.substr(2, v.size() - 3);
        else
          fail("ConfigError", "api_key must use the \"${ENV_VAR}\" form; literal keys are not allowed");
      }
      if (b.contains("temperature")) cfg.backend.temperature = b["temperature"].get<double>();
      if (b.contains("max_tokens")) cfg.backend.max_tokens = b["max_tokens"].get<int>();
      if (b.contains("timeout_s")) cfg.backend.timeout_s = b["timeout_s"].get<double>();
      if (b.contains("max_retries")) cfg.backend.max_retries = b["max_retries"].get<int>();
      if (b.contains("parallelism")) cfg.backend.parallelism = b["parallelism"].get<int>();
    }
    if (j.contains("noise")) {
      if (j["noise"].is_string()) cfg.noise = NoiseSpec::parse(j["noise"].get<std::string>());
      else fail("ConfigError", "noise must be a spec string like \"seed=7,p_dup=0.5\"");
    }
    if (j.contains("chain_len")) cfg.templates.chain_len = j["chain_len"].get<int>();
    if (j.contains("backward_chain")) cfg.templates.backward_chain = j["backward_chain"].get<bool>();
    if (j.contains("iter_context")) {
      const std::string v = j["iter_context"].get<std::string>();
      if (v == "prev_sentence") cfg.templates.iter_context = IterContext::prev_sentence;
      else if (v == "none") cfg.templates.iter_context = IterContext::none;
      else fail("ConfigError", "iter_context must be 'prev_sentence' or 'none'");
    }
    if (j.contains("instructions_dir"))
      cfg.templates.instructions =
          InstructionSet::from_directory(j["instructions_dir"].get<std::string>());
    if (j.contains("thresholds")) {
      const auto& t = j["thresholds"];
      for (const auto& [k, v] : t.items())
        if (k != "chain" && k != "found") fail("ConfigError", "unknown threshold '" + k + "'");
      if (t.contains("chain")) cfg.joint.chain_threshold = t["chain"].get<double>();
      if (t.contains("found")) cfg.joint.found_threshold = t["found"].get<double>();
    }
    if (cfg.templates.chain_len < 1) fail("ConfigError", "chain_len must be >= 1");
    cfg.backend.validate();
    cfg.noise.validate();
    return cfg;
  }

  static RunConfig from_file(const std::string& path) {
    try {
      return from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
      fail("ConfigError", path + ": " + e.what());
    }
  }
};

// ---------------------------------------------------------------------------
// Subcommand bodies. Each is a deterministic composition of module
// operations; the binary in tools/ is a thin flag parser over these.
// ---------------------------------------------------------------------------

enum class CorpusFormat { autodetect, conll, canonical };

inline CorpusFormat detect_format(const std::string& text) {
  for (const auto& line : detail::split_lines(text)) {
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    return t.rfind("#begin document", 0) == 0 ? CorpusFormat::conll : CorpusFormat::canonical;
  }
  fail("EmptyDocument", "input is empty");
}

inline int convert(const std::string& in_path, const std::string& out_path,
                   CorpusFormat in_format = CorpusFormat::autodetect,
                   CorpusFormat out_format = CorpusFormat::canonical,
                   bool keep_non_referring = false) {
  const std::string text = read_file(in_path);
  CorpusFormat from = in_format == CorpusFormat::autodetect ? detect_format(text) : in_format;
  std::vector<Document> docs =
      from == CorpusFormat::conll ? parse_conll(text) : load_documents(in_path);
  if (!keep_non_referring) {
    for (auto& d : docs) d = drop_non_referring(d);
  }
  if (out_format == CorpusFormat::conll) {
    std::string out;
    for (const auto& d : docs)
      out += emit_conll(d, d.gold ? Which::gold : Which::predicted);
    write_file(out_path, out);
  } else {
    save_documents(out_path, docs);
  }
  return static_cast<int>(docs.size());
}

// Builds prompt records for the requested modes over a corpus, in the
// deterministic export order. Iterative records use gold ids for the already
// assigned prefix, as training-data generation requires.
inline std::map<TaskMode, int> gen_prompts(const std::string& doc_path,
                                           const std::vector<TaskMode>& modes,
                                           const std::string& out_path,
                                           const TemplateConfig& cfg = {},
                                           const std::string& sft_path = "") {
  const std::vector<Document> docs = load_documents(doc_path);
  std::vector<PromptRecord> records;
  std::map<TaskMode, int> counts;
  for (const auto& doc : docs) {
    for (TaskMode mode : modes) {
      switch (mode) {
        case TaskMode::qa_forward:
          for (int m = 0; m < doc.mention_count(); ++m) {
            records.push_back(build_qa_forward(doc, m, cfg));
            ++counts[mode];
          }
          break;
        case TaskMode::qa_backward:
          for (int m = 0; m < doc.mention_count(); ++m) {
            records.push_back(build_qa_backward(doc, m, cfg));
            ++counts[mode];
          }
          break;
        case TaskMode::qa_singleton:
          for (int s = 0; s < doc.sentence_count(); ++s) {
            if (sentence_candidates(doc, s).empty()) continue;
            records.push_back(build_qa_singleton(doc, s, cfg));
            ++counts[mode];
          }
          break;
        case TaskMode::doc_full:
          records.push_back(build_doc_full(doc, cfg));
          ++counts[mode];
          break;
        case TaskMode::doc_iter: {
          if (!doc.gold)
            fail("MissingClustering",
                 "doc_iter prompt generation needs gold ids for '" + doc.doc_key + "'");
          const auto cid_of = doc.gold->mention_to_cluster();
          std::vector<int> assigned;
          for (int m = 0; m < doc.mention_count(); ++m) {
            records.push_back(build_doc_iter_step(doc, m, assigned, cfg));
            assigned.push_back(cid_of.at(m));
            ++counts[mode];
          }
          break;
        }
      }
    }
  }
  std::map<std::string, int> doc_order;
  for (const auto& d : docs) doc_order.emplace(d.doc_key, static_cast<int>(doc_order.size()));
  std::stable_sort(records.begin(), records.end(),
                   [&](const PromptRecord& a, const PromptRecord& b) {
                     if (doc_order[a.doc_key] != doc_order[b.doc_key])
                       return doc_order[a.doc_key] < doc_order[b.doc_key];
                     if (a.target != b.target) return a.target < b.target;
                     return mode_rank(a.mode) < mode_rank(b.mode);
                   });
  save_records(out_path, records);
  if (!sft_path.empty()) export_sft(records, sft_path);
  return counts;
}

struct InferResult {
  int ok = 0;
  int failed = 0;
};

inline InferResult infer(const std::string& prompts_path, const std::string& out_path,
                         const BackendConfig& backend_cfg, const NoiseSpec& noise = {},
                         const std::string& docs_path = "") {
  const std::vector<PromptRecord> records = load_records(prompts_path);
  std::vector<Document> docs;
  if (backend_cfg.kind == BackendConfig::Kind::mock) {
    if (docs_path.empty())
      fail("ConfigError", "the mock backend needs --docs with the gold corpus");
    docs = load_documents(docs_path);
  }
  auto backend = make_backend(backend_cfg, std::move(docs), noise);
  const auto responses = run_batch(*backend, records, backend_cfg.parallelism);
  save_responses(out_path, responses);
  InferResult result;
  for (const auto& r : responses) (r.ok() ? result.ok : result.failed)++;
  return result;
}

inline JointDiagnostics joint_cmd(const std::string& doc_path, const std::string& fwd_path,
                                  const std::string& bwd_path, const std::string& singleton_path,
                                  const std::string& out_path, const JointConfig& cfg = {},
                                  const std::string& diagnostics_path = "") {
  std::vector<Document> docs = load_documents(doc_path);
  auto group = [](const std::vector<ResponseRecord>& responses) {
    std::map<std::string, std::vector<ResponseRecord>> by_doc;
    for (const auto& r : responses) by_doc[r.doc_key].push_back(r);
    return by_doc;
  };
  auto fwd = group(load_responses(fwd_path));
  auto bwd = group(load_responses(bwd_path));
  auto singleton = singleton_path.empty()
                       ? std::map<std::string, std::vector<ResponseRecord>>{}
                       : group(load_responses(singleton_path));

  JointDiagnostics diag;
  for (auto& doc : docs) {
    doc.predicted =
        joint_infer(doc, fwd[doc.doc_key], bwd[doc.doc_key], singleton[doc.doc_key], cfg, &diag);
  }
  save_documents(out_path, docs);
  if (!diagnostics_path.empty()) {
    nlohmann::ordered_json j;
    j["dropped_ungroundable"] = diag.dropped_ungroundable;
    j["unparseable"] = diag.unparseable;
    j["reinforced_anaphors"] = diag.reinforced_anaphors;
    j["tie_breaks"] = diag.tie_breaks;
    write_file(diagnostics_path, j.dump(2) + "\n");
  }
  return diag;
}

enum class DocgenMode { full, iter };

struct DocgenSummary {
  int documents = 0;
  int passed = 0;
  int em = 0;
  int failed = 0;  // backend failures
};

inline DocgenSummary docgen_cmd(const std::string& doc_path, DocgenMode mode,
                                const std::string& out_path, const std::string& report_path,
                                const BackendConfig& backend_cfg, const NoiseSpec& noise = {},
                                const TemplateConfig& cfg = {}) {
  std::vector<Document> docs = load_documents(doc_path);
  auto backend = make_backend(backend_cfg, docs, noise);

  DocgenSummary summary;
  std::string report;
  for (auto& doc : docs) {
    ++summary.documents;
    nlohmann::ordered_json line;
    line["doc_key"] = doc.doc_key;
    line["mode"] = mode == DocgenMode::full ? "full" : "iter";
    if (mode == DocgenMode::full) {
      FullRunResult r = run_full(doc, *backend, cfg);
      if (!r.ok()) {
        ++summary.failed;
        line["error"] = r.error;
      } else {
        line["pass"] = r.report.passed;
        line["em"] = r.report.em;
        line["generated"] = r.generated;
        if (r.report.passed) ++summary.passed;
        if (r.report.em) ++summary.em;
        if (r.predicted) doc.predicted = r.predicted;
      }
    } else {
      IterRunResult r = run_iterative(doc, *backend, cfg);
      if (!r.ok()) {
        ++summary.failed;
        line["error"] = r.error;
      } else {
        line["pass"] = r.report.passed;
        line["em"] = r.report.em;
        line["coerced_ids"] = r.coerced_ids;
        line["steps"] = r.steps;
        line["generated"] = r.annotated;
        if (r.report.passed) ++summary.passed;
        if (r.report.em) ++summary.em;
        doc.predicted = r.predicted;
      }
    }
    report += line.dump() + "\n";
  }
  save_documents(out_path, docs);
  if (!report_path.empty()) write_file(report_path, report);
  return summary;
}

struct CheckResult {
  int documents = 0;
  double pass_rate = 0.0;
  double em_rate = 0.0;
};

// Re-verifies generated annotated documents against the corpus: strips the
// markup and realigns against the original text.
inline CheckResult check(const std::string& doc_path, const std::string& report_path) {
  const std::vector<Document> docs = load_documents(doc_path);
  std::map<std::string, const Document*> by_key;
  for (const auto& d : docs) by_key[d.doc_key] = &d;

  CheckResult result;
  int passed = 0, em = 0;
  for (const auto& line : detail::split_lines(read_file(report_path))) {
    if (detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail("SchemaViolation", report_path + ": " + e.what());
    }
    const std::string key = j.at("doc_key").get<std::string>();
    auto it = by_key.find(key);
    if (it == by_key.end()) fail("DocKeyMismatch", "report names unknown document '" + key + "'");
    ++result.documents;
    if (!j.contains("generated")) continue;  // backend failure: counts as neither
    const std::string generated = j["generated"].get<std::string>();
    try {
      StripResult stripped = strip_annotations(generated);
      AlignmentReport rep = align(plain_text(*it->second), stripped.plain, stripped.spans);
      if (rep.passed) ++passed;
      if (rep.em) ++em;
    } catch (const Error&) {
      // malformed markup: fails both checks
    }
  }
  if (result.documents > 0) {
    result.pass_rate = static_cast<double>(passed) / result.documents;
    result.em_rate = static_cast<double>(em) / result.documents;
  }
  return result;
}

inline nlohmann::ordered_json score_report_json(const ScoreReport& r) {
  auto metric = [](const MetricScore& m) {
    nlohmann::ordered_json j;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    return j;
  };
  nlohmann::ordered_json j;
  j["muc"] = metric(r.muc);
  j["b3"] = metric(r.b3);
  j["ceaf_e"] = metric(r.ceaf_e);
  j["conll_f1"] = r.conll_f1;
  j["flags"] = {{"drop_singletons", r.flags.drop_singletons},
                {"drop_split_antecedents", r.flags.drop_split_antecedents}};
  j["mention_counts"] = {{"key", r.key_mentions}, {"response", r.response_mentions}};
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

inline ScoreReport score_cmd(const std::string& key_path, const std::string& response_path,
                             const ScoreFlags& flags = {}, const std::string& per_doc_tsv = "") {
  const std::vector<Document> key_docs = load_documents(key_path);
  const std::vector<Document> response_docs = load_documents(response_path);
  std::map<std::string, const Document*> responses;
  for (const auto& d : response_docs) responses[d.doc_key] = &d;
  std::vector<std::pair<const Document*, const Document*>> pairs;
  for (const auto& k : key_docs) {
    auto it = responses.find(k.doc_key);
    if (it == responses.end())
      fail("DocKeyMismatch", "response file has no document '" + k.doc_key + "'");
    pairs.emplace_back(&k, it->second);
  }
  if (response_docs.size() != key_docs.size())
    fail("DocKeyMismatch", "key and response files contain different document sets");

  std::vector<ScoreReport> per_doc;
  ScoreReport report = score_many(pairs, flags, &per_doc);
  if (!per_doc_tsv.empty()) {
    std::string tsv = "doc_key\tmuc_f1\tb3_f1\tceafe_f1\tconll_f1\n";
    for (size_t i = 0; i < pairs.size(); ++i) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%s\t%.4f\t%.4f\t%.4f\t%.4f\n",
                    pairs[i].first->doc_key.c_str(), per_doc[i].muc.f1, per_doc[i].b3.f1,
                    per_doc[i].ceaf_e.f1, per_doc[i].conll_f1);
      tsv += buf;
    }
    write_file(per_doc_tsv, tsv);
  }
  return report;
}

}  // namespace coref::cli
