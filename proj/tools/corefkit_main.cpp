// corefkit: coreference pipelines (prompt generation, inference, joint
// resolution, document-template generation) plus corpus conversion and
// MUC/B3/CEAF-e scoring.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "coref/cli.hpp"
#include "coref/synth.hpp"

namespace {

struct BackendFlags {
  std::string config_path;
  std::string kind = "mock";
  std::string base_url;
  std::string model;
  std::string api_key_env;
  std::string noise;
  std::string docs;  // gold corpus for the mock backend
  int parallelism = 0;
  int max_tokens = 0;
  int max_retries = -1;
  double timeout_s = 0;
  int chain_len = 0;
  bool no_backward_chain = false;
  std::string iter_context;
  std::string instructions_dir;
  double chain_threshold = -1;
  double found_threshold = -1;

  void add_common(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option("--backend", kind, "Backend kind: mock or remote")
        ->check(CLI::IsMember({"mock", "remote"}));
    cmd->add_option("--base-url", base_url, "Remote endpoint base URL");
    cmd->add_option("--model", model, "Remote model name");
    cmd->add_option("--api-key-env", api_key_env, "Env var holding the API key");
    cmd->add_option("--noise", noise, "Mock noise spec, e.g. seed=7,p_fwd_swap=0.3");
    cmd->add_option("--parallelism", parallelism, "Max completions in flight");
    cmd->add_option("--max-tokens", max_tokens, "Completion token limit");
    cmd->add_option("--max-retries", max_retries, "Retries on 429/5xx");
    cmd->add_option("--timeout-s", timeout_s, "Request timeout in seconds");
  }

  void add_template(CLI::App* cmd) {
    cmd->add_option("--chain-len", chain_len, "Chain answer length (default 2)");
    cmd->add_flag("--no-backward-chain", no_backward_chain,
                  "Backward answers name a single mention");
    cmd->add_option("--iter-context", iter_context, "prev_sentence or none")
        ->check(CLI::IsMember({"prev_sentence", "none"}));
    cmd->add_option("--instructions", instructions_dir, "Directory of instruction .txt assets");
  }

  coref::cli::RunConfig resolve() const {
    coref::cli::RunConfig cfg;
    if (!config_path.empty()) cfg = coref::cli::RunConfig::from_file(config_path);
    if (kind == "remote") cfg.backend.kind = coref::BackendConfig::Kind::remote;
    if (kind == "mock" && config_path.empty()) cfg.backend.kind = coref::BackendConfig::Kind::mock;
    if (!base_url.empty()) cfg.backend.base_url = base_url;
    if (!model.empty()) cfg.backend.model_name = model;
    if (!api_key_env.empty()) cfg.backend.api_key_env = api_key_env;
    if (parallelism > 0) cfg.backend.parallelism = parallelism;
    if (max_tokens > 0) cfg.backend.max_tokens = max_tokens;
    if (max_retries >= 0) cfg.backend.max_retries = max_retries;
    if (timeout_s > 0) cfg.backend.timeout_s = timeout_s;
    if (!noise.empty()) cfg.noise = coref::NoiseSpec::parse(noise);
    if (chain_len > 0) cfg.templates.chain_len = chain_len;
    if (no_backward_chain) cfg.templates.backward_chain = false;
    if (iter_context == "none") cfg.templates.iter_context = coref::IterContext::none;
    if (iter_context == "prev_sentence")
      cfg.templates.iter_context = coref::IterContext::prev_sentence;
    if (!instructions_dir.empty())
      cfg.templates.instructions = coref::InstructionSet::from_directory(instructions_dir);
    if (chain_threshold >= 0) cfg.joint.chain_threshold = chain_threshold;
    if (found_threshold >= 0) cfg.joint.found_threshold = found_threshold;
    cfg.backend.validate();
    cfg.noise.validate();
    return cfg;
  }
};

void emit_json(const nlohmann::ordered_json& j, const std::string& out_path) {
  if (out_path.empty())
    std::cout << j.dump(2) << "\n";
  else
    coref::cli::write_file(out_path, j.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coreference resolution pipelines and scoring"};
  app.require_subcommand(1);

  // convert ------------------------------------------------------------
  std::string cv_in, cv_out, cv_in_format = "auto", cv_out_format = "json";
  bool cv_keep_nonref = false;
  auto* cv = app.add_subcommand("convert", "Convert between CoNLL-style and canonical JSON");
  cv->add_option("--in", cv_in, "Input corpus")->required();
  cv->add_option("--out", cv_out, "Output path")->required();
  cv->add_option("--in-format", cv_in_format)->check(CLI::IsMember({"auto", "conll", "json"}));
  cv->add_option("--out-format", cv_out_format)->check(CLI::IsMember({"conll", "json"}));
  cv->add_flag("--keep-non-referring", cv_keep_nonref,
               "Keep mentions flagged non-referring (dropped by default)");

  // gen-prompts ---------------------------------------------------------
  std::string gp_docs, gp_out, gp_modes = "qa_forward,qa_backward,qa_singleton", gp_sft;
  BackendFlags gp_flags;
  auto* gp = app.add_subcommand("gen-prompts", "Build prompt records from a gold corpus");
  gp->add_option("--docs", gp_docs, "Canonical corpus")->required();
  gp->add_option("--out", gp_out, "Prompt records JSONL")->required();
  gp->add_option("--modes", gp_modes, "Comma-separated task modes");
  gp->add_option("--sft", gp_sft, "Also export SFT training JSONL here");
  gp_flags.add_template(gp);
  gp->add_option("--config", gp_flags.config_path, "JSON run configuration");

  // infer ----------------------------------------------------------------
  std::string in_prompts, in_out;
  BackendFlags in_flags;
  auto* inf = app.add_subcommand("infer", "Run prompts through a completion backend");
  inf->add_option("--prompts", in_prompts, "Prompt records JSONL")->required();
  inf->add_option("--out", in_out, "Responses JSONL")->required();
  inf->add_option("--docs", in_flags.docs, "Gold corpus (required for the mock backend)");
  in_flags.add_common(inf);

  // joint ----------------------------------------------------------------
  std::string jt_docs, jt_fwd, jt_bwd, jt_singleton, jt_out, jt_diag;
  BackendFlags jt_flags;
  auto* jt = app.add_subcommand("joint", "Joint inference over QA responses");
  jt->add_option("--docs", jt_docs, "Canonical corpus")->required();
  jt->add_option("--fwd", jt_fwd, "Forward responses JSONL")->required();
  jt->add_option("--bwd", jt_bwd, "Backward responses JSONL")->required();
  jt->add_option("--singleton", jt_singleton, "Singleton responses JSONL");
  jt->add_option("--out", jt_out, "Corpus with predicted clusters")->required();
  jt->add_option("--diagnostics", jt_diag, "Diagnostics JSON path");
  jt->add_option("--chain-threshold", jt_flags.chain_threshold, "Chain-seeding weight");
  jt->add_option("--found-threshold", jt_flags.found_threshold, "Resolved-anaphor weight");
  jt->add_option("--config", jt_flags.config_path, "JSON run configuration");

  // docgen ---------------------------------------------------------------
  std::string dg_docs, dg_mode = "iter", dg_out, dg_report;
  BackendFlags dg_flags;
  auto* dg = app.add_subcommand("docgen", "Document-template generation (full or iterative)");
  dg->add_option("--docs", dg_docs, "Canonical corpus")->required();
  dg->add_option("--mode", dg_mode, "full or iter")->check(CLI::IsMember({"full", "iter"}));
  dg->add_option("--out", dg_out, "Corpus with predicted clusters")->required();
  dg->add_option("--report", dg_report, "Per-document report JSONL")->required();
  dg_flags.add_common(dg);
  dg_flags.add_template(dg);

  // check ----------------------------------------------------------------
  std::string ck_docs, ck_report, ck_out;
  auto* ck = app.add_subcommand("check", "Alignment/EM rates for generated documents");
  ck->add_option("--docs", ck_docs, "Canonical corpus")->required();
  ck->add_option("--report", ck_report, "Docgen report JSONL")->required();
  ck->add_option("--out", ck_out, "Write the JSON summary here instead of stdout");

  // score ----------------------------------------------------------------
  std::string sc_key, sc_response, sc_per_doc, sc_out;
  bool sc_keep_singletons = false, sc_drop_sa = false;
  auto* sc = app.add_subcommand("score", "MUC, B3, CEAF-e and their CoNLL average");
  sc->add_option("--key", sc_key, "Key corpus (gold)")->required();
  sc->add_option("--response", sc_response, "Response corpus (predicted)")->required();
  sc->add_flag("--keep-singletons", sc_keep_singletons,
               "Score with singletons kept (default drops them on both sides)");
  sc->add_flag("--drop-split-antecedents", sc_drop_sa,
               "Accepted for interface compatibility; no-op without corpus flags");
  sc->add_option("--per-doc", sc_per_doc, "Per-document TSV path");
  sc->add_option("--out", sc_out, "Write the JSON report here instead of stdout");

  // synth ----------------------------------------------------------------
  std::string sy_out;
  int sy_count = 10;
  std::uint64_t sy_seed = 0;
  bool sy_conll = false;
  auto* sy = app.add_subcommand("synth", "Generate a synthetic gold corpus");
  sy->add_option("--out", sy_out, "Output path")->required();
  sy->add_option("--count", sy_count, "Number of documents");
  sy->add_option("--seed", sy_seed, "Generator seed");
  sy->add_flag("--conll", sy_conll, "Emit CoNLL-style columns instead of JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cv) {
      auto fmt = [](const std::string& s) {
        if (s == "conll") return coref::cli::CorpusFormat::conll;
        if (s == "json") return coref::cli::CorpusFormat::canonical;
        return coref::cli::CorpusFormat::autodetect;
      };
      int n = coref::cli::convert(cv_in, cv_out, fmt(cv_in_format), fmt(cv_out_format),
                                  cv_keep_nonref);
      emit_json({{"documents", n}}, "");
    } else if (*gp) {
      auto cfg = gp_flags.resolve();
      std::vector<coref::TaskMode> modes;
      for (const auto& m : coref::detail::split_on(gp_modes, ','))
        modes.push_back(coref::task_mode_from_string(coref::detail::trim(m)));
      auto counts = coref::cli::gen_prompts(gp_docs, modes, gp_out, cfg.templates, gp_sft);
      nlohmann::ordered_json j;
      for (const auto& [mode, count] : counts) j[coref::to_string(mode)] = count;
      emit_json(j, "");
    } else if (*inf) {
      auto cfg = in_flags.resolve();
      auto result = coref::cli::infer(in_prompts, in_out, cfg.backend, cfg.noise, in_flags.docs);
      emit_json({{"ok", result.ok}, {"failed", result.failed}}, "");
      if (result.failed > 0) return 2;
    } else if (*jt) {
      auto cfg = jt_flags.resolve();
      auto diag = coref::cli::joint_cmd(jt_docs, jt_fwd, jt_bwd, jt_singleton, jt_out, cfg.joint,
                                        jt_diag);
      emit_json({{"dropped_ungroundable", diag.dropped_ungroundable},
                 {"unparseable", diag.unparseable},
                 {"reinforced_anaphors", diag.reinforced_anaphors},
                 {"tie_breaks", diag.tie_breaks}},
                "");
    } else if (*dg) {
      auto cfg = dg_flags.resolve();
      auto mode = dg_mode == "full" ? coref::cli::DocgenMode::full : coref::cli::DocgenMode::iter;
      auto summary = coref::cli::docgen_cmd(dg_docs, mode, dg_out, dg_report, cfg.backend,
                                            cfg.noise, cfg.templates);
      emit_json({{"documents", summary.documents},
                 {"passed", summary.passed},
                 {"em", summary.em},
                 {"failed", summary.failed}},
                "");
      if (summary.failed > 0) return 2;
    } else if (*ck) {
      auto result = coref::cli::check(ck_docs, ck_report);
      char pass_buf[32], em_buf[32];
      std::snprintf(pass_buf, sizeof(pass_buf), "%.3f", result.pass_rate);
      std::snprintf(em_buf, sizeof(em_buf), "%.3f", result.em_rate);
      nlohmann::ordered_json j;
      j["documents"] = result.documents;
      j["pass_rate"] = result.pass_rate;
      j["em_rate"] = result.em_rate;
      j["pass_rate_str"] = pass_buf;
      j["em_rate_str"] = em_buf;
      emit_json(j, ck_out);
    } else if (*sc) {
      coref::ScoreFlags flags;
      flags.drop_singletons = !sc_keep_singletons;
      flags.drop_split_antecedents = true;
      auto report = coref::cli::score_cmd(sc_key, sc_response, flags, sc_per_doc);
      emit_json(coref::cli::score_report_json(report), sc_out);
    } else if (*sy) {
      auto docs = coref::make_synthetic_corpus(sy_seed, sy_count);
      if (sy_conll) {
        std::string out;
        for (const auto& d : docs) out += coref::emit_conll(d, coref::Which::gold);
        coref::cli::write_file(sy_out, out);
      } else {
        coref::cli::save_documents(sy_out, docs);
      }
      emit_json({{"documents", static_cast<int>(docs.size())}}, "");
    }
  } catch (const coref::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
