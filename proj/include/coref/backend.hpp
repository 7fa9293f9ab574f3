#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "coref/corpus.hpp"
#include "coref/detail/rng.hpp"
#include "coref/error.hpp"
#include "coref/templates.hpp"

namespace coref {

struct BackendConfig {
  enum class Kind { mock, remote };
  Kind kind = Kind::mock;
  std::string base_url;      // e.g. http://localhost:8000/v1
  std::string model_name;
  std::string api_key_env;   // name of the environment variable holding the key
  double temperature = 0.0;
  int max_tokens = 512;
  double timeout_s = 30.0;
  int max_retries = 3;
  int parallelism = 1;

  void validate() const {
    if (parallelism < 1) fail("ConfigError", "parallelism must be >= 1");
    if (temperature < 0) fail("ConfigError", "temperature must be >= 0");
    if (kind == Kind::remote && base_url.empty())
      fail("ConfigError", "remote backend requires base_url");
  }
};

// Corruption model for the mock backend. Draws are keyed by (seed, record_id)
// so each record's outcome is independent of batch order and membership.
struct NoiseSpec {
  std::uint64_t seed = 0;
  double p_fwd_swap = 0.0;   // chain item replaced by a random earlier mention
  double p_bwd_swap = 0.0;   // chain item replaced by a random later mention
  double p_none_flip = 0.0;  // None / non-None outcome flipped
  double p_dup = 0.0;        // doc_full: mention surface duplicated in place
  double p_drop = 0.0;       // doc_full: token dropped
  double p_id_err = 0.0;     // doc modes: emitted cluster id replaced by a random valid id

  bool any_noise() const {
    return p_fwd_swap > 0 || p_bwd_swap > 0 || p_none_flip > 0 || p_dup > 0 || p_drop > 0 ||
           p_id_err > 0;
  }

  void validate() const {
    for (double p : {p_fwd_swap, p_bwd_swap, p_none_flip, p_dup, p_drop, p_id_err})
      if (p < 0.0 || p > 1.0) fail("ConfigError", "noise probabilities must be in [0,1]");
  }

  // Accepts "seed=7,p_fwd_swap=0.3,..." (empty string means no noise).
  static NoiseSpec parse(const std::string& text) {
    NoiseSpec n;
    if (detail::trim(text).empty()) return n;
    for (const std::string& part : detail::split_on(text, ',')) {
      auto kv = detail::split_on(detail::trim(part), '=');
      if (kv.size() != 2) fail("ConfigError", "bad noise entry '" + part + "'");
      const std::string key = detail::trim(kv[0]);
      const std::string val = detail::trim(kv[1]);
      try {
        if (key == "seed") n.seed = std::stoull(val);
        else if (key == "p_fwd_swap") n.p_fwd_swap = std::stod(val);
        else if (key == "p_bwd_swap") n.p_bwd_swap = std::stod(val);
        else if (key == "p_none_flip") n.p_none_flip = std::stod(val);
        else if (key == "p_dup") n.p_dup = std::stod(val);
        else if (key == "p_drop") n.p_drop = std::stod(val);
        else if (key == "p_id_err") n.p_id_err = std::stod(val);
        else fail("ConfigError", "unknown noise key '" + key + "'");
      } catch (const Error&) {
        throw;
      } catch (const std::exception&) {
        fail("ConfigError", "bad value for noise key '" + key + "'");
      }
    }
    n.validate();
    return n;
  }
};

struct Completion {
  std::string text;
  int attempts = 1;
  double latency_ms = 0.0;
};

struct ResponseRecord {
  std::string record_id;
  std::string doc_key;
  TaskMode mode = TaskMode::qa_forward;
  int target = 0;
  std::string raw_text;
  double latency_ms = 0.0;
  int attempts = 1;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

// ---------------------------------------------------------------------------
// Mock backend: renders the gold answer for a record, then corrupts it.
// ---------------------------------------------------------------------------

namespace detail {

inline int meta_int(const PromptRecord& r, const std::string& key, int fallback) {
  auto it = r.meta.find(key);
  if (it == r.meta.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    return fallback;
  }
}

}  // namespace detail

inline std::string mock_answer(const Document& doc, const PromptRecord& record,
                               const NoiseSpec& noise) {
  if (record.doc_key != doc.doc_key)
    fail("DocMismatch", "record '" + record.record_id + "' does not belong to document '" +
                            doc.doc_key + "'");
  if (!doc.gold)
    fail("MissingClustering", "mock backend needs gold clustering for '" + doc.doc_key + "'");

  std::mt19937_64 rng = detail::seeded_rng(noise.seed, record.record_id);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto coin = [&](double p) { return unit(rng) < p; };
  auto pick = [&](int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };

  switch (record.mode) {
    case TaskMode::qa_forward:
    case TaskMode::qa_backward: {
      const bool fwd = record.mode == TaskMode::qa_forward;
      const int chain_len = detail::meta_int(record, "chain_len", 2);
      const int target = record.target;
      detail::require_mention(doc, target);
      std::vector<int> ids = detail::gold_neighbors(doc, target, fwd, chain_len);
      if (coin(noise.p_none_flip)) {
        if (ids.empty()) {
          // fabricate one mention on the queried side, when any exists
          int lo = fwd ? 0 : target + 1;
          int hi = fwd ? target - 1 : doc.mention_count() - 1;
          if (lo <= hi) ids = {pick(lo, hi)};
        } else {
          ids.clear();
        }
      }
      const double p_swap = fwd ? noise.p_fwd_swap : noise.p_bwd_swap;
      for (int& id : ids) {
        if (!coin(p_swap)) continue;
        // replace with a random different mention on the same side
        std::vector<int> pool;
        int lo = fwd ? 0 : target + 1;
        int hi = fwd ? target - 1 : doc.mention_count() - 1;
        for (int c = lo; c <= hi; ++c)
          if (c != id) pool.push_back(c);
        if (!pool.empty()) id = pool[pick(0, static_cast<int>(pool.size()) - 1)];
      }
      return render_chain_answer(detail::chain_from_ids(doc, ids));
    }

    case TaskMode::qa_singleton: {
      std::vector<std::string> gold = gold_singleton_surfaces(doc, record.target);
      if (coin(noise.p_none_flip)) {
        if (gold.empty()) {
          auto candidates = sentence_candidates(doc, record.target);
          if (!candidates.empty())
            gold = {candidates[pick(0, static_cast<int>(candidates.size()) - 1)]};
        } else {
          gold.clear();
        }
      }
      return render_surface_list(gold);
    }

    case TaskMode::doc_full: {
      const int n = doc.mention_count();
      const int total_tokens = doc.token_count();
      const int k = static_cast<int>(doc.gold->clusters.size());
      std::vector<bool> dup(n, false), drop(total_tokens, false);
      std::vector<std::optional<int>> id_override(n);
      for (int m = 0; m < n; ++m) {
        dup[m] = coin(noise.p_dup);
        if (coin(noise.p_id_err)) id_override[m] = pick(1, std::max(1, k));
      }
      for (int t = 0; t < total_tokens; ++t) drop[t] = coin(noise.p_drop);

      RenderMarks marks = RenderMarks::uniform(n, Mark::filled);
      const auto cid_of = doc.gold->mention_to_cluster();
      for (int m = 0; m < n; ++m) marks.id[m] = cid_of.at(m);
      RenderNoise hooks;
      hooks.duplicate_surface = &dup;
      hooks.drop_token = &drop;
      hooks.id_override = &id_override;
      return render_annotated(doc, marks, 0, doc.sentence_count() - 1, std::nullopt, &hooks);
    }

    case TaskMode::doc_iter: {
      int cid = doc.gold->mention_to_cluster().at(record.target);
      if (coin(noise.p_id_err)) {
        int max_id = detail::meta_int(record, "max_id", 0);
        cid = pick(1, max_id + 1);
      }
      return std::to_string(cid) + ")";
    }
  }
  fail("UnknownRecordMode", "record '" + record.record_id + "' has an unknown mode");
}

// ---------------------------------------------------------------------------
// Completion backends.
// ---------------------------------------------------------------------------

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual Completion complete(const PromptRecord& record) = 0;
};

class MockBackend final : public CompletionBackend {
 public:
  MockBackend(std::vector<Document> docs, NoiseSpec noise) : noise_(noise) {
    for (auto& d : docs) {
      std::string key = d.doc_key;
      docs_.emplace(std::move(key), std::move(d));
    }
  }

  Completion complete(const PromptRecord& record) override {
    auto it = docs_.find(record.doc_key);
    if (it == docs_.end())
      fail("DocMismatch", "mock backend has no document '" + record.doc_key + "'");
    return {mock_answer(it->second, record, noise_), 1, 0.0};
  }

  const Document& document(const std::string& key) const { return docs_.at(key); }

 private:
  std::map<std::string, Document> docs_;
  NoiseSpec noise_;
};

namespace detail {

struct ParsedUrl {
  std::string host_port;  // scheme://host[:port]
  std::string path;       // leading path prefix, possibly empty
};

inline ParsedUrl parse_base_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) fail("ConfigError", "base_url needs a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  std::string path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

inline Completion remote_complete(const BackendConfig& cfg, const std::string& prompt) {
  cfg.validate();
  std::string api_key;
  if (!cfg.api_key_env.empty()) {
    const char* key = std::getenv(cfg.api_key_env.c_str());
    if (!key || !*key)
      fail("AuthMissing", "environment variable '" + cfg.api_key_env + "' is not set");
    api_key = key;
  }

  const ParsedUrl url = parse_base_url(cfg.base_url);
  std::string path = url.path;
  if (path.size() < 17 || path.substr(path.size() - 17) != "/chat/completions")
    path += "/chat/completions";

  nlohmann::json body;
  body["model"] = cfg.model_name;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = cfg.temperature;
  body["max_tokens"] = cfg.max_tokens;
  const std::string payload = body.dump();

  httplib::Client client(url.host_port);
  client.set_connection_timeout(std::chrono::milliseconds(
      static_cast<int>(cfg.timeout_s * 1000)));
  client.set_read_timeout(std::chrono::milliseconds(static_cast<int>(cfg.timeout_s * 1000)));
  httplib::Headers headers;
  if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);

  const auto t0 = std::chrono::steady_clock::now();
  std::string last_error;
  for (int attempt = 1; attempt <= cfg.max_retries + 1; ++attempt) {
    auto res = client.Post(path, headers, payload, "application/json");
    auto elapsed = [&] {
      return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
          .count();
    };
    if (res && res->status == 200) {
      try {
        auto j = nlohmann::json::parse(res->body);
        return {j.at("choices").at(0).at("message").at("content").get<std::string>(), attempt,
                elapsed()};
      } catch (const nlohmann::json::exception& e) {
        fail("BadResponse", std::string("unparseable completion body: ") + e.what());
      }
    }
    if (res && res->status != 429 && res->status < 500)
      fail("BadResponse", "HTTP " + std::to_string(res->status) + ": " + res->body);
    last_error = res ? "HTTP " + std::to_string(res->status)
                     : "transport error " + httplib::to_string(res.error());
    if (attempt <= cfg.max_retries) {
      auto backoff = std::chrono::milliseconds(100 * (1 << std::min(attempt - 1, 5)));
      std::this_thread::sleep_for(backoff);
    }
  }
  fail("Transport", last_error + " after " + std::to_string(cfg.max_retries + 1) + " attempts");
}

}  // namespace detail

// Single remote completion over the OpenAI-compatible chat-completions API.
inline std::string complete(const BackendConfig& cfg, const std::string& prompt) {
  return detail::remote_complete(cfg, prompt).text;
}

class RemoteBackend final : public CompletionBackend {
 public:
  explicit RemoteBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {}
  Completion complete(const PromptRecord& record) override {
    return detail::remote_complete(cfg_, record.prompt);
  }

 private:
  BackendConfig cfg_;
};

inline std::unique_ptr<CompletionBackend> make_backend(const BackendConfig& cfg,
                                                       std::vector<Document> docs,
                                                       const NoiseSpec& noise) {
  cfg.validate();
  if (cfg.kind == BackendConfig::Kind::mock)
    return std::make_unique<MockBackend>(std::move(docs), noise);
  return std::make_unique<RemoteBackend>(cfg);
}

// Issues completions with at most `parallelism` in flight. Output order equals
// input order; failures become per-record error markers instead of aborting.
inline std::vector<ResponseRecord> run_batch(CompletionBackend& backend,
                                             const std::vector<PromptRecord>& records,
                                             int parallelism = 1) {
  if (parallelism < 1) fail("ConfigError", "parallelism must be >= 1");
  std::vector<ResponseRecord> results(records.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= records.size()) return;
      const PromptRecord& r = records[i];
      ResponseRecord& out = results[i];
      out.record_id = r.record_id;
      out.doc_key = r.doc_key;
      out.mode = r.mode;
      out.target = r.target;
      try {
        Completion c = backend.complete(r);
        out.raw_text = std::move(c.text);
        out.attempts = c.attempts;
        out.latency_ms = c.latency_ms;
      } catch (const std::exception& e) {
        out.error = e.what();
      }
    }
  };
  const int threads =
      std::min(parallelism, static_cast<int>(std::max<std::size_t>(records.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return results;
}

}  // namespace coref
