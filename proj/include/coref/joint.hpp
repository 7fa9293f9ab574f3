#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coref/backend.hpp"
#include "coref/corpus.hpp"
#include "coref/detail/union_find.hpp"
#include "coref/error.hpp"
#include "coref/templates.hpp"

namespace coref {

struct MentionPair {
  int anaphor = 0;     // document-later mention
  int antecedent = 0;  // strictly earlier mention
  enum class Source { fwd, bwd } source = Source::fwd;
  int rank = 1;  // position in the emitting chain answer, 1 = nearest
};

// anaphor -> candidate antecedent -> accumulated weight
struct WeightTable {
  std::map<int, std::map<int, double>> w;

  double max_weight(int anaphor) const {
    auto it = w.find(anaphor);
    if (it == w.end()) return 0.0;
    double best = 0.0;
    for (const auto& [cand, weight] : it->second) best = std::max(best, weight);
    return best;
  }
};

// Trusted chains: disjoint mention groups, each sorted by document order.
struct ChainSet {
  std::vector<std::vector<int>> chains;
};

struct JointConfig {
  double chain_threshold = 2.0;  // pair weight needed to seed a chain
  double found_threshold = 2.0;  // weight at which an anaphor counts as resolved
};

struct JointDiagnostics {
  int dropped_ungroundable = 0;
  int unparseable = 0;
  int reinforced_anaphors = 0;
  int tie_breaks = 0;
};

// Builds oriented forward/backward pair sets from raw chain-answer responses.
// Forward answers name antecedents of the queried mention; backward answers
// name later mentions whose antecedent is the queried mention.
inline std::pair<std::vector<MentionPair>, std::vector<MentionPair>> collect_pairs(
    const Document& doc, const std::vector<ResponseRecord>& fwd_responses,
    const std::vector<ResponseRecord>& bwd_responses, JointDiagnostics* diag = nullptr) {
  JointDiagnostics local;
  JointDiagnostics& d = diag ? *diag : local;

  auto collect = [&](const std::vector<ResponseRecord>& responses, bool fwd) {
    std::vector<MentionPair> pairs;
    for (const ResponseRecord& r : responses) {
      if (r.doc_key != doc.doc_key)
        fail("DocMismatch", "response '" + r.record_id + "' belongs to '" + r.doc_key +
                                "', expected '" + doc.doc_key + "'");
      if (!r.ok()) {
        ++d.unparseable;
        continue;
      }
      ChainAnswer answer;
      try {
        answer = parse_chain_answer(r.raw_text);
      } catch (const Error&) {
        ++d.unparseable;
        continue;
      }
      if (answer.none_marker) continue;
      for (size_t i = 0; i < answer.items.size(); ++i) {
        const ChainItem& item = answer.items[i];
        auto grounded = ground_mention(doc, item.surface, item.sent, r.target,
                                       fwd ? GroundDirection::fwd : GroundDirection::bwd);
        if (!grounded) {
          ++d.dropped_ungroundable;
          continue;
        }
        MentionPair p;
        p.source = fwd ? MentionPair::Source::fwd : MentionPair::Source::bwd;
        p.rank = static_cast<int>(i) + 1;
        p.anaphor = fwd ? r.target : *grounded;
        p.antecedent = fwd ? *grounded : r.target;
        pairs.push_back(p);
      }
    }
    return pairs;
  };

  return {collect(fwd_responses, true), collect(bwd_responses, false)};
}

// Each pair occurrence contributes weight 1; a pair seen once in each
// direction therefore reaches 2.
inline WeightTable init_weights(const std::vector<MentionPair>& fp,
                                const std::vector<MentionPair>& bp) {
  WeightTable table;
  for (const auto* pairs : {&fp, &bp})
    for (const MentionPair& p : *pairs) table.w[p.anaphor][p.antecedent] += 1.0;
  return table;
}

// Connected components over pairs at or above the threshold; components of
// size >= 2, sorted by document order, become trusted chains.
inline ChainSet build_chains(const WeightTable& table, const Document& doc,
                             double threshold = 2.0) {
  detail::UnionFind uf(doc.mention_count());
  for (const auto& [anaphor, cands] : table.w)
    for (const auto& [antecedent, weight] : cands)
      if (weight >= threshold) uf.merge(anaphor, antecedent);

  std::map<int, std::vector<int>> groups;
  for (int m = 0; m < doc.mention_count(); ++m) groups[uf.find(m)].push_back(m);
  ChainSet out;
  for (auto& [root, members] : groups) {
    if (members.size() < 2) continue;
    std::sort(members.begin(), members.end());
    out.chains.push_back(std::move(members));
  }
  return out;
}

// For each anaphor still unresolved (no candidate at the found threshold),
// every unordered candidate pair co-occurring in a trusted chain gains +1 on
// both sides. Resolved anaphors are untouched.
inline WeightTable reinforce(const WeightTable& table, const ChainSet& chains,
                             const JointConfig& cfg = {}, JointDiagnostics* diag = nullptr) {
  std::map<int, int> chain_of;
  for (size_t c = 0; c < chains.chains.size(); ++c)
    for (int m : chains.chains[c]) chain_of[m] = static_cast<int>(c);

  WeightTable out = table;
  for (const auto& [anaphor, cands] : table.w) {
    if (table.max_weight(anaphor) >= cfg.found_threshold) continue;
    std::vector<int> ids;
    ids.reserve(cands.size());
    for (const auto& [cand, weight] : cands) ids.push_back(cand);
    bool bumped = false;
    for (size_t i = 0; i < ids.size(); ++i) {
      for (size_t j = i + 1; j < ids.size(); ++j) {
        auto a = chain_of.find(ids[i]);
        auto b = chain_of.find(ids[j]);
        if (a == chain_of.end() || b == chain_of.end() || a->second != b->second) continue;
        out.w[anaphor][ids[i]] += 1.0;
        out.w[anaphor][ids[j]] += 1.0;
        bumped = true;
      }
    }
    if (bumped && diag) ++diag->reinforced_anaphors;
  }
  return out;
}

// Final pair selection. Per anaphor: (1) a candidate at the found threshold
// wins; (2) otherwise an anaphor named in its sentence's singleton list gets
// no pair; (3) otherwise the best remaining candidate wins; (4) otherwise no
// pair. Ties always go to the nearest antecedent.
inline std::vector<std::pair<int, int>> resolve(
    const WeightTable& table, const std::map<int, std::set<int>>& singleton_lists,
    const Document& doc, const JointConfig& cfg = {}, JointDiagnostics* diag = nullptr) {
  std::vector<std::pair<int, int>> out;
  for (const auto& [anaphor, cands] : table.w) {
    if (cands.empty()) continue;
    double best = table.max_weight(anaphor);
    bool found = best >= cfg.found_threshold;
    if (!found) {
      auto sl = singleton_lists.find(doc.mentions[anaphor].sent);
      if (sl != singleton_lists.end() && sl->second.count(anaphor)) continue;
    }
    std::vector<int> argmax;
    for (const auto& [cand, weight] : cands)
      if (weight == best) argmax.push_back(cand);
    int pickv = *std::max_element(argmax.begin(), argmax.end());  // nearest antecedent
    if (argmax.size() > 1 && diag) ++diag->tie_breaks;
    out.emplace_back(anaphor, pickv);
  }
  return out;
}

// Union-find over final pairs; unpaired mentions become singletons.
inline Clustering pairs_to_clusters(const Document& doc,
                                    const std::vector<std::pair<int, int>>& pairs) {
  detail::UnionFind uf(doc.mention_count());
  for (const auto& [anaphor, antecedent] : pairs) {
    if (anaphor < 0 || anaphor >= doc.mention_count() || antecedent < 0 ||
        antecedent >= doc.mention_count())
      fail("UnknownMention", "pair references a mention outside the document");
    uf.merge(anaphor, antecedent);
  }
  std::map<int, std::vector<int>> groups;
  for (int m = 0; m < doc.mention_count(); ++m) groups[uf.find(m)].push_back(m);
  std::map<int, std::vector<int>> raw;
  int next = 1;
  std::map<int, int> root_to_cid;
  for (int m = 0; m < doc.mention_count(); ++m) {
    int root = uf.find(m);
    if (!root_to_cid.count(root)) root_to_cid[root] = next++;
    raw[root_to_cid[root]].push_back(m);
  }
  return Clustering::normalized(raw);
}

// Grounds parsed singleton-task responses to mention ids per sentence.
inline std::map<int, std::set<int>> ground_singletons(
    const Document& doc, const std::vector<ResponseRecord>& responses,
    JointDiagnostics* diag = nullptr) {
  std::map<int, std::set<int>> out;
  for (const ResponseRecord& r : responses) {
    if (r.doc_key != doc.doc_key)
      fail("DocMismatch", "response '" + r.record_id + "' belongs to '" + r.doc_key +
                              "', expected '" + doc.doc_key + "'");
    if (!r.ok()) {
      if (diag) ++diag->unparseable;
      continue;
    }
    std::vector<std::string> surfaces;
    try {
      surfaces = parse_singleton_answer(r.raw_text);
    } catch (const Error&) {
      if (diag) ++diag->unparseable;
      continue;
    }
    for (const std::string& surface : surfaces) {
      const std::string key = detail::surface_key(surface);
      std::optional<int> match;
      for (const auto& m : doc.mentions) {
        if (m.sent != r.target) continue;
        if (detail::surface_key(m.surface) == key) {
          match = m.id;
          break;
        }
      }
      if (match)
        out[r.target].insert(*match);
      else if (diag)
        ++diag->dropped_ungroundable;
    }
  }
  return out;
}

// The whole per-document joint pipeline, from raw responses to a predicted
// clustering.
inline Clustering joint_infer(const Document& doc, const std::vector<ResponseRecord>& fwd,
                              const std::vector<ResponseRecord>& bwd,
                              const std::vector<ResponseRecord>& singleton,
                              const JointConfig& cfg = {}, JointDiagnostics* diag = nullptr) {
  auto [fp, bp] = collect_pairs(doc, fwd, bwd, diag);
  WeightTable weights = init_weights(fp, bp);
  ChainSet chains = build_chains(weights, doc, cfg.chain_threshold);
  WeightTable reinforced = reinforce(weights, chains, cfg, diag);
  auto singles = ground_singletons(doc, singleton, diag);
  auto pairs = resolve(reinforced, singles, doc, cfg, diag);
  return pairs_to_clusters(doc, pairs);
}

}  // namespace coref
