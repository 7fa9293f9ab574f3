#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "coref/corpus.hpp"
#include "coref/detail/hungarian.hpp"
#include "coref/error.hpp"

namespace coref {

struct MetricScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ScoreFlags {
  bool drop_singletons = true;        // the "-S" behavior
  bool drop_split_antecedents = true;  // "-SA"; a no-op unless the corpus flags them
};

struct ScoreReport {
  MetricScore muc;
  MetricScore b3;
  MetricScore ceaf_e;
  double conll_f1 = 0.0;
  ScoreFlags flags;
  int key_mentions = 0;
  int response_mentions = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline double safe_ratio(double num, double den) { return den > 0 ? num / den : 0.0; }

inline MetricScore make_score(double rn, double rd, double pn, double pd) {
  MetricScore s;
  s.recall = safe_ratio(rn, rd);
  s.precision = safe_ratio(pn, pd);
  s.f1 = (s.precision + s.recall) > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall)
                                      : 0.0;
  return s;
}

// Micro-aggregatable numerators/denominators for all three metrics.
struct MetricTallies {
  double muc_rn = 0, muc_rd = 0, muc_pn = 0, muc_pd = 0;
  double b3_rn = 0, b3_rd = 0, b3_pn = 0, b3_pd = 0;
  double ceafe_phi = 0, ceafe_nk = 0, ceafe_nr = 0;

  MetricTallies& operator+=(const MetricTallies& o) {
    muc_rn += o.muc_rn; muc_rd += o.muc_rd; muc_pn += o.muc_pn; muc_pd += o.muc_pd;
    b3_rn += o.b3_rn; b3_rd += o.b3_rd; b3_pn += o.b3_pn; b3_pd += o.b3_pd;
    ceafe_phi += o.ceafe_phi; ceafe_nk += o.ceafe_nk; ceafe_nr += o.ceafe_nr;
    return *this;
  }
};

// MUC recall numerator: for each key cluster, |k| minus the number of
// partitions its members fall into under the response (unassigned members
// count as their own partition each).
inline void muc_halves(const Clustering& key, const Clustering& response, double* num,
                       double* den) {
  const auto resp_of = response.mention_to_cluster();
  *num = 0;
  *den = 0;
  for (const auto& [cid, members] : key.clusters) {
    std::set<int> parts;
    int unassigned = 0;
    for (int m : members) {
      auto it = resp_of.find(m);
      if (it == resp_of.end())
        ++unassigned;
      else
        parts.insert(it->second);
    }
    *num += static_cast<double>(members.size()) -
            static_cast<double>(parts.size() + unassigned);
    *den += static_cast<double>(members.size()) - 1.0;
  }
}

inline void b3_halves(const Clustering& key, const Clustering& response, double* num,
                      double* den) {
  const auto resp_of = response.mention_to_cluster();
  *num = 0;
  *den = 0;
  for (const auto& [kid, kmembers] : key.clusters) {
    // overlap counts with each response cluster
    std::map<int, int> overlap;
    for (int m : kmembers) {
      auto it = resp_of.find(m);
      if (it != resp_of.end()) ++overlap[it->second];
    }
    for (const auto& [rid, o] : overlap)
      *num += static_cast<double>(o) * o / static_cast<double>(kmembers.size());
    *den += static_cast<double>(kmembers.size());
  }
}

inline double phi4(const std::vector<int>& a, const std::vector<int>& b) {
  // members are sorted ascending
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) { ++common; ++i; ++j; }
    else if (a[i] < b[j]) ++i;
    else ++j;
  }
  return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

inline MetricTallies tally(const Clustering& key, const Clustering& response) {
  MetricTallies t;
  muc_halves(key, response, &t.muc_rn, &t.muc_rd);
  muc_halves(response, key, &t.muc_pn, &t.muc_pd);
  b3_halves(key, response, &t.b3_rn, &t.b3_rd);
  b3_halves(response, key, &t.b3_pn, &t.b3_pd);

  std::vector<const std::vector<int>*> kc, rc;
  for (const auto& [cid, members] : key.clusters) kc.push_back(&members);
  for (const auto& [cid, members] : response.clusters) rc.push_back(&members);
  if (!kc.empty() && !rc.empty()) {
    std::vector<std::vector<double>> sim(kc.size(), std::vector<double>(rc.size(), 0.0));
    for (size_t i = 0; i < kc.size(); ++i)
      for (size_t j = 0; j < rc.size(); ++j) sim[i][j] = phi4(*kc[i], *rc[j]);
    t.ceafe_phi = max_assignment(sim);
  }
  t.ceafe_nk = static_cast<double>(kc.size());
  t.ceafe_nr = static_cast<double>(rc.size());
  return t;
}

inline void fill_report(const MetricTallies& t, ScoreReport* r) {
  r->muc = make_score(t.muc_rn, t.muc_rd, t.muc_pn, t.muc_pd);
  r->b3 = make_score(t.b3_rn, t.b3_rd, t.b3_pn, t.b3_pd);
  r->ceaf_e = make_score(t.ceafe_phi, t.ceafe_nk, t.ceafe_phi, t.ceafe_nr);
  r->conll_f1 = (r->muc.f1 + r->b3.f1 + r->ceaf_e.f1) / 3.0;
}

inline void require_same_universe(const Clustering& key, const Clustering& response) {
  std::set<int> ku, ru;
  for (const auto& [cid, members] : key.clusters) ku.insert(members.begin(), members.end());
  for (const auto& [cid, members] : response.clusters) ru.insert(members.begin(), members.end());
  if (ku == ru) return;
  for (int m : ku)
    if (!ru.count(m))
      fail("MentionUniverseMismatch",
           "mention " + std::to_string(m) + " missing from the response clustering");
  for (int m : ru)
    if (!ku.count(m))
      fail("MentionUniverseMismatch",
           "mention " + std::to_string(m) + " missing from the key clustering");
}

inline Clustering without_singletons(const Clustering& c) {
  std::map<int, std::vector<int>> raw;
  for (const auto& [cid, members] : c.clusters)
    if (members.size() > 1) raw[cid] = members;
  return Clustering::normalized(raw);
}

}  // namespace detail

// Link-based MUC. 0/0 ratios are defined as 0.
inline MetricScore muc(const Clustering& key, const Clustering& response) {
  detail::require_same_universe(key, response);
  double rn, rd, pn, pd;
  detail::muc_halves(key, response, &rn, &rd);
  detail::muc_halves(response, key, &pn, &pd);
  return detail::make_score(rn, rd, pn, pd);
}

// Mention-based B³.
inline MetricScore b_cubed(const Clustering& key, const Clustering& response) {
  detail::require_same_universe(key, response);
  double rn, rd, pn, pd;
  detail::b3_halves(key, response, &rn, &rd);
  detail::b3_halves(response, key, &pn, &pd);
  return detail::make_score(rn, rd, pn, pd);
}

// Entity-based CEAF with the phi4 similarity and an optimal one-to-one
// cluster matching.
inline MetricScore ceaf_e(const Clustering& key, const Clustering& response) {
  detail::require_same_universe(key, response);
  detail::MetricTallies t = detail::tally(key, response);
  return detail::make_score(t.ceafe_phi, t.ceafe_nk, t.ceafe_phi, t.ceafe_nr);
}

// Scores one document pair. The documents must agree on their mention spans;
// the response side uses its predicted clustering when present, else gold.
// With drop_singletons, size-1 clusters are removed from both sides before
// scoring and the effective mention universe shrinks accordingly (the two
// sides may then cover different mentions, as in the reference scorer).
inline ScoreReport score(const Document& key, const Document& response,
                         const ScoreFlags& flags = {}) {
  if (key.doc_key != response.doc_key)
    fail("DocKeyMismatch", "'" + key.doc_key + "' vs '" + response.doc_key + "'");
  if (key.mentions.size() != response.mentions.size())
    fail("MentionUniverseMismatch",
         "documents disagree on mention count (" + std::to_string(key.mentions.size()) + " vs " +
             std::to_string(response.mentions.size()) + ")");
  for (size_t i = 0; i < key.mentions.size(); ++i) {
    const auto& a = key.mentions[i];
    const auto& b = response.mentions[i];
    if (a.sent != b.sent || a.start != b.start || a.end != b.end)
      fail("MentionUniverseMismatch",
           "mention " + std::to_string(i) + " differs: (" + std::to_string(a.sent) + "," +
               std::to_string(a.start) + "," + std::to_string(a.end) + ") vs (" +
               std::to_string(b.sent) + "," + std::to_string(b.start) + "," +
               std::to_string(b.end) + ")");
  }
  if (!key.gold) fail("MissingClustering", "key document '" + key.doc_key + "' has no gold");
  Clustering k = *key.gold;
  Clustering r = response.predicted ? *response.predicted
                                    : (response.gold ? *response.gold : Clustering{});
  if (r.empty() && !response.predicted && !response.gold)
    fail("MissingClustering", "response document '" + response.doc_key + "' has no clustering");

  ScoreReport report;
  report.flags = flags;
  if (flags.drop_singletons) {
    k = detail::without_singletons(k);
    r = detail::without_singletons(r);
  }
  report.key_mentions = k.total_mentions();
  report.response_mentions = r.total_mentions();
  if (report.key_mentions == 0 || report.response_mentions == 0)
    report.warnings.push_back("empty mention universe after filtering; scores default to 0");
  detail::fill_report(detail::tally(k, r), &report);
  return report;
}

// Micro-aggregates numerators/denominators across documents.
inline ScoreReport score_many(const std::vector<std::pair<const Document*, const Document*>>& docs,
                              const ScoreFlags& flags = {},
                              std::vector<ScoreReport>* per_doc = nullptr) {
  detail::MetricTallies total;
  ScoreReport report;
  report.flags = flags;
  for (const auto& [key, response] : docs) {
    ScoreReport single = score(*key, *response, flags);
    if (per_doc) per_doc->push_back(single);
    Clustering k = *key->gold;
    Clustering r = response->predicted ? *response->predicted : *response->gold;
    if (flags.drop_singletons) {
      k = detail::without_singletons(k);
      r = detail::without_singletons(r);
    }
    total += detail::tally(k, r);
    report.key_mentions += single.key_mentions;
    report.response_mentions += single.response_mentions;
    for (const auto& w : single.warnings) report.warnings.push_back(key->doc_key + ": " + w);
  }
  detail::fill_report(total, &report);
  return report;
}

}  // namespace coref
