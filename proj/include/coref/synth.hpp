#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "coref/corpus.hpp"
#include "coref/detail/rng.hpp"
#include "coref/error.hpp"

namespace coref {

// Seeded generator of small synthetic coreference documents: a few entities
// with multi-sentence clusters, some singletons, occasional nested mention
// pairs. Surfaces are kept unique within each sentence so generated answers
// ground unambiguously.
struct SynthConfig {
  int sentences_min = 4;
  int sentences_max = 7;
  int entities_min = 3;
  int entities_max = 4;
  int cluster_size_min = 2;
  int cluster_size_max = 4;
  int singletons_min = 1;
  int singletons_max = 3;
  double nested_prob = 0.15;
  double pronoun_prob = 0.55;
  double filler_prob = 0.35;
};

namespace detail {

struct SynthEntity {
  std::vector<std::string> base;  // base phrase tokens
  std::string pronoun;
};

inline const std::vector<std::string>& synth_names() {
  static const std::vector<std::string> v = {"Alice", "Bob",   "Carol", "David",
                                             "Emma",  "Frank", "Grace", "Henry"};
  return v;
}

inline const std::vector<std::string>& synth_nouns() {
  static const std::vector<std::string> v = {
      "cat",    "dog",    "park",   "house",  "candle", "wall",    "book",   "garden",
      "river",  "teacher", "doctor", "car",    "tree",   "lamp",    "painting", "window",
      "kitchen", "piano",  "letter", "boat",   "bridge", "market",  "forest", "castle",
      "cloud",  "violin", "statue", "meadow", "harbor", "tower"};
  return v;
}

inline const std::vector<std::string>& synth_verbs() {
  static const std::vector<std::string> v = {"met",      "saw",     "liked",  "visited",
                                             "watched",  "greeted", "passed", "admired",
                                             "remembered", "followed"};
  return v;
}

inline const std::vector<std::string>& synth_fillers() {
  static const std::vector<std::string> v = {"Yesterday", "Later", "Meanwhile", "Eventually",
                                             "Soon",      "Then"};
  return v;
}

}  // namespace detail

inline Document make_synthetic_doc(std::uint64_t seed, int index, const SynthConfig& cfg = {}) {
  std::mt19937_64 rng(detail::mix_seed(seed, static_cast<std::uint64_t>(index)));
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto coin = [&](double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  };

  const int n_sent = pick(cfg.sentences_min, cfg.sentences_max);
  const int n_ent = pick(cfg.entities_min, cfg.entities_max);
  const int n_single = pick(cfg.singletons_min, cfg.singletons_max);

  // Draw distinct names and nouns for this document.
  std::vector<std::string> names = detail::synth_names();
  std::vector<std::string> nouns = detail::synth_nouns();
  std::shuffle(names.begin(), names.end(), rng);
  std::shuffle(nouns.begin(), nouns.end(), rng);
  size_t next_name = 0, next_noun = 0;

  std::vector<detail::SynthEntity> entities;
  auto person_pronouns = std::vector<std::string>{"he", "she", "they"};
  for (int e = 0; e < n_ent; ++e) {
    detail::SynthEntity ent;
    if (coin(0.5) && next_name < names.size()) {
      ent.base = {names[next_name]};
      ent.pronoun = person_pronouns[pick(0, 2)];
      ++next_name;
    } else {
      ent.base = {"the", nouns[next_noun++]};
      ent.pronoun = "it";
    }
    entities.push_back(std::move(ent));
  }

  // Per sentence, a queue of placements: entity occurrences, singletons, and
  // nested singleton pairs.
  struct Placement {
    enum class Kind { entity, singleton, nested } kind;
    int entity = -1;  // entity index for Kind::entity
    std::vector<std::string> tokens;
    std::vector<std::string> inner_tokens;  // Kind::nested only
  };
  std::vector<std::vector<Placement>> plan(n_sent);

  for (int e = 0; e < n_ent; ++e) {
    int size = std::min(pick(cfg.cluster_size_min, cfg.cluster_size_max), n_sent);
    std::vector<int> sents(n_sent);
    for (int s = 0; s < n_sent; ++s) sents[s] = s;
    std::shuffle(sents.begin(), sents.end(), rng);
    sents.resize(size);
    std::sort(sents.begin(), sents.end());
    for (int s : sents) plan[s].push_back({Placement::Kind::entity, e, {}, {}});
  }
  for (int t = 0; t < n_single; ++t) {
    if (next_noun >= nouns.size()) break;
    Placement p;
    if (coin(cfg.nested_prob) && next_noun + 1 < nouns.size()) {
      p.kind = Placement::Kind::nested;
      p.tokens = {"the", nouns[next_noun], nouns[next_noun + 1]};
      p.inner_tokens = {"the", nouns[next_noun]};
      next_noun += 2;
    } else {
      p.kind = Placement::Kind::singleton;
      p.tokens = {"a", nouns[next_noun++]};
    }
    plan[pick(0, n_sent - 1)].push_back(std::move(p));
  }
  for (auto& queue : plan) std::shuffle(queue.begin(), queue.end(), rng);

  Document doc;
  doc.doc_key = "synth-" + std::to_string(seed) + "-" + std::to_string(index);

  struct PlacedMention {
    int sent, start, end;
    int label;  // entity index, or a fresh label for singletons
  };
  std::vector<PlacedMention> placed;
  std::vector<int> occurrences(n_ent, 0);
  int next_label = n_ent;

  for (int s = 0; s < n_sent; ++s) {
    std::vector<std::string> tokens;
    std::vector<std::string> used_surfaces;
    auto surface_of = [](const std::vector<std::string>& toks) {
      std::string out;
      for (size_t i = 0; i < toks.size(); ++i) {
        if (i) out += ' ';
        out += toks[i];
      }
      return out;
    };
    auto is_used = [&](const std::string& sfc) {
      return std::find(used_surfaces.begin(), used_surfaces.end(), sfc) != used_surfaces.end();
    };

    if (coin(cfg.filler_prob))
      tokens.push_back(detail::synth_fillers()[pick(
          0, static_cast<int>(detail::synth_fillers().size()) - 1)]);

    bool first_item = true;
    for (const Placement& p : plan[s]) {
      std::vector<std::string> phrase;
      std::vector<std::string> inner;
      int label;
      if (p.kind == Placement::Kind::entity) {
        const auto& ent = entities[p.entity];
        label = p.entity;
        if (occurrences[p.entity] == 0) {
          phrase = ent.base;
        } else if (coin(cfg.pronoun_prob) && !is_used(ent.pronoun)) {
          phrase = {ent.pronoun};
        } else {
          phrase = ent.base;
        }
        if (is_used(surface_of(phrase))) {
          phrase = ent.base;  // pronoun collided; the base is unique per document
          if (is_used(surface_of(phrase))) continue;  // same entity twice in one sentence
        }
        ++occurrences[p.entity];
      } else {
        phrase = p.tokens;
        inner = p.inner_tokens;
        label = next_label++;
        if (is_used(surface_of(phrase))) continue;
      }

      if (!first_item)
        tokens.push_back(detail::synth_verbs()[pick(
            0, static_cast<int>(detail::synth_verbs().size()) - 1)]);
      first_item = false;

      const int start = static_cast<int>(tokens.size());
      for (const auto& t : phrase) tokens.push_back(t);
      placed.push_back({s, start, static_cast<int>(tokens.size()) - 1, label});
      used_surfaces.push_back(surface_of(phrase));
      if (!inner.empty()) {
        placed.push_back({s, start, start + static_cast<int>(inner.size()) - 1, next_label++});
        used_surfaces.push_back(surface_of(inner));
      }
    }

    if (tokens.empty()) {
      tokens = {"Time", "passed"};
    }
    tokens.push_back(".");
    doc.sentences.push_back(std::move(tokens));
  }

  std::sort(placed.begin(), placed.end(), [](const PlacedMention& a, const PlacedMention& b) {
    if (a.sent != b.sent) return a.sent < b.sent;
    if (a.start != b.start) return a.start < b.start;
    return a.end > b.end;
  });
  std::map<int, std::vector<int>> raw_clusters;
  for (size_t i = 0; i < placed.size(); ++i) {
    MentionSpan m;
    m.id = static_cast<int>(i);
    m.sent = placed[i].sent;
    m.start = placed[i].start;
    m.end = placed[i].end;
    m.surface = doc.surface_of(m.sent, m.start, m.end);
    doc.mentions.push_back(std::move(m));
    raw_clusters[placed[i].label + 1].push_back(static_cast<int>(i));
  }
  doc.gold = Clustering::normalized(raw_clusters);
  return doc;
}

inline std::vector<Document> make_synthetic_corpus(std::uint64_t seed, int count,
                                                   const SynthConfig& cfg = {}) {
  std::vector<Document> docs;
  docs.reserve(count);
  for (int i = 0; i < count; ++i) docs.push_back(make_synthetic_doc(seed, i, cfg));
  return docs;
}

}  // namespace coref
