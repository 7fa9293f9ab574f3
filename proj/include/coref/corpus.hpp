#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "coref/detail/strings.hpp"
#include "coref/error.hpp"

namespace coref {

struct Token {
  int doc_index = 0;   // position over the whole document
  int sent_index = 0;
  int word_index = 0;
  std::string text;
};

struct MentionSpan {
  int id = 0;     // dense 0..n-1 in document order
  int sent = 0;
  int start = 0;  // inclusive word indices
  int end = 0;
  std::string surface;
  bool non_referring = false;
};

// Document order for spans: by sentence, then start; at equal starts the
// outer (longer) span comes first so nested mentions open outer-first.
inline bool span_before(const MentionSpan& a, const MentionSpan& b) {
  if (a.sent != b.sent) return a.sent < b.sent;
  if (a.start != b.start) return a.start < b.start;
  return a.end > b.end;
}

// Partition of mention ids. Cluster ids are normalized to 1..K in order of
// first appearance; members are kept in document order.
struct Clustering {
  std::map<int, std::vector<int>> clusters;

  bool empty() const { return clusters.empty(); }

  std::unordered_map<int, int> mention_to_cluster() const {
    std::unordered_map<int, int> out;
    for (const auto& [cid, members] : clusters)
      for (int m : members) out[m] = cid;
    return out;
  }

  int total_mentions() const {
    int n = 0;
    for (const auto& [cid, members] : clusters) n += static_cast<int>(members.size());
    return n;
  }

  // Renumber arbitrary cluster ids to 1..K by first appearance (smallest
  // member id, which is document order) and sort members ascending.
  static Clustering normalized(const std::map<int, std::vector<int>>& raw) {
    std::vector<std::vector<int>> groups;
    for (const auto& [cid, members] : raw) {
      if (members.empty()) continue;
      groups.push_back(members);
      std::sort(groups.back().begin(), groups.back().end());
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    Clustering out;
    int next = 1;
    for (auto& g : groups) out.clusters[next++] = std::move(g);
    return out;
  }

  // Same partition regardless of cluster naming.
  friend bool operator==(const Clustering& a, const Clustering& b) {
    std::vector<std::vector<int>> ga, gb;
    for (const auto& [cid, m] : a.clusters) ga.push_back(m);
    for (const auto& [cid, m] : b.clusters) gb.push_back(m);
    std::sort(ga.begin(), ga.end());
    std::sort(gb.begin(), gb.end());
    return ga == gb;
  }
};

struct Document {
  std::string doc_key;
  std::vector<std::vector<std::string>> sentences;
  std::vector<MentionSpan> mentions;  // ordered by span_before, id == index
  std::optional<Clustering> gold;
  std::optional<Clustering> predicted;

  int mention_count() const { return static_cast<int>(mentions.size()); }
  int sentence_count() const { return static_cast<int>(sentences.size()); }

  int token_count() const {
    int n = 0;
    for (const auto& s : sentences) n += static_cast<int>(s.size());
    return n;
  }

  std::vector<Token> flat_tokens() const {
    std::vector<Token> out;
    int doc_index = 0;
    for (int s = 0; s < sentence_count(); ++s)
      for (int w = 0; w < static_cast<int>(sentences[s].size()); ++w)
        out.push_back({doc_index++, s, w, sentences[s][w]});
    return out;
  }

  // Global token index of the first token of each sentence, plus a final
  // total-count entry.
  std::vector<int> sentence_offsets() const {
    std::vector<int> off(sentence_count() + 1, 0);
    for (int s = 0; s < sentence_count(); ++s)
      off[s + 1] = off[s] + static_cast<int>(sentences[s].size());
    return off;
  }

  std::string surface_of(int sent, int start, int end) const {
    std::string out;
    for (int w = start; w <= end; ++w) {
      if (w > start) out += ' ';
      out += sentences[sent][w];
    }
    return out;
  }

  std::optional<int> find_mention(int sent, int start, int end) const {
    for (const auto& m : mentions)
      if (m.sent == sent && m.start == start && m.end == end) return m.id;
    return std::nullopt;
  }
};

inline std::string plain_text(const Document& doc) {
  std::vector<std::string> lines;
  lines.reserve(doc.sentences.size());
  for (const auto& sent : doc.sentences) lines.push_back(detail::join(sent, " "));
  return detail::join(lines, "\n");
}

namespace detail {

inline void check_document(const Document& doc, const std::string& where) {
  for (size_t i = 0; i < doc.mentions.size(); ++i) {
    const MentionSpan& m = doc.mentions[i];
    std::string path = where + "/mentions/" + std::to_string(i);
    if (m.id != static_cast<int>(i))
      fail("SchemaViolation", path + ": mention ids must be dense 0..n-1 in document order");
    if (m.sent < 0 || m.sent >= doc.sentence_count())
      fail("SchemaViolation", path + ": sentence index out of range");
    int len = static_cast<int>(doc.sentences[m.sent].size());
    if (m.start < 0 || m.start > m.end || m.end >= len)
      fail("SchemaViolation", path + ": span out of range");
    if (m.surface != doc.surface_of(m.sent, m.start, m.end))
      fail("SchemaViolation", path + "/surface: does not match covered tokens");
    if (i > 0 && !span_before(doc.mentions[i - 1], m) &&
        !(doc.mentions[i - 1].sent == m.sent && doc.mentions[i - 1].start == m.start &&
          doc.mentions[i - 1].end == m.end))
      fail("SchemaViolation", path + ": mentions not in document order");
  }
  auto check_clustering = [&](const Clustering& c, const std::string& name, bool full_cover) {
    std::vector<int> seen(doc.mentions.size(), 0);
    for (const auto& [cid, members] : c.clusters) {
      if (cid <= 0) fail("SchemaViolation", where + "/" + name + ": cluster ids must be positive");
      for (int m : members) {
        if (m < 0 || m >= doc.mention_count())
          fail("SchemaViolation",
               where + "/" + name + "/" + std::to_string(cid) + ": unknown mention id " +
                   std::to_string(m));
        if (seen[m]++)
          fail("SchemaViolation", where + "/" + name + ": mention id " + std::to_string(m) +
                                      " appears in more than one cluster");
      }
    }
    if (full_cover) {
      for (size_t m = 0; m < seen.size(); ++m)
        if (!seen[m])
          fail("SchemaViolation",
               where + "/" + name + ": mention id " + std::to_string(m) + " not covered");
    }
  };
  if (doc.gold) check_clustering(*doc.gold, "gold", true);
  if (doc.predicted) check_clustering(*doc.predicted, "predicted", false);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CoNLL-style column format.
//
//   #begin document <key>
//   <doc_key> <sent_index> <word_index> <word> <coref>
//   ...
//   #end document
//
// The coref field is `-` or a |-separated list of `(k`, `k)`, `(k)`.
// ---------------------------------------------------------------------------

inline std::vector<Document> parse_conll(const std::string& text) {
  std::vector<Document> docs;
  const std::vector<std::string> lines = detail::split_lines(text);

  bool in_doc = false;
  std::string key;
  std::vector<std::vector<std::string>> sentences;
  struct RawSpan {
    int cid, sent, start, end;
  };
  std::vector<RawSpan> spans;
  // cid -> stack of (start word, line number) for open spans in the current sentence
  std::map<int, std::vector<std::pair<int, int>>> open;
  int token_lines = 0;

  auto close_sentence = [&](int line_no) {
    for (const auto& [cid, stack] : open) {
      if (!stack.empty())
        fail("UnbalancedSpan", "line " + std::to_string(stack.back().second) + ": span (" +
                                   std::to_string(cid) +
                                   " is never closed within its sentence");
    }
    (void)line_no;
  };

  auto finish_doc = [&](int line_no) {
    close_sentence(line_no);
    if (token_lines == 0) fail("EmptyDocument", "document '" + key + "' has no token lines");
    Document doc;
    doc.doc_key = key;
    doc.sentences = std::move(sentences);

    std::sort(spans.begin(), spans.end(), [](const RawSpan& a, const RawSpan& b) {
      if (a.sent != b.sent) return a.sent < b.sent;
      if (a.start != b.start) return a.start < b.start;
      if (a.end != b.end) return a.end > b.end;
      return a.cid < b.cid;
    });
    std::map<int, std::vector<int>> raw_clusters;
    for (size_t i = 0; i < spans.size(); ++i) {
      const RawSpan& s = spans[i];
      if (i > 0 && spans[i - 1].sent == s.sent && spans[i - 1].start == s.start &&
          spans[i - 1].end == s.end)
        fail("MalformedLine", "document '" + key + "': duplicate mention span in sentence " +
                                  std::to_string(s.sent));
      MentionSpan m;
      m.id = static_cast<int>(i);
      m.sent = s.sent;
      m.start = s.start;
      m.end = s.end;
      m.surface = doc.surface_of(s.sent, s.start, s.end);
      doc.mentions.push_back(std::move(m));
      raw_clusters[s.cid].push_back(static_cast<int>(i));
    }
    doc.gold = Clustering::normalized(raw_clusters);
    detail::check_document(doc, "/" + key);
    docs.push_back(std::move(doc));

    sentences.clear();
    spans.clear();
    open.clear();
    token_lines = 0;
    in_doc = false;
  };

  for (size_t li = 0; li < lines.size(); ++li) {
    const int line_no = static_cast<int>(li) + 1;
    const std::string line = detail::trim(lines[li]);
    if (line.empty()) continue;
    if (line.rfind("#begin document", 0) == 0) {
      if (in_doc) fail("MalformedLine", "line " + std::to_string(line_no) +
                                            ": nested #begin document");
      key = detail::trim(line.substr(std::string("#begin document").size()));
      if (key.empty()) fail("MalformedLine", "line " + std::to_string(line_no) +
                                                 ": missing document key");
      in_doc = true;
      continue;
    }
    if (line.rfind("#end document", 0) == 0) {
      if (!in_doc) fail("MalformedLine", "line " + std::to_string(line_no) +
                                             ": #end document outside a document");
      finish_doc(line_no);
      continue;
    }
    if (line[0] == '#') continue;  // comment
    if (!in_doc)
      fail("MalformedLine", "line " + std::to_string(line_no) + ": token line outside document");

    const std::vector<std::string> cols = detail::split_ws(line);
    if (cols.size() < 5)
      fail("MalformedLine",
           "line " + std::to_string(line_no) + ": expected at least 5 columns, got " +
               std::to_string(cols.size()));
    int sent, word;
    try {
      sent = std::stoi(cols[1]);
      word = std::stoi(cols[2]);
    } catch (const std::exception&) {
      fail("MalformedLine", "line " + std::to_string(line_no) + ": non-numeric sentence/word index");
    }
    const std::string& form = cols[3];
    const std::string& coref = cols.back();

    int cur = static_cast<int>(sentences.size()) - 1;
    if (sent == cur + 1) {
      close_sentence(line_no);
      if (word != 0)
        fail("MalformedLine", "line " + std::to_string(line_no) + ": sentence must start at word 0");
      sentences.emplace_back();
    } else if (sent != cur) {
      fail("MalformedLine",
           "line " + std::to_string(line_no) + ": sentence index " + std::to_string(sent) +
               " is not consecutive");
    } else if (word != static_cast<int>(sentences.back().size())) {
      fail("MalformedLine", "line " + std::to_string(line_no) + ": word index " +
                                std::to_string(word) + " is not consecutive");
    }
    sentences.back().push_back(form);
    ++token_lines;

    if (coref != "-") {
      for (const std::string& part : detail::split_on(coref, '|')) {
        if (part.empty())
          fail("MalformedLine", "line " + std::to_string(line_no) + ": empty coref field entry");
        bool opens = part.front() == '(';
        bool closes = part.back() == ')';
        std::string digits = part.substr(opens ? 1 : 0, part.size() - (opens ? 1 : 0) - (closes ? 1 : 0));
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos ||
            (!opens && !closes))
          fail("MalformedLine",
               "line " + std::to_string(line_no) + ": bad coref entry '" + part + "'");
        int cid = std::stoi(digits);
        if (opens && closes) {
          spans.push_back({cid, sent, word, word});
        } else if (opens) {
          open[cid].push_back({word, line_no});
        } else {
          auto it = open.find(cid);
          if (it == open.end() || it->second.empty())
            fail("UnbalancedSpan", "line " + std::to_string(line_no) + ": close " +
                                       std::to_string(cid) + ") without a matching open");
          spans.push_back({cid, sent, it->second.back().first, word});
          it->second.pop_back();
        }
      }
    }
  }
  if (in_doc) fail("MalformedLine", "unexpected end of input: missing #end document");
  if (docs.empty()) fail("EmptyDocument", "input contains no documents");
  return docs;
}

enum class Which { gold, predicted };

inline std::string emit_conll(const Document& doc, Which which = Which::gold) {
  const Clustering* clustering = nullptr;
  if (which == Which::gold && doc.gold) clustering = &*doc.gold;
  if (which == Which::predicted && doc.predicted) clustering = &*doc.predicted;
  if (!clustering)
    fail("MissingClustering", "document '" + doc.doc_key + "' has no " +
                                  (which == Which::gold ? "gold" : "predicted") + " clustering");
  const auto cid_of = clustering->mention_to_cluster();

  std::string out = "#begin document " + doc.doc_key + "\n";
  for (int s = 0; s < doc.sentence_count(); ++s) {
    for (int w = 0; w < static_cast<int>(doc.sentences[s].size()); ++w) {
      std::vector<std::string> parts;
      // opens, outer first
      for (const auto& m : doc.mentions) {
        if (m.sent != s || m.start != w || m.end == w) continue;
        auto it = cid_of.find(m.id);
        if (it != cid_of.end()) parts.push_back("(" + std::to_string(it->second));
      }
      // single-token mentions
      for (const auto& m : doc.mentions) {
        if (m.sent != s || m.start != w || m.end != w) continue;
        auto it = cid_of.find(m.id);
        if (it != cid_of.end()) parts.push_back("(" + std::to_string(it->second) + ")");
      }
      // closes, inner first (reverse of open order)
      for (auto it = doc.mentions.rbegin(); it != doc.mentions.rend(); ++it) {
        if (it->sent != s || it->end != w || it->start == w) continue;
        auto c = cid_of.find(it->id);
        if (c != cid_of.end()) parts.push_back(std::to_string(c->second) + ")");
      }
      out += doc.doc_key + " " + std::to_string(s) + " " + std::to_string(w) + " " +
             doc.sentences[s][w] + " " + (parts.empty() ? "-" : detail::join(parts, "|")) + "\n";
    }
  }
  out += "#end document\n";
  return out;
}

// ---------------------------------------------------------------------------
// Canonical JSON format (one object per document; files may be JSON-lines).
// ---------------------------------------------------------------------------

namespace detail {

inline Clustering clustering_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_object()) fail("SchemaViolation", path + ": expected an object of cluster id -> ids");
  std::map<int, std::vector<int>> raw;
  for (const auto& [k, v] : j.items()) {
    int cid;
    try {
      cid = std::stoi(k);
    } catch (const std::exception&) {
      fail("SchemaViolation", path + "/" + k + ": cluster id is not an integer");
    }
    if (cid <= 0) fail("SchemaViolation", path + "/" + k + ": cluster id must be positive");
    if (!v.is_array()) fail("SchemaViolation", path + "/" + k + ": expected an array");
    for (const auto& e : v) {
      if (!e.is_number_integer())
        fail("SchemaViolation", path + "/" + k + ": mention ids must be integers");
      raw[cid].push_back(e.get<int>());
    }
    if (raw[cid].empty()) raw.erase(cid);
  }
  return Clustering::normalized(raw);
}

}  // namespace detail

inline Document parse_canonical(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail("SchemaViolation", std::string("/: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("SchemaViolation", "/: expected a JSON object");

  static const std::vector<std::string> root_keys = {"doc_key", "sentences", "mentions", "gold",
                                                     "predicted"};
  for (const auto& [k, v] : j.items()) {
    if (std::find(root_keys.begin(), root_keys.end(), k) == root_keys.end())
      fail("SchemaViolation", "/" + k + ": unknown key");
  }
  for (const char* req : {"doc_key", "sentences", "mentions"}) {
    if (!j.contains(req)) fail("SchemaViolation", std::string("/") + req + ": missing");
  }

  Document doc;
  if (!j["doc_key"].is_string()) fail("SchemaViolation", "/doc_key: expected a string");
  doc.doc_key = j["doc_key"].get<std::string>();

  if (!j["sentences"].is_array()) fail("SchemaViolation", "/sentences: expected an array");
  for (size_t s = 0; s < j["sentences"].size(); ++s) {
    const auto& js = j["sentences"][s];
    const std::string path = "/sentences/" + std::to_string(s);
    if (!js.is_array()) fail("SchemaViolation", path + ": expected an array of tokens");
    std::vector<std::string> sent;
    for (size_t w = 0; w < js.size(); ++w) {
      if (!js[w].is_string())
        fail("SchemaViolation", path + "/" + std::to_string(w) + ": expected a string");
      std::string tok = js[w].get<std::string>();
      if (tok.empty() || tok.find_first_of(" \t\n\r") != std::string::npos)
        fail("SchemaViolation",
             path + "/" + std::to_string(w) + ": tokens must be non-empty without whitespace");
      sent.push_back(std::move(tok));
    }
    doc.sentences.push_back(std::move(sent));
  }

  if (!j["mentions"].is_array()) fail("SchemaViolation", "/mentions: expected an array");
  static const std::vector<std::string> mention_keys = {"id",  "sent",    "start",
                                                        "end", "surface", "non_referring"};
  for (size_t i = 0; i < j["mentions"].size(); ++i) {
    const auto& jm = j["mentions"][i];
    const std::string path = "/mentions/" + std::to_string(i);
    if (!jm.is_object()) fail("SchemaViolation", path + ": expected an object");
    for (const auto& [k, v] : jm.items()) {
      if (std::find(mention_keys.begin(), mention_keys.end(), k) == mention_keys.end())
        fail("SchemaViolation", path + "/" + k + ": unknown key");
    }
    for (const char* req : {"id", "sent", "start", "end", "surface"})
      if (!jm.contains(req)) fail("SchemaViolation", path + "/" + req + ": missing");
    MentionSpan m;
    if (!jm["id"].is_number_integer() || !jm["sent"].is_number_integer() ||
        !jm["start"].is_number_integer() || !jm["end"].is_number_integer())
      fail("SchemaViolation", path + ": id/sent/start/end must be integers");
    m.id = jm["id"].get<int>();
    m.sent = jm["sent"].get<int>();
    m.start = jm["start"].get<int>();
    m.end = jm["end"].get<int>();
    if (!jm["surface"].is_string()) fail("SchemaViolation", path + "/surface: expected a string");
    m.surface = jm["surface"].get<std::string>();
    if (jm.contains("non_referring")) {
      if (!jm["non_referring"].is_boolean())
        fail("SchemaViolation", path + "/non_referring: expected a boolean");
      m.non_referring = jm["non_referring"].get<bool>();
    }
    doc.mentions.push_back(std::move(m));
  }

  if (j.contains("gold") && !j["gold"].is_null())
    doc.gold = detail::clustering_from_json(j["gold"], "/gold");
  if (j.contains("predicted") && !j["predicted"].is_null())
    doc.predicted = detail::clustering_from_json(j["predicted"], "/predicted");

  detail::check_document(doc, "");
  return doc;
}

inline std::string emit_canonical(const Document& doc, int indent = -1) {
  nlohmann::ordered_json j;
  j["doc_key"] = doc.doc_key;
  j["sentences"] = doc.sentences;
  j["mentions"] = nlohmann::ordered_json::array();
  for (const auto& m : doc.mentions) {
    nlohmann::ordered_json jm;
    jm["id"] = m.id;
    jm["sent"] = m.sent;
    jm["start"] = m.start;
    jm["end"] = m.end;
    jm["surface"] = m.surface;
    jm["non_referring"] = m.non_referring;
    j["mentions"].push_back(std::move(jm));
  }
  auto emit_clustering = [](const Clustering& c) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [cid, members] : c.clusters) out[std::to_string(cid)] = members;
    return out;
  };
  if (doc.gold) j["gold"] = emit_clustering(*doc.gold);
  if (doc.predicted)
    j["predicted"] = emit_clustering(*doc.predicted);
  else
    j["predicted"] = nullptr;
  return j.dump(indent);
}

// Removes non-referring mentions from the document (and from any clustering),
// renumbering the remaining mention ids densely.
inline Document drop_non_referring(const Document& doc) {
  Document out;
  out.doc_key = doc.doc_key;
  out.sentences = doc.sentences;
  std::vector<int> remap(doc.mentions.size(), -1);
  for (const auto& m : doc.mentions) {
    if (m.non_referring) continue;
    MentionSpan copy = m;
    copy.id = static_cast<int>(out.mentions.size());
    remap[m.id] = copy.id;
    out.mentions.push_back(std::move(copy));
  }
  auto remap_clustering = [&](const Clustering& c) {
    std::map<int, std::vector<int>> raw;
    for (const auto& [cid, members] : c.clusters) {
      for (int m : members)
        if (remap[m] >= 0) raw[cid].push_back(remap[m]);
    }
    return Clustering::normalized(raw);
  };
  if (doc.gold) out.gold = remap_clustering(*doc.gold);
  if (doc.predicted) out.predicted = remap_clustering(*doc.predicted);
  return out;
}

// Structural equality used by round-trip checks: same sentences, same spans,
// same cluster partitions (cluster naming already canonical).
inline bool structurally_equal(const Document& a, const Document& b) {
  if (a.doc_key != b.doc_key || a.sentences != b.sentences) return false;
  if (a.mentions.size() != b.mentions.size()) return false;
  for (size_t i = 0; i < a.mentions.size(); ++i) {
    const auto& ma = a.mentions[i];
    const auto& mb = b.mentions[i];
    if (ma.sent != mb.sent || ma.start != mb.start || ma.end != mb.end ||
        ma.surface != mb.surface)
      return false;
  }
  if (a.gold.has_value() != b.gold.has_value()) return false;
  if (a.gold && !(*a.gold == *b.gold)) return false;
  return true;
}

}  // namespace coref
