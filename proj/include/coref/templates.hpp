#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "json.hpp"

#include "coref/corpus.hpp"
#include "coref/detail/strings.hpp"
#include "coref/error.hpp"

namespace coref {

enum class TaskMode { qa_forward, qa_backward, qa_singleton, doc_full, doc_iter };

inline const char* to_string(TaskMode m) {
  switch (m) {
    case TaskMode::qa_forward: return "qa_forward";
    case TaskMode::qa_backward: return "qa_backward";
    case TaskMode::qa_singleton: return "qa_singleton";
    case TaskMode::doc_full: return "doc_full";
    case TaskMode::doc_iter: return "doc_iter";
  }
  return "?";
}

inline TaskMode task_mode_from_string(const std::string& s) {
  if (s == "qa_forward") return TaskMode::qa_forward;
  if (s == "qa_backward") return TaskMode::qa_backward;
  if (s == "qa_singleton") return TaskMode::qa_singleton;
  if (s == "doc_full") return TaskMode::doc_full;
  if (s == "doc_iter") return TaskMode::doc_iter;
  fail("UnknownRecordMode", "unknown task mode '" + s + "'");
}

// Fixed ordering used when exporting training data.
inline int mode_rank(TaskMode m) { return static_cast<int>(m); }

struct PromptRecord {
  std::string record_id;
  std::string doc_key;
  TaskMode mode = TaskMode::qa_forward;
  int target = 0;  // mention id, sentence index, or step index depending on mode
  std::string prompt;
  std::string gold_answer;  // empty when built without gold
  std::map<std::string, std::string> meta;
};

struct ChainItem {
  std::string surface;
  int sent = 0;
  friend bool operator==(const ChainItem& a, const ChainItem& b) {
    return a.surface == b.surface && a.sent == b.sent;
  }
};

// Items are ordered nearest-first relative to the queried mention.
struct ChainAnswer {
  std::vector<ChainItem> items;
  bool none_marker = false;
  friend bool operator==(const ChainAnswer& a, const ChainAnswer& b) {
    return a.none_marker == b.none_marker && a.items == b.items;
  }
};

inline std::string render_chain_answer(const ChainAnswer& a) {
  if (a.none_marker || a.items.empty()) return "None";
  std::string out;
  for (size_t i = 0; i < a.items.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(i + 1) + ". \"" + a.items[i].surface + "\" (S" +
           std::to_string(a.items[i].sent) + ")";
  }
  return out;
}

inline std::string render_surface_list(const std::vector<std::string>& surfaces) {
  if (surfaces.empty()) return "None";
  std::string out = "[";
  for (size_t i = 0; i < surfaces.size(); ++i) {
    if (i) out += ", ";
    out += "\"" + surfaces[i] + "\"";
  }
  return out + "]";
}

// Instruction texts are plain assets; `{chain_len}` is substituted when a
// prompt is built. Only the singleton instruction has fixed wording.
struct InstructionSet {
  std::string qa_forward;
  std::string qa_backward;
  std::string qa_singleton;
  std::string doc_full;
  std::string doc_iter;

  static InstructionSet defaults() {
    InstructionSet s;
    s.qa_forward =
        "You are resolving coreference. Read the numbered sentences, then answer the "
        "question. List the {chain_len} most recent previous phrases that the queried phrase "
        "refers to, nearest first, each formatted as `N. \"<phrase>\" (S<sentence id>)`. If "
        "the phrase does not refer to any previous phrase, simply return `None.`";
    s.qa_backward =
        "You are resolving coreference. Read the numbered sentences, then answer the "
        "question. List up to {chain_len} phrases appearing after the queried phrase that "
        "refer back to it, nearest first, each formatted as `N. \"<phrase>\" (S<sentence "
        "id>)`. If no later phrase refers back to it, simply return `None.`";
    s.qa_singleton =
        "List all phrases in the last sentence that do not refer to any previous phrases "
        "preceding them. Your response should be formatted as a Python list containing all "
        "phrases from the candidate list that do not refer to any preceding phrases. If no "
        "such phrases can be found, simply return 'None.'";
    s.doc_full =
        "The document below marks each candidate mention between ## markers, followed by a "
        "cluster ID placeholder (#). Rewrite the document exactly as given, filling every "
        "placeholder with a cluster ID so that mentions of the same entity share one ID. "
        "Number new entities from 1 in order of first appearance.";
    s.doc_iter =
        "The text below marks mentions between ## markers with cluster IDs in (#N) form. "
        "The final mention ends with an open placeholder (#. Write only its cluster ID "
        "followed by a closing parenthesis, e.g. `2)`. Reuse the ID of the entity it refers "
        "to, or the next unused ID if it introduces a new entity.";
    return s;
  }

  // Overrides defaults from <dir>/<mode>.txt for files that exist.
  static InstructionSet from_directory(const std::string& dir) {
    InstructionSet s = defaults();
    auto load = [&](const char* name, std::string& field) {
      std::ifstream in(dir + "/" + name + ".txt");
      if (!in) return;
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      field = detail::trim(text);
    };
    load("qa_forward", s.qa_forward);
    load("qa_backward", s.qa_backward);
    load("qa_singleton", s.qa_singleton);
    load("doc_full", s.doc_full);
    load("doc_iter", s.doc_iter);
    return s;
  }
};

enum class IterContext { prev_sentence, none };

struct TemplateConfig {
  int chain_len = 2;
  bool backward_chain = true;  // when false, backward answers carry a single item
  IterContext iter_context = IterContext::prev_sentence;
  InstructionSet instructions = InstructionSet::defaults();

  int backward_len() const { return backward_chain ? chain_len : 1; }
};

namespace detail {

inline std::string substitute(std::string text, const std::string& key, const std::string& value) {
  size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

inline std::string numbered_sentences(const Document& doc, int first, int last) {
  std::vector<std::string> lines;
  for (int s = first; s <= last; ++s)
    lines.push_back("S" + std::to_string(s) + ": " + join(doc.sentences[s], " "));
  return join(lines, "\n");
}

// Marker escaping: reserved substrings occurring in corpus text are doubled.
inline std::string escape_markers(const std::string& tok) {
  std::string out;
  for (size_t i = 0; i < tok.size();) {
    if (i + 1 < tok.size() && tok[i] == '#' && tok[i + 1] == '#') {
      out += "####";
      i += 2;
    } else if (i + 1 < tok.size() && tok[i] == '(' && tok[i + 1] == '#') {
      out += "(#(#";
      i += 2;
    } else {
      out += tok[i++];
    }
  }
  return out;
}

inline std::string unescape_markers(const std::string& tok) {
  std::string out;
  for (size_t i = 0; i < tok.size();) {
    if (tok.compare(i, 4, "####") == 0) {
      out += "##";
      i += 4;
    } else if (tok.compare(i, 4, "(#(#") == 0) {
      out += "(#";
      i += 4;
    } else {
      out += tok[i++];
    }
  }
  return out;
}

}  // namespace detail

// How a mention is rendered inside an annotated document.
enum class Mark {
  none,         // no markers at all
  placeholder,  // ## surface ## (#)
  filled,       // ## surface ## (#<id>)
  open          // ## surface ## (#     (the model completes the id)
};

struct RenderMarks {
  std::vector<Mark> mark;  // per mention id
  std::vector<int> id;     // cluster id for Mark::filled

  static RenderMarks uniform(int n, Mark m) {
    RenderMarks r;
    r.mark.assign(n, m);
    r.id.assign(n, 0);
    return r;
  }
};

// Corruption hooks used by the mock backend; all optional.
struct RenderNoise {
  const std::vector<bool>* duplicate_surface = nullptr;     // per mention
  const std::vector<bool>* drop_token = nullptr;            // per global token index
  const std::vector<std::optional<int>>* id_override = nullptr;  // per mention
};

// Renders sentences [first_sent, last_sent] with mention markers. When
// `truncate_after` names a mention, output stops right after that mention's
// placeholder (used for the iterative prompt whose final mention ends `(#`).
inline std::string render_annotated(const Document& doc, const RenderMarks& marks, int first_sent,
                                    int last_sent, std::optional<int> truncate_after = {},
                                    const RenderNoise* noise = nullptr) {
  // Marked mentions must nest; crossing spans cannot be expressed in the
  // marker grammar.
  for (size_t a = 0; a < doc.mentions.size(); ++a) {
    if (marks.mark[a] == Mark::none) continue;
    for (size_t b = a + 1; b < doc.mentions.size(); ++b) {
      if (marks.mark[b] == Mark::none) continue;
      const auto& ma = doc.mentions[a];
      const auto& mb = doc.mentions[b];
      if (ma.sent != mb.sent) continue;
      bool overlap = ma.start <= mb.end && mb.start <= ma.end;
      bool nested = (ma.start <= mb.start && mb.end <= ma.end) ||
                    (mb.start <= ma.start && ma.end <= mb.end);
      if (overlap && !nested)
        fail("UnsupportedMentionSpans", "document '" + doc.doc_key +
                                            "': crossing mention spans cannot be rendered");
    }
  }

  const auto offsets = doc.sentence_offsets();
  std::string out;
  bool line_open = false;
  auto emit = [&](const std::string& piece) {
    if (line_open) out += ' ';
    out += piece;
    line_open = true;
  };

  for (int s = first_sent; s <= last_sent; ++s) {
    if (s > first_sent) {
      out += '\n';
      line_open = false;
    }
    std::vector<std::vector<int>> opens(doc.sentences[s].size()), closes(doc.sentences[s].size());
    for (const auto& m : doc.mentions) {
      if (m.sent != s || marks.mark[m.id] == Mark::none) continue;
      opens[m.start].push_back(m.id);
      closes[m.end].push_back(m.id);
    }
    for (auto& v : opens)  // outer first
      std::sort(v.begin(), v.end(), [&](int a, int b) {
        if (doc.mentions[a].end != doc.mentions[b].end)
          return doc.mentions[a].end > doc.mentions[b].end;
        return a < b;
      });
    for (auto& v : closes)  // inner first (reverse of open order)
      std::sort(v.begin(), v.end(), [&](int a, int b) {
        if (doc.mentions[a].start != doc.mentions[b].start)
          return doc.mentions[a].start > doc.mentions[b].start;
        return a > b;
      });

    for (int w = 0; w < static_cast<int>(doc.sentences[s].size()); ++w) {
      for (int id : opens[w]) {
        (void)id;
        emit("##");
      }
      bool dropped = noise && noise->drop_token && (*noise->drop_token)[offsets[s] + w];
      if (!dropped) emit(detail::escape_markers(doc.sentences[s][w]));
      for (int id : closes[w]) {
        const auto& m = doc.mentions[id];
        if (noise && noise->duplicate_surface && (*noise->duplicate_surface)[id]) {
          for (int t = m.start; t <= m.end; ++t) emit(detail::escape_markers(doc.sentences[s][t]));
        }
        emit("##");
        Mark mk = marks.mark[id];
        if (mk == Mark::placeholder) {
          emit("(#)");
        } else if (mk == Mark::filled) {
          int cid = marks.id[id];
          if (noise && noise->id_override && (*noise->id_override)[id])
            cid = *(*noise->id_override)[id];
          emit("(#" + std::to_string(cid) + ")");
        } else if (mk == Mark::open) {
          emit("(#");
        }
        if (truncate_after && *truncate_after == id) return out;
      }
    }
  }
  return out;
}

namespace detail {

// Gold cluster members before/after a mention, nearest first. Mention ids are
// document order, so plain id comparisons suffice.
inline std::vector<int> gold_neighbors(const Document& doc, int mention_id, bool before,
                                       int limit) {
  if (!doc.gold) return {};
  const auto cid_of = doc.gold->mention_to_cluster();
  auto it = cid_of.find(mention_id);
  if (it == cid_of.end()) return {};
  const auto& members = doc.gold->clusters.at(it->second);
  std::vector<int> out;
  if (before) {
    for (auto r = members.rbegin(); r != members.rend(); ++r)
      if (*r < mention_id && static_cast<int>(out.size()) < limit) out.push_back(*r);
  } else {
    for (int m : members)
      if (m > mention_id && static_cast<int>(out.size()) < limit) out.push_back(m);
  }
  return out;
}

inline ChainAnswer chain_from_ids(const Document& doc, const std::vector<int>& ids) {
  ChainAnswer a;
  a.none_marker = ids.empty();
  for (int id : ids) a.items.push_back({doc.mentions[id].surface, doc.mentions[id].sent});
  return a;
}

inline void require_mention(const Document& doc, int mention_id) {
  if (mention_id < 0 || mention_id >= doc.mention_count())
    fail("UnknownMention", "document '" + doc.doc_key + "' has no mention " +
                               std::to_string(mention_id));
}

}  // namespace detail

// Gold chain answers (exposed for the mock backend and tests).
inline ChainAnswer gold_forward_chain(const Document& doc, int mention_id, int chain_len) {
  detail::require_mention(doc, mention_id);
  return detail::chain_from_ids(doc, detail::gold_neighbors(doc, mention_id, true, chain_len));
}

inline ChainAnswer gold_backward_chain(const Document& doc, int mention_id, int chain_len) {
  detail::require_mention(doc, mention_id);
  return detail::chain_from_ids(doc, detail::gold_neighbors(doc, mention_id, false, chain_len));
}

// Surfaces in sentence `sent_index` whose mentions have no antecedent in the
// preceding text (cluster-opening mentions and singletons).
inline std::vector<std::string> gold_singleton_surfaces(const Document& doc, int sent_index) {
  std::vector<std::string> out;
  for (const auto& m : doc.mentions) {
    if (m.sent != sent_index) continue;
    if (detail::gold_neighbors(doc, m.id, true, 1).empty()) out.push_back(m.surface);
  }
  return out;
}

inline std::vector<std::string> sentence_candidates(const Document& doc, int sent_index) {
  std::vector<std::string> out;
  for (const auto& m : doc.mentions)
    if (m.sent == sent_index) out.push_back(m.surface);
  return out;
}

inline PromptRecord build_qa_forward(const Document& doc, int mention_id,
                                     const TemplateConfig& cfg = {}) {
  detail::require_mention(doc, mention_id);
  const MentionSpan& m = doc.mentions[mention_id];
  PromptRecord r;
  r.record_id = doc.doc_key + ":qa_forward:" + std::to_string(mention_id);
  r.doc_key = doc.doc_key;
  r.mode = TaskMode::qa_forward;
  r.target = mention_id;
  r.meta["chain_len"] = std::to_string(cfg.chain_len);
  r.prompt = detail::substitute(cfg.instructions.qa_forward, "{chain_len}",
                                std::to_string(cfg.chain_len)) +
             "\n\n" + detail::numbered_sentences(doc, 0, m.sent) +
             "\n\nQuestion: What previous phrases does \"" + m.surface +
             "\" in the last sentence refer to?";
  if (doc.gold) r.gold_answer = render_chain_answer(gold_forward_chain(doc, mention_id, cfg.chain_len));
  return r;
}

inline PromptRecord build_qa_backward(const Document& doc, int mention_id,
                                      const TemplateConfig& cfg = {}) {
  detail::require_mention(doc, mention_id);
  const MentionSpan& m = doc.mentions[mention_id];
  PromptRecord r;
  r.record_id = doc.doc_key + ":qa_backward:" + std::to_string(mention_id);
  r.doc_key = doc.doc_key;
  r.mode = TaskMode::qa_backward;
  r.target = mention_id;
  r.meta["chain_len"] = std::to_string(cfg.backward_len());
  r.prompt = detail::substitute(cfg.instructions.qa_backward, "{chain_len}",
                                std::to_string(cfg.backward_len())) +
             "\n\n" + detail::numbered_sentences(doc, 0, doc.sentence_count() - 1) +
             "\n\nQuestion: Which later phrases refer back to \"" + m.surface + "\" (S" +
             std::to_string(m.sent) + ")?";
  if (doc.gold)
    r.gold_answer = render_chain_answer(gold_backward_chain(doc, mention_id, cfg.backward_len()));
  return r;
}

inline PromptRecord build_qa_singleton(const Document& doc, int sent_index,
                                       const TemplateConfig& cfg = {}) {
  if (sent_index < 0 || sent_index >= doc.sentence_count())
    fail("NoMentionsInSentence", "document '" + doc.doc_key + "' has no sentence " +
                                     std::to_string(sent_index));
  const auto candidates = sentence_candidates(doc, sent_index);
  if (candidates.empty())
    fail("NoMentionsInSentence", "sentence " + std::to_string(sent_index) + " of '" +
                                     doc.doc_key + "' contains no mentions");
  PromptRecord r;
  r.record_id = doc.doc_key + ":qa_singleton:" + std::to_string(sent_index);
  r.doc_key = doc.doc_key;
  r.mode = TaskMode::qa_singleton;
  r.target = sent_index;
  r.prompt = cfg.instructions.qa_singleton + "\n\n" +
             detail::numbered_sentences(doc, 0, sent_index) +
             "\n\nCandidates: " + render_surface_list(candidates);
  if (doc.gold) r.gold_answer = render_surface_list(gold_singleton_surfaces(doc, sent_index));
  return r;
}

inline PromptRecord build_doc_full(const Document& doc, const TemplateConfig& cfg = {}) {
  if (doc.mentions.empty())
    fail("MissingMentions", "document '" + doc.doc_key + "' has no mentions to annotate");
  PromptRecord r;
  r.record_id = doc.doc_key + ":doc_full:0";
  r.doc_key = doc.doc_key;
  r.mode = TaskMode::doc_full;
  r.target = 0;
  r.prompt = cfg.instructions.doc_full + "\n\n" +
             render_annotated(doc, RenderMarks::uniform(doc.mention_count(), Mark::placeholder),
                              0, doc.sentence_count() - 1);
  if (doc.gold) {
    RenderMarks marks = RenderMarks::uniform(doc.mention_count(), Mark::filled);
    const auto cid_of = doc.gold->mention_to_cluster();
    for (const auto& m : doc.mentions) marks.id[m.id] = cid_of.at(m.id);
    r.gold_answer = render_annotated(doc, marks, 0, doc.sentence_count() - 1);
  }
  return r;
}

// One iterative step. The running segment starts at the beginning of the
// sentence containing the previous mention (document start at step 0) and
// ends right after mention `step`'s open placeholder; earlier mentions inside
// it carry their assigned ids. The context block is the unannotated sentence
// of the most recent mention before the segment, when one exists.
inline PromptRecord build_doc_iter_step(const Document& doc, int step,
                                        const std::vector<int>& assigned,
                                        const TemplateConfig& cfg = {}) {
  if (step < 0 || step >= doc.mention_count())
    fail("StepOutOfRange", "step " + std::to_string(step) + " outside 0.." +
                               std::to_string(doc.mention_count() - 1));
  if (static_cast<int>(assigned.size()) != step)
    fail("AssignedLengthMismatch", "expected " + std::to_string(step) + " assigned ids, got " +
                                       std::to_string(assigned.size()));

  const int seg_first = step == 0 ? 0 : doc.mentions[step - 1].sent;
  const int seg_last = doc.mentions[step].sent;

  RenderMarks marks = RenderMarks::uniform(doc.mention_count(), Mark::none);
  for (int i = 0; i < step; ++i) {
    marks.mark[i] = Mark::filled;
    marks.id[i] = assigned[i];
  }
  marks.mark[step] = Mark::open;
  std::string segment = render_annotated(doc, marks, seg_first, seg_last, step);

  std::string context;
  if (cfg.iter_context == IterContext::prev_sentence) {
    for (int i = step - 1; i >= 0; --i) {
      if (doc.mentions[i].sent < seg_first) {
        context = detail::join(doc.sentences[doc.mentions[i].sent], " ");
        break;
      }
    }
  }

  PromptRecord r;
  r.record_id = doc.doc_key + ":doc_iter:" + std::to_string(step);
  r.doc_key = doc.doc_key;
  r.mode = TaskMode::doc_iter;
  r.target = step;
  int max_id = 0;
  for (int id : assigned) max_id = std::max(max_id, id);
  r.meta["max_id"] = std::to_string(max_id);
  r.prompt = cfg.instructions.doc_iter + "\n\n" +
             (context.empty() ? "" : "Context: " + context + "\n\n") + segment;
  if (doc.gold) r.gold_answer = std::to_string(doc.gold->mention_to_cluster().at(step)) + ")";
  return r;
}

// ---------------------------------------------------------------------------
// Answer parsing (tolerant of model chatter).
// ---------------------------------------------------------------------------

inline ChainAnswer parse_chain_answer(const std::string& text) {
  static const std::regex item_re(
      R"((\d+)\s*[.)]\s*["']([^"']*)["']\s*\(\s*[Ss](\d+)\s*\))");
  ChainAnswer out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), item_re);
  for (auto it = begin; it != std::sregex_iterator(); ++it)
    out.items.push_back({(*it)[2].str(), std::stoi((*it)[3].str())});
  if (!out.items.empty()) return out;
  static const std::regex none_re(R"(\bnone\b)", std::regex::icase);
  if (std::regex_search(text, none_re)) {
    out.none_marker = true;
    return out;
  }
  fail("Unparseable", "no chain item or none-marker found in: " +
                          detail::normalize_ws(text).substr(0, 120));
}

inline std::vector<std::string> parse_singleton_answer(const std::string& text) {
  size_t open = text.find('[');
  size_t close = text.rfind(']');
  if (open != std::string::npos && close != std::string::npos && close > open) {
    std::vector<std::string> out;
    static const std::regex quoted_re(R"(["']([^"']*)["'])");
    std::string inner = text.substr(open + 1, close - open - 1);
    auto begin = std::sregex_iterator(inner.begin(), inner.end(), quoted_re);
    for (auto it = begin; it != std::sregex_iterator(); ++it) out.push_back((*it)[1].str());
    if (!out.empty()) return out;
    if (detail::trim(inner).empty()) return out;  // explicit []
  }
  static const std::regex none_re(R"(\bnone\b)", std::regex::icase);
  if (std::regex_search(text, none_re)) return {};
  fail("Unparseable", "no list or none-marker found in: " +
                          detail::normalize_ws(text).substr(0, 120));
}

enum class GroundDirection { fwd, bwd };

// Maps a generated surface string back to a mention id. Matching is exact
// after whitespace normalization and case folding; the search is restricted
// to mentions strictly before (fwd) or after (bwd) the anchor, preferring the
// hinted sentence, then the nearest mention.
inline std::optional<int> ground_mention(const Document& doc, const std::string& surface,
                                         std::optional<int> sent_index, int anchor,
                                         GroundDirection direction) {
  const std::string key = detail::surface_key(surface);
  std::vector<int> candidates;
  for (const auto& m : doc.mentions) {
    if (m.id == anchor) continue;
    if (direction == GroundDirection::fwd && m.id >= anchor) continue;
    if (direction == GroundDirection::bwd && m.id <= anchor) continue;
    if (detail::surface_key(m.surface) == key) candidates.push_back(m.id);
  }
  if (candidates.empty()) return std::nullopt;
  if (sent_index) {
    std::vector<int> in_sentence;
    for (int id : candidates)
      if (doc.mentions[id].sent == *sent_index) in_sentence.push_back(id);
    if (!in_sentence.empty()) candidates = std::move(in_sentence);
  }
  return *std::min_element(candidates.begin(), candidates.end(), [&](int a, int b) {
    return std::abs(a - anchor) < std::abs(b - anchor);
  });
}

// ---------------------------------------------------------------------------
// SFT export.
// ---------------------------------------------------------------------------

// Writes JSON-lines {"id","mode","prompt","response"} in deterministic order:
// document (first appearance), then target index, then task mode.
inline int export_sft(std::vector<PromptRecord> records, const std::string& path) {
  for (const auto& r : records)
    if (r.gold_answer.empty())
      fail("MissingGoldAnswer", "record '" + r.record_id + "' has no gold answer");

  std::map<std::string, int> doc_order;
  for (const auto& r : records)
    doc_order.emplace(r.doc_key, static_cast<int>(doc_order.size()));
  std::stable_sort(records.begin(), records.end(),
                   [&](const PromptRecord& a, const PromptRecord& b) {
                     int da = doc_order[a.doc_key], db = doc_order[b.doc_key];
                     if (da != db) return da < db;
                     if (a.target != b.target) return a.target < b.target;
                     return mode_rank(a.mode) < mode_rank(b.mode);
                   });

  std::ofstream out(path);
  if (!out) fail("IoError", "cannot write '" + path + "'");
  for (const auto& r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.record_id;
    j["mode"] = to_string(r.mode);
    j["prompt"] = r.prompt;
    j["response"] = r.gold_answer;
    out << j.dump() << "\n";
  }
  return static_cast<int>(records.size());
}

}  // namespace coref
