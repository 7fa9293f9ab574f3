#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "coref/backend.hpp"
#include "coref/corpus.hpp"
#include "coref/detail/strings.hpp"
#include "coref/error.hpp"
#include "coref/templates.hpp"

namespace coref {

struct StrippedSpan {
  std::size_t begin = 0;  // char range in the recovered plain text
  std::size_t end = 0;
  std::optional<int> cluster_id;
};

struct StripResult {
  std::string plain;
  std::vector<StrippedSpan> spans;
};

namespace detail {

inline bool is_placeholder_token(const std::string& tok, std::optional<int>* id, bool* open_ended) {
  *open_ended = false;
  id->reset();
  if (tok == "(#") {
    *open_ended = true;
    return true;
  }
  if (tok.size() < 3 || tok.compare(0, 2, "(#") != 0 || tok.back() != ')') return false;
  const std::string digits = tok.substr(2, tok.size() - 3);
  if (digits.empty()) return true;  // "(#)"
  if (digits.find_first_not_of("0123456789") != std::string::npos) return false;
  *id = std::stoi(digits);
  return true;
}

}  // namespace detail

// Removes `## ... ## (#k)` markup, un-doubles escaped marker substrings, and
// reports each marked span's char range in the recovered plain text. Markers
// nest; closes pair with the most recent open.
inline StripResult strip_annotations(const std::string& text) {
  struct Tok {
    std::string text;
    int line;
  };
  std::vector<Tok> toks;
  {
    const auto lines = detail::split_lines(text);
    for (size_t l = 0; l < lines.size(); ++l)
      for (auto& t : detail::split_ws(lines[l])) toks.push_back({std::move(t), static_cast<int>(l)});
  }

  StripResult out;
  std::vector<std::size_t> open_starts;
  bool expecting_placeholder = false;
  std::size_t pending_start = 0;
  int last_literal_line = -1;

  for (size_t i = 0; i < toks.size(); ++i) {
    const std::string& tok = toks[i].text;
    std::optional<int> id;
    bool open_ended = false;
    const bool placeholder = detail::is_placeholder_token(tok, &id, &open_ended);

    if (expecting_placeholder) {
      if (!placeholder)
        fail("MalformedMarkup", "close marker not followed by a placeholder near '" + tok + "'");
      if (open_ended) fail("MalformedMarkup", "unclosed (# placeholder");
      StrippedSpan span;
      span.begin = pending_start;
      span.end = out.plain.size();
      while (span.begin < span.end &&
             (out.plain[span.begin] == ' ' || out.plain[span.begin] == '\n'))
        ++span.begin;
      span.cluster_id = id;
      out.spans.push_back(span);
      expecting_placeholder = false;
      continue;
    }

    if (tok == "##") {
      bool is_close = false;
      if (i + 1 < toks.size()) {
        std::optional<int> next_id;
        bool next_open = false;
        is_close = detail::is_placeholder_token(toks[i + 1].text, &next_id, &next_open);
      }
      if (is_close) {
        if (open_starts.empty()) fail("MalformedMarkup", "close marker without a matching open");
        pending_start = open_starts.back();
        open_starts.pop_back();
        expecting_placeholder = true;
      } else {
        open_starts.push_back(out.plain.size());
      }
      continue;
    }

    if (placeholder) {
      if (open_ended) fail("MalformedMarkup", "unclosed (# placeholder");
      fail("MalformedMarkup", "placeholder '" + tok + "' without a preceding close marker");
    }

    // literal token
    if (!out.plain.empty())
      out.plain += (toks[i].line != last_literal_line) ? '\n' : ' ';
    out.plain += detail::unescape_markers(tok);
    last_literal_line = toks[i].line;
  }

  if (expecting_placeholder) fail("MalformedMarkup", "dangling close marker at end of text");
  if (!open_starts.empty()) fail("MalformedMarkup", "dangling ## marker at end of text");

  std::sort(out.spans.begin(), out.spans.end(), [](const StrippedSpan& a, const StrippedSpan& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    return a.end > b.end;
  });
  return out;
}

struct AlignmentReport {
  bool passed = false;
  bool em = false;
  struct SpanAlign {
    bool aligned = false;
    int orig_begin = -1;  // global token indices in the original, inclusive
    int orig_end = -1;
  };
  std::vector<SpanAlign> mention_map;  // one entry per input span
  int insertions = 0;
  int deletions = 0;
  int substitutions = 0;
};

// Token-level global alignment (match +1, mismatch/gap -1) between the
// original text and recovered plain text. `passed` demands a unique
// realignment: no original token is deletable in any optimal alignment, every
// recovered token has exactly one co-optimal fate, and each marked span
// region maps token for token onto a contiguous original region with equal
// text. `em` is byte equality after whitespace normalization.
inline AlignmentReport align(const std::string& original, const std::string& recovered,
                             const std::vector<StrippedSpan>& spans = {}) {
  AlignmentReport report;
  report.em = detail::normalize_ws(original) == detail::normalize_ws(recovered);

  const std::vector<std::string> orig = detail::split_ws(original);
  std::vector<std::string> rec;
  std::vector<std::pair<std::size_t, std::size_t>> rec_ranges;  // char ranges in `recovered`
  {
    std::size_t i = 0;
    while (i < recovered.size()) {
      while (i < recovered.size() && detail::is_space(recovered[i])) ++i;
      std::size_t j = i;
      while (j < recovered.size() && !detail::is_space(recovered[j])) ++j;
      if (j > i) {
        rec.push_back(recovered.substr(i, j - i));
        rec_ranges.emplace_back(i, j);
      }
      i = j;
    }
  }

  const int n = static_cast<int>(rec.size());
  const int m = static_cast<int>(orig.size());
  auto s = [&](int i, int j) { return rec[i] == orig[j] ? 1 : -1; };

  std::vector<std::vector<int>> F(n + 1, std::vector<int>(m + 1, 0));
  std::vector<std::vector<int>> B(n + 1, std::vector<int>(m + 1, 0));
  for (int i = 1; i <= n; ++i) F[i][0] = -i;
  for (int j = 1; j <= m; ++j) F[0][j] = -j;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= m; ++j)
      F[i][j] = std::max({F[i - 1][j - 1] + s(i - 1, j - 1), F[i - 1][j] - 1, F[i][j - 1] - 1});
  for (int i = 0; i < n; ++i) B[i][m] = -(n - i);
  for (int j = 0; j < m; ++j) B[n][j] = -(m - j);
  for (int i = n - 1; i >= 0; --i)
    for (int j = m - 1; j >= 0; --j)
      B[i][j] = std::max({B[i + 1][j + 1] + s(i, j), B[i + 1][j] - 1, B[i][j + 1] - 1});
  const int opt = F[n][m];

  // Per original token: deletable in some optimal alignment?
  std::vector<bool> deletable(m, false);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i <= n; ++i)
      if (F[i][j] - 1 + B[i][j + 1] == opt) {
        deletable[j] = true;
        break;
      }

  // Per recovered token: all co-optimal fates (equal match, substitution,
  // insertion). A stable token has exactly one.
  std::vector<std::vector<int>> eq_matches(n);
  std::vector<int> fates(n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      if (F[i][j] + s(i, j) + B[i + 1][j + 1] == opt) {
        ++fates[i];
        if (rec[i] == orig[j]) eq_matches[i].push_back(j);
      }
    }
    for (int j = 0; j <= m; ++j)
      if (F[i][j] - 1 + B[i + 1][j] == opt) {
        ++fates[i];
        break;
      }
  }

  report.passed = true;
  for (int j = 0; j < m; ++j)
    if (deletable[j]) report.passed = false;
  for (int i = 0; i < n; ++i)
    if (fates[i] != 1) report.passed = false;

  // Map each span's char range onto recovered token indices.
  for (const StrippedSpan& span : spans) {
    AlignmentReport::SpanAlign sa;
    int first = -1, last = -1;
    bool boundary_ok = true;
    for (int t = 0; t < n; ++t) {
      if (rec_ranges[t].first >= span.begin && rec_ranges[t].second <= span.end) {
        if (first < 0) first = t;
        last = t;
      } else if (rec_ranges[t].first < span.end && rec_ranges[t].second > span.begin) {
        boundary_ok = false;  // token straddles the span boundary
      }
    }
    if (first < 0) {  // empty region
      report.mention_map.push_back(sa);
      report.passed = false;
      continue;
    }
    bool stable = boundary_ok;
    int prev = -2;
    for (int t = first; t <= last && stable; ++t) {
      if (fates[t] != 1 || eq_matches[t].size() != 1) {
        stable = false;
        break;
      }
      int j = eq_matches[t][0];
      if (prev != -2 && j != prev + 1) stable = false;
      prev = j;
    }
    if (stable) {
      sa.aligned = true;
      sa.orig_begin = eq_matches[first][0];
      sa.orig_end = eq_matches[last][0];
    } else {
      report.passed = false;
    }
    report.mention_map.push_back(sa);
  }

  // Canonical traceback for the diff summary.
  {
    int i = n, j = m;
    while (i > 0 || j > 0) {
      if (i > 0 && j > 0 && F[i][j] == F[i - 1][j - 1] + s(i - 1, j - 1)) {
        if (rec[i - 1] != orig[j - 1]) ++report.substitutions;
        --i;
        --j;
      } else if (j > 0 && F[i][j] == F[i][j - 1] - 1) {
        ++report.deletions;
        --j;
      } else {
        ++report.insertions;
        --i;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Generation drivers.
// ---------------------------------------------------------------------------

struct FullRunResult {
  std::string generated;
  AlignmentReport report;
  std::optional<Clustering> predicted;  // only when the alignment check passed
  int unmatched_spans = 0;
  std::string error;  // non-empty on backend failure

  bool ok() const { return error.empty(); }
};

// Sends the whole annotated document once and realigns the output. The
// predicted clustering is extracted only when the alignment check passes.
inline FullRunResult run_full(const Document& doc, CompletionBackend& backend,
                              const TemplateConfig& cfg = {}) {
  FullRunResult result;
  PromptRecord record = build_doc_full(doc, cfg);
  try {
    result.generated = backend.complete(record).text;
  } catch (const std::exception& e) {
    result.error = std::string("BackendFailure: ") + e.what();
    return result;
  }

  StripResult stripped;
  try {
    stripped = strip_annotations(result.generated);
  } catch (const Error&) {
    result.report.passed = false;
    result.report.em = false;
    return result;
  }
  result.report = align(plain_text(doc), stripped.plain, stripped.spans);
  if (!result.report.passed) return result;

  // Map aligned span regions back onto gold mention spans.
  const auto offsets = doc.sentence_offsets();
  auto locate = [&](int global) -> std::pair<int, int> {  // (sent, word)
    int sent = static_cast<int>(std::upper_bound(offsets.begin(), offsets.end(), global) -
                                offsets.begin()) -
               1;
    return {sent, global - offsets[sent]};
  };
  std::map<int, int> mention_cid;
  for (size_t k = 0; k < stripped.spans.size(); ++k) {
    const auto& span = stripped.spans[k];
    const auto& sa = result.report.mention_map[k];
    if (!sa.aligned || !span.cluster_id) continue;
    auto [s1, w1] = locate(sa.orig_begin);
    auto [s2, w2] = locate(sa.orig_end);
    if (s1 != s2) {
      ++result.unmatched_spans;
      continue;
    }
    auto mention = doc.find_mention(s1, w1, w2);
    if (!mention) {
      ++result.unmatched_spans;
      continue;
    }
    if (!mention_cid.emplace(*mention, *span.cluster_id).second) ++result.unmatched_spans;
  }
  std::map<int, std::vector<int>> raw;
  int next_cid = 0;
  for (const auto& [mid, cid] : mention_cid) next_cid = std::max(next_cid, cid);
  for (const auto& m : doc.mentions) {
    auto it = mention_cid.find(m.id);
    if (it != mention_cid.end())
      raw[it->second].push_back(m.id);
    else
      raw[++next_cid].push_back(m.id);  // unannotated mentions become singletons
  }
  result.predicted = Clustering::normalized(raw);
  return result;
}

struct IterRunResult {
  std::vector<int> assigned;
  Clustering predicted;
  std::string annotated;  // driver-assembled document with all ids filled
  AlignmentReport report;
  int coerced_ids = 0;
  int steps = 0;
  std::string error;

  bool ok() const { return error.empty(); }
};

namespace detail {

// Truncate at the first ')' and parse the leading integer, if any.
inline std::optional<int> parse_iter_id(const std::string& raw) {
  std::string text = raw.substr(0, raw.find(')'));
  size_t i = 0;
  while (i < text.size() && is_space(text[i])) ++i;
  size_t j = i;
  while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
  if (j == i) return std::nullopt;
  try {
    return std::stoi(text.substr(i, j - i));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

}  // namespace detail

// One cluster id per step; the driver owns the document text, so the stripped
// output always equals the original text regardless of the backend. Illegal
// ids are coerced to "new cluster" and tallied.
inline IterRunResult run_iterative(const Document& doc, CompletionBackend& backend,
                                   const TemplateConfig& cfg = {}) {
  IterRunResult result;
  int max_id = 0;
  for (int step = 0; step < doc.mention_count(); ++step) {
    PromptRecord record = build_doc_iter_step(doc, step, result.assigned, cfg);
    std::string raw;
    try {
      raw = backend.complete(record).text;
    } catch (const std::exception& e) {
      result.error = std::string("BackendFailure: ") + e.what();
      return result;
    }
    std::optional<int> id = detail::parse_iter_id(raw);
    if (!id || *id < 1 || *id > max_id + 1) {
      id = max_id + 1;
      ++result.coerced_ids;
    }
    result.assigned.push_back(*id);
    max_id = std::max(max_id, *id);
    ++result.steps;
  }

  std::map<int, std::vector<int>> raw_clusters;
  for (int m = 0; m < doc.mention_count(); ++m) raw_clusters[result.assigned[m]].push_back(m);
  result.predicted = Clustering::normalized(raw_clusters);

  RenderMarks marks = RenderMarks::uniform(doc.mention_count(), Mark::filled);
  for (int m = 0; m < doc.mention_count(); ++m) marks.id[m] = result.assigned[m];
  result.annotated = doc.mention_count() == 0
                         ? plain_text(doc)
                         : render_annotated(doc, marks, 0, doc.sentence_count() - 1);
  StripResult stripped = strip_annotations(result.annotated);
  result.report = align(plain_text(doc), stripped.plain, stripped.spans);
  return result;
}

}  // namespace coref
