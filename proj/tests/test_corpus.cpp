#include <catch2/catch_amalgamated.hpp>

#include <fstream>

#include "coref/corpus.hpp"
#include "coref/synth.hpp"
#include "support/fixtures.hpp"

using namespace coref;

static std::string fixture_path(const char* name) {
  return std::string(COREFKIT_FIXTURE_DIR) + "/" + name;
}

static std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

TEST_CASE("parse_conll reads spans, singletons, and clusters") {
  const std::string text =
      "#begin document toy\n"
      "toy 0 0 Alice (1\n"
      "toy 0 1 met -\n"
      "toy 0 2 Bob 1)\n"
      "#end document\n";
  auto docs = parse_conll(text);
  REQUIRE(docs.size() == 1);
  const Document& d = docs[0];
  CHECK(d.doc_key == "toy");
  REQUIRE(d.mentions.size() == 1);
  CHECK(d.mentions[0].start == 0);
  CHECK(d.mentions[0].end == 2);
  CHECK(d.mentions[0].surface == "Alice met Bob");
  REQUIRE(d.gold);
  CHECK(d.gold->clusters.at(1) == std::vector<int>{0});
}

TEST_CASE("parse_conll single-token span notation") {
  auto docs = parse_conll(
      "#begin document t\n"
      "t 0 0 Alice (1)\n"
      "t 0 1 . -\n"
      "#end document\n");
  REQUIRE(docs[0].mentions.size() == 1);
  CHECK(docs[0].mentions[0].start == 0);
  CHECK(docs[0].mentions[0].end == 0);
  CHECK(docs[0].gold->clusters.at(1).size() == 1);
}

TEST_CASE("parse_conll reports unclosed spans with the line number") {
  const std::string text =
      "#begin document t\n"
      "t 0 0 a (2\n"
      "t 0 1 b -\n"
      "#end document\n";
  try {
    parse_conll(text);
    FAIL("expected UnbalancedSpan");
  } catch (const Error& e) {
    CHECK(e.kind() == "UnbalancedSpan");
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("parse_conll rejects cross-sentence spans") {
  const std::string text =
      "#begin document t\n"
      "t 0 0 a (1\n"
      "t 1 0 b 1)\n"
      "#end document\n";
  CHECK_THROWS_AS(parse_conll(text), Error);
}

TEST_CASE("parse_conll error kinds") {
  CHECK_THROWS_WITH(parse_conll("#begin document t\n#end document\n"),
                    Catch::Matchers::ContainsSubstring("EmptyDocument"));
  CHECK_THROWS_WITH(parse_conll("#begin document t\nt 0 0\n#end document\n"),
                    Catch::Matchers::ContainsSubstring("MalformedLine"));
  CHECK_THROWS_WITH(parse_conll("#begin document t\nt 0 0 a -\n"),
                    Catch::Matchers::ContainsSubstring("MalformedLine"));
}

TEST_CASE("conll fixture file parses") {
  auto docs = parse_conll(slurp(fixture_path("alice.conll")));
  REQUIRE(docs.size() == 2);
  CHECK(structurally_equal(docs[0], fixtures::alice()));
  CHECK(structurally_equal(docs[1], fixtures::nested()));
}

TEST_CASE("emit_conll round-trips every fixture") {
  for (const Document& d : fixtures::small_corpus()) {
    auto back = parse_conll(emit_conll(d, Which::gold));
    REQUIRE(back.size() == 1);
    CHECK(structurally_equal(back[0], d));
  }
}

TEST_CASE("emit_conll orders nested opens outer-first") {
  const std::string out = emit_conll(fixtures::nested(), Which::gold);
  CHECK(out.find("the (1|(2") != std::string::npos);
  auto back = parse_conll(out);
  CHECK(structurally_equal(back[0], fixtures::nested()));
}

TEST_CASE("emit_conll without mentions writes dashes only") {
  Document d;
  d.doc_key = "empty";
  d.sentences = {{"just", "words", "."}};
  d.gold = Clustering{};
  const std::string out = emit_conll(d, Which::gold);
  for (const auto& line : detail::split_lines(out)) {
    if (line.rfind("#", 0) == 0) continue;
    CHECK(line.substr(line.size() - 2) == " -");
  }
}

TEST_CASE("emit_conll requires the requested clustering") {
  Document d = fixtures::alice();
  CHECK_THROWS_WITH(emit_conll(d, Which::predicted),
                    Catch::Matchers::ContainsSubstring("MissingClustering"));
}

TEST_CASE("canonical JSON round-trips") {
  Document minimal;
  minimal.doc_key = "m";
  minimal.sentences = {{"hello"}};
  CHECK(structurally_equal(parse_canonical(emit_canonical(minimal)), minimal));

  for (const Document& d : fixtures::small_corpus())
    CHECK(structurally_equal(parse_canonical(emit_canonical(d)), d));
}

TEST_CASE("canonical JSON validates surfaces") {
  const char* text = R"({"doc_key":"x","sentences":[["a","b"]],
    "mentions":[{"id":0,"sent":0,"start":0,"end":1,"surface":"a c"}],
    "gold":{"1":[0]}})";
  try {
    parse_canonical(text);
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == "SchemaViolation");
    CHECK(std::string(e.what()).find("surface") != std::string::npos);
  }
}

TEST_CASE("canonical JSON requires gold to cover all mentions") {
  const char* text = R"({"doc_key":"x","sentences":[["a","b"]],
    "mentions":[{"id":0,"sent":0,"start":0,"end":0,"surface":"a"},
                {"id":1,"sent":0,"start":1,"end":1,"surface":"b"}],
    "gold":{"1":[0]}})";
  try {
    parse_canonical(text);
    FAIL("expected SchemaViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == "SchemaViolation");
    CHECK(std::string(e.what()).find("1") != std::string::npos);
  }
}

TEST_CASE("canonical JSON rejects unknown keys") {
  CHECK_THROWS_AS(parse_canonical(R"({"doc_key":"x","sentences":[],"mentions":[],"bogus":1})"),
                  Error);
}

TEST_CASE("plain_text joins tokens and sentences") {
  CHECK(plain_text(fixtures::alice()) == "Alice met Bob .\nShe smiled .");
  Document empty;
  CHECK(plain_text(empty) == "");
  Document one;
  one.sentences = {{"word"}};
  CHECK(plain_text(one) == "word");
}

TEST_CASE("drop_non_referring removes mentions and renumbers") {
  Document d = fixtures::alice();
  d.mentions[1].non_referring = true;  // Bob
  Document out = drop_non_referring(d);
  REQUIRE(out.mentions.size() == 2);
  CHECK(out.mentions[0].surface == "Alice");
  CHECK(out.mentions[1].surface == "She");
  CHECK(out.mentions[1].id == 1);
  CHECK(out.gold->clusters.size() == 1);
  CHECK(out.gold->clusters.at(1) == std::vector<int>{0, 1});
}

TEST_CASE("round trips hold over random documents") {
  for (const Document& d : make_synthetic_corpus(501, 60)) {
    auto back = parse_conll(emit_conll(d, Which::gold));
    REQUIRE(back.size() == 1);
    CHECK(structurally_equal(back[0], d));
    CHECK(structurally_equal(parse_canonical(emit_canonical(d)), d));
    CHECK(d.surface_of(d.mentions[0].sent, d.mentions[0].start, d.mentions[0].end) ==
          d.mentions[0].surface);
  }
}

TEST_CASE("flat tokens carry consistent indices") {
  Document d = fixtures::alice();
  auto tokens = d.flat_tokens();
  REQUIRE(tokens.size() == 7);
  for (size_t i = 0; i < tokens.size(); ++i) {
    CHECK(tokens[i].doc_index == static_cast<int>(i));
    CHECK(tokens[i].text == d.sentences[tokens[i].sent_index][tokens[i].word_index]);
    if (i > 0) {
      bool ordered = tokens[i - 1].sent_index < tokens[i].sent_index ||
                     (tokens[i - 1].sent_index == tokens[i].sent_index &&
                      tokens[i - 1].word_index < tokens[i].word_index);
      CHECK(ordered);
    }
  }
}

TEST_CASE("cluster ids are normalized to first appearance") {
  auto docs = parse_conll(
      "#begin document t\n"
      "t 0 0 a (9)\n"
      "t 0 1 b (4)\n"
      "t 0 2 c (9)\n"
      "#end document\n");
  const Clustering& g = *docs[0].gold;
  CHECK(g.clusters.at(1) == std::vector<int>{0, 2});
  CHECK(g.clusters.at(2) == std::vector<int>{1});
}
