// Hand-built fixture documents shared across test files.
#pragma once

#include <map>
#include <vector>

#include "coref/corpus.hpp"

namespace fixtures {

// "Alice met Bob . / She smiled ." with clusters {Alice,She} and {Bob}.
inline coref::Document alice() {
  coref::Document d;
  d.doc_key = "alice";
  d.sentences = {{"Alice", "met", "Bob", "."}, {"She", "smiled", "."}};
  d.mentions = {{0, 0, 0, 0, "Alice", false},
                {1, 0, 2, 2, "Bob", false},
                {2, 1, 0, 0, "She", false}};
  std::map<int, std::vector<int>> raw{{1, {0, 2}}, {2, {1}}};
  d.gold = coref::Clustering::normalized(raw);
  return d;
}

// Single sentence of indefinite singleton mentions.
inline coref::Document candle() {
  coref::Document d;
  d.doc_key = "candle";
  d.sentences = {{"There", "are", "a", "candle", "a", "wall", "and", "a", "sofa", "."}};
  d.mentions = {{0, 0, 2, 3, "a candle", false},
                {1, 0, 4, 5, "a wall", false},
                {2, 0, 7, 8, "a sofa", false}};
  std::map<int, std::vector<int>> raw{{1, {0}}, {2, {1}}, {3, {2}}};
  d.gold = coref::Clustering::normalized(raw);
  return d;
}

// Nested mentions: outer "the city council" and inner "the city".
inline coref::Document nested() {
  coref::Document d;
  d.doc_key = "nested";
  d.sentences = {{"the", "city", "council", "met", "."},
                 {"it", "adjourned", "."}};
  d.mentions = {{0, 0, 0, 2, "the city council", false},
                {1, 0, 0, 1, "the city", false},
                {2, 1, 0, 0, "it", false}};
  std::map<int, std::vector<int>> raw{{1, {0, 2}}, {2, {1}}};
  d.gold = coref::Clustering::normalized(raw);
  return d;
}

// One entity mentioned in S0, S2, and S5 plus fillers; exercises chain
// answers across distant sentences.
inline coref::Document chain3() {
  coref::Document d;
  d.doc_key = "chain3";
  d.sentences = {{"Carol", "arrived", "."},          {"Nothing", "happened", "."},
                 {"she", "waited", "."},             {"Time", "passed", "."},
                 {"Rain", "fell", "."},              {"Carol", "left", "."}};
  d.mentions = {{0, 0, 0, 0, "Carol", false},
                {1, 2, 0, 0, "she", false},
                {2, 5, 0, 0, "Carol", false}};
  std::map<int, std::vector<int>> raw{{1, {0, 1, 2}}};
  d.gold = coref::Clustering::normalized(raw);
  return d;
}

// "Alice walked . / She liked the park ." — She anaphoric, the park new.
inline coref::Document park() {
  coref::Document d;
  d.doc_key = "park";
  d.sentences = {{"Alice", "walked", "."}, {"She", "liked", "the", "park", "."}};
  d.mentions = {{0, 0, 0, 0, "Alice", false},
                {1, 1, 0, 0, "She", false},
                {2, 1, 2, 3, "the park", false}};
  std::map<int, std::vector<int>> raw{{1, {0, 1}}, {2, {2}}};
  d.gold = coref::Clustering::normalized(raw);
  return d;
}

inline std::vector<coref::Document> small_corpus() {
  return {alice(), candle(), nested(), chain3(), park()};
}

}  // namespace fixtures
