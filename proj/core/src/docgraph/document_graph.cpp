// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/docgraph/document_graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <string_view>

#include "e2eqr/errors.hpp"

namespace e2eqr::docgraph {

namespace {

constexpr std::string_view kConnectors[] = {"of", "the", "de", "del", "da", "von", "van", "der", "la", "le"};

// Capitalized words that open sentences far more often than they name things.
constexpr std::string_view kStopwords[] = {
    "A",     "An",    "The",   "In",   "On",    "At",    "It",    "He",    "She",  "They",  "We",    "I",
    "This",  "That",  "These", "Those", "His",  "Her",   "Its",   "Their", "After", "Before", "During", "When",
    "While", "Who",   "What",  "Where", "Which", "How",  "Why",   "As",    "But",  "And",   "Or",    "For",
    "From",  "By",    "With",  "Many",  "Some",  "There", "If",   "Since", "Although", "Despite", "Following"};

bool contains(std::span<const std::string_view> set, std::string_view w) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '&'; }

struct Word {
  std::string core;
  bool leading_break = false;   // opening punctuation: cannot continue a run
  bool trailing_break = false;  // closing punctuation: run ends here
};

Word split_word(const std::string& token) {
  Word w;
  std::size_t b = 0, e = token.size();
  while (b < e && is_punct(token[b])) ++b;
  while (e > b && is_punct(token[e - 1])) --e;
  w.leading_break = b > 0;
  w.trailing_break = e < token.size();
  w.core = token.substr(b, e - b);
  if (w.core.size() > 2 && w.core.compare(w.core.size() - 2, 2, "'s") == 0) {
    w.core.resize(w.core.size() - 2);
    w.trailing_break = true;
  }
  return w;
}

bool capitalized(const std::string& s) { return !s.empty() && std::isupper(static_cast<unsigned char>(s[0])); }

void runs_in(const Tokens& tokens, EntitySet& out) {
  std::vector<Word> words;
  words.reserve(tokens.size());
  for (const auto& t : tokens) words.push_back(split_word(t));

  std::size_t i = 0;
  while (i < words.size()) {
    if (!capitalized(words[i].core)) {
      ++i;
      continue;
    }
    std::vector<std::string> run{words[i].core};
    std::size_t j = i + 1;
    bool ended = words[i].trailing_break;
    while (!ended && j < words.size()) {
      if (words[j].leading_break) break;
      if (capitalized(words[j].core)) {
        run.push_back(words[j].core);
        ended = words[j].trailing_break;
        ++j;
        continue;
      }
      // connectors are kept only when another capitalized word follows
      std::size_t k = j;
      while (k < words.size() && !words[k].leading_break && !words[k].trailing_break &&
             contains(kConnectors, words[k].core)) {
        ++k;
      }
      if (k == j || k >= words.size() || words[k].leading_break || !capitalized(words[k].core)) break;
      for (std::size_t c = j; c <= k; ++c) run.push_back(words[c].core);
      ended = words[k].trailing_break;
      j = k + 1;
    }
    while (!run.empty() && contains(kStopwords, run.front())) run.erase(run.begin());
    if (!run.empty()) out.insert(io::join_tokens(run));
    i = j;
  }
}

void check_unique_ids(std::span<const Document> docs) {
  std::set<std::size_t> seen;
  for (const auto& d : docs) {
    if (!seen.insert(d.id).second) throw ContractError("duplicate document id " + std::to_string(d.id));
  }
}

void check_content(const Tokens& tokens, const char* what) {
  for (const auto& t : tokens) {
    if (io::is_special_token(t)) throw ContractError(std::string(what) + " contains reserved token " + t);
  }
}

}  // namespace

EntitySet extract_entities(const Document& doc) {
  EntitySet out;
  runs_in(doc.title, out);
  runs_in(doc.text, out);
  for (const auto& a : doc.annotated_entities) {
    if (!a.empty()) out.insert(a);
  }
  return out;
}

std::map<DocPair, EntitySet> bridge_entities(std::span<const Document> docs) {
  check_unique_ids(docs);
  std::vector<EntitySet> entities;
  entities.reserve(docs.size());
  for (const auto& d : docs) entities.push_back(extract_entities(d));

  std::map<DocPair, EntitySet> out;
  for (std::size_t a = 0; a < docs.size(); ++a) {
    for (std::size_t b = a + 1; b < docs.size(); ++b) {
      EntitySet shared;
      std::set_intersection(entities[a].begin(), entities[a].end(), entities[b].begin(), entities[b].end(),
                            std::inserter(shared, shared.end()));
      if (shared.empty()) continue;
      out.emplace(DocPair{std::min(docs[a].id, docs[b].id), std::max(docs[a].id, docs[b].id)}, std::move(shared));
    }
  }
  return out;
}

std::vector<std::size_t> DocumentGraph::neighbors(std::size_t id) const {
  std::vector<std::size_t> out;
  for (const auto& [pair, _] : edges) {
    if (pair.first == id) out.push_back(pair.second);
    if (pair.second == id) out.push_back(pair.first);
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool DocumentGraph::has_edge(std::size_t a, std::size_t b) const {
  return edges.count(DocPair{std::min(a, b), std::max(a, b)}) != 0;
}

DocumentGraph build_graph(std::span<const Document> docs) {
  DocumentGraph g;
  g.edges = bridge_entities(docs);
  for (const auto& d : docs) g.nodes.push_back(d.id);
  std::sort(g.nodes.begin(), g.nodes.end());
  return g;
}

Arrangement arrange(std::span<const Document> docs) {
  std::size_t answers = 0;
  std::size_t root = 0;
  for (const auto& d : docs) {
    if (d.is_answer_doc) {
      ++answers;
      root = d.id;
    }
  }
  if (answers != 1) {
    throw ContractError("expected exactly one answer document, found " + std::to_string(answers));
  }
  const auto graph = build_graph(docs);

  Arrangement out;
  std::set<std::size_t> visited{root};
  std::deque<std::size_t> queue{root};
  while (!queue.empty()) {
    const auto cur = queue.front();
    queue.pop_front();
    out.order.push_back(cur);
    for (auto n : graph.neighbors(cur)) {
      if (visited.insert(n).second) queue.push_back(n);
    }
  }
  if (out.order.size() != docs.size()) {
    std::string missing;
    for (auto id : graph.nodes) {
      if (!visited.count(id)) missing += (missing.empty() ? "" : ", ") + std::to_string(id);
    }
    throw ArrangementError("document graph is disconnected; unreachable documents: " + missing);
  }

  for (std::size_t t = 0; t + 1 < out.order.size(); ++t) {
    EntitySet b;
    for (std::size_t s = t + 1; s < out.order.size(); ++s) {
      auto it = graph.edges.find(DocPair{std::min(out.order[t], out.order[s]), std::max(out.order[t], out.order[s])});
      if (it != graph.edges.end()) b.insert(it->second.begin(), it->second.end());
    }
    out.bridges.push_back(std::move(b));
  }
  return out;
}

ArrangedExample make_arranged(std::string id, Tokens answer, std::vector<Document> docs, Tokens gold_question) {
  const auto arrangement = arrange(docs);
  ArrangedExample ex;
  ex.id = std::move(id);
  ex.answer = std::move(answer);
  ex.gold_question = std::move(gold_question);
  ex.hops = docs.size();
  for (auto doc_id : arrangement.order) {
    auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.id == doc_id; });
    ex.documents.push_back(*it);
  }
  ex.bridges = arrangement.bridges;
  return ex;
}

Tokens assemble_step_tokens(const Document& doc, const EntitySet* bridges, const Tokens& answer) {
  check_content(answer, "answer");
  check_content(doc.title, "title");
  check_content(doc.text, "text");
  Tokens out{"<ans>"};
  out.insert(out.end(), answer.begin(), answer.end());
  if (bridges) {
    out.push_back("<bridge>");
    bool first = true;
    for (const auto& e : *bridges) {
      auto words = io::split_whitespace(e);
      if (words.empty()) continue;
      check_content(words, "bridge entity");
      if (!first) out.push_back("<sep>");
      first = false;
      out.insert(out.end(), words.begin(), words.end());
    }
  }
  out.push_back("<doc>");
  out.insert(out.end(), doc.title.begin(), doc.title.end());
  out.push_back("<sep>");
  out.insert(out.end(), doc.text.begin(), doc.text.end());
  return out;
}

ParsedStep parse_step_tokens(std::span<const std::string> tokens) {
  if (tokens.empty() || tokens[0] != "<ans>") throw DataError("step input must start with <ans>");
  ParsedStep p;
  std::size_t i = 1;
  while (i < tokens.size() && tokens[i] != "<bridge>" && tokens[i] != "<doc>") {
    if (io::is_special_token(tokens[i])) throw DataError("unexpected " + tokens[i] + " in answer section");
    p.answer.push_back(tokens[i++]);
  }
  if (i < tokens.size() && tokens[i] == "<bridge>") {
    ++i;
    std::vector<std::string> bridges;
    Tokens current;
    auto flush = [&] {
      if (current.empty()) throw DataError("empty bridge entity");
      bridges.push_back(io::join_tokens(current));
      current.clear();
    };
    while (i < tokens.size() && tokens[i] != "<doc>") {
      if (tokens[i] == "<sep>") {
        flush();
      } else if (io::is_special_token(tokens[i])) {
        throw DataError("unexpected " + tokens[i] + " in bridge section");
      } else {
        current.push_back(tokens[i]);
      }
      ++i;
    }
    if (!current.empty() || !bridges.empty()) flush();
    p.bridges = std::move(bridges);
  }
  if (i >= tokens.size()) throw DataError("step input lacks <doc>");
  ++i;
  while (i < tokens.size() && tokens[i] != "<sep>") {
    if (io::is_special_token(tokens[i])) throw DataError("unexpected " + tokens[i] + " in title");
    p.title.push_back(tokens[i++]);
  }
  if (i >= tokens.size()) throw DataError("step input lacks <sep> after the title");
  ++i;
  for (; i < tokens.size(); ++i) {
    if (io::is_special_token(tokens[i])) throw DataError("unexpected " + tokens[i] + " in text");
    p.text.push_back(tokens[i]);
  }
  return p;
}

model::StepInput assemble_step_input(const ArrangedExample& ex, std::size_t t, const io::Vocabulary& vocab,
                                     std::size_t max_len) {
  const auto n = ex.documents.size();
  if (t < 1 || t > n) throw IndexError("step " + std::to_string(t) + " outside 1.." + std::to_string(n));
  const EntitySet* bridges = t < n ? &ex.bridges.at(t - 1) : nullptr;
  const auto tokens = assemble_step_tokens(ex.documents[t - 1], bridges, ex.answer);
  if (tokens.size() > max_len) {
    throw LengthError("step " + std::to_string(t) + " of example " + ex.id + " has " +
                      std::to_string(tokens.size()) + " tokens, limit " + std::to_string(max_len));
  }
  return model::StepInput{vocab.encode(tokens), t};
}

std::vector<model::StepInput> assemble_all_steps(const ArrangedExample& ex, const io::Vocabulary& vocab,
                                                 std::size_t max_len) {
  std::vector<model::StepInput> steps;
  for (std::size_t t = 1; t <= ex.documents.size(); ++t) steps.push_back(assemble_step_input(ex, t, vocab, max_len));
  return steps;
}

}  // namespace e2eqr::docgraph
