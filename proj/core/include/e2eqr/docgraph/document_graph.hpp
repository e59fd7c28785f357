// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "e2eqr/io/vocabulary.hpp"
#include "e2eqr/model/config.hpp"

namespace e2eqr::docgraph {

using Tokens = std::vector<std::string>;
using EntitySet = std::set<std::string>;
using DocPair = std::pair<std::size_t, std::size_t>;  // (smaller id, larger id)

struct Document {
  std::size_t id = 0;
  Tokens title;
  Tokens text;
  bool is_answer_doc = false;
  /// Entity spans supplied by the dataset record, space-joined.
  std::vector<std::string> annotated_entities;
};

/// Capitalized maximal runs over title and text (connectors such as "of"
/// may join two capitalized tokens) plus the annotated spans.
EntitySet extract_entities(const Document& doc);

/// Shared entities for every document pair with a nonempty intersection.
std::map<DocPair, EntitySet> bridge_entities(std::span<const Document> docs);

struct DocumentGraph {
  std::vector<std::size_t> nodes;  // ascending
  std::map<DocPair, EntitySet> edges;

  std::vector<std::size_t> neighbors(std::size_t id) const;  // ascending
  bool has_edge(std::size_t a, std::size_t b) const;
};

DocumentGraph build_graph(std::span<const Document> docs);

struct Arrangement {
  std::vector<std::size_t> order;  // document ids, answer document first
  std::vector<EntitySet> bridges;  // one per position except the last
};

/// BFS from the answer document, neighbors in ascending id order.
/// ContractError unless exactly one answer document; ArrangementError when
/// some document is unreachable.
Arrangement arrange(std::span<const Document> docs);

struct ArrangedExample {
  std::string id;
  Tokens answer;
  std::vector<Document> documents;  // C_1..C_N
  std::vector<EntitySet> bridges;   // B_1..B_{N-1}
  Tokens gold_question;
  std::size_t hops = 0;
};

ArrangedExample make_arranged(std::string id, Tokens answer, std::vector<Document> docs, Tokens gold_question);

/// Token layout: <ans> answer [<bridge> e1 <sep> e2 ...] <doc> title <sep> text.
/// The bridge section is present iff `bridges` is given.
Tokens assemble_step_tokens(const Document& doc, const EntitySet* bridges, const Tokens& answer);

struct ParsedStep {
  Tokens answer;
  std::optional<std::vector<std::string>> bridges;
  Tokens title;
  Tokens text;
};

/// Inverse of assemble_step_tokens. DataError on malformed input.
ParsedStep parse_step_tokens(std::span<const std::string> tokens);

/// Assembled and encoded input for step t (1-based). LengthError if the
/// sequence exceeds max_len.
model::StepInput assemble_step_input(const ArrangedExample& ex, std::size_t t, const io::Vocabulary& vocab,
                                     std::size_t max_len);

std::vector<model::StepInput> assemble_all_steps(const ArrangedExample& ex, const io::Vocabulary& vocab,
                                                 std::size_t max_len);

}  // namespace e2eqr::docgraph
