// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/docgraph/document_graph.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <deque>
#include <random>

#include "e2eqr/errors.hpp"

namespace e2eqr::docgraph {
namespace {

Document doc(std::size_t id, std::string title, std::string text, bool answer = false,
             std::vector<std::string> annotations = {}) {
  return Document{id, io::split_whitespace(title), io::split_whitespace(text), answer, std::move(annotations)};
}

Document annotated(std::size_t id, std::vector<std::string> entities, bool answer = false) {
  return Document{id, {"d" + std::to_string(id)}, {"some", "lowercase", "text"}, answer, std::move(entities)};
}

TEST(ExtractEntities, CapitalizedRunWithConnector) {
  auto e = extract_entities(doc(0, "", "the Battle of Atlanta happened"));
  EXPECT_EQ(e, (EntitySet{"Battle of Atlanta"}));
}

TEST(ExtractEntities, LowercaseDocumentHasNone) {
  EXPECT_TRUE(extract_entities(doc(0, "untitled", "nothing capitalized in here at all")).empty());
  EXPECT_EQ(extract_entities(doc(0, "untitled", "nothing here", false, {"x y"})), (EntitySet{"x y"}));
}

TEST(ExtractEntities, AnnotationsPassThroughOnLowercaseText) {
  auto d = doc(0, "film_3", "film_3 was directed by person_7 .", false, {"film_3", "person_7"});
  EXPECT_EQ(extract_entities(d), (EntitySet{"film_3", "person_7"}));
}

TEST(ExtractEntities, PunctuationAndSentenceOpeners) {
  auto e = extract_entities(doc(0, "Atlanta", "It lies in Fulton County, Georgia. The city grew after the war."));
  EXPECT_EQ(e, (EntitySet{"Atlanta", "Fulton County", "Georgia"}));
  // trailing connector without a capitalized continuation is not absorbed
  EXPECT_EQ(extract_entities(doc(0, "", "visited Paris of old")), (EntitySet{"Paris"}));
  EXPECT_EQ(extract_entities(doc(0, "", "Nolan's film")), (EntitySet{"Nolan"}));
  EXPECT_EQ(extract_entities(doc(0, "", "The Dark Knight")), (EntitySet{"Dark Knight"}));
}

TEST(BridgeEntities, NolanLinksFilmAndDirectorPages) {
  std::vector<Document> docs{
      doc(0, "Interstellar", "Interstellar is a 2014 science fiction film directed by Christopher Nolan .", true),
      doc(1, "Christopher Nolan", "Christopher Nolan is a British film director born in London ."),
  };
  auto b = bridge_entities(docs);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_TRUE(b.at({0, 1}).count("Christopher Nolan"));
}

TEST(BridgeEntities, DisjointDocumentsGiveEmptyMap) {
  std::vector<Document> docs{annotated(0, {"a"}), annotated(1, {"b"}), annotated(2, {"c"})};
  EXPECT_TRUE(bridge_entities(docs).empty());
}

TEST(BridgeEntities, ThreeDocumentChain) {
  std::vector<Document> docs{annotated(1, {"x", "e1"}), annotated(2, {"e1", "e2"}), annotated(3, {"e2", "y"})};
  auto b = bridge_entities(docs);
  ASSERT_EQ(b.size(), 2u);
  EXPECT_EQ(b.at({1, 2}), (EntitySet{"e1"}));
  EXPECT_EQ(b.at({2, 3}), (EntitySet{"e2"}));
}

TEST(Arrange, SingleDocument) {
  std::vector<Document> docs{annotated(4, {"a"}, true)};
  auto a = arrange(docs);
  EXPECT_EQ(a.order, (std::vector<std::size_t>{4}));
  EXPECT_TRUE(a.bridges.empty());
}

TEST(Arrange, ChainFromAnswer) {
  // ans(0) - X(5) - Y(2); ans also shares "z" with Y
  std::vector<Document> docs{annotated(2, {"b", "z", "y"}), annotated(0, {"a", "z0", "z"}, true),
                             annotated(5, {"a", "b"})};
  // ans-Y share z, so ans has neighbors 2 and 5; ascending id puts Y first
  auto a = arrange(docs);
  EXPECT_EQ(a.order, (std::vector<std::size_t>{0, 2, 5}));
  EXPECT_EQ(a.bridges[0], (EntitySet{"a", "z"}));
  EXPECT_EQ(a.bridges[1], (EntitySet{"b"}));

  std::vector<Document> chain{annotated(9, {"p", "q"}), annotated(4, {"q", "r"}), annotated(1, {"p", "ans"}, true)};
  auto c = arrange(chain);
  EXPECT_EQ(c.order, (std::vector<std::size_t>{1, 9, 4}));
  EXPECT_EQ(c.bridges[0], (EntitySet{"p"}));
  EXPECT_EQ(c.bridges[1], (EntitySet{"q"}));
}

TEST(Arrange, StarTieBreakIsAscendingId) {
  std::vector<Document> docs{annotated(0, {"h", "s"}, true), annotated(7, {"h"}), annotated(3, {"s"})};
  auto a = arrange(docs);
  ASSERT_EQ(a.order.size(), 3u);
  EXPECT_EQ(a.order[1], 3u);
  EXPECT_EQ(a.order[2], 7u);
}

TEST(Arrange, Errors) {
  std::vector<Document> none{annotated(0, {"a"}), annotated(1, {"a"})};
  EXPECT_THROW(arrange(none), ContractError);
  std::vector<Document> two{annotated(0, {"a"}, true), annotated(1, {"a"}, true)};
  EXPECT_THROW(arrange(two), ContractError);
  std::vector<Document> split{annotated(0, {"a"}, true), annotated(1, {"a"}), annotated(6, {"q"}),
                              annotated(8, {"r"})};
  try {
    arrange(split);
    FAIL() << "expected ArrangementError";
  } catch (const ArrangementError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("6"), std::string::npos);
    EXPECT_NE(msg.find("8"), std::string::npos);
  }
}

// Random connected graphs: build entity sets from a random spanning tree
// plus extra edges, then check the arrangement against a BFS reconstruction.
std::vector<Document> random_connected(std::mt19937_64& rng, std::size_t n) {
  std::vector<std::size_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = i * 3 + (rng() % 3);
  std::shuffle(ids.begin(), ids.end(), rng);
  std::vector<std::vector<std::string>> ents(n);
  std::size_t next = 0;
  for (std::size_t i = 1; i < n; ++i) {
    const auto j = rng() % i;
    const auto name = "e" + std::to_string(next++);
    ents[i].push_back(name);
    ents[j].push_back(name);
  }
  for (std::size_t extra = rng() % 3; extra > 0; --extra) {
    const auto name = "e" + std::to_string(next++);
    ents[rng() % n].push_back(name);
    ents[rng() % n].push_back(name);
  }
  for (std::size_t i = 0; i < n; ++i) ents[i].push_back("own" + std::to_string(i));
  std::vector<Document> docs;
  const auto answer = rng() % n;
  for (std::size_t i = 0; i < n; ++i) docs.push_back(annotated(ids[i], ents[i], i == answer));
  return docs;
}

TEST(ArrangeProperty, ValidBfsOrderAndConnectivity) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    auto docs = random_connected(rng, 1 + rng() % 7);
    auto a = arrange(docs);
    auto edges = bridge_entities(docs);
    auto adjacent = [&](std::size_t x, std::size_t y) { return edges.count({std::min(x, y), std::max(x, y)}) > 0; };

    // reconstruction: plain BFS with sorted neighbor lists over brute-force adjacency
    std::vector<std::size_t> ids;
    std::size_t root = 0;
    for (const auto& d : docs) {
      ids.push_back(d.id);
      if (d.is_answer_doc) root = d.id;
    }
    std::sort(ids.begin(), ids.end());
    std::vector<std::size_t> expected{root};
    for (std::size_t head = 0; head < expected.size(); ++head) {
      for (auto id : ids) {
        if (adjacent(expected[head], id) &&
            std::find(expected.begin(), expected.end(), id) == expected.end()) {
          expected.push_back(id);
        }
      }
    }
    ASSERT_EQ(a.order, expected);
    ASSERT_EQ(a.bridges.size(), docs.size() - 1);

    for (std::size_t k = 1; k < a.order.size(); ++k) {
      bool linked = false;
      for (std::size_t j = 0; j < k; ++j) linked |= adjacent(a.order[j], a.order[k]);
      EXPECT_TRUE(linked);
    }
    // bridges are drawn from C_t's own entities and reach a later document
    for (std::size_t t = 0; t < a.bridges.size(); ++t) {
      const auto& d = *std::find_if(docs.begin(), docs.end(), [&](auto& x) { return x.id == a.order[t]; });
      const auto own = extract_entities(d);
      for (const auto& e : a.bridges[t]) {
        EXPECT_TRUE(own.count(e));
        bool later = false;
        for (std::size_t s = t + 1; s < a.order.size(); ++s) {
          const auto& ds = *std::find_if(docs.begin(), docs.end(), [&](auto& x) { return x.id == a.order[s]; });
          later |= extract_entities(ds).count(e) > 0;
        }
        EXPECT_TRUE(later) << e;
      }
    }
  }
}

TEST(ArrangeProperty, InvariantUnderInputPermutation) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    auto docs = random_connected(rng, 2 + rng() % 6);
    const auto edges = bridge_entities(docs);
    const auto a = arrange(docs);
    std::shuffle(docs.begin(), docs.end(), rng);
    EXPECT_EQ(bridge_entities(docs), edges);
    const auto b = arrange(docs);
    EXPECT_EQ(a.order, b.order);
    EXPECT_EQ(a.bridges, b.bridges);
    // symmetric and idempotent: computing twice or from reversed order agrees
    std::reverse(docs.begin(), docs.end());
    EXPECT_EQ(bridge_entities(docs), edges);
  }
}

TEST(AssembleStep, Layout) {
  auto d = doc(0, "film_1", "film_1 was directed by person_2 .");
  EntitySet b{"person_2"};
  auto with = assemble_step_tokens(d, &b, {"person_2"});
  EXPECT_EQ(io::join_tokens(with), "<ans> person_2 <bridge> person_2 <doc> film_1 <sep> film_1 was directed by person_2 .");
  auto last = assemble_step_tokens(d, nullptr, {"person_2"});
  EXPECT_EQ(std::count(last.begin(), last.end(), "<bridge>"), 0);
  EntitySet empty;
  auto e = assemble_step_tokens(d, &empty, {"a"});
  auto it = std::find(e.begin(), e.end(), "<bridge>");
  ASSERT_NE(it, e.end());
  EXPECT_EQ(*(it + 1), "<doc>");
  EXPECT_THROW(assemble_step_tokens(doc(0, "x", "has <sep> inside"), nullptr, {"a"}), ContractError);
}

TEST(AssembleStep, RoundTrip) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> words{"alpha", "Beta", "of", "gamma", ".", "Delta", "x_1"};
  auto pick = [&](std::size_t lo, std::size_t hi) {
    Tokens t(lo + rng() % (hi - lo + 1));
    for (auto& w : t) w = words[rng() % words.size()];
    return t;
  };
  for (int trial = 0; trial < 200; ++trial) {
    Document d{0, pick(0, 3), pick(0, 8), false, {}};
    Tokens answer = pick(1, 3);
    EntitySet b;
    for (std::size_t k = rng() % 4; k > 0; --k) b.insert(io::join_tokens(pick(1, 3)));
    const bool final_step = rng() % 2;
    auto tokens = assemble_step_tokens(d, final_step ? nullptr : &b, answer);
    auto p = parse_step_tokens(tokens);
    EXPECT_EQ(p.answer, answer);
    EXPECT_EQ(p.title, d.title);
    EXPECT_EQ(p.text, d.text);
    ASSERT_EQ(p.bridges.has_value(), !final_step);
    if (!final_step) EXPECT_EQ(EntitySet(p.bridges->begin(), p.bridges->end()), b);
  }
}

TEST(AssembleStep, ParseRejectsMalformed) {
  EXPECT_THROW(parse_step_tokens(Tokens{"a"}), DataError);
  EXPECT_THROW(parse_step_tokens(Tokens{"<ans>", "a"}), DataError);
  EXPECT_THROW(parse_step_tokens(Tokens{"<ans>", "a", "<doc>", "t"}), DataError);
  EXPECT_THROW(parse_step_tokens(Tokens{"<ans>", "a", "<bridge>", "<sep>", "<doc>", "t", "<sep>"}), DataError);
}

TEST(AssembleStepInput, EncodesAndEnforcesLength) {
  std::vector<Document> docs{annotated(0, {"b"}, true), annotated(1, {"b"})};
  docs[0].text = {"a", "b"};
  docs[1].text = {"b", "c"};
  auto ex = make_arranged("ex", {"a"}, docs, {"q"});
  io::Vocabulary vocab({"a", "b", "c", "d0", "d1", "q"});
  auto steps = assemble_all_steps(ex, vocab, 64);
  ASSERT_EQ(steps.size(), 2u);
  EXPECT_EQ(steps[0].step_index, 1u);
  EXPECT_EQ(vocab.decode(steps[0].tokens),
            (Tokens{"<ans>", "a", "<bridge>", "b", "<doc>", "d0", "<sep>", "a", "b"}));
  EXPECT_EQ(vocab.decode(steps[1].tokens), (Tokens{"<ans>", "a", "<doc>", "d1", "<sep>", "b", "c"}));
  EXPECT_THROW(assemble_step_input(ex, 1, vocab, 8), LengthError);
  EXPECT_NO_THROW(assemble_step_input(ex, 1, vocab, 9));
}

TEST(Vocabulary, SpecialsFirstAndHashStable) {
  io::Vocabulary v({"x", "y"});
  EXPECT_EQ(v.size(), 10u);
  EXPECT_EQ(v.id("<bos>"), 1);
  EXPECT_EQ(v.id("<unk>"), 7);
  EXPECT_EQ(v.id("never"), 7);
  EXPECT_EQ(v.id("x"), 8);
  // FNV-1a oracle over the serialized file contents
  std::string file;
  for (const auto& t : v.tokens()) file += t + "\n";
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : file) h = (h ^ c) * 0x100000001b3ULL;
  EXPECT_EQ(v.hash(), h);
  EXPECT_THROW(io::Vocabulary({"<pad>", "<eos>"}), DataError);
  EXPECT_THROW(io::Vocabulary({"x", "x"}), DataError);
}

}  // namespace
}  // namespace e2eqr::docgraph
