// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "e2eqr/io/dataset.hpp"
#include "e2eqr/io/vocabulary.hpp"

namespace e2eqr::synth {

enum class EntityType : std::size_t { kPerson = 0, kFilm = 1, kCity = 2, kCountry = 3 };
inline constexpr std::size_t kEntityTypes = 4;
inline constexpr std::size_t kMaxHops = 4;

std::string_view type_prefix(EntityType t);

/// A functional link y -> x with its sentence templates. Templates are
/// space-separated tokens with "{x}" and "{y}" slots.
struct Relation {
  std::string name;
  EntityType domain;  // type of y
  EntityType range;   // type of x
  std::string fact;
  std::string question;    // asks for x given y
  std::string descriptor;  // noun phrase denoting x given y
};

const std::vector<Relation>& template_table();

struct WorldSizes {
  std::size_t persons = 0;
  std::size_t films = 0;
  std::size_t cities = 0;
  std::size_t countries = 0;
  std::size_t relations = 7;  // leading entries of the template table
};

struct EntityRef {
  EntityType type = EntityType::kPerson;
  std::size_t index = 0;
  bool operator==(const EntityRef&) const = default;
  auto operator<=>(const EntityRef&) const = default;
};

struct World {
  std::array<std::size_t, kEntityTypes> counts{};
  std::vector<std::size_t> relations;  // active template-table indices
  /// links[r][y] = x for relation table index r (empty when inactive)
  std::vector<std::vector<std::size_t>> links;

  std::string name(EntityRef e) const;
  std::optional<EntityRef> parse(std::string_view token) const;
  bool active(std::size_t relation) const;
  EntityRef apply(std::size_t relation, EntityRef y) const;
  std::size_t entity_count() const;
};

/// Deterministic per seed. Zero sizes give an empty world.
World generate_world(std::uint64_t seed, const WorldSizes& sizes);

/// e_0 <- e_1 <- ... <- e_N with e_{k-1} = relations[k-1](e_k); e_0 is the answer.
struct Chain {
  std::vector<EntityRef> entities;
  std::vector<std::size_t> relations;  // L_1..L_N
  std::size_t hops() const { return relations.size(); }
  std::string signature(const World& w) const;
};

/// All chains of the given length without repeated entities, in a fixed order.
std::vector<Chain> enumerate_chains(const World& w, std::size_t hops);

std::vector<std::string> render(std::string_view tmpl, const std::string& x, const std::string& y);

/// Q^k for 1 <= k <= N.
std::vector<std::string> chain_question(const World& w, const Chain& c, std::size_t k);

/// One document per chain fact plus one or two distractor facts over
/// entities unused elsewhere in the record; documents are shuffled.
io::DatasetRecord make_record(const World& w, const Chain& c, std::string id, std::mt19937_64& rng);

/// ContractError for hops outside 1..4; DataError when the world holds no
/// chain of that length.
io::DatasetRecord generate_example(const World& w, std::size_t hops, std::uint64_t seed);

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

struct Splits {
  std::vector<io::DatasetRecord> train;
  std::vector<io::DatasetRecord> val;
  std::vector<io::DatasetRecord> test;
};

/// Validation and test chains are distinct and never used for training;
/// training cycles through the remaining chains. DataError stating the
/// required minimum when the world is too small.
Splits make_splits(const World& w, const std::map<std::size_t, SplitCounts>& counts, std::uint64_t seed);

io::Vocabulary world_vocabulary(const World& w);

/// Successive simplifications of a question: each step replaces the single
/// innermost descriptor by the entity it denotes; the last element is the
/// answer. Empty when the question does not parse.
std::vector<std::vector<std::string>> reduce_question(const World& w, const std::vector<std::string>& question);

}  // namespace e2eqr::synth
