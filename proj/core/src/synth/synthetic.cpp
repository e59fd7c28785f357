// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/synth/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include "e2eqr/errors.hpp"

namespace e2eqr::synth {

namespace {

constexpr std::string_view kPrefixes[kEntityTypes] = {"person", "film", "city", "country"};

std::size_t idx(EntityType t) { return static_cast<std::size_t>(t); }

std::size_t uniform(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::vector<std::string> fact_tokens(const World& w, std::size_t r, EntityRef y) {
  return render(template_table()[r].fact, w.name(w.apply(r, y)), w.name(y));
}

// Matches a template against tokens[pos..] with an entity of the slot type.
std::optional<EntityRef> match_at(const World& w, const std::vector<std::string>& tmpl,
                                  const std::vector<std::string>& tokens, std::size_t pos, EntityType slot_type) {
  if (pos + tmpl.size() > tokens.size()) return std::nullopt;
  std::optional<EntityRef> slot;
  for (std::size_t i = 0; i < tmpl.size(); ++i) {
    if (tmpl[i] == "{y}") {
      auto e = w.parse(tokens[pos + i]);
      if (!e || e->type != slot_type) return std::nullopt;
      slot = e;
    } else if (tmpl[i] != tokens[pos + i]) {
      return std::nullopt;
    }
  }
  return slot;
}

}  // namespace

std::string_view type_prefix(EntityType t) { return kPrefixes[idx(t)]; }

const std::vector<Relation>& template_table() {
  using T = EntityType;
  static const std::vector<Relation> table{
      {"director", T::kFilm, T::kPerson, "{y} was directed by {x} .", "who directed {y} ?", "the director of {y}"},
      {"star", T::kPerson, T::kFilm, "{y} starred in {x} .", "which film starred {y} ?", "the film starring {y}"},
      {"birthplace", T::kPerson, T::kCity, "{y} was born in {x} .", "where was {y} born ?", "the birthplace of {y}"},
      {"located", T::kCity, T::kCountry, "{y} is located in {x} .", "which country contains {y} ?",
       "the country containing {y}"},
      {"filmed", T::kFilm, T::kCity, "{y} was filmed in {x} .", "where was {y} filmed ?",
       "the city where {y} was filmed"},
      {"capital", T::kCountry, T::kCity, "{x} is the capital of {y} .", "what is the capital of {y} ?",
       "the capital of {y}"},
      {"mayor", T::kCity, T::kPerson, "{x} is the mayor of {y} .", "who is the mayor of {y} ?", "the mayor of {y}"},
  };
  return table;
}

std::string World::name(EntityRef e) const {
  return std::string(type_prefix(e.type)) + "_" + std::to_string(e.index);
}

std::optional<EntityRef> World::parse(std::string_view token) const {
  for (std::size_t t = 0; t < kEntityTypes; ++t) {
    const auto& p = kPrefixes[t];
    if (token.size() <= p.size() + 1 || token.substr(0, p.size()) != p || token[p.size()] != '_') continue;
    const auto digits = token.substr(p.size() + 1);
    std::size_t value = 0;
    auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || end != digits.data() + digits.size()) return std::nullopt;
    if (digits.size() > 1 && digits[0] == '0') return std::nullopt;
    if (value >= counts[t]) return std::nullopt;
    return EntityRef{static_cast<EntityType>(t), value};
  }
  return std::nullopt;
}

bool World::active(std::size_t relation) const {
  return relation < links.size() && !links[relation].empty();
}

EntityRef World::apply(std::size_t relation, EntityRef y) const {
  const auto& rel = template_table().at(relation);
  if (!active(relation) || y.type != rel.domain || y.index >= links[relation].size()) {
    throw ContractError("relation " + rel.name + " does not apply to " + name(y));
  }
  return EntityRef{rel.range, links[relation][y.index]};
}

std::size_t World::entity_count() const {
  std::size_t n = 0;
  for (auto c : counts) n += c;
  return n;
}

World generate_world(std::uint64_t seed, const WorldSizes& sizes) {
  World w;
  w.counts = {sizes.persons, sizes.films, sizes.cities, sizes.countries};
  const auto& table = template_table();
  w.links.assign(table.size(), {});
  std::mt19937_64 rng(seed);
  for (std::size_t r = 0; r < std::min(sizes.relations, table.size()); ++r) {
    const auto dn = w.counts[idx(table[r].domain)];
    const auto rn = w.counts[idx(table[r].range)];
    if (dn == 0 || rn == 0) continue;
    w.relations.push_back(r);
    auto& link = w.links[r];
    link.resize(dn);
    for (auto& x : link) x = uniform(rng, rn);
  }
  return w;
}

std::string Chain::signature(const World& w) const {
  std::string s;
  for (std::size_t k = 0; k < relations.size(); ++k) {
    s += template_table()[relations[k]].name + ":" + w.name(entities[k + 1]) + "/";
  }
  return s + w.name(entities.front());
}

std::vector<Chain> enumerate_chains(const World& w, std::size_t hops) {
  std::vector<Chain> out;
  if (hops == 0) return out;
  // Grow backwards from the start entity e_N; the links make every later
  // entity a function of e_N and the relation sequence.
  const auto& table = template_table();
  struct Partial {
    std::vector<EntityRef> rev;  // e_N, e_{N-1}, ...
    std::vector<std::size_t> rels_rev;
  };
  std::vector<Partial> frontier;
  for (std::size_t t = 0; t < kEntityTypes; ++t) {
    for (std::size_t i = 0; i < w.counts[t]; ++i) frontier.push_back({{EntityRef{static_cast<EntityType>(t), i}}, {}});
  }
  for (std::size_t depth = 0; depth < hops; ++depth) {
    std::vector<Partial> next;
    for (const auto& p : frontier) {
      for (auto r : w.relations) {
        if (table[r].domain != p.rev.back().type) continue;
        const auto x = w.apply(r, p.rev.back());
        if (std::find(p.rev.begin(), p.rev.end(), x) != p.rev.end()) continue;
        Partial q = p;
        q.rev.push_back(x);
        q.rels_rev.push_back(r);
        next.push_back(std::move(q));
      }
    }
    frontier = std::move(next);
  }
  out.reserve(frontier.size());
  for (auto& p : frontier) {
    Chain c;
    c.entities.assign(p.rev.rbegin(), p.rev.rend());
    c.relations.assign(p.rels_rev.rbegin(), p.rels_rev.rend());
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::string> render(std::string_view tmpl, const std::string& x, const std::string& y) {
  auto tokens = io::split_whitespace(tmpl);
  for (auto& t : tokens) {
    if (t == "{x}") t = x;
    else if (t == "{y}") t = y;
  }
  return tokens;
}

std::vector<std::string> chain_question(const World& w, const Chain& c, std::size_t k) {
  if (k < 1 || k > c.hops()) throw ContractError("question index out of range");
  const auto& table = template_table();
  std::vector<std::string> phrase{w.name(c.entities[k])};
  for (std::size_t j = k; j >= 2; --j) {
    std::vector<std::string> next;
    for (const auto& t : io::split_whitespace(table[c.relations[j - 1]].descriptor)) {
      if (t == "{y}") next.insert(next.end(), phrase.begin(), phrase.end());
      else next.push_back(t);
    }
    phrase = std::move(next);
  }
  std::vector<std::string> q;
  for (const auto& t : io::split_whitespace(table[c.relations[0]].question)) {
    if (t == "{y}") q.insert(q.end(), phrase.begin(), phrase.end());
    else q.push_back(t);
  }
  return q;
}

io::DatasetRecord make_record(const World& w, const Chain& c, std::string id, std::mt19937_64& rng) {
  const auto n = c.hops();
  std::set<EntityRef> used(c.entities.begin(), c.entities.end());
  io::DatasetRecord rec;
  rec.id = std::move(id);
  rec.hops = n;
  rec.answer = w.name(c.entities.front());
  rec.question = io::join_tokens(chain_question(w, c, n));
  std::vector<std::string> intermediates;
  for (std::size_t k = 1; k < n; ++k) intermediates.push_back(io::join_tokens(chain_question(w, c, k)));
  rec.reference_intermediates = std::move(intermediates);

  for (std::size_t k = 1; k <= n; ++k) {
    const auto y = c.entities[k];
    io::DocumentRecord doc;
    doc.title = w.name(y);
    auto text = fact_tokens(w, c.relations[k - 1], y);
    doc.entities = {w.name(y), w.name(c.entities[k - 1])};
    const std::size_t wanted = 1 + uniform(rng, 2);
    std::size_t added = 0;
    for (int attempt = 0; attempt < 200 && added < wanted; ++attempt) {
      const auto r = w.relations[uniform(rng, w.relations.size())];
      const auto& rel = template_table()[r];
      const EntityRef dy{rel.domain, uniform(rng, w.counts[idx(rel.domain)])};
      const auto dx = w.apply(r, dy);
      if (dx == dy || used.count(dy) || used.count(dx)) continue;
      used.insert(dy);
      used.insert(dx);
      auto sentence = fact_tokens(w, r, dy);
      text.insert(text.end(), sentence.begin(), sentence.end());
      doc.entities.push_back(w.name(dy));
      doc.entities.push_back(w.name(dx));
      ++added;
    }
    if (added == 0) throw DataError("world too small to place a distractor fact in record " + rec.id);
    doc.text = io::join_tokens(text);
    doc.is_answer_doc = k == 1;
    rec.documents.push_back(std::move(doc));
  }
  std::shuffle(rec.documents.begin(), rec.documents.end(), rng);
  return rec;
}

io::DatasetRecord generate_example(const World& w, std::size_t hops, std::uint64_t seed) {
  if (hops < 1 || hops > kMaxHops) {
    throw ContractError("hops must be in 1.." + std::to_string(kMaxHops) + ", got " + std::to_string(hops));
  }
  const auto chains = enumerate_chains(w, hops);
  if (chains.empty()) throw DataError("world has no " + std::to_string(hops) + "-hop chain");
  std::mt19937_64 rng(seed);
  const auto& c = chains[uniform(rng, chains.size())];
  return make_record(w, c, "h" + std::to_string(hops) + "-s" + std::to_string(seed), rng);
}

Splits make_splits(const World& w, const std::map<std::size_t, SplitCounts>& counts, std::uint64_t seed) {
  Splits out;
  for (const auto& [hops, n] : counts) {
    if (hops < 1 || hops > kMaxHops) throw ContractError("hops must be in 1.." + std::to_string(kMaxHops));
    if (n.train == 0) throw ContractError("split counts must be positive");
    auto chains = enumerate_chains(w, hops);
    const auto required = n.val + n.test + 1;
    if (chains.size() < required) {
      throw DataError("world too small for " + std::to_string(hops) + "-hop splits: need at least " +
                      std::to_string(required) + " distinct chains, found " + std::to_string(chains.size()));
    }
    std::mt19937_64 rng(seed ^ (0x9e3779b97f4a7c15ULL * hops));
    std::shuffle(chains.begin(), chains.end(), rng);
    const auto tag = "h" + std::to_string(hops) + "-";
    auto pad = [](std::size_t i) {
      auto s = std::to_string(i);
      return std::string(s.size() < 5 ? 5 - s.size() : 0, '0') + s;
    };
    for (std::size_t i = 0; i < n.test; ++i) out.test.push_back(make_record(w, chains[i], "test-" + tag + pad(i), rng));
    for (std::size_t i = 0; i < n.val; ++i) {
      out.val.push_back(make_record(w, chains[n.test + i], "val-" + tag + pad(i), rng));
    }
    std::vector<std::size_t> pool;
    for (std::size_t i = n.test + n.val; i < chains.size(); ++i) pool.push_back(i);
    std::size_t cursor = pool.size();
    for (std::size_t i = 0; i < n.train; ++i) {
      if (cursor == pool.size()) {
        std::shuffle(pool.begin(), pool.end(), rng);
        cursor = 0;
      }
      out.train.push_back(make_record(w, chains[pool[cursor++]], "train-" + tag + pad(i), rng));
    }
  }
  return out;
}

io::Vocabulary world_vocabulary(const World& w) {
  std::set<std::string> words;
  for (const auto& rel : template_table()) {
    for (const auto* tmpl : {&rel.fact, &rel.question, &rel.descriptor}) {
      for (const auto& t : io::split_whitespace(*tmpl)) {
        if (t != "{x}" && t != "{y}") words.insert(t);
      }
    }
  }
  std::vector<std::string> tokens(words.begin(), words.end());
  for (std::size_t t = 0; t < kEntityTypes; ++t) {
    for (std::size_t i = 0; i < w.counts[t]; ++i) tokens.push_back(w.name({static_cast<EntityType>(t), i}));
  }
  return io::Vocabulary(std::move(tokens));
}

std::vector<std::vector<std::string>> reduce_question(const World& w, const std::vector<std::string>& question) {
  std::vector<std::vector<std::string>> steps{question};
  const auto& table = template_table();
  auto current = question;
  for (std::size_t guard = 0; guard <= kMaxHops + 1; ++guard) {
    // a complete 1-hop question resolves to its answer
    for (auto r : w.relations) {
      const auto tmpl = io::split_whitespace(table[r].question);
      if (tmpl.size() != current.size()) continue;
      if (auto y = match_at(w, tmpl, current, 0, table[r].domain)) {
        steps.push_back({w.name(w.apply(r, *y))});
        return steps;
      }
    }
    bool replaced = false;
    for (auto r : w.relations) {
      const auto tmpl = io::split_whitespace(table[r].descriptor);
      for (std::size_t pos = 0; pos < current.size() && !replaced; ++pos) {
        if (auto y = match_at(w, tmpl, current, pos, table[r].domain)) {
          std::vector<std::string> next(current.begin(), current.begin() + static_cast<std::ptrdiff_t>(pos));
          next.push_back(w.name(w.apply(r, *y)));
          next.insert(next.end(), current.begin() + static_cast<std::ptrdiff_t>(pos + tmpl.size()), current.end());
          current = std::move(next);
          replaced = true;
        }
      }
      if (replaced) break;
    }
    if (!replaced) return {};
    steps.push_back(current);
  }
  return {};
}

}  // namespace e2eqr::synth
