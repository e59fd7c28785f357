// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/io/vocabulary.hpp"

#include <algorithm>
#include <fstream>

#include "e2eqr/errors.hpp"
#include "e2eqr/io/hashing.hpp"

namespace e2eqr::io {

bool is_special_token(std::string_view token) {
  return std::find(kSpecialTokens.begin(), kSpecialTokens.end(), token) != kSpecialTokens.end();
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) {
  const bool has_specials = !tokens.empty() && tokens.front() == kSpecialTokens.front();
  if (has_specials) {
    for (std::size_t i = 0; i < kSpecialTokens.size(); ++i) {
      if (i >= tokens.size() || tokens[i] != kSpecialTokens[i]) {
        throw DataError("vocabulary: special token " + std::string(kSpecialTokens[i]) + " expected at line " +
                        std::to_string(i + 1));
      }
    }
  } else {
    tokens.insert(tokens.begin(), kSpecialTokens.begin(), kSpecialTokens.end());
  }
  tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty() || tokens_[i].find_first_of(" \t\r\n") != std::string::npos) {
      throw DataError("vocabulary: invalid token at line " + std::to_string(i + 1));
    }
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw DataError("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  if (tokens.empty() || tokens.front() != kSpecialTokens.front()) {
    throw DataError("vocabulary " + path.string() + " must start with the special tokens");
  }
  return Vocabulary(std::move(tokens));
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw IndexError("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? specials().unk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return index_.count(std::string(token)) != 0; }

std::vector<TokenId> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

std::vector<std::string> Vocabulary::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(token(i));
  return out;
}

std::uint64_t Vocabulary::hash() const {
  Fnv1a h;
  for (const auto& t : tokens_) {
    h.update(t);
    h.update("\n");
  }
  return h.value();
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string join_tokens(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

}  // namespace e2eqr::io
