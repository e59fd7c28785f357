// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "e2eqr/model/config.hpp"

namespace e2eqr::io {

/// Reserved tokens; always the first eight vocabulary entries, in this order.
inline constexpr std::array<std::string_view, 8> kSpecialTokens = {"<pad>", "<bos>",    "<eos>", "<ans>",
                                                                   "<bridge>", "<doc>", "<sep>", "<unk>"};

bool is_special_token(std::string_view token);

/// Token <-> id table. Unknown tokens map to <unk>.
class Vocabulary {
 public:
  /// Builds from tokens; the specials are prepended when absent and must
  /// otherwise appear first in canonical order (DataError).
  explicit Vocabulary(std::vector<std::string> tokens = {});

  static Vocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(TokenId id) const;
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;

  std::vector<TokenId> encode(std::span<const std::string> tokens) const;
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

  model::SpecialTokens specials() const { return {}; }

  /// 64-bit FNV-1a over the file representation (one token per line).
  std::uint64_t hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

std::vector<std::string> split_whitespace(std::string_view text);
std::string join_tokens(std::span<const std::string> tokens);

}  // namespace e2eqr::io
