// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "e2eqr/curriculum/curriculum.hpp"
#include "e2eqr/model/transformer.hpp"

namespace e2eqr::io {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Optimizer and schedule position saved alongside the weights.
template <typename T>
struct TrainerSnapshot {
  std::uint64_t step = 0;
  std::uint64_t main_complexity = 0;
  std::uint64_t optimizer_steps = 0;
  std::string rng_state;
  std::vector<std::vector<T>> first_moments;
  std::vector<std::vector<T>> second_moments;
};

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  std::size_t precision = 0;  // bytes per value: 4 or 8
  model::ModelConfig config;
  std::uint64_t vocab_hash = 0;
};

/// Layout: "E2QR", u32 version, u8 precision, model config, u64 vocabulary
/// hash, u64 tensor count, then per tensor (u32 name length, name, u32 rank,
/// u64 dims, little-endian values), then u8 trainer-state flag and the
/// optional trainer state. All integers little-endian.
template <typename T>
void save_checkpoint(const std::filesystem::path& path, const model::Transformer<T>& model, std::uint64_t vocab_hash,
                     const TrainerSnapshot<T>* trainer = nullptr);

/// DataError on a bad magic, version or truncated file.
CheckpointHeader read_checkpoint_header(const std::filesystem::path& path);

template <typename T>
struct LoadedCheckpoint {
  CheckpointHeader header;
  model::Transformer<T> model;
  std::optional<TrainerSnapshot<T>> trainer;
};

/// CompatibilityError when the stored precision differs from T; DataError
/// when tensor names or shapes disagree with the stored configuration.
template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path);

}  // namespace e2eqr::io
