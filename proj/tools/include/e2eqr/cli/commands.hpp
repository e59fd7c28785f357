// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "e2eqr/curriculum/curriculum.hpp"
#include "e2eqr/io/dataset.hpp"
#include "e2eqr/metrics/metrics.hpp"
#include "e2eqr/synth/synthetic.hpp"

namespace e2eqr::cli {

namespace fs = std::filesystem;

enum class Precision { kF32, kF64 };
enum class Ablation { kNone, kSelfAttention, kCrossAttention };

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

struct ArrangeSummary {
  std::size_t total = 0;
  std::size_t arranged = 0;
  std::vector<std::string> errors;  // "id: message" per skipped record
};

/// Adds order and bridges to every record that arranges; failing records are
/// reported and left out of the output.
ArrangeSummary cmd_arrange(const fs::path& input, const fs::path& output);

struct TrainOptions {
  fs::path config;
  fs::path data_dir;  // train.jsonl, val.jsonl, vocab.txt
  fs::path out_dir;
  std::optional<std::uint64_t> seed;
  Precision precision = Precision::kF32;
  std::ostream* progress = nullptr;
};

/// Writes checkpoint-h<H>.ckpt after each main complexity, final.ckpt,
/// metrics.jsonl, vocab.txt and manifest.json into out_dir.
curriculum::TrainSummary cmd_train(const TrainOptions& options);

struct GenerateOptions {
  fs::path checkpoint;
  fs::path dataset;
  fs::path output;
  std::optional<fs::path> vocab;  // defaults to vocab.txt beside the checkpoint
  bool emit_intermediates = false;
  Ablation ablate = Ablation::kNone;
  std::optional<Precision> precision;  // must match the checkpoint when given
};

struct PredictionRecord {
  std::string id;
  std::size_t hops = 0;
  std::string question;
  bool truncated = false;
  std::optional<std::vector<std::string>> intermediates;
};

io::Json to_json(const PredictionRecord& p);
PredictionRecord prediction_from_json(const io::Json& j);

/// One prediction per input record, in input order. CompatibilityError when
/// the vocabulary hash differs from the one stored in the checkpoint.
std::vector<PredictionRecord> cmd_generate(const GenerateOptions& options);

/// Report lines: one for all records, then one per hop count.
struct ReportLine {
  std::string group;
  std::size_t count = 0;
  std::map<std::string, double> scores;
};

/// DataError listing the offending ids when prediction and gold ids differ.
std::vector<ReportLine> cmd_evaluate(const fs::path& predictions, const fs::path& gold, const fs::path& report);

struct GenDataOptions {
  fs::path out_dir;
  std::uint64_t seed = 0;
  synth::WorldSizes world{120, 100, 60, 20, 7};
  std::map<std::size_t, synth::SplitCounts> counts;
};

/// Writes train/val/test.jsonl (arranged), vocab.txt and manifest.json.
void cmd_gen_data(const GenDataOptions& options);

struct GradCheckOptions {
  std::uint64_t seed = 0;
  std::size_t samples = 100;
  double eps = 1e-4;
  double tolerance = 1e-4;
  std::vector<std::size_t> step_counts{2, 3};
};

struct GradCheckResult {
  std::size_t steps = 0;
  double max_relative_error = 0;
  std::size_t samples = 0;
  double first_step_only_grad_norm = 0;  // gradient of parameters used only at step 1
};

std::vector<GradCheckResult> cmd_grad_check(const GradCheckOptions& options);

/// Full command-line entry point; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace e2eqr::cli
