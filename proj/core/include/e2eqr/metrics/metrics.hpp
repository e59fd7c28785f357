// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace e2eqr::metrics {

using Tokens = std::vector<std::string>;

/// Lowercases, detaches punctuation (underscores stay inside words) and
/// splits on whitespace.
Tokens eval_tokenize(std::string_view text);

struct BleuScore {
  double score = 0.0;
  bool empty_prediction = false;
  double precisions[4] = {0, 0, 0, 0};
  double brevity_penalty = 0.0;
};

/// Sentence BLEU-4 without smoothing; brevity penalty against the closest
/// reference length (shorter wins ties).
BleuScore bleu4(std::span<const std::string> prediction, std::span<const Tokens> references);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

inline constexpr double kRougeBeta = 1.2;

/// ROUGE-L F-measure, maximized over references.
double rouge_l(std::span<const std::string> prediction, std::span<const Tokens> references);

struct Alignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};

/// Exact-unigram alignment with the most matches, then the fewest chunks.
Alignment meteor_align(std::span<const std::string> prediction, std::span<const std::string> reference);

/// METEOR with exact matching only; maximized over references.
double meteor_lite(std::span<const std::string> prediction, std::span<const Tokens> references);

bool exact_match(std::span<const std::string> prediction, std::span<const Tokens> references);

struct EvalPair {
  std::string id;
  std::size_t hops = 0;
  Tokens prediction;
  std::vector<Tokens> references;
};

enum class Metric { kBleu4, kRougeL, kMeteorLite, kExactMatch };

std::string_view metric_name(Metric m);
const std::vector<Metric>& all_metrics();

struct EvalRecord {
  std::string id;
  std::size_t hops = 0;
  std::map<std::string, double> scores;
  bool empty_prediction = false;
};

struct CorpusReport {
  std::vector<EvalRecord> records;  // input order
  std::map<std::string, double> mean;
  std::map<std::size_t, std::map<std::string, double>> mean_by_hops;
  std::map<std::size_t, std::size_t> count_by_hops;
};

/// Sentence-level scores and their arithmetic means. ContractError on an
/// empty corpus or a pair without references.
CorpusReport corpus_eval(std::span<const EvalPair> pairs, std::span<const Metric> metrics = all_metrics());

}  // namespace e2eqr::metrics
