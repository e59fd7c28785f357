// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/metrics/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <unordered_map>

#include "e2eqr/errors.hpp"

namespace e2eqr::metrics {

Tokens eval_tokenize(std::string_view text) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (std::ispunct(c) && ch != '_') {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  flush();
  return out;
}

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(std::span<const std::string> s, std::size_t n) {
  NgramCounts out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) ++out[std::vector<std::string>(s.begin() + i, s.begin() + i + n)];
  return out;
}

void check_refs(std::span<const Tokens> refs) {
  if (refs.empty()) throw ContractError("at least one reference is required");
}

}  // namespace

BleuScore bleu4(std::span<const std::string> prediction, std::span<const Tokens> references) {
  check_refs(references);
  BleuScore out;
  if (prediction.empty()) {
    out.empty_prediction = true;
    return out;
  }
  double log_sum = 0.0;
  bool zero = false;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto pred = ngrams(prediction, n);
    std::map<std::vector<std::string>, std::size_t> max_ref;
    for (const auto& r : references) {
      for (const auto& [g, c] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    std::size_t clipped = 0, total = 0;
    for (const auto& [g, c] : pred) {
      total += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) clipped += std::min(c, it->second);
    }
    const double p = total ? static_cast<double>(clipped) / static_cast<double>(total) : 0.0;
    out.precisions[n - 1] = p;
    if (p == 0.0) zero = true;
    else log_sum += std::log(p);
  }
  const auto c = static_cast<double>(prediction.size());
  double r = 0.0;
  std::size_t best_diff = std::numeric_limits<std::size_t>::max();
  for (const auto& ref : references) {
    const auto diff = static_cast<std::size_t>(
        std::llabs(static_cast<long long>(ref.size()) - static_cast<long long>(prediction.size())));
    if (diff < best_diff || (diff == best_diff && static_cast<double>(ref.size()) < r)) {
      best_diff = diff;
      r = static_cast<double>(ref.size());
    }
  }
  out.brevity_penalty = c >= r ? 1.0 : std::exp(1.0 - r / c);
  out.score = zero ? 0.0 : out.brevity_penalty * std::exp(log_sum / 4.0);
  return out;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const std::string> prediction, std::span<const Tokens> references) {
  check_refs(references);
  double best = 0.0;
  for (const auto& ref : references) {
    if (prediction.empty() || ref.empty()) continue;
    const auto l = static_cast<double>(lcs_length(prediction, ref));
    if (l == 0.0) continue;
    const double r = l / static_cast<double>(ref.size());
    const double p = l / static_cast<double>(prediction.size());
    const double b2 = kRougeBeta * kRougeBeta;
    best = std::max(best, (1 + b2) * r * p / (r + b2 * p));
  }
  return best;
}

Alignment meteor_align(std::span<const std::string> prediction, std::span<const std::string> reference) {
  // The number of matches is fixed by the per-word count minima; a bounded
  // depth-first search then looks for the assignment with the fewest chunks.
  std::unordered_map<std::string, std::size_t> pred_count, ref_count;
  for (const auto& w : prediction) ++pred_count[w];
  for (const auto& w : reference) ++ref_count[w];
  std::unordered_map<std::string, std::size_t> quota;
  std::size_t matches = 0;
  for (const auto& [w, c] : pred_count) {
    auto it = ref_count.find(w);
    if (it == ref_count.end()) continue;
    quota[w] = std::min(c, it->second);
    matches += quota[w];
  }
  if (matches == 0) return {};

  std::unordered_map<std::string, std::vector<std::size_t>> positions;
  for (std::size_t j = 0; j < reference.size(); ++j) positions[reference[j]].push_back(j);
  // pred occurrences of w remaining from position i onward
  std::vector<std::size_t> remaining_same(prediction.size());
  {
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t i = prediction.size(); i-- > 0;) remaining_same[i] = seen[prediction[i]]++;
  }

  std::vector<bool> used(reference.size(), false);
  std::unordered_map<std::string, std::size_t> taken;
  std::size_t best = std::numeric_limits<std::size_t>::max();
  std::size_t budget = 200000;

  const long kNone = -2;
  std::function<void(std::size_t, long, std::size_t)> dfs = [&](std::size_t i, long last, std::size_t chunks) {
    if (chunks >= best || budget == 0) return;
    --budget;
    if (i == prediction.size()) {
      best = chunks;
      return;
    }
    const auto& w = prediction[i];
    auto q = quota.find(w);
    const std::size_t need = q == quota.end() ? 0 : q->second - taken[w];
    if (need > 0) {
      const auto& pos = positions[w];
      // continuing the current chunk first finds good bounds early
      if (last >= 0 && static_cast<std::size_t>(last + 1) < reference.size() && reference[last + 1] == w &&
          !used[last + 1]) {
        used[last + 1] = true;
        ++taken[w];
        dfs(i + 1, last + 1, chunks);
        --taken[w];
        used[last + 1] = false;
      }
      for (auto j : pos) {
        if (used[j] || static_cast<long>(j) == last + 1) continue;
        used[j] = true;
        ++taken[w];
        dfs(i + 1, static_cast<long>(j), chunks + 1);
        --taken[w];
        used[j] = false;
      }
    }
    // skipping is allowed only if enough later occurrences remain to fill the quota
    if (need == 0 || remaining_same[i] >= need) dfs(i + 1, kNone, chunks);
  };
  dfs(0, kNone, 0);
  return {matches, best};
}

double meteor_lite(std::span<const std::string> prediction, std::span<const Tokens> references) {
  check_refs(references);
  double best = 0.0;
  for (const auto& ref : references) {
    const auto a = meteor_align(prediction, ref);
    if (a.matches == 0) continue;
    const double m = static_cast<double>(a.matches);
    const double p = m / static_cast<double>(prediction.size());
    const double r = m / static_cast<double>(ref.size());
    const double fmean = 10 * p * r / (r + 9 * p);
    const double frag = static_cast<double>(a.chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    best = std::max(best, fmean * (1 - penalty));
  }
  return best;
}

bool exact_match(std::span<const std::string> prediction, std::span<const Tokens> references) {
  check_refs(references);
  return std::any_of(references.begin(), references.end(),
                     [&](const Tokens& r) { return std::equal(prediction.begin(), prediction.end(), r.begin(), r.end()); });
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::kBleu4:
      return "bleu4";
    case Metric::kRougeL:
      return "rouge_l";
    case Metric::kMeteorLite:
      return "meteor_lite";
    case Metric::kExactMatch:
      return "exact_match";
  }
  return "unknown";
}

const std::vector<Metric>& all_metrics() {
  static const std::vector<Metric> all{Metric::kBleu4, Metric::kRougeL, Metric::kMeteorLite, Metric::kExactMatch};
  return all;
}

CorpusReport corpus_eval(std::span<const EvalPair> pairs, std::span<const Metric> metrics) {
  if (pairs.empty()) throw ContractError("corpus_eval needs at least one pair");
  CorpusReport report;
  std::map<std::string, double> sum;
  std::map<std::size_t, std::map<std::string, double>> hop_sum;
  for (const auto& pair : pairs) {
    EvalRecord rec{pair.id, pair.hops, {}, pair.prediction.empty()};
    for (auto m : metrics) {
      double s = 0.0;
      switch (m) {
        case Metric::kBleu4:
          s = bleu4(pair.prediction, pair.references).score;
          break;
        case Metric::kRougeL:
          s = rouge_l(pair.prediction, pair.references);
          break;
        case Metric::kMeteorLite:
          s = meteor_lite(pair.prediction, pair.references);
          break;
        case Metric::kExactMatch:
          s = exact_match(pair.prediction, pair.references) ? 1.0 : 0.0;
          break;
      }
      const std::string name(metric_name(m));
      rec.scores[name] = s;
      sum[name] += s;
      hop_sum[pair.hops][name] += s;
    }
    ++report.count_by_hops[pair.hops];
    report.records.push_back(std::move(rec));
  }
  for (const auto& [name, s] : sum) report.mean[name] = s / static_cast<double>(pairs.size());
  for (const auto& [h, sums] : hop_sum) {
    for (const auto& [name, s] : sums) {
      report.mean_by_hops[h][name] = s / static_cast<double>(report.count_by_hops[h]);
    }
  }
  return report;
}

}  // namespace e2eqr::metrics
