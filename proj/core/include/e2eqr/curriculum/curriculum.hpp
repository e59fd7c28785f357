// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "e2eqr/autodiff/tensor.hpp"
#include "e2eqr/docgraph/document_graph.hpp"
#include "e2eqr/io/vocabulary.hpp"
#include "e2eqr/model/transformer.hpp"

namespace e2eqr::curriculum {

struct CurriculumConfig {
  double gamma_low = 0.8;
  double gamma_high = 0.1;
  double rho = 0.1;
  double lr_alpha = 3e-5;
  std::size_t warmup_steps = 1000;
  std::size_t batch_size = 8;
  std::size_t epochs_per_main_complexity = 1;
  std::uint64_t seed = 0;
  double weight_decay = 0.01;
  double max_grad_norm = 0.0;        // 0 disables clipping
  std::size_t plateau_patience = 0;  // 0 disables the early switch
  bool single_pass = false;          // train once at H = N only

  /// ContractError unless the weights and ratio lie in [0, 1] and the
  /// counts are positive.
  void validate() const;
  bool operator==(const CurriculumConfig&) const = default;
};

enum class Variant { kAdaptive, kStepByStep, kCumulative, kStandard };

std::optional<Variant> parse_variant(std::string_view name);
std::string_view variant_name(Variant v);
/// Sets the weights, ratio and pass structure of `base` for the variant.
CurriculumConfig apply_variant(CurriculumConfig base, Variant v);

/// A training example with its step inputs already assembled and encoded.
struct EncodedExample {
  std::string id;
  std::size_t hops = 0;
  std::vector<model::StepInput> steps;
  std::vector<TokenId> question;
  std::vector<std::string> question_tokens;
};

using ComplexityDataset = std::map<std::size_t, std::vector<EncodedExample>>;

EncodedExample encode_example(const docgraph::ArrangedExample& ex, const io::Vocabulary& vocab, std::size_t max_len);
/// Groups by hop count. LengthError when any step or question exceeds max_len.
ComplexityDataset encode_dataset(std::span<const docgraph::ArrangedExample> examples, const io::Vocabulary& vocab,
                                 std::size_t max_len);

struct IterationItem {
  std::size_t complexity = 0;
  std::size_t index = 0;  // position within D_complexity
  bool operator==(const IterationItem&) const = default;
};

/// D_1..D_H in full plus floor(rho * n(D_h)) uniform draws from each D_h,
/// h > H; shuffled. `sizes` maps complexity to n(D_h). ContractError when
/// H is outside 1..N or D_H is empty.
std::vector<IterationItem> build_iteration_dataset(const std::map<std::size_t, std::size_t>& sizes, std::size_t H,
                                                   double rho, std::mt19937_64& rng);

/// One epoch's items for main complexity H: build_iteration_dataset with
/// the zero-weight items removed.
std::vector<IterationItem> epoch_items(const std::map<std::size_t, std::size_t>& sizes, std::size_t H,
                                       const CurriculumConfig& cfg, std::mt19937_64& rng);

double loss_weight(std::size_t complexity, std::size_t H, double gamma_low, double gamma_high);

/// Mean of the per-example losses after complexity weighting.
double weighted_loss(std::span<const double> losses, std::span<const std::size_t> complexities, std::size_t H,
                     double gamma_low, double gamma_high);

/// Linear warmup to lr_alpha, then linear decay to 0 at total_steps.
double lr_at(std::size_t step, std::size_t warmup_steps, std::size_t total_steps, double lr_alpha);

/// Decoupled weight decay Adam.
template <typename T>
class AdamW {
 public:
  struct Options {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW(autodiff::ParameterSet<T>& params, Options options);

  /// Applies one update with learning rate `lr` from the current gradients.
  void step(double lr);

  std::size_t steps() const { return t_; }
  const Options& options() const { return options_; }
  std::vector<std::vector<T>>& first_moments() { return m_; }
  std::vector<std::vector<T>>& second_moments() { return v_; }
  void set_steps(std::size_t t) { t_ = t; }

 private:
  autodiff::ParameterSet<T>* params_;
  Options options_;
  std::vector<std::vector<T>> m_, v_;
  std::size_t t_ = 0;
};

/// Scales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before scaling.
template <typename T>
double clip_grad_norm(autodiff::ParameterSet<T>& params, double max_norm);

struct LogRecord {
  std::size_t step = 0;
  std::size_t H = 0;
  std::size_t epoch = 0;  // within H, 1-based
  double loss = 0.0;           // unweighted mean final-step loss over the epoch
  double weighted_loss = 0.0;  // the optimized objective, averaged over the epoch
  double val_loss = 0.0;
  double rouge_l = 0.0;
  double exact_match = 0.0;
};

struct TrainState {
  std::size_t step = 0;
  std::size_t main_complexity = 1;
  std::string rng_state;
};

template <typename T>
struct TrainHooks {
  std::function<void(const LogRecord&)> on_log;
  /// Called after the last epoch of each main complexity.
  std::function<void(std::size_t H, const TrainState&, AdamW<T>&)> on_complexity_done;
};

struct TrainSummary {
  std::size_t steps = 0;
  std::size_t total_steps = 0;
  std::vector<LogRecord> log;
};

/// Number of optimizer updates the run will take (zero-weight items are
/// not scheduled).
std::size_t planned_steps(const std::map<std::size_t, std::size_t>& sizes, const CurriculumConfig& cfg);

/// Runs the curriculum. NumericError on a non-finite loss.
template <typename T>
TrainSummary train(model::Transformer<T>& model, const ComplexityDataset& train_set,
                   const ComplexityDataset& val_set, const CurriculumConfig& cfg, const io::Vocabulary& vocab,
                   const TrainHooks<T>& hooks = {});

struct Prediction {
  std::vector<std::vector<TokenId>> intermediates;
  std::vector<bool> intermediate_truncated;
  std::vector<TokenId> question;
  bool truncated = false;
};

template <typename T>
Prediction predict(const model::Transformer<T>& model, std::span<const model::StepInput> steps);

struct EvalSummary {
  double loss = 0.0;
  double rouge_l = 0.0;
  double exact_match = 0.0;
};

/// Teacher-forced loss and greedy-decoding scores over every example.
template <typename T>
EvalSummary evaluate(const model::Transformer<T>& model, const ComplexityDataset& data, const io::Vocabulary& vocab);

}  // namespace e2eqr::curriculum
