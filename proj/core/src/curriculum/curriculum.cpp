// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/curriculum/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "e2eqr/autodiff/ops.hpp"
#include "e2eqr/errors.hpp"
#include "e2eqr/metrics/metrics.hpp"
#include "e2eqr/model/rewriter.hpp"

namespace e2eqr::curriculum {

namespace {

void check_unit(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) throw ContractError(std::string(name) + " must lie in [0, 1]");
}

std::map<std::size_t, std::size_t> group_sizes(const ComplexityDataset& d) {
  std::map<std::size_t, std::size_t> out;
  for (const auto& [h, xs] : d) out[h] = xs.size();
  return out;
}

std::size_t max_complexity(const std::map<std::size_t, std::size_t>& sizes) {
  return sizes.empty() ? 0 : sizes.rbegin()->first;
}

std::vector<std::size_t> schedule(const std::map<std::size_t, std::size_t>& sizes, const CurriculumConfig& cfg) {
  const auto n = max_complexity(sizes);
  if (cfg.single_pass) return {n};
  std::vector<std::size_t> hs;
  for (std::size_t h = 1; h <= n; ++h) {
    auto it = sizes.find(h);
    if (it != sizes.end() && it->second > 0) hs.push_back(h);
  }
  return hs;
}

// Items with zero weight contribute nothing; they are removed before batching.
std::size_t scheduled_items(const std::map<std::size_t, std::size_t>& sizes, std::size_t H,
                            const CurriculumConfig& cfg) {
  std::size_t n = 0;
  for (const auto& [h, size] : sizes) {
    const std::size_t count =
        h <= H ? size : static_cast<std::size_t>(std::floor(cfg.rho * static_cast<double>(size)));
    if (loss_weight(h, H, cfg.gamma_low, cfg.gamma_high) > 0.0) n += count;
  }
  return n;
}

std::string rng_string(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

}  // namespace

void CurriculumConfig::validate() const {
  check_unit(gamma_low, "gamma_low");
  check_unit(gamma_high, "gamma_high");
  check_unit(rho, "rho");
  if (!(lr_alpha >= 0.0) || !std::isfinite(lr_alpha)) throw ContractError("lr_alpha must be a finite nonnegative number");
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (epochs_per_main_complexity == 0) throw ContractError("epochs_per_main_complexity must be positive");
  if (!(weight_decay >= 0.0)) throw ContractError("weight_decay must be nonnegative");
  if (!(max_grad_norm >= 0.0)) throw ContractError("max_grad_norm must be nonnegative");
}

std::optional<Variant> parse_variant(std::string_view name) {
  if (name == "adaptive") return Variant::kAdaptive;
  if (name == "step_by_step") return Variant::kStepByStep;
  if (name == "cumulative") return Variant::kCumulative;
  if (name == "standard") return Variant::kStandard;
  return std::nullopt;
}

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::kAdaptive:
      return "adaptive";
    case Variant::kStepByStep:
      return "step_by_step";
    case Variant::kCumulative:
      return "cumulative";
    case Variant::kStandard:
      return "standard";
  }
  return "adaptive";
}

CurriculumConfig apply_variant(CurriculumConfig c, Variant v) {
  c.single_pass = false;
  switch (v) {
    case Variant::kAdaptive:
      c.rho = 0.1, c.gamma_low = 0.8, c.gamma_high = 0.1;
      break;
    case Variant::kStepByStep:
      c.rho = 0.0, c.gamma_low = 0.0, c.gamma_high = 0.0;
      break;
    case Variant::kCumulative:
      c.rho = 0.0, c.gamma_low = 1.0, c.gamma_high = 0.0;
      break;
    case Variant::kStandard:
      c.rho = 1.0, c.gamma_low = 1.0, c.gamma_high = 1.0, c.single_pass = true;
      break;
  }
  return c;
}

EncodedExample encode_example(const docgraph::ArrangedExample& ex, const io::Vocabulary& vocab, std::size_t max_len) {
  EncodedExample out;
  out.id = ex.id;
  out.hops = ex.hops;
  out.steps = docgraph::assemble_all_steps(ex, vocab, max_len);
  out.question_tokens = ex.gold_question;
  out.question = vocab.encode(ex.gold_question);
  if (out.question.size() + 1 > max_len) {
    throw LengthError("question of example " + ex.id + " does not fit the decoder length " + std::to_string(max_len));
  }
  return out;
}

ComplexityDataset encode_dataset(std::span<const docgraph::ArrangedExample> examples, const io::Vocabulary& vocab,
                                 std::size_t max_len) {
  ComplexityDataset out;
  for (const auto& ex : examples) {
    auto e = encode_example(ex, vocab, max_len);
    out[e.hops].push_back(std::move(e));
  }
  return out;
}

std::vector<IterationItem> build_iteration_dataset(const std::map<std::size_t, std::size_t>& sizes, std::size_t H,
                                                   double rho, std::mt19937_64& rng) {
  check_unit(rho, "rho");
  const auto n = max_complexity(sizes);
  if (H < 1 || H > n) throw ContractError("main complexity " + std::to_string(H) + " outside 1.." + std::to_string(n));
  auto main = sizes.find(H);
  if (main == sizes.end() || main->second == 0) throw ContractError("no examples of complexity " + std::to_string(H));

  std::vector<IterationItem> out;
  for (const auto& [h, size] : sizes) {
    if (h <= H) {
      for (std::size_t i = 0; i < size; ++i) out.push_back({h, i});
      continue;
    }
    const auto k = static_cast<std::size_t>(std::floor(rho * static_cast<double>(size)));
    std::vector<std::size_t> idx(size);
    for (std::size_t i = 0; i < size; ++i) idx[i] = i;
    // partial Fisher-Yates: the first k entries form a uniform sample
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, size - 1);
      std::swap(idx[i], idx[pick(rng)]);
      out.push_back({h, idx[i]});
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::vector<IterationItem> epoch_items(const std::map<std::size_t, std::size_t>& sizes, std::size_t H,
                                       const CurriculumConfig& cfg, std::mt19937_64& rng) {
  auto items = build_iteration_dataset(sizes, H, cfg.rho, rng);
  std::erase_if(items, [&](const IterationItem& it) {
    return loss_weight(it.complexity, H, cfg.gamma_low, cfg.gamma_high) == 0.0;
  });
  return items;
}

double loss_weight(std::size_t complexity, std::size_t H, double gamma_low, double gamma_high) {
  if (complexity < H) return gamma_low;
  if (complexity > H) return gamma_high;
  return 1.0;
}

double weighted_loss(std::span<const double> losses, std::span<const std::size_t> complexities, std::size_t H,
                     double gamma_low, double gamma_high) {
  if (losses.size() != complexities.size()) throw ContractError("losses and complexities differ in length");
  if (losses.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) s += loss_weight(complexities[i], H, gamma_low, gamma_high) * losses[i];
  return s / static_cast<double>(losses.size());
}

double lr_at(std::size_t step, std::size_t warmup_steps, std::size_t total_steps, double lr_alpha) {
  if (total_steps <= warmup_steps) {
    throw ContractError("total_steps (" + std::to_string(total_steps) + ") must exceed warmup_steps (" +
                        std::to_string(warmup_steps) + ")");
  }
  if (step < warmup_steps) return lr_alpha * static_cast<double>(step) / static_cast<double>(warmup_steps);
  if (step >= total_steps) return 0.0;
  return lr_alpha * static_cast<double>(total_steps - step) / static_cast<double>(total_steps - warmup_steps);
}

template <typename T>
AdamW<T>::AdamW(autodiff::ParameterSet<T>& params, Options options) : params_(&params), options_(options) {
  for (const auto& p : params.items()) {
    m_.emplace_back(p.tensor.size(), T(0));
    v_.emplace_back(p.tensor.size(), T(0));
  }
}

template <typename T>
void AdamW<T>::step(double lr) {
  ++t_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto& items = params_->items();
  for (std::size_t k = 0; k < items.size(); ++k) {
    auto& node = *items[k].tensor.node();
    auto& m = m_[k];
    auto& v = v_[k];
    const bool has = node.grad.size() == node.data.size();
    for (std::size_t i = 0; i < node.data.size(); ++i) {
      const double g = has ? static_cast<double>(node.grad[i]) : 0.0;
      m[i] = static_cast<T>(b1 * m[i] + (1 - b1) * g);
      v[i] = static_cast<T>(b2 * v[i] + (1 - b2) * g * g);
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      const double p = node.data[i];
      node.data[i] = static_cast<T>(p - lr * (mhat / (std::sqrt(vhat) + options_.eps) + options_.weight_decay * p));
    }
  }
}

template <typename T>
double clip_grad_norm(autodiff::ParameterSet<T>& params, double max_norm) {
  double sq = 0.0;
  for (auto& p : params.items()) {
    for (auto g : p.tensor.node()->grad) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-12);
    for (auto& p : params.items()) {
      for (auto& g : p.tensor.node()->grad) g = static_cast<T>(g * s);
    }
  }
  return norm;
}

std::size_t planned_steps(const std::map<std::size_t, std::size_t>& sizes, const CurriculumConfig& cfg) {
  std::size_t total = 0;
  for (auto H : schedule(sizes, cfg)) {
    const auto items = scheduled_items(sizes, H, cfg);
    total += cfg.epochs_per_main_complexity * ((items + cfg.batch_size - 1) / cfg.batch_size);
  }
  return total;
}

template <typename T>
Prediction predict(const model::Transformer<T>& model, std::span<const model::StepInput> steps) {
  autodiff::NoGradGuard no_grad;
  auto r = model::rewrite_forward(model, steps, model::SpecialTokens{});
  return {std::move(r.intermediates), std::move(r.intermediate_truncated), std::move(r.final_question),
          r.final_truncated};
}

template <typename T>
EvalSummary evaluate(const model::Transformer<T>& model, const ComplexityDataset& data, const io::Vocabulary& vocab) {
  autodiff::NoGradGuard no_grad;
  const model::SpecialTokens sp;
  EvalSummary s;
  std::size_t n = 0;
  for (const auto& [h, xs] : data) {
    for (const auto& ex : xs) {
      model::RewriteOptions opt;
      opt.teacher_forced_final = ex.question;
      auto forced = model::rewrite_forward(model, ex.steps, sp, opt);
      s.loss += static_cast<double>(
          model::final_step_loss(forced.final_logits, model::teacher_targets(ex.question, sp.eos)).item());
      const auto pred = predict(model, ex.steps);
      const auto words = vocab.decode(pred.question);
      const auto p = metrics::eval_tokenize(io::join_tokens(words));
      const std::vector<metrics::Tokens> refs{metrics::eval_tokenize(io::join_tokens(ex.question_tokens))};
      s.rouge_l += metrics::rouge_l(p, refs);
      s.exact_match += metrics::exact_match(p, refs) ? 1.0 : 0.0;
      ++n;
    }
  }
  if (n) {
    s.loss /= static_cast<double>(n);
    s.rouge_l /= static_cast<double>(n);
    s.exact_match /= static_cast<double>(n);
  }
  return s;
}

template <typename T>
TrainSummary train(model::Transformer<T>& model, const ComplexityDataset& train_set, const ComplexityDataset& val_set,
                   const CurriculumConfig& cfg, const io::Vocabulary& vocab, const TrainHooks<T>& hooks) {
  cfg.validate();
  const auto sizes = group_sizes(train_set);
  const auto n = max_complexity(sizes);
  if (n == 0) throw ContractError("training set is empty");
  for (std::size_t h = 1; h <= n; ++h) {
    if (!sizes.count(h) || sizes.at(h) == 0) {
      throw ContractError("training set has no examples of complexity " + std::to_string(h));
    }
  }
  const model::SpecialTokens sp;
  auto& params = model.parameters();
  AdamW<T> opt(params, {0.9, 0.999, 1e-8, cfg.weight_decay});
  std::mt19937_64 rng(cfg.seed);

  TrainSummary summary;
  summary.total_steps = planned_steps(sizes, cfg);
  const auto lr_total = std::max(summary.total_steps, cfg.warmup_steps + 1);
  std::size_t step = 0;
  params.zero_grad();

  for (auto H : schedule(sizes, cfg)) {
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs_per_main_complexity; ++epoch) {
      const auto items = epoch_items(sizes, H, cfg, rng);
      double loss_sum = 0.0, weighted_sum = 0.0;
      for (std::size_t b = 0; b < items.size(); b += cfg.batch_size) {
        const auto end = std::min(items.size(), b + cfg.batch_size);
        const auto batch = static_cast<double>(end - b);
        for (std::size_t i = b; i < end; ++i) {
          const auto& ex = train_set.at(items[i].complexity)[items[i].index];
          model::RewriteOptions ro;
          ro.teacher_forced_final = ex.question;
          auto r = model::rewrite_forward(model, ex.steps, sp, ro);
          auto loss = model::final_step_loss(r.final_logits, model::teacher_targets(ex.question, sp.eos));
          const double value = static_cast<double>(loss.item());
          if (!std::isfinite(value)) {
            throw NumericError("non-finite loss at step " + std::to_string(step) + " (H=" + std::to_string(H) +
                               ", example " + ex.id + ")");
          }
          const double w = loss_weight(items[i].complexity, H, cfg.gamma_low, cfg.gamma_high);
          autodiff::scale(loss, static_cast<T>(w / batch)).backward();
          loss_sum += value;
          weighted_sum += w * value;
        }
        if (cfg.max_grad_norm > 0.0) clip_grad_norm(params, cfg.max_grad_norm);
        opt.step(lr_at(step, cfg.warmup_steps, lr_total, cfg.lr_alpha));
        params.zero_grad();
        ++step;
      }
      LogRecord rec;
      rec.step = step;
      rec.H = H;
      rec.epoch = epoch;
      const auto count = static_cast<double>(std::max<std::size_t>(items.size(), 1));
      rec.loss = loss_sum / count;
      rec.weighted_loss = weighted_sum / count;
      if (!val_set.empty()) {
        const auto v = evaluate(model, val_set, vocab);
        rec.val_loss = v.loss;
        rec.rouge_l = v.rouge_l;
        rec.exact_match = v.exact_match;
      }
      summary.log.push_back(rec);
      if (hooks.on_log) hooks.on_log(rec);
      if (cfg.plateau_patience > 0 && !val_set.empty()) {
        if (rec.val_loss < best_val) {
          best_val = rec.val_loss;
          stale = 0;
        } else if (++stale >= cfg.plateau_patience) {
          break;
        }
      }
    }
    if (hooks.on_complexity_done) hooks.on_complexity_done(H, TrainState{step, H, rng_string(rng)}, opt);
  }
  summary.steps = step;
  return summary;
}

#define E2EQR_INSTANTIATE(T)                                                                                    \
  template class AdamW<T>;                                                                                      \
  template double clip_grad_norm<T>(autodiff::ParameterSet<T>&, double);                                        \
  template Prediction predict<T>(const model::Transformer<T>&, std::span<const model::StepInput>);              \
  template EvalSummary evaluate<T>(const model::Transformer<T>&, const ComplexityDataset&, const io::Vocabulary&); \
  template TrainSummary train<T>(model::Transformer<T>&, const ComplexityDataset&, const ComplexityDataset&,      \
                                 const CurriculumConfig&, const io::Vocabulary&, const TrainHooks<T>&);

E2EQR_INSTANTIATE(float)
E2EQR_INSTANTIATE(double)

}  // namespace e2eqr::curriculum
