// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/model/transformer.hpp"

#include <cmath>
#include <random>
#include <string>

#include "e2eqr/autodiff/ops.hpp"
#include "e2eqr/errors.hpp"
#include "e2eqr/model/attention.hpp"

namespace e2eqr::model {

using autodiff::Tensor;

namespace {

constexpr double kNormEps = 1e-5;

template <typename T>
class Initializer {
 public:
  Initializer(autodiff::ParameterSet<T>& params, std::uint64_t seed) : params_(params), rng_(seed) {}

  Tensor<T> normal(const std::string& name, autodiff::Shape shape, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    std::vector<T> data(autodiff::shape_size(shape));
    for (auto& x : data) x = static_cast<T>(dist(rng_));
    return params_.add(name, Tensor<T>::from_data(std::move(shape), std::move(data)));
  }

  Tensor<T> constant(const std::string& name, autodiff::Shape shape, double value) {
    std::vector<T> data(autodiff::shape_size(shape), static_cast<T>(value));
    return params_.add(name, Tensor<T>::from_data(std::move(shape), std::move(data)));
  }

  NormWeights<T> norm(const std::string& prefix, std::size_t d) {
    return {constant(prefix + ".gain", {d}, 1.0), constant(prefix + ".bias", {d}, 0.0)};
  }

  AttentionWeights<T> attention(const std::string& prefix, std::size_t d) {
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    AttentionWeights<T> w;
    w.wq = normal(prefix + ".wq", {d, d}, s);
    w.bq = constant(prefix + ".bq", {d}, 0.0);
    w.wk = normal(prefix + ".wk", {d, d}, s);
    w.bk = constant(prefix + ".bk", {d}, 0.0);
    w.wv = normal(prefix + ".wv", {d, d}, s);
    w.bv = constant(prefix + ".bv", {d}, 0.0);
    w.wo = normal(prefix + ".wo", {d, d}, s);
    w.bo = constant(prefix + ".bo", {d}, 0.0);
    return w;
  }

  FeedForwardWeights<T> feed_forward(const std::string& prefix, std::size_t d, std::size_t d_ff) {
    FeedForwardWeights<T> w;
    w.w1 = normal(prefix + ".w1", {d, d_ff}, 1.0 / std::sqrt(static_cast<double>(d)));
    w.b1 = constant(prefix + ".b1", {d_ff}, 0.0);
    w.w2 = normal(prefix + ".w2", {d_ff, d}, 1.0 / std::sqrt(static_cast<double>(d_ff)));
    w.b2 = constant(prefix + ".b2", {d}, 0.0);
    return w;
  }

 private:
  autodiff::ParameterSet<T>& params_;
  std::mt19937_64 rng_;
};

template <typename T>
Tensor<T> sinusoid_table(std::size_t max_len, std::size_t d) {
  std::vector<T> data(max_len * d);
  for (std::size_t pos = 0; pos < max_len; ++pos) {
    for (std::size_t i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / static_cast<double>(d));
      const double angle = static_cast<double>(pos) * rate;
      data[pos * d + i] = static_cast<T>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return Tensor<T>::from_data({max_len, d}, std::move(data));
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  return autodiff::add_row(autodiff::matmul(x, w), b);
}

template <typename T>
Tensor<T> norm(const Tensor<T>& x, const NormWeights<T>& w) {
  return autodiff::layer_norm(x, w.gain, w.bias, static_cast<T>(kNormEps));
}

template <typename T>
Tensor<T> feed_forward(const Tensor<T>& x, const FeedForwardWeights<T>& w) {
  return linear(autodiff::gelu(linear(x, w.w1, w.b1)), w.w2, w.b2);
}

template <typename T>
KeyValue<T> project_kv(const Tensor<T>& x, const AttentionWeights<T>& w) {
  return {linear(x, w.wk, w.bk), linear(x, w.wv, w.bv)};
}

}  // namespace

template <typename T>
Transformer<T>::Transformer(ModelConfig config, std::uint64_t seed) : config_(config) {
  config_.validate();
  const std::size_t d = config_.d_model;
  Initializer<T> init(params_, seed);
  enc_embed_ = init.normal("enc.embed", {config_.vocab_size, d}, 1.0);
  for (std::size_t i = 0; i < config_.n_enc_layers; ++i) {
    const std::string p = "enc.layer" + std::to_string(i);
    EncoderLayer<T> layer;
    layer.ln1 = init.norm(p + ".ln1", d);
    layer.sa = init.attention(p + ".sa", d);
    layer.ln2 = init.norm(p + ".ln2", d);
    layer.ff = init.feed_forward(p + ".ff", d, config_.d_ff);
    enc_layers_.push_back(std::move(layer));
  }
  enc_norm_ = init.norm("enc.ln_f", d);
  dec_embed_ = init.normal("dec.embed", {config_.vocab_size, d}, 1.0);
  for (std::size_t i = 0; i < config_.n_dec_layers; ++i) {
    const std::string p = "dec.layer" + std::to_string(i);
    DecoderLayer<T> layer;
    layer.ln1 = init.norm(p + ".ln1", d);
    layer.sa = init.attention(p + ".sa", d);
    layer.ln2 = init.norm(p + ".ln2", d);
    layer.ca = init.attention(p + ".ca", d);
    layer.ln3 = init.norm(p + ".ln3", d);
    layer.ff = init.feed_forward(p + ".ff", d, config_.d_ff);
    dec_layers_.push_back(std::move(layer));
  }
  dec_norm_ = init.norm("dec.ln_f", d);
  out_w_ = init.normal("dec.out.w", {d, config_.vocab_size}, 1.0 / std::sqrt(static_cast<double>(d)));
  out_b_ = init.constant("dec.out.b", {config_.vocab_size}, 0.0);
  positions_ = sinusoid_table<T>(config_.max_len, d);
}

template <typename T>
void Transformer<T>::set_accumulation(bool self_attention, bool cross_attention) {
  config_.mode_accumulated_sa = self_attention;
  config_.mode_accumulated_ca = cross_attention;
}

template <typename T>
Tensor<T> Transformer<T>::encode(std::span<const TokenId> tokens) const {
  if (tokens.empty()) throw ContractError("encode: empty token sequence");
  if (tokens.size() > config_.max_len) {
    throw LengthError("encode: input of " + std::to_string(tokens.size()) + " tokens exceeds max_len " +
                      std::to_string(config_.max_len));
  }
  auto x = autodiff::add(autodiff::embedding(enc_embed_, tokens), autodiff::slice_rows(positions_, 0, tokens.size()));
  for (const auto& layer : enc_layers_) {
    auto h = norm(x, layer.ln1);
    auto q = linear(h, layer.sa.wq, layer.sa.bq);
    auto kv = project_kv(h, layer.sa);
    auto a = accumulated_attention<T>(q, {}, kv, /*causal=*/false, 0, config_.n_heads);
    x = autodiff::add(x, linear(a, layer.sa.wo, layer.sa.bo));
    x = autodiff::add(x, feed_forward(norm(x, layer.ln2), layer.ff));
  }
  return norm(x, enc_norm_);
}

template <typename T>
StepState<T> Transformer<T>::begin_step(const Tensor<T>& encoded) const {
  if (encoded.rank() != 2 || encoded.cols() != config_.d_model) {
    throw DimensionError("begin_step: encoder output must be (l x " + std::to_string(config_.d_model) + "), got " +
                         autodiff::shape_string(encoded.shape()));
  }
  StepState<T> state;
  state.self.resize(dec_layers_.size());
  for (const auto& layer : dec_layers_) state.cross.push_back(project_kv(encoded, layer.ca));
  return state;
}

template <typename T>
Tensor<T> Transformer<T>::decode(std::span<const TokenId> tokens, StepState<T>& state, const AttentionCache<T>& cache,
                                 bool want_logits) const {
  if (tokens.empty()) throw ContractError("decode: no tokens");
  if (state.cross.size() != dec_layers_.size()) throw ContractError("decode: step state was not begun");
  if (cache.n_layers() != dec_layers_.size()) throw DimensionError("decode: cache layer count mismatch");
  const std::size_t start = state.length;
  if (start + tokens.size() > config_.max_len) {
    throw LengthError("decode: position " + std::to_string(start + tokens.size()) + " exceeds max_len " +
                      std::to_string(config_.max_len));
  }
  auto x = autodiff::add(autodiff::embedding(dec_embed_, tokens),
                         autodiff::slice_rows(positions_, start, tokens.size()));
  for (std::size_t l = 0; l < dec_layers_.size(); ++l) {
    const auto& layer = dec_layers_[l];

    auto h = norm(x, layer.ln1);
    auto q = linear(h, layer.sa.wq, layer.sa.bq);
    auto kv = project_kv(h, layer.sa);
    auto& own = state.self[l];
    if (own.keys.defined()) {
      const Tensor<T> ks[] = {own.keys, kv.keys};
      const Tensor<T> vs[] = {own.values, kv.values};
      own = {autodiff::concat_rows<T>(ks), autodiff::concat_rows<T>(vs)};
    } else {
      own = kv;
    }
    // Only the self-attention rows are needed past this point.
    if (!want_logits && l + 1 == dec_layers_.size()) break;
    std::span<const KeyValue<T>> prior_sa;
    if (config_.mode_accumulated_sa) prior_sa = cache.sa_blocks(l);
    auto a = accumulated_attention<T>(q, prior_sa, own, /*causal=*/true, start, config_.n_heads);
    x = autodiff::add(x, linear(a, layer.sa.wo, layer.sa.bo));

    h = norm(x, layer.ln2);
    q = linear(h, layer.ca.wq, layer.ca.bq);
    std::span<const KeyValue<T>> prior_ca;
    if (config_.mode_accumulated_ca) prior_ca = cache.ca_blocks(l);
    a = accumulated_attention<T>(q, prior_ca, state.cross[l], /*causal=*/false, 0, config_.n_heads);
    x = autodiff::add(x, linear(a, layer.ca.wo, layer.ca.bo));

    x = autodiff::add(x, feed_forward(norm(x, layer.ln3), layer.ff));
  }
  state.length += tokens.size();
  if (!want_logits) return {};
  return linear(norm(x, dec_norm_), out_w_, out_b_);
}

template class Transformer<float>;
template class Transformer<double>;

}  // namespace e2eqr::model
