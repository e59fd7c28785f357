// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/io/config.hpp"

#include <fstream>
#include <set>

#include "e2eqr/errors.hpp"

namespace e2eqr::io {

namespace {

template <typename T>
T get(const Json& j, const std::string& key) {
  try {
    const auto& v = j.at(key);
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw DataError("config key '" + key + "' must be a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw DataError("config key '" + key + "' must be a nonnegative integer");
      }
    } else {
      if (!v.is_number()) throw DataError("config key '" + key + "' must be a number");
    }
    return v.get<T>();
  } catch (const Json::exception& e) {
    throw DataError("config key '" + key + "': " + e.what());
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = get<T>(j, key);
}

}  // namespace

RunConfig parse_config(const Json& j) {
  if (!j.is_object()) throw DataError("config must be a JSON object");
  static const std::set<std::string> known{
      "curriculum", "vocab_size", "d_model", "n_heads", "d_k", "d_ff", "n_enc_layers", "n_dec_layers", "max_len",
      "mode_accumulated_sa", "mode_accumulated_ca", "gamma_low", "gamma_high", "rho", "lr_alpha", "warmup_steps",
      "batch_size", "epochs_per_main_complexity", "seed", "weight_decay", "max_grad_norm", "plateau_patience",
      "single_pass"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw DataError("unknown config key '" + key + "'");
  }

  RunConfig c;
  if (j.contains("curriculum")) {
    if (!j.at("curriculum").is_string()) throw DataError("config key 'curriculum' must be a string");
    const auto name = j.at("curriculum").get<std::string>();
    auto v = curriculum::parse_variant(name);
    if (!v) throw DataError("unknown curriculum '" + name + "'");
    c.variant = *v;
  }
  c.curriculum = curriculum::apply_variant(c.curriculum, c.variant);

  auto& m = c.model;
  read(j, "vocab_size", m.vocab_size);
  read(j, "d_model", m.d_model);
  read(j, "n_heads", m.n_heads);
  read(j, "d_ff", m.d_ff);
  read(j, "n_enc_layers", m.n_enc_layers);
  read(j, "n_dec_layers", m.n_dec_layers);
  read(j, "max_len", m.max_len);
  read(j, "mode_accumulated_sa", m.mode_accumulated_sa);
  read(j, "mode_accumulated_ca", m.mode_accumulated_ca);
  if (j.contains("d_k") && get<std::size_t>(j, "d_k") != m.d_k()) {
    throw DataError("config d_k must equal d_model / n_heads");
  }

  auto& k = c.curriculum;
  read(j, "gamma_low", k.gamma_low);
  read(j, "gamma_high", k.gamma_high);
  read(j, "rho", k.rho);
  read(j, "lr_alpha", k.lr_alpha);
  read(j, "warmup_steps", k.warmup_steps);
  read(j, "batch_size", k.batch_size);
  read(j, "epochs_per_main_complexity", k.epochs_per_main_complexity);
  read(j, "seed", k.seed);
  read(j, "weight_decay", k.weight_decay);
  read(j, "max_grad_norm", k.max_grad_norm);
  read(j, "plateau_patience", k.plateau_patience);
  read(j, "single_pass", k.single_pass);
  try {
    k.validate();
    if (m.vocab_size) m.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("invalid config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError("config " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

Json to_json(const RunConfig& c) {
  const auto& m = c.model;
  const auto& k = c.curriculum;
  Json j;
  j["curriculum"] = std::string(curriculum::variant_name(c.variant));
  j["vocab_size"] = m.vocab_size;
  j["d_model"] = m.d_model;
  j["n_heads"] = m.n_heads;
  j["d_ff"] = m.d_ff;
  j["n_enc_layers"] = m.n_enc_layers;
  j["n_dec_layers"] = m.n_dec_layers;
  j["max_len"] = m.max_len;
  j["mode_accumulated_sa"] = m.mode_accumulated_sa;
  j["mode_accumulated_ca"] = m.mode_accumulated_ca;
  j["gamma_low"] = k.gamma_low;
  j["gamma_high"] = k.gamma_high;
  j["rho"] = k.rho;
  j["lr_alpha"] = k.lr_alpha;
  j["warmup_steps"] = k.warmup_steps;
  j["batch_size"] = k.batch_size;
  j["epochs_per_main_complexity"] = k.epochs_per_main_complexity;
  j["seed"] = k.seed;
  j["weight_decay"] = k.weight_decay;
  j["max_grad_norm"] = k.max_grad_norm;
  j["plateau_patience"] = k.plateau_patience;
  j["single_pass"] = k.single_pass;
  return j;
}

}  // namespace e2eqr::io
