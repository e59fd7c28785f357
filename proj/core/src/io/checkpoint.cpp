// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "e2eqr/errors.hpp"

namespace e2eqr::io {

namespace {

constexpr char kMagic[4] = {'E', '2', 'Q', 'R'};

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(U)];
    std::memcpy(b, &v, sizeof(U));
    for (std::size_t i = 0; i < sizeof(U) / 2; ++i) std::swap(b[i], b[sizeof(U) - 1 - i]);
    std::memcpy(&v, b, sizeof(U));
  }
  return v;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot write checkpoint " + path.string());
  }
  template <typename U>
  void put(U v) {
    v = to_little(v);
    out_.write(reinterpret_cast<const char*>(&v), sizeof(U));
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void str(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  template <typename T>
  void values(std::span<const T> v) {
    for (auto x : v) put<T>(x);
  }
  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed for " + path_.string());
  }

 private:
  std::ofstream out_;
  std::filesystem::path path_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path) {
    if (!in_) throw IoError("cannot read checkpoint " + path.string());
  }
  template <typename U>
  U get() {
    U v;
    raw(&v, sizeof(U));
    return to_little(v);
  }
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw DataError("checkpoint " + path_.string() + " is truncated");
  }
  std::string str(std::size_t limit = 1 << 20) {
    const auto n = get<std::uint32_t>();
    if (n > limit) throw DataError("checkpoint " + path_.string() + " has an oversized string");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  template <typename T>
  std::vector<T> values(std::size_t n) {
    std::vector<T> v(n);
    for (auto& x : v) x = get<T>();
    return v;
  }
  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::ifstream in_;
  std::filesystem::path path_;
};

CheckpointHeader read_header(Reader& r, const std::filesystem::path& path) {
  char magic[4];
  r.raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw DataError(path.string() + " is not a checkpoint");
  CheckpointHeader h;
  h.version = r.get<std::uint32_t>();
  if (h.version != kCheckpointVersion) {
    throw DataError("checkpoint version " + std::to_string(h.version) + " is not supported");
  }
  h.precision = r.get<std::uint8_t>();
  if (h.precision != 4 && h.precision != 8) throw DataError("checkpoint precision must be 4 or 8 bytes");
  auto& c = h.config;
  c.vocab_size = r.get<std::uint64_t>();
  c.d_model = r.get<std::uint64_t>();
  c.n_heads = r.get<std::uint64_t>();
  c.d_ff = r.get<std::uint64_t>();
  c.n_enc_layers = r.get<std::uint64_t>();
  c.n_dec_layers = r.get<std::uint64_t>();
  c.max_len = r.get<std::uint64_t>();
  c.mode_accumulated_sa = r.get<std::uint8_t>() != 0;
  c.mode_accumulated_ca = r.get<std::uint8_t>() != 0;
  h.vocab_hash = r.get<std::uint64_t>();
  try {
    c.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("checkpoint holds an invalid model config: ") + e.what());
  }
  return h;
}

}  // namespace

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const model::Transformer<T>& model, std::uint64_t vocab_hash,
                     const TrainerSnapshot<T>* trainer) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint8_t>(sizeof(T));
  const auto& c = model.config();
  for (auto v : {c.vocab_size, c.d_model, c.n_heads, c.d_ff, c.n_enc_layers, c.n_dec_layers, c.max_len}) {
    w.put<std::uint64_t>(v);
  }
  w.put<std::uint8_t>(c.mode_accumulated_sa);
  w.put<std::uint8_t>(c.mode_accumulated_ca);
  w.put<std::uint64_t>(vocab_hash);
  const auto& items = model.parameters().items();
  w.put<std::uint64_t>(items.size());
  for (const auto& p : items) {
    w.str(p.name);
    const auto& shape = p.tensor.shape();
    w.put<std::uint32_t>(static_cast<std::uint32_t>(shape.size()));
    for (auto d : shape) w.put<std::uint64_t>(d);
    w.values<T>(p.tensor.data());
  }
  w.put<std::uint8_t>(trainer ? 1 : 0);
  if (trainer) {
    if (trainer->first_moments.size() != items.size() || trainer->second_moments.size() != items.size()) {
      throw ContractError("trainer snapshot does not match the parameter count");
    }
    w.put<std::uint64_t>(trainer->step);
    w.put<std::uint64_t>(trainer->main_complexity);
    w.put<std::uint64_t>(trainer->optimizer_steps);
    w.str(trainer->rng_state);
    for (const auto* moments : {&trainer->first_moments, &trainer->second_moments}) {
      for (std::size_t k = 0; k < items.size(); ++k) {
        if ((*moments)[k].size() != items[k].tensor.size()) throw ContractError("moment size mismatch");
        w.values<T>((*moments)[k]);
      }
    }
  }
  w.finish();
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  Reader r(path);
  return read_header(r, path);
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path) {
  Reader r(path);
  const auto header = read_header(r, path);
  if (header.precision != sizeof(T)) {
    throw CompatibilityError("checkpoint stores " + std::to_string(header.precision * 8) + "-bit values, expected " +
                             std::to_string(sizeof(T) * 8));
  }
  LoadedCheckpoint<T> out{header, model::Transformer<T>(header.config, 0), std::nullopt};
  auto& items = out.model.parameters().items();
  const auto count = r.get<std::uint64_t>();
  if (count != items.size()) {
    throw DataError("checkpoint has " + std::to_string(count) + " tensors, the model expects " +
                    std::to_string(items.size()));
  }
  for (auto& p : items) {
    const auto name = r.str();
    if (name != p.name) throw DataError("checkpoint tensor '" + name + "' found where '" + p.name + "' was expected");
    const auto rank = r.get<std::uint32_t>();
    autodiff::Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(r.get<std::uint64_t>());
    if (shape != p.tensor.shape()) {
      throw DataError("tensor " + name + " has shape " + autodiff::shape_string(shape) + ", expected " +
                      autodiff::shape_string(p.tensor.shape()));
    }
    auto values = r.values<T>(p.tensor.size());
    std::copy(values.begin(), values.end(), p.tensor.mutable_data().begin());
  }
  if (r.get<std::uint8_t>()) {
    TrainerSnapshot<T> t;
    t.step = r.get<std::uint64_t>();
    t.main_complexity = r.get<std::uint64_t>();
    t.optimizer_steps = r.get<std::uint64_t>();
    t.rng_state = r.str(1 << 24);
    for (auto* moments : {&t.first_moments, &t.second_moments}) {
      for (const auto& p : items) moments->push_back(r.values<T>(p.tensor.size()));
    }
    out.trainer = std::move(t);
  }
  if (!r.at_end()) throw DataError("checkpoint " + path.string() + " has trailing bytes");
  return out;
}

template void save_checkpoint<float>(const std::filesystem::path&, const model::Transformer<float>&, std::uint64_t,
                                     const TrainerSnapshot<float>*);
template void save_checkpoint<double>(const std::filesystem::path&, const model::Transformer<double>&, std::uint64_t,
                                      const TrainerSnapshot<double>*);
template LoadedCheckpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template LoadedCheckpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace e2eqr::io
