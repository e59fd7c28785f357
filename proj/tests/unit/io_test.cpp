// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "e2eqr/errors.hpp"
#include "e2eqr/io/checkpoint.hpp"
#include "e2eqr/io/config.hpp"
#include "e2eqr/io/dataset.hpp"
#include "e2eqr/io/hashing.hpp"
#include "e2eqr/model/rewriter.hpp"
#include "model_fixtures.hpp"

namespace e2eqr::io {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("e2eqr_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

template <typename T>
std::vector<double> forward_logits(const model::Transformer<T>& m) {
  std::mt19937_64 rng(4);
  auto steps = testing::random_steps(3, m.config().vocab_size, rng);
  model::RewriteOptions o;
  o.teacher_forced_final = testing::random_tokens(5, m.config().vocab_size, rng);
  autodiff::NoGradGuard ng;
  auto r = model::rewrite_forward(m, steps, model::SpecialTokens{}, o);
  return {r.final_logits.data().begin(), r.final_logits.data().end()};
}

template <typename T>
void check_round_trip() {
  TempDir dir;
  model::Transformer<T> m(testing::tiny_config(), 21);
  save_checkpoint(dir / "a.ckpt", m, 0xabcdef);
  const auto loaded = load_checkpoint<T>(dir / "a.ckpt");
  EXPECT_EQ(loaded.header.vocab_hash, 0xabcdefu);
  EXPECT_EQ(loaded.header.precision, sizeof(T));
  EXPECT_EQ(loaded.header.config, m.config());
  EXPECT_FALSE(loaded.trainer.has_value());
  const auto a = forward_logits(m), b = forward_logits(loaded.model);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]) << i;  // bit-exact
  save_checkpoint(dir / "b.ckpt", loaded.model, 0xabcdef);
  EXPECT_EQ(slurp(dir / "a.ckpt"), slurp(dir / "b.ckpt"));
}

TEST(Checkpoint, RoundTripDouble) { check_round_trip<double>(); }
TEST(Checkpoint, RoundTripFloat) { check_round_trip<float>(); }

TEST(Checkpoint, TrainerStateAndLayout) {
  TempDir dir;
  model::Transformer<float> m(testing::tiny_config(), 2);
  TrainerSnapshot<float> t;
  t.step = 12;
  t.main_complexity = 2;
  t.optimizer_steps = 12;
  t.rng_state = "1 2 3";
  for (const auto& p : m.parameters().items()) {
    t.first_moments.emplace_back(p.tensor.size(), 0.5f);
    t.second_moments.emplace_back(p.tensor.size(), 0.25f);
  }
  save_checkpoint(dir / "c.ckpt", m, 7, &t);
  const auto bytes = slurp(dir / "c.ckpt");
  EXPECT_EQ(bytes.substr(0, 4), "E2QR");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);  // version, little-endian
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 4u);  // precision
  const auto loaded = load_checkpoint<float>(dir / "c.ckpt");
  ASSERT_TRUE(loaded.trainer.has_value());
  EXPECT_EQ(loaded.trainer->step, 12u);
  EXPECT_EQ(loaded.trainer->rng_state, "1 2 3");
  EXPECT_EQ(loaded.trainer->second_moments, t.second_moments);
  EXPECT_EQ(read_checkpoint_header(dir / "c.ckpt").vocab_hash, 7u);
}

TEST(Checkpoint, Errors) {
  TempDir dir;
  model::Transformer<double> m(testing::tiny_config(), 2);
  save_checkpoint(dir / "d.ckpt", m, 1);
  EXPECT_THROW(load_checkpoint<float>(dir / "d.ckpt"), CompatibilityError);
  auto bytes = slurp(dir / "d.ckpt");
  {
    std::ofstream out(dir / "trunc.ckpt", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  EXPECT_THROW(load_checkpoint<double>(dir / "trunc.ckpt"), DataError);
  {
    auto bad = bytes;
    bad[0] = 'X';
    std::ofstream out(dir / "magic.ckpt", std::ios::binary);
    out.write(bad.data(), static_cast<std::streamsize>(bad.size()));
  }
  EXPECT_THROW(read_checkpoint_header(dir / "magic.ckpt"), DataError);
  EXPECT_THROW(load_checkpoint<double>(dir / "missing.ckpt"), IoError);
}

TEST(Config, PresetsAndOverrides) {
  const auto sbs = parse_config(Json{{"curriculum", "step_by_step"}});
  EXPECT_EQ(sbs.curriculum.gamma_low, 0.0);
  EXPECT_EQ(sbs.curriculum.gamma_high, 0.0);
  EXPECT_EQ(sbs.curriculum.rho, 0.0);
  const auto ada = parse_config(Json{{"curriculum", "adaptive"}});
  EXPECT_EQ(ada.curriculum.rho, 0.1);
  EXPECT_EQ(ada.curriculum.gamma_low, 0.8);
  EXPECT_EQ(ada.curriculum.gamma_high, 0.1);
  const auto over = parse_config(Json{{"curriculum", "cumulative"}, {"rho", 0.25}, {"d_model", 32}, {"n_heads", 2}});
  EXPECT_EQ(over.curriculum.gamma_low, 1.0);
  EXPECT_EQ(over.curriculum.rho, 0.25);
  EXPECT_EQ(over.model.d_model, 32u);
  const auto defaults = parse_config(Json::object());
  EXPECT_EQ(defaults.curriculum.lr_alpha, 3e-5);
  EXPECT_EQ(defaults.curriculum.batch_size, 8u);
  EXPECT_EQ(defaults.curriculum.warmup_steps, 1000u);
  EXPECT_EQ(parse_config(to_json(over)).curriculum, over.curriculum);
  EXPECT_EQ(parse_config(to_json(over)).model, over.model);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config(Json{{"learning_rate", 1.0}}), DataError);
  EXPECT_THROW(parse_config(Json{{"curriculum", "random"}}), DataError);
  EXPECT_THROW(parse_config(Json{{"rho", 1.5}}), DataError);
  EXPECT_THROW(parse_config(Json{{"batch_size", -1}}), DataError);
  EXPECT_THROW(parse_config(Json{{"batch_size", "8"}}), DataError);
  EXPECT_THROW(parse_config(Json{{"d_model", 64}, {"n_heads", 4}, {"d_k", 8}}), DataError);
  EXPECT_NO_THROW(parse_config(Json{{"d_model", 64}, {"n_heads", 4}, {"d_k", 16}}));
}

TEST(Dataset, JsonRoundTripAndArrangement) {
  TempDir dir;
  DatasetRecord r;
  r.id = "r1";
  r.hops = 2;
  r.answer = "person_1";
  r.question = "who directed the film starring person_2 ?";
  r.documents = {{"person_2", "person_2 starred in film_1 .", false, {"person_2", "film_1"}},
                 {"film_1", "film_1 was directed by person_1 .", true, {"film_1", "person_1"}}};
  r.reference_intermediates = std::vector<std::string>{"who directed film_1 ?"};
  write_dataset(dir / "d.jsonl", {r});
  auto back = read_dataset(dir / "d.jsonl");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(to_json(back[0]), to_json(r));
  arrange_record(back[0]);
  EXPECT_EQ(*back[0].order, (std::vector<std::size_t>{1, 0}));
  EXPECT_EQ(*back[0].bridges, (std::vector<std::vector<std::string>>{{"film_1"}}));
  const auto ex = to_arranged(back[0]);
  EXPECT_EQ(join_tokens(ex.documents[0].title), "film_1");
  const auto ex2 = to_arranged(r);  // arranged on the fly
  EXPECT_EQ(ex2.bridges, ex.bridges);

  auto wrong = r;
  wrong.hops = 3;
  EXPECT_THROW(to_arranged(wrong), DataError);
  EXPECT_THROW(record_from_json(Json{{"id", "x"}, {"hops", 1}}), DataError);
  EXPECT_THROW(record_from_json(Json::array()), DataError);
}

TEST(Dataset, MalformedLineReportsLineNumber) {
  TempDir dir;
  {
    std::ofstream out(dir / "bad.jsonl");
    out << "{}\n\n{not json\n";
  }
  try {
    for_each_jsonl(dir / "bad.jsonl", [](std::size_t, const Json&) {});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Hashing, FileHashMatchesStringHash) {
  TempDir dir;
  {
    std::ofstream out(dir / "h.txt", std::ios::binary);
    out << "abc";
  }
  Fnv1a h;
  h.update("abc");
  EXPECT_EQ(hash_file(dir / "h.txt"), h.value());
  EXPECT_EQ(h.value(), 0xe71fa2190541574bULL);  // published FNV-1a 64 test vector
  EXPECT_EQ(hex64(0x1f), "000000000000001f");
}

}  // namespace
}  // namespace e2eqr::io
