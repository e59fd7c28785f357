// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include "e2eqr/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <set>

#include "e2eqr/autodiff/grad_check.hpp"
#include "e2eqr/errors.hpp"
#include "e2eqr/io/checkpoint.hpp"
#include "e2eqr/io/config.hpp"
#include "e2eqr/io/hashing.hpp"
#include "e2eqr/model/rewriter.hpp"

namespace e2eqr::cli {

namespace {

constexpr const char* kVersion = "0.1.0";

std::string precision_name(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

/// Configuration snapshot, seed and input hashes for one run.
void write_manifest(const fs::path& path, const std::string& command, const io::Json& config,
                    std::optional<std::uint64_t> seed, const std::vector<fs::path>& inputs) {
  io::Json m;
  m["command"] = command;
  m["version"] = kVersion;
  m["config"] = config;
  m["seed"] = seed ? io::Json(*seed) : io::Json(nullptr);
  io::Json hashes = io::Json::object();
  for (const auto& p : inputs) hashes[p.string()] = io::hex64(io::hash_file(p));
  m["inputs"] = hashes;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << m.dump(2) << '\n';
}

fs::path sidecar(const fs::path& p) { return fs::path(p.string() + ".manifest.json"); }

std::vector<docgraph::ArrangedExample> arranged_or_throw(const std::vector<io::DatasetRecord>& records) {
  std::vector<docgraph::ArrangedExample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    try {
      out.push_back(io::to_arranged(r));
    } catch (const DataError&) {
      throw;
    } catch (const Error& e) {
      throw DataError("record " + r.id + ": " + e.what());
    }
  }
  return out;
}

io::Json to_json(const curriculum::LogRecord& r) {
  io::Json j;
  j["step"] = r.step;
  j["H"] = r.H;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["weighted_loss"] = r.weighted_loss;
  j["val_loss"] = r.val_loss;
  j["rouge_l"] = r.rouge_l;
  j["exact_match"] = r.exact_match;
  return j;
}

template <typename T>
io::TrainerSnapshot<T> snapshot(const curriculum::TrainState& s, curriculum::AdamW<T>& opt) {
  io::TrainerSnapshot<T> t;
  t.step = s.step;
  t.main_complexity = s.main_complexity;
  t.optimizer_steps = opt.steps();
  t.rng_state = s.rng_state;
  t.first_moments = opt.first_moments();
  t.second_moments = opt.second_moments();
  return t;
}

template <typename T>
curriculum::TrainSummary train_with(const io::RunConfig& cfg, const curriculum::ComplexityDataset& train_set,
                                    const curriculum::ComplexityDataset& val_set, const io::Vocabulary& vocab,
                                    const TrainOptions& options) {
  model::Transformer<T> m(cfg.model, cfg.curriculum.seed);
  std::ofstream log(options.out_dir / "metrics.jsonl");
  if (!log) throw IoError("cannot write " + (options.out_dir / "metrics.jsonl").string());
  curriculum::TrainHooks<T> hooks;
  hooks.on_log = [&](const curriculum::LogRecord& r) {
    log << to_json(r).dump() << '\n';
    log.flush();
    if (options.progress) {
      *options.progress << "H=" << r.H << " epoch=" << r.epoch << " step=" << r.step << " loss=" << r.loss
                        << " val_loss=" << r.val_loss << " rouge_l=" << r.rouge_l << " em=" << r.exact_match << '\n';
    }
  };
  hooks.on_complexity_done = [&](std::size_t H, const curriculum::TrainState& s, curriculum::AdamW<T>& opt) {
    const auto snap = snapshot(s, opt);
    io::save_checkpoint(options.out_dir / ("checkpoint-h" + std::to_string(H) + ".ckpt"), m, vocab.hash(), &snap);
  };
  auto summary = curriculum::train(m, train_set, val_set, cfg.curriculum, vocab, hooks);
  io::save_checkpoint(options.out_dir / "final.ckpt", m, vocab.hash());
  return summary;
}

std::string decode(const io::Vocabulary& vocab, const std::vector<TokenId>& ids) {
  const auto tokens = vocab.decode(ids);
  return io::join_tokens(tokens);
}

template <typename T>
std::vector<PredictionRecord> generate_with(const GenerateOptions& options, const io::Vocabulary& vocab,
                                            const std::vector<io::DatasetRecord>& records) {
  auto loaded = io::load_checkpoint<T>(options.checkpoint);
  auto& m = loaded.model;
  const bool sa = options.ablate != Ablation::kSelfAttention && m.config().mode_accumulated_sa;
  const bool ca = options.ablate != Ablation::kCrossAttention && m.config().mode_accumulated_ca;
  m.set_accumulation(sa, ca);
  const auto examples = arranged_or_throw(records);
  std::vector<PredictionRecord> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto enc = curriculum::encode_example(examples[i], vocab, m.config().max_len);
    const auto pred = curriculum::predict(m, enc.steps);
    PredictionRecord p;
    p.id = records[i].id;
    p.hops = records[i].hops;
    p.question = decode(vocab, pred.question);
    p.truncated = pred.truncated;
    if (options.emit_intermediates) {
      std::vector<std::string> inter;
      for (const auto& q : pred.intermediates) inter.push_back(decode(vocab, q));
      p.intermediates = std::move(inter);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

ArrangeSummary cmd_arrange(const fs::path& input, const fs::path& output) {
  std::ifstream in(input);
  if (!in) throw IoError("cannot read " + input.string());
  ArrangeSummary s;
  std::vector<io::DatasetRecord> arranged;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++s.total;
    std::string id = "line " + std::to_string(line_no);
    try {
      const auto j = io::Json::parse(line);
      if (j.is_object() && j.contains("id") && j.at("id").is_string()) id = j.at("id").get<std::string>();
      auto r = io::record_from_json(j);
      io::arrange_record(r);
      arranged.push_back(std::move(r));
      ++s.arranged;
    } catch (const io::Json::exception& e) {
      s.errors.push_back(id + ": " + e.what());
    } catch (const Error& e) {
      s.errors.push_back(id + ": " + e.what());
    }
  }
  io::write_dataset(output, arranged);
  write_manifest(sidecar(output), "arrange", io::Json::object(), std::nullopt, {input});
  return s;
}

curriculum::TrainSummary cmd_train(const TrainOptions& options) {
  auto cfg = io::load_config(options.config);
  if (options.seed) cfg.curriculum.seed = *options.seed;
  const auto vocab_path = options.data_dir / "vocab.txt";
  const auto vocab = io::Vocabulary::load(vocab_path);
  if (cfg.model.vocab_size == 0) {
    cfg.model.vocab_size = vocab.size();
  } else if (cfg.model.vocab_size != vocab.size()) {
    throw DataError("config vocab_size " + std::to_string(cfg.model.vocab_size) + " differs from the " +
                    std::to_string(vocab.size()) + " tokens in " + vocab_path.string());
  }
  try {
    cfg.model.validate();
  } catch (const ContractError& e) {
    throw DataError(std::string("invalid model config: ") + e.what());
  }

  const auto train_path = options.data_dir / "train.jsonl";
  const auto val_path = options.data_dir / "val.jsonl";
  const auto train_records = io::read_dataset(train_path);
  const auto val_records = fs::exists(val_path) ? io::read_dataset(val_path) : std::vector<io::DatasetRecord>{};
  const auto train_set = curriculum::encode_dataset(arranged_or_throw(train_records), vocab, cfg.model.max_len);
  const auto val_set = curriculum::encode_dataset(arranged_or_throw(val_records), vocab, cfg.model.max_len);
  if (train_set.empty()) throw DataError(train_path.string() + " holds no records");
  const std::size_t top = train_set.rbegin()->first;
  for (std::size_t h = 1; h <= top; ++h) {
    if (!train_set.count(h)) throw DataError("training data has no " + std::to_string(h) + "-hop records");
  }

  fs::create_directories(options.out_dir);
  vocab.save(options.out_dir / "vocab.txt");
  io::Json snap = io::to_json(cfg);
  snap["precision"] = precision_name(options.precision);
  std::vector<fs::path> inputs{options.config, vocab_path, train_path};
  if (fs::exists(val_path)) inputs.push_back(val_path);
  write_manifest(options.out_dir / "manifest.json", "train", snap, cfg.curriculum.seed, inputs);
  if (options.precision == Precision::kF32) return train_with<float>(cfg, train_set, val_set, vocab, options);
  return train_with<double>(cfg, train_set, val_set, vocab, options);
}

io::Json to_json(const PredictionRecord& p) {
  io::Json j;
  j["id"] = p.id;
  j["hops"] = p.hops;
  j["question"] = p.question;
  j["truncated"] = p.truncated;
  if (p.intermediates) j["intermediates"] = *p.intermediates;
  return j;
}

PredictionRecord prediction_from_json(const io::Json& j) {
  PredictionRecord p;
  try {
    p.id = j.at("id").get<std::string>();
    p.hops = j.at("hops").get<std::size_t>();
    p.question = j.at("question").get<std::string>();
    if (j.contains("truncated")) p.truncated = j.at("truncated").get<bool>();
    if (j.contains("intermediates")) p.intermediates = j.at("intermediates").get<std::vector<std::string>>();
  } catch (const io::Json::exception& e) {
    throw DataError("prediction " + (p.id.empty() ? std::string("?") : p.id) + ": " + e.what());
  }
  return p;
}

std::vector<PredictionRecord> cmd_generate(const GenerateOptions& options) {
  const auto header = io::read_checkpoint_header(options.checkpoint);
  const auto stored = header.precision == 4 ? Precision::kF32 : Precision::kF64;
  if (options.precision && *options.precision != stored) {
    throw CompatibilityError("checkpoint holds " + precision_name(stored) + " weights, " +
                             precision_name(*options.precision) + " was requested");
  }
  const auto vocab_path = options.vocab ? *options.vocab : options.checkpoint.parent_path() / "vocab.txt";
  const auto vocab = io::Vocabulary::load(vocab_path);
  if (vocab.hash() != header.vocab_hash) {
    throw CompatibilityError("vocabulary " + vocab_path.string() + " (hash " + io::hex64(vocab.hash()) +
                             ") does not match the checkpoint (hash " + io::hex64(header.vocab_hash) + ")");
  }
  const auto records = io::read_dataset(options.dataset);
  auto preds = stored == Precision::kF32 ? generate_with<float>(options, vocab, records)
                                         : generate_with<double>(options, vocab, records);
  std::vector<io::Json> lines;
  for (const auto& p : preds) lines.push_back(to_json(p));
  io::write_jsonl(options.output, lines);
  io::Json snap;
  snap["emit_intermediates"] = options.emit_intermediates;
  snap["ablate"] = options.ablate == Ablation::kNone            ? "none"
                   : options.ablate == Ablation::kSelfAttention ? "sa"
                                                                : "ca";
  snap["precision"] = precision_name(stored);
  write_manifest(sidecar(options.output), "generate", snap, std::nullopt,
                 {options.checkpoint, vocab_path, options.dataset});
  return preds;
}

std::vector<ReportLine> cmd_evaluate(const fs::path& predictions, const fs::path& gold, const fs::path& report) {
  std::vector<PredictionRecord> preds;
  io::for_each_jsonl(predictions, [&](std::size_t, const io::Json& j) { preds.push_back(prediction_from_json(j)); });
  const auto refs = io::read_dataset(gold);

  std::map<std::string, const io::DatasetRecord*> by_id;
  std::vector<std::string> duplicate, unknown, missing;
  for (const auto& r : refs) {
    if (!by_id.emplace(r.id, &r).second) duplicate.push_back(r.id);
  }
  std::set<std::string> seen;
  for (const auto& p : preds) {
    if (!seen.insert(p.id).second) duplicate.push_back(p.id);
    if (!by_id.count(p.id)) unknown.push_back(p.id);
  }
  for (const auto& r : refs) {
    if (!seen.count(r.id)) missing.push_back(r.id);
  }
  if (!duplicate.empty() || !unknown.empty() || !missing.empty()) {
    auto list = [](const std::vector<std::string>& ids) {
      std::string s;
      for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
      return s;
    };
    std::string msg = "prediction and gold ids do not align;";
    if (!missing.empty()) msg += " missing predictions: " + list(missing) + ";";
    if (!unknown.empty()) msg += " unknown ids: " + list(unknown) + ";";
    if (!duplicate.empty()) msg += " duplicate ids: " + list(duplicate) + ";";
    msg.pop_back();
    throw AlignmentError(msg);
  }
  if (preds.empty()) throw DataError("no predictions to evaluate in " + predictions.string());

  std::vector<metrics::EvalPair> pairs;
  for (const auto& p : preds) {
    const auto* r = by_id.at(p.id);
    pairs.push_back({p.id, r->hops, metrics::eval_tokenize(p.question), {metrics::eval_tokenize(r->question)}});
  }
  const auto corpus = metrics::corpus_eval(pairs);
  std::vector<ReportLine> out;
  out.push_back({"all", pairs.size(), corpus.mean});
  for (const auto& [hops, scores] : corpus.mean_by_hops) {
    out.push_back({std::to_string(hops) + "-hop", corpus.count_by_hops.at(hops), scores});
  }
  std::vector<io::Json> lines;
  for (const auto& l : out) {
    io::Json j;
    j["group"] = l.group;
    j["count"] = l.count;
    for (auto m : metrics::all_metrics()) {
      const std::string name(metrics::metric_name(m));
      j[name] = l.scores.at(name);
    }
    lines.push_back(std::move(j));
  }
  io::write_jsonl(report, lines);
  write_manifest(sidecar(report), "evaluate", io::Json::object(), std::nullopt, {predictions, gold});
  return out;
}

void cmd_gen_data(const GenDataOptions& options) {
  if (options.counts.empty()) throw DataError("gen-data needs at least one hop count");
  const auto world = synth::generate_world(options.seed, options.world);
  auto splits = synth::make_splits(world, options.counts, options.seed);
  fs::create_directories(options.out_dir);
  for (auto* part : {&splits.train, &splits.val, &splits.test}) {
    for (auto& r : *part) io::arrange_record(r);
  }
  io::write_dataset(options.out_dir / "train.jsonl", splits.train);
  io::write_dataset(options.out_dir / "val.jsonl", splits.val);
  io::write_dataset(options.out_dir / "test.jsonl", splits.test);
  synth::world_vocabulary(world).save(options.out_dir / "vocab.txt");

  io::Json snap;
  snap["world"] = {{"persons", options.world.persons},
                   {"films", options.world.films},
                   {"cities", options.world.cities},
                   {"countries", options.world.countries},
                   {"relations", options.world.relations}};
  io::Json counts = io::Json::object();
  for (const auto& [h, c] : options.counts) {
    counts[std::to_string(h)] = {{"train", c.train}, {"val", c.val}, {"test", c.test}};
  }
  snap["counts"] = counts;
  write_manifest(options.out_dir / "manifest.json", "gen-data", snap, options.seed, {});
}

std::vector<GradCheckResult> cmd_grad_check(const GradCheckOptions& options) {
  model::ModelConfig cfg;
  cfg.vocab_size = 24;
  cfg.d_model = 8;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  cfg.n_enc_layers = 2;
  cfg.n_dec_layers = 2;
  cfg.max_len = 12;
  const model::SpecialTokens specials;
  // The last id appears only in the first step's document, so its encoder
  // embedding row is reached by the final-step loss only through the cache.
  const auto probe = static_cast<TokenId>(cfg.vocab_size - 1);

  std::vector<GradCheckResult> results;
  for (const auto n : options.step_counts) {
    if (n < 1) throw DataError("grad-check step counts must be positive");
    std::mt19937_64 rng(options.seed * 31 + n);
    std::uniform_int_distribution<int> tok(8, probe - 1);
    std::uniform_int_distribution<std::size_t> len(3, 6);
    auto draw = [&](std::size_t k) {
      std::vector<TokenId> v(k);
      for (auto& t : v) t = tok(rng);
      return v;
    };
    std::vector<model::StepInput> steps;
    for (std::size_t t = 0; t < n; ++t) steps.push_back({draw(len(rng)), t + 1});
    steps.front().tokens.back() = probe;
    model::RewriteOptions ro;
    std::vector<std::vector<TokenId>> pinned;
    for (std::size_t t = 0; t + 1 < n; ++t) pinned.push_back(draw(3));
    ro.pinned_intermediates = pinned;
    const auto gold = draw(4);
    ro.teacher_forced_final = gold;
    const auto targets = model::teacher_targets(gold, specials.eos);

    model::Transformer<double> m(cfg, options.seed + n);
    auto loss = [&] {
      auto r = model::rewrite_forward<double>(m, steps, specials, ro);
      return model::final_step_loss(r.final_logits, targets);
    };
    const auto report = autodiff::grad_check(loss, m.parameters(), options.eps, options.samples, options.seed + n);

    loss().backward();
    const auto* embed = m.parameters().find("enc.embed");
    const auto g = embed->tensor.grad();
    double norm = 0;
    for (std::size_t c = 0; c < cfg.d_model; ++c) {
      const double v = g[static_cast<std::size_t>(probe) * cfg.d_model + c];
      norm += v * v;
    }
    m.parameters().zero_grad();
    results.push_back({n, report.max_relative_error, report.samples.size(), std::sqrt(norm)});
  }
  return results;
}

}  // namespace e2eqr::cli
