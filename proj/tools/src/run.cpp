// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <ostream>
#include <sstream>

#include "e2eqr/cli/commands.hpp"
#include "e2eqr/errors.hpp"

namespace e2eqr::cli {

namespace {

/// "2:2000:50:200" -> hops 2 with 2000 train, 50 val, 200 test records.
std::pair<std::size_t, synth::SplitCounts> parse_hop_spec(const std::string& spec) {
  std::vector<std::size_t> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (item.empty() || pos != item.size()) throw CLI::ValidationError("--hops", "bad count in '" + spec + "'");
    parts.push_back(v);
  }
  if (parts.size() != 4) throw CLI::ValidationError("--hops", "expected HOPS:TRAIN:VAL:TEST, got '" + spec + "'");
  return {parts[0], {parts[1], parts[2], parts[3]}};
}

const std::map<std::string, Precision> kPrecisions{{"f32", Precision::kF32}, {"f64", Precision::kF64}};
const std::map<std::string, Ablation> kAblations{{"sa", Ablation::kSelfAttention}, {"ca", Ablation::kCrossAttention}};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-hop question generation by end-to-end question rewriting", "e2eqr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "e2eqr 0.1.0");

  std::string input, output, data_dir, out_dir, config, checkpoint, vocab, gold, report;
  std::optional<std::uint64_t> seed;
  Precision precision = Precision::kF32;
  std::optional<Precision> gen_precision;
  Ablation ablate = Ablation::kNone;
  bool emit = false;

  auto* arrange = app.add_subcommand("arrange", "Order documents and attach bridge entities");
  arrange->add_option("input", input, "Dataset file (JSON lines)")->required();
  arrange->add_option("output", output, "Arranged dataset file")->required();

  auto* train = app.add_subcommand("train", "Train with the curriculum");
  train->add_option("--config", config, "JSON config file")->required();
  train->add_option("data_dir", data_dir, "Directory with train.jsonl, val.jsonl and vocab.txt")->required();
  train->add_option("out_dir", out_dir, "Output directory")->required();
  train->add_option("--seed", seed, "Overrides the config seed");
  train->add_option("--precision", precision, "f32 or f64")->transform(CLI::CheckedTransformer(kPrecisions));

  auto* generate = app.add_subcommand("generate", "Generate questions with a checkpoint");
  generate->add_option("checkpoint", checkpoint, "Checkpoint file")->required();
  generate->add_option("dataset", input, "Dataset file")->required();
  generate->add_option("output", output, "Predictions file")->required();
  generate->add_option("--vocab", vocab, "Vocabulary file (default: vocab.txt beside the checkpoint)");
  generate->add_flag("--emit-intermediates", emit, "Also write the intermediate questions");
  generate->add_option("--ablate", ablate, "Disable accumulated attention: sa or ca")
      ->transform(CLI::CheckedTransformer(kAblations));
  generate->add_option("--precision", gen_precision, "Expected checkpoint precision")
      ->transform(CLI::CheckedTransformer(kPrecisions));

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against gold questions");
  evaluate->add_option("predictions", input, "Predictions file")->required();
  evaluate->add_option("gold", gold, "Gold dataset file")->required();
  evaluate->add_option("report", report, "Report file")->required();

  GenDataOptions gd;
  std::vector<std::string> hop_specs{"1:500:20:20", "2:2000:50:200"};
  std::vector<std::size_t> world{gd.world.persons, gd.world.films, gd.world.cities, gd.world.countries};
  auto* gen_data = app.add_subcommand("gen-data", "Write a synthetic multi-hop dataset");
  gen_data->add_option("out_dir", out_dir, "Output directory")->required();
  gen_data->add_option("--seed", seed, "Generator seed");
  gen_data->add_option("--hops", hop_specs, "HOPS:TRAIN:VAL:TEST, repeatable")->capture_default_str();
  gen_data->add_option("--world", world, "Entity counts: persons films cities countries")->expected(4);
  gen_data->add_option("--relations", gd.world.relations, "Active relations (1-7)")->capture_default_str();

  GradCheckOptions gc;
  auto* grad_check = app.add_subcommand("grad-check", "Check unrolled gradients against finite differences");
  grad_check->add_option("--seed", seed, "Seed for the model and inputs");
  grad_check->add_option("--samples", gc.samples, "Coordinates per check")->capture_default_str();
  grad_check->add_option("--steps", gc.step_counts, "Rewriting step counts")->capture_default_str();
  grad_check->add_option("--tolerance", gc.tolerance, "Largest accepted relative error")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*arrange) {
      const auto s = cmd_arrange(input, output);
      for (const auto& e : s.errors) err << "skipped " << e << '\n';
      out << "arranged " << s.arranged << " of " << s.total << " records, " << s.errors.size() << " skipped\n";
    } else if (*train) {
      TrainOptions o{config, data_dir, out_dir, seed, precision, &out};
      const auto s = cmd_train(o);
      out << "trained " << s.steps << " steps; checkpoints in " << out_dir << '\n';
    } else if (*generate) {
      GenerateOptions o;
      o.checkpoint = checkpoint;
      o.dataset = input;
      o.output = output;
      if (!vocab.empty()) o.vocab = vocab;
      o.emit_intermediates = emit;
      o.ablate = ablate;
      o.precision = gen_precision;
      const auto preds = cmd_generate(o);
      out << "wrote " << preds.size() << " predictions to " << output << '\n';
    } else if (*evaluate) {
      for (const auto& line : cmd_evaluate(input, gold, report)) {
        out << line.group << " n=" << line.count;
        for (const auto& [name, v] : line.scores) out << ' ' << name << '=' << v;
        out << '\n';
      }
    } else if (*gen_data) {
      gd.out_dir = out_dir;
      gd.seed = seed.value_or(0);
      gd.world.persons = world[0];
      gd.world.films = world[1];
      gd.world.cities = world[2];
      gd.world.countries = world[3];
      for (const auto& s : hop_specs) {
        const auto [h, c] = parse_hop_spec(s);
        gd.counts[h] = c;
      }
      cmd_gen_data(gd);
      out << "wrote dataset to " << out_dir << '\n';
    } else if (*grad_check) {
      gc.seed = seed.value_or(0);
      bool ok = true;
      for (const auto& r : cmd_grad_check(gc)) {
        const bool pass = r.max_relative_error <= gc.tolerance && r.first_step_only_grad_norm > 0;
        ok = ok && pass;
        out << "steps=" << r.steps << " samples=" << r.samples << " max_relative_error=" << r.max_relative_error
            << " first_step_grad_norm=" << r.first_step_only_grad_norm << (pass ? " ok" : " FAIL") << '\n';
      }
      return ok ? kExitOk : kExitNumeric;
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace e2eqr::cli
