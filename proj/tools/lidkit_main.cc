// tools/lidkit_main.cc

// Copyright 2026  LIDKit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lidkit/checkpoint.h"
#include "lidkit/config.h"
#include "lidkit/dataset.h"
#include "lidkit/errors.h"
#include "lidkit/feature_archive.h"
#include "lidkit/gradcheck.h"
#include "lidkit/manifest.h"
#include "lidkit/model.h"
#include "lidkit/scoring.h"
#include "lidkit/synth.h"
#include "lidkit/trainer.h"

namespace lidkit {
namespace {

const std::vector<std::string> kKnownKeys = {
    // run identity
    "seed", "preset", "head",
    // feature pipeline
    "sample_rate", "frame_ms", "hop_ms", "fmin_hz", "fmax_hz",
    "vad_dynamic_range_db", "vad_energy_floor", "cmn_window_s",
    // training
    "batch_size", "length_min", "length_max", "lr_ladder", "momentum",
    "weight_decay", "plateau_patience", "plateau_threshold", "epochs",
    "target_accuracy",
    // synthetic data
    "synth_classes", "synth_utts_per_class", "synth_min_duration_s",
    "synth_max_duration_s", "synth_noise_floor", "synth_label_prefix",
};

struct CommonFlags {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string preset;
  std::string head;
  std::int64_t seed = -1;  // -1: keep config/default
};

void add_common_flags(CLI::App *cmd, CommonFlags &flags) {
  cmd->add_option("--config", flags.config_path, "flat key=value config file");
  cmd->add_option("--set", flags.overrides, "override a config key, e.g. --set epochs=3");
  cmd->add_option("--preset", flags.preset, "model preset: paper, tiny or desk");
  cmd->add_option("--head", flags.head, "pooling head: sap or tap");
  cmd->add_option("--seed", flags.seed, "64-bit run seed");
}

// Loads the config file, applies CLI overrides, fills in every default so
// the printed configuration and its hash describe the complete run.
KeyValueConfig resolve_config(const CommonFlags &flags) {
  KeyValueConfig cfg;
  if (!flags.config_path.empty()) cfg = KeyValueConfig::load(flags.config_path);
  for (const std::string &kv : flags.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw UsageError("--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!flags.preset.empty()) cfg.set("preset", flags.preset);
  if (!flags.head.empty()) cfg.set("head", flags.head);
  if (flags.seed >= 0) cfg.set("seed", std::to_string(flags.seed));
  cfg.require_known_keys(kKnownKeys);

  auto fill = [&](const char *key, const std::string &value) {
    if (!cfg.has(key)) cfg.set(key, value);
  };
  fill("seed", "1");
  fill("preset", "paper");
  fill("head", "sap");
  fill("sample_rate", "8000");
  fill("frame_ms", "25");
  fill("hop_ms", "10");
  fill("fmin_hz", "20");
  fill("fmax_hz", "0");
  fill("vad_dynamic_range_db", "30");
  fill("vad_energy_floor", "1e-05");
  fill("cmn_window_s", "3");
  fill("batch_size", "128");
  fill("length_min", "200");
  fill("length_max", "1000");
  fill("lr_ladder", "0.1,0.01,0.001");
  fill("momentum", "0.9");
  fill("weight_decay", "0.0001");
  fill("plateau_patience", "3");
  fill("plateau_threshold", "0.001");
  fill("epochs", "50");
  fill("target_accuracy", "0");
  fill("synth_classes", "4");
  fill("synth_utts_per_class", "50");
  fill("synth_min_duration_s", "2");
  fill("synth_max_duration_s", "10");
  fill("synth_noise_floor", "0.01");
  fill("synth_label_prefix", "lang");
  return cfg;
}

void print_resolved(const KeyValueConfig &cfg) {
  std::cout << "# resolved configuration\n";
  std::cout << cfg.resolved_text();
  std::cout << "config_hash=" << cfg.hash_hex() << "\n";
  std::cout.flush();
}

FeatureConfig feature_config_from(const KeyValueConfig &cfg) {
  FeatureConfig fc;
  fc.sample_rate = static_cast<int>(cfg.get_int("sample_rate", 8000));
  fc.frame_ms = cfg.get_double("frame_ms", 25.0);
  fc.hop_ms = cfg.get_double("hop_ms", 10.0);
  fc.fmin_hz = cfg.get_double("fmin_hz", 20.0);
  fc.fmax_hz = cfg.get_double("fmax_hz", 0.0);
  fc.vad_dynamic_range_db = cfg.get_double("vad_dynamic_range_db", 30.0);
  fc.vad_energy_floor = cfg.get_double("vad_energy_floor", 1e-5);
  fc.cmn_window_s = cfg.get_double("cmn_window_s", 3.0);
  return fc;
}

TrainConfig train_config_from(const KeyValueConfig &cfg) {
  TrainConfig tc;
  tc.batch_size = cfg.get_int("batch_size", 128);
  tc.length_min = cfg.get_int("length_min", 200);
  tc.length_max = cfg.get_int("length_max", 1000);
  tc.lr_ladder = cfg.get_double_list("lr_ladder", {0.1, 0.01, 0.001});
  tc.momentum = cfg.get_double("momentum", 0.9);
  tc.weight_decay = cfg.get_double("weight_decay", 1e-4);
  tc.plateau_patience = static_cast<int>(cfg.get_int("plateau_patience", 3));
  tc.plateau_threshold = cfg.get_double("plateau_threshold", 1e-3);
  tc.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  tc.epochs = static_cast<int>(cfg.get_int("epochs", 50));
  tc.target_accuracy = cfg.get_double("target_accuracy", 0.0);
  tc.validate();
  return tc;
}

int cmd_features(const CommonFlags &flags, const std::string &manifest_path,
                 const std::string &out_path) {
  const KeyValueConfig cfg = resolve_config(flags);
  print_resolved(cfg);
  const Manifest manifest = load_manifest(manifest_path);
  const Dataset ds = load_dataset(manifest, feature_config_from(cfg), "", true);
  write_feature_archive(out_path, ds.utterances);
  std::cout << "wrote " << ds.utterances.size() << " utterances to " << out_path << "\n";
  if (!ds.skipped.empty()) {
    std::cout << "skipped " << ds.skipped.size() << " empty utterances:\n";
    for (const std::string &id : ds.skipped) std::cout << "  skip\t" << id << "\n";
  }
  return 0;
}

int cmd_synth(const CommonFlags &flags, const std::string &out_dir) {
  const KeyValueConfig cfg = resolve_config(flags);
  print_resolved(cfg);
  SynthLanguageSpec spec;
  spec.num_classes = cfg.get_int("synth_classes", 4);
  spec.utts_per_class = cfg.get_int("synth_utts_per_class", 50);
  spec.min_duration_s = cfg.get_double("synth_min_duration_s", 2.0);
  spec.max_duration_s = cfg.get_double("synth_max_duration_s", 10.0);
  spec.noise_floor = cfg.get_double("synth_noise_floor", 0.01);
  spec.label_prefix = cfg.get_string("synth_label_prefix", "lang");
  spec.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  spec.sample_rate = static_cast<int>(cfg.get_int("sample_rate", 8000));
  const auto records = generate_synthetic(spec, out_dir);
  std::cout << "wrote " << records.size() << " utterances and manifest.tsv to "
            << out_dir << "\n";
  return 0;
}

int cmd_train(const CommonFlags &flags, const std::string &manifest_path,
              const std::string &archive_path, const std::string &out_path) {
  const KeyValueConfig cfg = resolve_config(flags);
  print_resolved(cfg);
  const TrainConfig tc = train_config_from(cfg);
  const Manifest manifest = load_manifest(manifest_path);
  const Dataset ds = load_dataset(manifest, feature_config_from(cfg), archive_path, true);
  for (const std::string &id : ds.skipped) std::cout << "skip\t" << id << "\n";
  if (ds.utterances.empty()) throw DataError("no usable training utterances");

  ModelConfig mc = ModelConfig::preset(cfg.get_string("preset", "paper"));
  mc.num_classes = static_cast<index_t>(ds.labels.size());
  const PoolingHead head = parse_head(cfg.get_string("head", "sap"));
  Model model(mc, static_cast<std::uint64_t>(cfg.get_int("seed", 1)));

  std::FILE *log = nullptr;
  if (!out_path.empty()) log = std::fopen((out_path + ".log").c_str(), "w");
  auto emit = [&](const EpochStats &s) {
    char line[160];
    std::snprintf(line, sizeof(line), "%d\t%.17g\t%.17g\t%.17g\n", s.epoch, s.lr,
                  s.mean_loss, s.accuracy);
    std::cout << line;
    std::cout.flush();
    if (log != nullptr) {
      std::fputs(line, log);
      std::fflush(log);
    }
  };

  Checkpoint ckpt;
  ckpt.config = mc;
  ckpt.head = head;
  ckpt.class_names = ds.labels;
  ckpt.config_hash = cfg.hash_hex();
  try {
    TrainResult result = train(model, head, ds.utterances, tc, emit);
    ckpt.has_optimizer = true;
    ckpt.lr_index = result.state.lr_index;
    ckpt.best_loss = result.state.best_loss;
    ckpt.epochs_since_improvement = result.state.epochs_since_improvement;
    for (const std::string &name : model.params().names()) {
      ckpt.params.add(name, model.params().get(name));
    }
    for (const std::string &name : result.state.momentum.names()) {
      ckpt.momentum.add(name, result.state.momentum.get(name));
    }
    save_checkpoint(out_path, ckpt);
    std::cout << "checkpoint\t" << out_path << "\n";
  } catch (const NumericError &) {
    // diagnostic checkpoint of whatever state the model reached
    for (const std::string &name : model.params().names()) {
      ckpt.params.add(name, model.params().get(name));
    }
    const std::string diag = out_path.empty() ? "diagnostic.ulck" : out_path + ".diag.ulck";
    save_checkpoint(diag, ckpt);
    std::cerr << "diagnostic checkpoint written to " << diag << "\n";
    if (log != nullptr) std::fclose(log);
    throw;
  }
  if (log != nullptr) std::fclose(log);
  return 0;
}

int cmd_eval(const CommonFlags &flags, const std::string &checkpoint_path,
             const std::string &manifest_path, const std::string &archive_path,
             const std::string &out_path) {
  const KeyValueConfig cfg = resolve_config(flags);
  print_resolved(cfg);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  Model model(ckpt.config, 0);
  model.load_values(ckpt.params);

  const Manifest manifest = load_manifest(manifest_path, &ckpt.class_names);
  const Dataset ds = load_dataset(manifest, feature_config_from(cfg), archive_path, false);
  std::vector<std::string> languages = ckpt.class_names;
  std::sort(languages.begin(), languages.end());
  TrialScoreSet scores =
      score_utterances(model, ckpt.head, ds.utterances, languages, ds.duration_tags);
  const MetricReport report = compute_report(scores);
  std::cout << report.table();
  std::cout << report.key_values();
  if (!out_path.empty()) {
    write_scores_file(out_path, scores, cfg.hash_hex());
    std::cout << "scores\t" << out_path << "\n";
  }
  return 0;
}

int cmd_fuse(const CommonFlags &flags, const std::vector<std::string> &score_paths,
             const std::string &out_path, const std::vector<double> &weights) {
  const KeyValueConfig cfg = resolve_config(flags);
  print_resolved(cfg);
  std::vector<TrialScoreSet> sets;
  for (const std::string &p : score_paths) sets.push_back(read_scores_file(p));
  TrialScoreSet fused = fuse_scores(sets, weights);
  const MetricReport report = compute_report(fused);
  std::cout << report.table();
  std::cout << report.key_values();
  if (!out_path.empty()) {
    write_scores_file(out_path, fused, cfg.hash_hex());
    std::cout << "scores\t" << out_path << "\n";
  }
  return 0;
}

int cmd_gradcheck(const CommonFlags &flags) {
  const KeyValueConfig cfg = resolve_config(flags);
  print_resolved(cfg);
  const auto results =
      run_gradient_checks(static_cast<std::uint64_t>(cfg.get_int("seed", 1)));
  bool all_passed = true;
  for (const GradCheckResult &r : results) {
    char line[160];
    std::snprintf(line, sizeof(line), "%-22s %s  max_rel_err=%.3g  coords=%d\n",
                  r.name.c_str(), r.passed ? "ok  " : "FAIL", r.max_rel_error,
                  r.coords_checked);
    std::cout << line;
    all_passed = all_passed && r.passed;
  }
  if (!all_passed) throw NumericError("gradient checks failed");
  std::cout << "all gradient checks passed\n";
  return 0;
}

int run(int argc, char **argv) {
  CLI::App app{"utterance-level spoken language identification toolkit"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string manifest_path, archive_path, out_path, checkpoint_path, out_dir;
  std::vector<std::string> score_paths;
  std::vector<double> fuse_weights;

  CLI::App *features = app.add_subcommand("features", "extract a feature archive");
  add_common_flags(features, flags);
  features->add_option("--manifest", manifest_path, "input manifest")->required();
  features->add_option("--out", out_path, "output .ulfb archive")->required();

  CLI::App *synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common_flags(synth, flags);
  synth->add_option("--out", out_dir, "output directory")->required();

  CLI::App *train_cmd = app.add_subcommand("train", "train a model");
  add_common_flags(train_cmd, flags);
  train_cmd->add_option("--manifest", manifest_path, "training manifest")->required();
  train_cmd->add_option("--features", archive_path, "precomputed feature archive");
  train_cmd->add_option("--out", out_path, "output checkpoint path")->required();

  CLI::App *eval_cmd = app.add_subcommand("eval", "score a test manifest");
  add_common_flags(eval_cmd, flags);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "trained checkpoint")->required();
  eval_cmd->add_option("--manifest", manifest_path, "test manifest")->required();
  eval_cmd->add_option("--features", archive_path, "precomputed feature archive");
  eval_cmd->add_option("--out", out_path, "scores file to write");

  CLI::App *fuse = app.add_subcommand("fuse", "score-level fusion of systems");
  add_common_flags(fuse, flags);
  fuse->add_option("scores", score_paths, "score files")->required()->expected(-1);
  fuse->add_option("--weights", fuse_weights, "fusion weights (default equal)");
  fuse->add_option("--out", out_path, "fused scores file to write");

  CLI::App *gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  add_common_flags(gradcheck, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  if (features->parsed()) return cmd_features(flags, manifest_path, out_path);
  if (synth->parsed()) return cmd_synth(flags, out_dir);
  if (train_cmd->parsed()) return cmd_train(flags, manifest_path, archive_path, out_path);
  if (eval_cmd->parsed()) {
    return cmd_eval(flags, checkpoint_path, manifest_path, archive_path, out_path);
  }
  if (fuse->parsed()) return cmd_fuse(flags, score_paths, out_path, fuse_weights);
  if (gradcheck->parsed()) return cmd_gradcheck(flags);
  return 1;
}

}  // namespace
}  // namespace lidkit

int main(int argc, char **argv) {
  try {
    return lidkit::run(argc, argv);
  } catch (const lidkit::UsageError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const lidkit::NumericError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const lidkit::DataError &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
