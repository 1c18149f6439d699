//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Command-line entry point. Every subcommand reads its inputs from flags,
// writes only to the paths it is given (plus effective_config.toml in each
// output directory) and reports failures as one line:
//   error: <Category>: <Kind>: <message>
// with exit code 2 (usage), 3 (data) or 4 (numerical).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "smited/config.h"
#include "smited/curation.h"
#include "smited/error.h"
#include "smited/evalsuite.h"
#include "smited/finetune.h"
#include "smited/gradsuite.h"
#include "smited/metrics.h"
#include "smited/moe.h"
#include "smited/smiles.h"
#include "smited/tokenizer.h"
#include "smited/training.h"

namespace fs = std::filesystem;
using namespace smited;

namespace {

constexpr double kGradTolerance = 1e-3;

// Flags shared by every subcommand.
struct Common {
  std::string config;
  std::string profile;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  bool threads_set = false;
};

void add_common(CLI::App *cmd, Common &c) {
  cmd->add_option("--config", c.config, "Config file (key = value, [section] headers)");
  cmd->add_option("--profile", c.profile, "Base profile: desk or paper-fidelity")
      ->check(CLI::IsMember({"desk", "paper-fidelity"}));
  cmd->add_option("--set", c.overrides, "Config override KEY=VALUE (repeatable)");
  cmd->add_option("--seed", c.seed, "Random seed (required for training commands)");
  cmd->add_option("--threads", c.threads, "Worker thread limit")
      ->check(CLI::PositiveNumber)
      ->each([&c](const std::string &) { c.threads_set = true; });
}

RunConfig resolve(const Common &c) {
  RunConfig run = c.config.empty() ? profile_config(c.profile.empty() ? "desk" : c.profile)
                                   : load_run_config(c.config, c.profile);
  for (const std::string &kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw UsageError("BadOverride", "--set expects KEY=VALUE, got '" + kv + "'");
    }
    set_config_value(run, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) run.seed = c.seed;
  if (c.threads_set) run.threads = c.threads;
  if (run.threads == 0) throw UsageError("BadValue", "threads must be positive");
  run.train.threads = run.threads;
  if (run.seed) run.train.seed = *run.seed;
  return run;
}

std::string g_command_line;

std::ifstream open_in(const fs::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("FileNotFound", "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const fs::path &path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("WriteFailed", "cannot write " + path.string());
  return out;
}

void echo_config(const fs::path &dir, const RunConfig &run) {
  std::ofstream out = open_out((dir.empty() ? fs::path(".") : dir) / "effective_config.toml");
  out << "# command: " << g_command_line << "\n" << config_text(run);
}

void echo_config_beside(const fs::path &file, const RunConfig &run) {
  echo_config(file.parent_path(), run);
}

std::vector<std::string> read_smiles(const fs::path &path) {
  std::ifstream in = open_in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    std::istringstream fields(line);
    std::string s;
    if (fields >> s) out.push_back(s);
  }
  if (out.empty()) throw DataError("EmptyInput", "no SMILES in " + path.string());
  return out;
}

std::vector<std::vector<int>> encode_for(const Model &model,
                                         std::span<const std::string> smiles) {
  return encode_corpus(smiles, model.vocab(), model.config().max_len);
}

std::string fmt(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

// ---------------------------------------------------------------- curate

struct CurateArgs {
  std::string in, out, report;
};

void run_curate(const Common &c, const CurateArgs &a) {
  const RunConfig run = resolve(c);
  std::ifstream in = open_in(a.in);
  std::ofstream out = open_out(a.out);
  const CurationReport report = curate(in, out, {.threads = run.threads});
  if (!a.report.empty()) {
    open_out(a.report) << report.to_json() << "\n";
    echo_config_beside(a.report, run);
  }
  echo_config_beside(a.out, run);
  std::cout << report.to_text();
}

// ----------------------------------------------------------- build-vocab

struct VocabArgs {
  std::string in, out;
};

void run_build_vocab(const Common &c, const VocabArgs &a) {
  const RunConfig run = resolve(c);
  std::ifstream in = open_in(a.in);
  const Vocabulary vocab = Vocabulary::build(in);
  std::ofstream out = open_out(a.out);
  vocab.write_tsv(out);
  echo_config_beside(a.out, run);
  std::cout << "vocabulary: " << vocab.size() << " tokens ("
            << Vocabulary::kSpecialCount << " special)\n";
}

// -------------------------------------------------------------- tokenize

struct TokenizeArgs {
  std::string in, vocab, out;
  std::size_t max_len = 0;
  bool skip_long = false;
};

void run_tokenize(const Common &c, const TokenizeArgs &a) {
  const RunConfig run = resolve(c);
  const std::size_t max_len = a.max_len ? a.max_len : run.model.max_len;
  const Vocabulary vocab = Vocabulary::load_tsv(a.vocab);
  const std::vector<std::string> smiles = read_smiles(a.in);
  std::ofstream out = open_out(a.out);
  std::size_t written = 0, skipped = 0, unknown = 0;
  for (const std::string &s : smiles) {
    const TokenSequence ts = tokenize(s);
    if (a.skip_long && ts.tokens.size() + 2 > max_len) {
      ++skipped;
      continue;
    }
    const std::vector<int> ids = encode(ts, vocab, max_len);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] == Vocabulary::kUnk) ++unknown;
      out << (i ? " " : "") << ids[i];
    }
    out << "\n";
    ++written;
  }
  echo_config_beside(a.out, run);
  std::cout << "sequences: " << written << " (length " << max_len << "), skipped "
            << skipped << " over length, " << unknown << " unknown tokens\n";
}

// -------------------------------------------------------------- pretrain

struct PretrainArgs {
  std::string corpus, vocab, out_dir;
  std::size_t log_every = 100;
  bool no_eval = false;
};

void run_pretrain(const Common &c, const PretrainArgs &a) {
  RunConfig run = resolve(c);
  run.require_seed();
  const std::string corpus_path = a.corpus.empty() ? run.corpus_path : a.corpus;
  const std::string out_path = a.out_dir.empty() ? run.output_path : a.out_dir;
  const std::string vocab_path = a.vocab.empty() ? run.vocab_path : a.vocab;
  if (corpus_path.empty()) throw UsageError("MissingFlag", "pretrain needs --corpus or paths.corpus");
  if (out_path.empty()) throw UsageError("MissingFlag", "pretrain needs --out-dir or paths.output");
  const fs::path out_dir(out_path);

  const std::vector<std::string> smiles = read_smiles(corpus_path);
  for (std::size_t i = 0; i < smiles.size(); ++i) {
    try {
      chem::require_valid_valence(chem::parse(smiles[i]));
    } catch (const DataError &e) {
      throw DataError(e.kind(), corpus_path + ":" + std::to_string(i + 1) + ": " + e.what() +
                                    " (curate the corpus first)");
    }
  }
  const Vocabulary vocab = vocab_path.empty()
                               ? Vocabulary::build(std::span<const std::string>(smiles))
                               : Vocabulary::load_tsv(vocab_path);
  ModelConfig mc = run.model;
  mc.vocab_size = vocab.size();
  mc.validate();
  const auto corpus = encode_corpus(smiles, vocab, mc.max_len);
  TrainSettings settings = run.train;
  settings.schedule = run.schedule_for(corpus.size());

  fs::create_directories(out_dir);
  echo_config(out_dir, run);
  Model model = Model::create(mc, vocab, *run.seed);
  std::cout << "pretrain: " << corpus.size() << " molecules, vocabulary " << vocab.size()
            << ", " << settings.schedule.phase1_steps << " + "
            << settings.schedule.phase2_steps << " steps\n";
  const auto start = std::chrono::steady_clock::now();
  const std::size_t every = std::max<std::size_t>(1, a.log_every);
  const auto log = pretrain(model, corpus, settings, [&](const LossRecord &r) {
    if (r.step % every == 0) {
      std::cout << "step " << r.step << " phase " << r.phase << " " << r.objective
                << " loss " << fmt(r.loss) << std::endl;
    }
  });
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  model.save(out_dir / "model.ckpt");
  vocab.save_tsv(out_dir / "vocab.tsv");
  {
    std::ofstream out = open_out(out_dir / "loss_log.csv");
    write_loss_log(log, out);
  }
  nlohmann::ordered_json summary;
  summary["molecules"] = corpus.size();
  summary["steps"] = settings.schedule.phase1_steps + settings.schedule.phase2_steps;
  summary["seconds"] = seconds;
  summary["final_loss"] = log.empty() ? 0.0 : log.back().loss;
  if (!a.no_eval) {
    summary["masked_token_accuracy"] =
        masked_token_accuracy(model, corpus, settings.masking, *run.seed + 1);
    summary["reconstruction_exact_match"] = reconstruction_exact_match(model, smiles);
  }
  open_out(out_dir / "summary.json") << summary.dump(2) << "\n";
  std::cout << "done in " << fmt(seconds, 4) << " s";
  if (!a.no_eval) {
    std::cout << "; masked-token accuracy " << fmt(summary["masked_token_accuracy"].get<double>(), 4)
              << ", exact reconstruction "
              << fmt(summary["reconstruction_exact_match"].get<double>(), 4);
  }
  std::cout << "\n";
}

// ----------------------------------------------------------------- embed

struct EmbedArgs {
  std::string checkpoint, in, out, mode = "latent";
};

void run_embed(const Common &c, const EmbedArgs &a) {
  const RunConfig run = resolve(c);
  const EmbedMode mode = parse_embed_mode(a.mode);
  const Model model = Model::load(a.checkpoint);
  const std::vector<std::string> smiles = read_smiles(a.in);
  const Tensor e = embed_all(model, encode_for(model, smiles), mode);
  std::ofstream out = open_out(a.out);
  write_embedding_csv(out, smiles, e);
  echo_config_beside(a.out, run);
  std::cout << "embedded " << smiles.size() << " molecules (" << embed_mode_name(mode)
            << ", width " << e.cols() << ")\n";
}

// ---------------------------------------------------------------- decode

// Rows of numbers; a leading "smiles" column (as written by embed) is
// skipped, as is a header line.
std::vector<std::vector<double>> read_vectors(const fs::path &path) {
  std::ifstream in = open_in(path);
  std::vector<std::vector<double>> rows;
  bool skip_first = false;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (line_no == 1 && !fields.empty() && fields[0] == "smiles") {
      skip_first = true;
      continue;
    }
    std::vector<double> row;
    for (std::size_t i = skip_first ? 1 : 0; i < fields.size(); ++i) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(fields[i], &used));
        if (used != fields[i].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception &) {
        throw DataError("MalformedDataset", path.string() + ":" + std::to_string(line_no) +
                                                ": not a number: '" + fields[i] + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("EmptyInput", "no vectors in " + path.string());
  return rows;
}

struct DecodeArgs {
  std::string checkpoint, in, out;
};

void run_decode(const Common &c, const DecodeArgs &a) {
  const RunConfig run = resolve(c);
  const Model model = Model::load(a.checkpoint);
  const auto rows = read_vectors(a.in);
  std::ofstream out = open_out(a.out);
  for (const auto &row : rows) {
    if (row.size() != model.config().hidden) {
      throw DataError("ShapeMismatch", "vector width " + std::to_string(row.size()) +
                                           " does not match the model width " +
                                           std::to_string(model.config().hidden));
    }
    Tensor z({1, row.size()});
    std::copy(row.begin(), row.end(), z.data().begin());
    out << greedy_decode(model, z) << "\n";
  }
  echo_config_beside(a.out, run);
  std::cout << "decoded " << rows.size() << " vectors\n";
}

// -------------------------------------------------------------- finetune

nlohmann::ordered_json task_metrics(TaskKind task, const Tensor &pred, const Tensor &labels) {
  nlohmann::ordered_json j;
  const std::size_t n = labels.rows();
  if (task == TaskKind::kClassify) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < pred.cols(); ++k) {
        if (pred.at(i, k) > pred.at(i, best)) best = k;
      }
      if (static_cast<double>(best) == labels.at(i, 0)) ++correct;
    }
    j["accuracy"] = static_cast<double>(correct) / static_cast<double>(n);
    if (pred.cols() == 2) {
      std::vector<double> score(n), truth(n);
      for (std::size_t i = 0; i < n; ++i) {
        score[i] = pred.at(i, 1);
        truth[i] = labels.at(i, 0);
      }
      try {
        j["roc_auc"] = roc_auc(score, truth);
      } catch (const DataError &) {
        j["roc_auc"] = nullptr;  // one class only
      }
    }
  } else {
    nlohmann::ordered_json per = nlohmann::ordered_json::array();
    double rmse_sum = 0.0, mae_sum = 0.0;
    for (std::size_t t = 0; t < labels.cols(); ++t) {
      std::vector<double> p(n), y(n);
      for (std::size_t i = 0; i < n; ++i) {
        p[i] = pred.at(i, t);
        y[i] = labels.at(i, t);
      }
      const double r = rmse(p, y), m = mae(p, y);
      rmse_sum += r;
      mae_sum += m;
      per.push_back({{"rmse", r}, {"mae", m}});
    }
    j["targets"] = per;
    j["mean_rmse"] = rmse_sum / static_cast<double>(labels.cols());
    j["mean_mae"] = mae_sum / static_cast<double>(labels.cols());
  }
  return j;
}

void write_epoch_loss(const fs::path &path, std::span<const double> loss) {
  std::ofstream out = open_out(path);
  out << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < loss.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e, loss[e]);
    out << buf;
  }
}

void print_metrics(const std::string &label, const nlohmann::ordered_json &m) {
  std::cout << label << ":";
  for (const auto &[k, v] : m.items()) {
    if (v.is_number()) std::cout << " " << k << "=" << fmt(v.get<double>(), 4);
  }
  std::cout << "\n";
}

struct FinetuneArgs {
  std::string checkpoint, data, test, task, mode = "latent", out_dir;
  bool end_to_end = false;
};

void run_finetune(const Common &c, const FinetuneArgs &a) {
  RunConfig run = resolve(c);
  run.require_seed();
  if (!a.task.empty()) run.finetune.task = parse_task_kind(a.task);
  FinetuneSettings settings = run.finetune;
  settings.seed = *run.seed;
  const EmbedMode mode = parse_embed_mode(a.mode);
  Model model = Model::load(a.checkpoint);
  const LabeledData train = read_labeled_csv_file(a.data);
  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);
  echo_config(out_dir, run);

  const auto ids = encode_for(model, train.smiles);
  const FinetuneResult result =
      a.end_to_end ? finetune_end_to_end(model, ids, train.labels, mode, settings)
                   : finetune_frozen(embed_all(model, ids, mode), train.labels, settings);
  result.head.save(out_dir / "head.ckpt");
  if (a.end_to_end) model.save(out_dir / "model.ckpt");
  write_epoch_loss(out_dir / "loss.csv", result.epoch_loss);

  nlohmann::ordered_json metrics;
  metrics["task"] = task_kind_name(settings.task);
  metrics["embedding"] = embed_mode_name(mode);
  metrics["end_to_end"] = a.end_to_end;
  metrics["train"] =
      task_metrics(settings.task, result.head.predict(embed_all(model, ids, mode)), train.labels);
  print_metrics("train", metrics["train"]);
  if (!a.test.empty()) {
    const LabeledData test = read_labeled_csv_file(a.test);
    const Tensor pred = result.head.predict(embed_all(model, encode_for(model, test.smiles), mode));
    task_output_width(test.labels, test.smiles.size(), settings);
    metrics["test"] = task_metrics(settings.task, pred, test.labels);
    print_metrics("test", metrics["test"]);
  }
  open_out(out_dir / "metrics.json") << metrics.dump(2) << "\n";
}

// ---------------------------------------------------------- moe-finetune

struct MoeArgs {
  std::vector<std::string> experts;
  std::size_t k = 2;
  std::size_t router = 0;
  std::string data, test, task, mode = "mean_pool", out_dir;
};

void run_moe_finetune(const Common &c, const MoeArgs &a) {
  RunConfig run = resolve(c);
  run.require_seed();
  if (!a.task.empty()) run.finetune.task = parse_task_kind(a.task);
  FinetuneSettings settings = run.finetune;
  settings.seed = *run.seed;
  const EmbedMode mode = parse_embed_mode(a.mode);
  std::vector<Model> experts;
  for (const auto &p : a.experts) experts.push_back(Model::load(p));
  const std::size_t n = experts.size();
  const std::size_t width = experts.front().config().hidden;
  MixtureOfExperts moe(std::move(experts), Tensor({width, n}), a.k, a.router, mode);
  const LabeledData train = read_labeled_csv_file(a.data);
  const fs::path out_dir(a.out_dir);
  fs::create_directories(out_dir);
  echo_config(out_dir, run);

  const auto ids = encode_for(moe.expert(0), train.smiles);
  const MoeFinetuneResult result = moe_finetune(moe, ids, train.labels, settings);
  moe.set_wg(result.wg);
  save_gate(result.wg, out_dir / "gate.ckpt");
  result.head.save(out_dir / "head.ckpt");
  MoeManifest manifest;
  for (const auto &p : a.experts) manifest.experts.push_back(fs::absolute(p));
  manifest.k = a.k;
  manifest.gate = "gate.ckpt";
  manifest.head = "head.ckpt";
  manifest.router = a.router;
  manifest.mode = mode;
  write_moe_manifest(manifest, out_dir / "manifest.json");
  write_epoch_loss(out_dir / "loss.csv", result.epoch_loss);

  // Mixture outputs of every molecule, with expert usage counts.
  std::vector<std::size_t> usage(n, 0);
  const auto mixed = [&](std::span<const std::vector<int>> seqs) {
    Tensor y({seqs.size(), width});
    for (std::size_t i = 0; i < seqs.size(); ++i) {
      GateDecision d;
      const Tensor row = moe.mix(seqs[i], &d);
      for (const std::size_t e : d.experts) ++usage[e];
      std::copy(row.data().begin(), row.data().end(), y.row_span(i).begin());
    }
    return y;
  };
  nlohmann::ordered_json metrics;
  metrics["task"] = task_kind_name(settings.task);
  metrics["experts"] = n;
  metrics["k"] = a.k;
  metrics["train"] = task_metrics(settings.task, result.head.predict(mixed(ids)), train.labels);
  metrics["train_expert_usage"] = usage;
  print_metrics("train", metrics["train"]);
  if (!a.test.empty()) {
    const LabeledData test = read_labeled_csv_file(a.test);
    task_output_width(test.labels, test.smiles.size(), settings);
    std::fill(usage.begin(), usage.end(), 0);
    const Tensor pred = result.head.predict(mixed(encode_for(moe.expert(0), test.smiles)));
    metrics["test"] = task_metrics(settings.task, pred, test.labels);
    metrics["test_expert_usage"] = usage;
    print_metrics("test", metrics["test"]);
  }
  open_out(out_dir / "metrics.json") << metrics.dump(2) << "\n";
}

// ----------------------------------------------------------- eval-latent

struct EvalArgs {
  std::string checkpoint, mode = "both", out, embeddings_prefix;
};

void run_eval_latent(const Common &c, const EvalArgs &a) {
  const RunConfig run = resolve(c);
  const std::uint64_t seed = run.seed.value_or(0);
  const Model model = Model::load(a.checkpoint);
  std::vector<EmbedMode> modes;
  if (a.mode == "both") {
    modes = {EmbedMode::kLatent, EmbedMode::kMeanPool};
  } else {
    modes = {parse_embed_mode(a.mode)};
  }
  nlohmann::ordered_json out;
  for (const EmbedMode mode : modes) {
    const LatentEvalReport report = evaluate_latent(model, mode, seed);
    out[std::string(embed_mode_name(mode))] = to_json(report);
    std::cout << embed_mode_name(mode) << ": alpha=" << fmt(report.probe.alpha, 4)
              << " beta=" << fmt(report.probe.beta, 4) << " r2=" << fmt(report.probe.r2, 4)
              << " mse=" << fmt(report.probe.mse, 4)
              << " mean_tanimoto=" << fmt(report.fewshot.mean_tanimoto, 4) << " ("
              << report.fewshot.records.size() << " held-out triples)\n";
    if (!a.embeddings_prefix.empty()) {
      const FamilyDataset families = generate_families();
      const fs::path path = a.embeddings_prefix + "_" + std::string(embed_mode_name(mode)) + ".csv";
      std::ofstream csv = open_out(path);
      write_embedding_csv(csv, families.molecules,
                          embed_all(model, encode_for(model, families.molecules), mode));
    }
  }
  open_out(a.out) << out.dump(2) << "\n";
  echo_config_beside(a.out, run);
}

// ----------------------------------------------------------- gen-metrics

struct GenArgs {
  std::string generated, reference, out;
};

void run_gen_metrics(const Common &c, const GenArgs &a) {
  const RunConfig run = resolve(c);
  const auto generated = read_smiles(a.generated);
  const auto reference = read_smiles(a.reference);
  const GenerationMetrics m = generation_metrics(generated, reference);
  open_out(a.out) << to_json(m).dump(2) << "\n";
  echo_config_beside(a.out, run);
  std::cout << to_table(m);
}

// ------------------------------------------------------------ grad-check

struct GradArgs {
  std::size_t cases = 20;
  bool no_model = false;
  std::string out;
};

void run_grad_check(const Common &c, const GradArgs &a) {
  const RunConfig run = resolve(c);
  const std::uint64_t seed = run.seed.value_or(0);
  const auto start = std::chrono::steady_clock::now();
  const auto entries = gradient_suite(a.cases, seed, !a.no_model);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::map<std::string, double> worst;
  std::vector<std::string> order;
  double overall = 0.0;
  for (const auto &e : entries) {
    if (!worst.count(e.name)) order.push_back(e.name);
    worst[e.name] = std::max(worst[e.name], e.result.max_relative_error);
    overall = std::max(overall, e.result.max_relative_error);
  }
  for (const auto &name : order) {
    std::printf("%-24s %.3e\n", name.c_str(), worst[name]);
  }
  std::printf("%zu checks over %zu cases, worst relative error %.3e, %.1f s\n", entries.size(),
              a.cases, overall, seconds);
  if (!a.out.empty()) {
    nlohmann::ordered_json j;
    j["cases"] = a.cases;
    j["seed"] = seed;
    j["tolerance"] = kGradTolerance;
    j["max_relative_error"] = overall;
    j["seconds"] = seconds;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto &e : entries) {
      list.push_back({{"name", e.name},
                      {"seed", e.seed},
                      {"max_relative_error", e.result.max_relative_error},
                      {"max_absolute_error", e.result.max_absolute_error},
                      {"coordinates", e.result.coordinates_checked}});
    }
    j["checks"] = list;
    open_out(a.out) << j.dump(2) << "\n";
    echo_config_beside(a.out, run);
  }
  if (!(overall < kGradTolerance)) {
    throw NumericalError("GradCheckFailed",
                         "worst relative error " + fmt(overall) + " exceeds " + fmt(kGradTolerance));
  }
}

}  // namespace

int main(int argc, char **argv) {
  for (int i = 0; i < argc; ++i) g_command_line += (i ? " " : "") + std::string(argv[i]);

  CLI::App app{"smited: SMILES encoder-decoder foundation model toolkit"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  app.footer(
      "Errors print one line 'error: <Category>: <Kind>: <message>' and exit with\n"
      "2 (UsageError), 3 (DataError) or 4 (NumericalError). Commands that write files\n"
      "also write effective_config.toml into each output directory.");

  Common common;
  CurateArgs curate_args;
  auto *curate_cmd = app.add_subcommand("curate", "Canonicalize, validate and deduplicate a corpus");
  curate_cmd->add_option("--in", curate_args.in, "Input SMILES, one per line")->required();
  curate_cmd->add_option("--out", curate_args.out, "Curated SMILES output")->required();
  curate_cmd->add_option("--report", curate_args.report, "JSON report output");

  VocabArgs vocab_args;
  auto *vocab_cmd = app.add_subcommand("build-vocab", "Build the token vocabulary of a corpus");
  vocab_cmd->add_option("--in", vocab_args.in, "Corpus SMILES")->required();
  vocab_cmd->add_option("--out", vocab_args.out, "Vocabulary TSV output")->required();

  TokenizeArgs tok_args;
  auto *tok_cmd = app.add_subcommand("tokenize", "Encode SMILES as framed, padded id sequences");
  tok_cmd->add_option("--in", tok_args.in, "Input SMILES")->required();
  tok_cmd->add_option("--vocab", tok_args.vocab, "Vocabulary TSV")->required();
  tok_cmd->add_option("--out", tok_args.out, "Output, one space-separated id line per molecule")
      ->required();
  tok_cmd->add_option("--max-len", tok_args.max_len, "Sequence length (default model.max_len)");
  tok_cmd->add_flag("--skip-long", tok_args.skip_long, "Drop molecules that do not fit");

  PretrainArgs pre_args;
  auto *pre_cmd = app.add_subcommand("pretrain", "Two-phase masked-LM and reconstruction pre-training");
  pre_cmd->add_option("--corpus", pre_args.corpus, "Curated SMILES (default paths.corpus)");
  pre_cmd->add_option("--vocab", pre_args.vocab,
                      "Vocabulary TSV (default paths.vocab, else built from the corpus)");
  pre_cmd->add_option("--out-dir", pre_args.out_dir,
                      "Output directory: model.ckpt, vocab.tsv, loss_log.csv, summary.json "
                      "(default paths.output)");
  pre_cmd->add_option("--log-every", pre_args.log_every, "Print every N steps");
  pre_cmd->add_flag("--no-eval", pre_args.no_eval,
                    "Skip masked-token accuracy and reconstruction on the corpus");

  EmbedArgs embed_args;
  auto *embed_cmd = app.add_subcommand("embed", "Export molecule embeddings as CSV");
  embed_cmd->add_option("--checkpoint", embed_args.checkpoint, "Model checkpoint")->required();
  embed_cmd->add_option("--in", embed_args.in, "Input SMILES")->required();
  embed_cmd->add_option("--out", embed_args.out, "CSV output smiles,e0,...")->required();
  embed_cmd->add_option("--mode", embed_args.mode, "latent or mean_pool")
      ->check(CLI::IsMember({"latent", "mean_pool"}));

  DecodeArgs dec_args;
  auto *dec_cmd = app.add_subcommand("decode", "Greedy-decode latent vectors to SMILES");
  dec_cmd->add_option("--checkpoint", dec_args.checkpoint, "Model checkpoint")->required();
  dec_cmd->add_option("--in", dec_args.in,
                      "CSV of vectors; a leading smiles column and header are skipped")
      ->required();
  dec_cmd->add_option("--out", dec_args.out, "Decoded SMILES output")->required();

  FinetuneArgs ft_args;
  auto *ft_cmd = app.add_subcommand("finetune", "Train a task head on frozen or updated embeddings");
  ft_cmd->add_option("--checkpoint", ft_args.checkpoint, "Pre-trained model checkpoint")->required();
  ft_cmd->add_option("--data", ft_args.data, "Training CSV: smiles plus target columns")->required();
  ft_cmd->add_option("--test", ft_args.test, "Optional evaluation CSV");
  ft_cmd->add_option("--task", ft_args.task, "classify or regress (default finetune.task)")
      ->check(CLI::IsMember({"classify", "regress"}));
  ft_cmd->add_option("--mode", ft_args.mode, "Embedding: latent or mean_pool")
      ->check(CLI::IsMember({"latent", "mean_pool"}));
  ft_cmd->add_flag("--end-to-end", ft_args.end_to_end, "Also update the encoder");
  ft_cmd->add_option("--out-dir", ft_args.out_dir,
                     "Output directory: head.ckpt, loss.csv, metrics.json, model.ckpt "
                     "with --end-to-end")
      ->required();

  MoeArgs moe_args;
  auto *moe_cmd = app.add_subcommand("moe-finetune", "Train a Top-k gate and head over frozen experts");
  moe_cmd->add_option("--expert", moe_args.experts, "Expert checkpoint (repeatable)")->required();
  moe_cmd->add_option("--k", moe_args.k, "Active experts per molecule");
  moe_cmd->add_option("--router", moe_args.router, "Expert whose mean-pooled embedding feeds the gate");
  moe_cmd->add_option("--data", moe_args.data, "Training CSV: smiles plus target columns")->required();
  moe_cmd->add_option("--test", moe_args.test, "Optional evaluation CSV");
  moe_cmd->add_option("--task", moe_args.task, "classify or regress (default finetune.task)")
      ->check(CLI::IsMember({"classify", "regress"}));
  moe_cmd->add_option("--mode", moe_args.mode, "Expert embedding: latent or mean_pool")
      ->check(CLI::IsMember({"latent", "mean_pool"}));
  moe_cmd->add_option("--out-dir", moe_args.out_dir,
                      "Output directory: gate.ckpt, head.ckpt, manifest.json, loss.csv, "
                      "metrics.json")
      ->required();

  EvalArgs eval_args;
  auto *eval_cmd = app.add_subcommand("eval-latent", "Carbon-chain family compositionality study");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Model checkpoint")->required();
  eval_cmd->add_option("--mode", eval_args.mode, "latent, mean_pool or both")
      ->check(CLI::IsMember({"latent", "mean_pool", "both"}));
  eval_cmd->add_option("--out", eval_args.out, "JSON report output")->required();
  eval_cmd->add_option("--embeddings-prefix", eval_args.embeddings_prefix,
                       "Also write family embeddings to PREFIX_<mode>.csv");

  GenArgs gen_args;
  auto *gen_cmd = app.add_subcommand("gen-metrics", "Validity, uniqueness, novelty, SNN, Scaf, IntDiv");
  gen_cmd->add_option("--generated", gen_args.generated, "Generated SMILES")->required();
  gen_cmd->add_option("--reference", gen_args.reference, "Reference (training) SMILES")->required();
  gen_cmd->add_option("--out", gen_args.out, "JSON output")->required();

  GradArgs grad_args;
  auto *grad_cmd = app.add_subcommand("grad-check", "Finite-difference check of every op and the model");
  grad_cmd->add_option("--cases", grad_args.cases, "Seeded cases (seed, seed + 1, ...)");
  grad_cmd->add_flag("--no-model", grad_args.no_model, "Skip the end-to-end model check");
  grad_cmd->add_option("--out", grad_args.out, "Optional JSON with every check");

  for (CLI::App *cmd : app.get_subcommands([](CLI::App *) { return true; })) {
    add_common(cmd, common);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    std::cerr << "error: UsageError: " << e.get_name() << ": " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::kUsage);
  }

  try {
    if (curate_cmd->parsed()) run_curate(common, curate_args);
    else if (vocab_cmd->parsed()) run_build_vocab(common, vocab_args);
    else if (tok_cmd->parsed()) run_tokenize(common, tok_args);
    else if (pre_cmd->parsed()) run_pretrain(common, pre_args);
    else if (embed_cmd->parsed()) run_embed(common, embed_args);
    else if (dec_cmd->parsed()) run_decode(common, dec_args);
    else if (ft_cmd->parsed()) run_finetune(common, ft_args);
    else if (moe_cmd->parsed()) run_moe_finetune(common, moe_args);
    else if (eval_cmd->parsed()) run_eval_latent(common, eval_args);
    else if (gen_cmd->parsed()) run_gen_metrics(common, gen_args);
    else if (grad_cmd->parsed()) run_grad_check(common, grad_args);
  } catch (const Error &e) {
    std::cerr << "error: " << category_name(e.category()) << ": " << e.kind() << ": "
              << e.what() << "\n";
    return static_cast<int>(e.category());
  } catch (const nlohmann::json::exception &e) {
    std::cerr << "error: DataError: MalformedJson: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::kData);
  } catch (const fs::filesystem_error &e) {
    std::cerr << "error: DataError: FileSystem: " << e.what() << "\n";
    return static_cast<int>(ErrorCategory::kData);
  }
  return 0;
}
