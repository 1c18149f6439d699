//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/finetune.h"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include "smited/error.h"
#include "smited/optim.h"

namespace smited {
namespace {

constexpr const char *kW1 = "task.w1";
constexpr const char *kB1 = "task.b1";
constexpr const char *kW2 = "task.w2";
constexpr const char *kB2 = "task.b2";

std::vector<std::string> split_csv(const std::string &line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Tensor uniform_init(Shape shape, Rng &rng) {
  Tensor t(std::move(shape));
  const double bound = 1.0 / std::sqrt(static_cast<double>(t.dim(0)));
  for (double &x : t.data()) x = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

[[noreturn]] void label_mismatch(const std::string &why) {
  throw DataError("LabelShapeMismatch", why);
}

Tensor gather_rows(const Tensor &x, std::span<const std::size_t> rows) {
  Tensor out({rows.size(), x.cols()});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(x.row_span(rows[i]).begin(), x.row_span(rows[i]).end(),
              out.row_span(i).begin());
  }
  return out;
}

void shuffle(std::vector<std::size_t> &order, Rng &rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
}

AdamSettings adam_for(const FinetuneSettings &s) {
  return AdamSettings{.lr = s.lr, .round_to_f32 = true};
}

}  // namespace

std::size_t task_output_width(const Tensor &labels, std::size_t n,
                         const FinetuneSettings &settings) {
  if (labels.rank() != 2 || labels.dim(0) != n) {
    label_mismatch("labels " + shape_string(labels.shape()) + " for " +
                   std::to_string(n) + " inputs");
  }
  if (n == 0) throw DataError("EmptyInput", "no training examples");
  if (settings.task == TaskKind::kRegress) return labels.dim(1);
  if (labels.dim(1) != 1) label_mismatch("classification takes one label column");
  double top = 0.0;
  for (double y : labels.data()) {
    if (y < 0.0 || y != std::floor(y)) {
      label_mismatch("class labels must be non-negative integers");
    }
    top = std::max(top, y);
  }
  const std::size_t needed = static_cast<std::size_t>(top) + 1;
  const std::size_t classes = settings.classes ? settings.classes : std::max<std::size_t>(2, needed);
  if (needed > classes) label_mismatch("label exceeds the class count");
  return classes;
}

TaskKind parse_task_kind(std::string_view name) {
  if (name == "classify") return TaskKind::kClassify;
  if (name == "regress") return TaskKind::kRegress;
  throw UsageError("unknown task '" + std::string(name) +
                   "' (expected classify or regress)");
}

std::string_view task_kind_name(TaskKind task) {
  return task == TaskKind::kClassify ? "classify" : "regress";
}

LabeledData read_labeled_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("MalformedDataset", "missing header");
  const std::vector<std::string> header = split_csv(line);
  std::size_t smiles_col = header.size();
  LabeledData data;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "smiles") {
      smiles_col = c;
    } else {
      data.targets.push_back(header[c]);
    }
  }
  if (smiles_col == header.size()) {
    throw DataError("MalformedDataset", "header has no 'smiles' column");
  }
  if (data.targets.empty()) throw DataError("MalformedDataset", "no target columns");
  std::vector<double> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError("MalformedDataset", "line " + std::to_string(line_no) + " has " +
                                              std::to_string(cells.size()) + " fields");
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == smiles_col) {
        data.smiles.push_back(cells[c]);
        continue;
      }
      char *end = nullptr;
      const double v = std::strtod(cells[c].c_str(), &end);
      if (cells[c].empty() || *end != '\0' || !std::isfinite(v)) {
        throw DataError("MalformedDataset", "line " + std::to_string(line_no) +
                                                ": bad value '" + cells[c] + "'");
      }
      values.push_back(v);
    }
  }
  data.labels = Tensor({data.smiles.size(), data.targets.size()}, std::move(values));
  return data;
}

LabeledData read_labeled_csv_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("FileNotFound", "cannot open " + path.string());
  return read_labeled_csv(in);
}

Head Head::create(TaskKind task, std::size_t input_dim, std::size_t hidden,
                  std::size_t outputs, std::uint64_t seed) {
  Rng rng(seed);
  ParameterSet p;
  p.add(kW1, uniform_init({input_dim, hidden}, rng));
  p.add(kB1, Tensor({hidden}));
  p.add(kW2, uniform_init({hidden, outputs}, rng));
  p.add(kB2, Tensor({outputs}));
  return Head(task, std::move(p));
}

Head::Head(TaskKind task, ParameterSet params)
    : task_(task), params_(std::move(params)) {
  const char *names[] = {kW1, kB1, kW2, kB2};
  bool ok = params_.size() == 4;
  for (std::size_t i = 0; ok && i < 4; ++i) ok = params_[i].name == names[i];
  ok = ok && params_[0].value.rank() == 2 && params_[2].value.rank() == 2 &&
       params_[1].value.shape() == Shape{params_[0].value.dim(1)} &&
       params_[2].value.dim(0) == params_[0].value.dim(1) &&
       params_[3].value.shape() == Shape{params_[2].value.dim(1)};
  if (!ok) throw DataError("ConfigMismatch", "parameters do not form a task head");
}

std::size_t Head::input_dim() const { return params_[0].value.dim(0); }
std::size_t Head::hidden() const { return params_[0].value.dim(1); }
std::size_t Head::outputs() const { return params_[2].value.dim(1); }

Var Head::forward(Tape &tape, const Var &x, bool track) const {
  const Var h = ad::gelu(ad::add_bias(
      ad::matmul(x, tape.parameter(params_, 0, track)), tape.parameter(params_, 1, track)));
  return ad::add_bias(ad::matmul(h, tape.parameter(params_, 2, track)),
                      tape.parameter(params_, 3, track));
}

Tensor Head::predict(const Tensor &x) const {
  Tape tape;
  const Tensor out = forward(tape, tape.constant(x), false).value();
  return task_ == TaskKind::kClassify ? softmax_rows(out) : out;
}

CheckpointData Head::to_checkpoint() const {
  CheckpointData data;
  data.meta["kind"] = "head";
  data.meta["task"] = std::string(task_kind_name(task_));
  data.params = params_;
  return data;
}

Head Head::from_checkpoint(const CheckpointData &data) {
  if (data.meta.value("kind", "") != "head") {
    throw DataError("CorruptCheckpoint", "checkpoint does not hold a task head");
  }
  const std::string task = data.meta.value("task", "");
  if (task != "classify" && task != "regress") {
    throw DataError("ConfigMismatch", "unknown head task '" + task + "'");
  }
  return Head(parse_task_kind(task), data.params);
}

void Head::save(const std::filesystem::path &path) const {
  save_checkpoint_file(to_checkpoint(), path);
}

Head Head::load(const std::filesystem::path &path) {
  return from_checkpoint(load_checkpoint_file(path));
}

Var task_loss(TaskKind task, const Var &outputs, const Tensor &labels) {
  if (task == TaskKind::kRegress) {
    return ad::mse(outputs, outputs.tape().constant(labels));
  }
  std::vector<int> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) targets[i] = static_cast<int>(labels[i]);
  return ad::cross_entropy(outputs, targets);
}

FinetuneResult finetune_frozen(const Tensor &features, const Tensor &labels,
                               const FinetuneSettings &settings) {
  if (features.rank() != 2) label_mismatch("features must be [N, L]");
  const std::size_t n = features.dim(0);
  const std::size_t outputs = task_output_width(labels, n, settings);
  if (settings.batch_size == 0) throw UsageError("InvalidConfig", "batch_size must be positive");
  const std::size_t width = features.dim(1);
  FinetuneResult result{Head::create(settings.task, width,
                                     settings.hidden ? settings.hidden : width,
                                     outputs, settings.seed),
                        {}};
  Head &head = result.head;
  Rng order_rng = Rng(settings.seed).fork(1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState state;
  const AdamSettings adam = adam_for(settings);
  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    shuffle(order, order_rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += settings.batch_size) {
      const std::span<const std::size_t> rows(
          order.data() + begin, std::min(settings.batch_size, n - begin));
      Tape tape;
      const Var loss = task_loss(
          settings.task, head.forward(tape, tape.constant(gather_rows(features, rows))),
          gather_rows(labels, rows));
      tape.backward(loss);
      Gradients grads(head.params().size());
      tape.collect(grads);
      adam_step(head.params(), grads, state, adam);
      total += loss.value()[0];
      ++batches;
    }
    result.epoch_loss.push_back(total / static_cast<double>(batches));
  }
  return result;
}

FinetuneResult finetune_end_to_end(Model &model,
                                   std::span<const std::vector<int>> ids,
                                   const Tensor &labels, EmbedMode mode,
                                   const FinetuneSettings &settings) {
  const std::size_t n = ids.size();
  const std::size_t outputs = task_output_width(labels, n, settings);
  if (settings.batch_size == 0) throw UsageError("InvalidConfig", "batch_size must be positive");
  const std::size_t width = model.config().hidden;
  FinetuneResult result{Head::create(settings.task, width,
                                     settings.hidden ? settings.hidden : width,
                                     outputs, settings.seed),
                        {}};
  Head &head = result.head;
  Rng root(settings.seed);
  Rng order_rng = root.fork(1);
  Rng dropout_rng = root.fork(2);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState head_state, model_state;
  const AdamSettings adam = adam_for(settings);
  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    shuffle(order, order_rng);
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += settings.batch_size) {
      const std::size_t b = std::min(settings.batch_size, n - begin);
      Gradients head_grads(head.params().size());
      Gradients model_grads(model.params().size());
      double batch_loss = 0.0;
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t row = order[begin + i];
        Rng item_rng = dropout_rng.fork(row);
        Tape encoder_tape;
        Forward f(encoder_tape, model, {.training = true, .rng = &item_rng});
        const Var states = f.encode_tokens(ids[row]);
        const Var emb = mode == EmbedMode::kLatent
                            ? f.latent_encode(states)
                            : ad::weighted_mean_rows(states, pad_mask(ids[row]));
        Tape head_tape;
        const Var x = head_tape.variable(emb.value());
        const std::size_t one[] = {row};
        const Var loss = ad::scale(
            task_loss(settings.task, head.forward(head_tape, x), gather_rows(labels, one)),
            1.0 / static_cast<double>(b));
        head_tape.backward(loss);
        head_tape.collect(head_grads);
        batch_loss += loss.value()[0];
        const Var pulled = ad::sum(ad::mul(emb, encoder_tape.constant(head_tape.grad(x))));
        encoder_tape.backward(pulled);
        encoder_tape.collect(model_grads);
      }
      adam_step(head.params(), head_grads, head_state, adam);
      adam_step(model.params(), model_grads, model_state, adam);
      total += batch_loss;
      ++batches;
    }
    result.epoch_loss.push_back(total / static_cast<double>(batches));
  }
  return result;
}

Tensor embed_all(const Model &model, std::span<const std::vector<int>> ids,
                 EmbedMode mode) {
  Tensor out({ids.size(), model.config().hidden});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Tensor e = embed_ids(model, ids[i], mode);
    std::copy(e.data().begin(), e.data().end(), out.row_span(i).begin());
  }
  return out;
}

}  // namespace smited
