//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_FINETUNE_H_
#define SMITED_FINETUNE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smited/checkpoint.h"
#include "smited/training.h"

namespace smited {

enum class TaskKind { kClassify, kRegress };
TaskKind parse_task_kind(std::string_view name);
std::string_view task_kind_name(TaskKind task);

// CSV with a header, a "smiles" column and one numeric column per target.
struct LabeledData {
  std::vector<std::string> smiles;
  std::vector<std::string> targets;
  Tensor labels;  // [N, T]
};
// Throws DataError("MalformedDataset").
LabeledData read_labeled_csv(std::istream &in);
LabeledData read_labeled_csv_file(const std::filesystem::path &path);

// Two-layer task head: x W1 + b1 -> GELU -> W2 + b2. Classification heads
// emit one logit per class for a single label column; regression heads one
// value per target column.
class Head {
 public:
  static Head create(TaskKind task, std::size_t input_dim, std::size_t hidden,
                     std::size_t outputs, std::uint64_t seed);
  // Throws DataError("ConfigMismatch") when the parameters are not a head.
  Head(TaskKind task, ParameterSet params);

  TaskKind task() const noexcept { return task_; }
  std::size_t input_dim() const;
  std::size_t hidden() const;
  std::size_t outputs() const;
  ParameterSet &params() noexcept { return params_; }
  const ParameterSet &params() const noexcept { return params_; }

  // x [N, input_dim] -> [N, outputs].
  Var forward(Tape &tape, const Var &x, bool track = true) const;
  // Regression values, or class probabilities for classification.
  Tensor predict(const Tensor &x) const;

  CheckpointData to_checkpoint() const;
  static Head from_checkpoint(const CheckpointData &data);
  void save(const std::filesystem::path &path) const;
  static Head load(const std::filesystem::path &path);

 private:
  TaskKind task_;
  ParameterSet params_;
};

struct FinetuneSettings {
  TaskKind task = TaskKind::kRegress;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  std::size_t hidden = 0;   // 0 means the input width
  std::size_t classes = 0;  // 0 means 1 + the largest label
};

struct FinetuneResult {
  Head head;
  std::vector<double> epoch_loss;  // mean batch loss per epoch
};

// Head output width for labels over n inputs: the class count or the
// target count. Throws DataError("LabelShapeMismatch").
std::size_t task_output_width(const Tensor &labels, std::size_t n,
                              const FinetuneSettings &settings);

// Task loss of head outputs against labels: cross-entropy on the single
// integer label column, or mean squared error over all targets.
Var task_loss(TaskKind task, const Var &outputs, const Tensor &labels);

// Trains only the head on precomputed features [N, L]. Throws
// DataError("LabelShapeMismatch") when labels are not [N, T] (T == 1 with
// integer classes for classification).
FinetuneResult finetune_frozen(const Tensor &features, const Tensor &labels,
                               const FinetuneSettings &settings);

// Trains head and encoder together; `model` is updated in place.
FinetuneResult finetune_end_to_end(Model &model,
                                   std::span<const std::vector<int>> ids,
                                   const Tensor &labels, EmbedMode mode,
                                   const FinetuneSettings &settings);

// Embeddings of each sequence stacked into [N, L].
Tensor embed_all(const Model &model, std::span<const std::vector<int>> ids,
                 EmbedMode mode);

}  // namespace smited

#endif  // SMITED_FINETUNE_H_
