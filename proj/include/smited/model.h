//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_MODEL_H_
#define SMITED_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "smited/attention.h"
#include "smited/autograd.h"
#include "smited/checkpoint.h"
#include "smited/parameters.h"
#include "smited/rng.h"
#include "smited/tokenizer.h"

namespace smited {

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t max_len = 32;   // D: framed tokens per molecule
  std::size_t hidden = 64;    // L
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t ffn_dim = 0;    // 0 means 4 * hidden
  std::size_t features = 16;  // random features per head
  double dropout = 0.0;
  double rope_base = kRopeBase;

  std::size_t head_dim() const { return hidden / heads; }
  std::size_t ffn_width() const { return ffn_dim ? ffn_dim : 4 * hidden; }
  // Throws UsageError("InvalidConfig").
  void validate() const;

  bool operator==(const ModelConfig &) const = default;
};

nlohmann::ordered_json config_to_json(const ModelConfig &config);
ModelConfig config_from_json(const nlohmann::ordered_json &j);

// Encoder stack, latent coder and language head. Parameters live in one
// ordered ParameterSet; the random-feature projections are frozen members
// of it so checkpoints carry them.
class Model {
 public:
  struct LayerIds {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln1_gamma, ln1_beta;
    std::size_t ffn_w1, ffn_b1, ffn_w2, ffn_b2;
    std::size_t ln2_gamma, ln2_beta;
    std::size_t features;  // [heads * m, head_dim], frozen
  };
  struct Ids {
    std::size_t embedding;
    std::vector<LayerIds> layers;
    // latent encoder: flatten(x) W1 + b1 -> GELU -> LN -> W2
    std::size_t enc_w1, enc_b1, enc_ln_gamma, enc_ln_beta, enc_w2;
    // latent decoder: z W3 + b3 -> GELU -> LN -> W4 -> reshape
    std::size_t dec_w3, dec_b3, dec_ln_gamma, dec_ln_beta, dec_w4;
    // head: dense -> GELU -> LN -> projection to the vocabulary
    std::size_t head_w, head_b, head_ln_gamma, head_ln_beta, head_out_w,
        head_out_b;
    std::size_t encoder_begin, encoder_end;  // id range of encoder params
  };

  // Fresh model; initial values are rounded to float precision.
  static Model create(const ModelConfig &config, Vocabulary vocab,
                      std::uint64_t seed);
  // Adopts existing parameters; throws DataError("ConfigMismatch") when
  // names or shapes disagree with the config.
  Model(const ModelConfig &config, Vocabulary vocab, ParameterSet params);

  const ModelConfig &config() const noexcept { return config_; }
  const Vocabulary &vocab() const noexcept { return vocab_; }
  ParameterSet &params() noexcept { return params_; }
  const ParameterSet &params() const noexcept { return params_; }
  const Ids &ids() const noexcept { return ids_; }
  bool is_encoder_param(std::size_t id) const {
    return id >= ids_.encoder_begin && id < ids_.encoder_end;
  }
  // Projection of one head in one layer, [m, head_dim].
  const Tensor &projection(std::size_t layer, std::size_t head) const {
    return projections_[layer * config_.heads + head];
  }

  CheckpointData to_checkpoint() const;
  // Throws CorruptCheckpoint for a non-model file, ConfigMismatch for
  // inconsistent contents.
  static Model from_checkpoint(const CheckpointData &data);
  void save(const std::filesystem::path &path) const;
  static Model load(const std::filesystem::path &path);

 private:
  void bind_ids();

  ModelConfig config_;
  Vocabulary vocab_;
  ParameterSet params_;
  Ids ids_{};
  std::vector<Tensor> projections_;
};

struct ForwardOptions {
  bool training = false;  // enables dropout
  Rng *rng = nullptr;     // dropout stream, required when training
  // Encoder parameters enter as constants (no gradient).
  bool freeze_encoder = false;
  // Parameters enter as constants everywhere.
  bool no_grad = false;
};

// Forward pass on one tape. Each parameter is bound once per Forward.
class Forward {
 public:
  Forward(Tape &tape, const Model &model, ForwardOptions options = {});

  Tape &tape() { return tape_; }
  Var param(std::size_t id);

  // ids [D] -> token states [D, L]. Keys whose id is [PAD] are masked
  // unless `key_mask` (1 = real, 0 = pad) is given explicitly.
  Var encode_tokens(std::span<const int> ids,
                    std::span<const double> key_mask = {});
  Var latent_encode(const Var &states);  // [D, L] -> [1, L]
  Var latent_decode(const Var &z);       // [1, L] -> [D, L]
  Var lm_head(const Var &states);        // [D, L] -> [D, V]

 private:
  Var dropout(const Var &x);
  Var attention_block(std::size_t layer, const Var &x,
                      std::span<const double> key_mask);

  Tape &tape_;
  const Model &model_;
  ForwardOptions options_;
  std::vector<Var> bound_;
};

// Key mask for an id sequence: 1 where the id is not [PAD].
std::vector<double> pad_mask(std::span<const int> ids);

}  // namespace smited

#endif  // SMITED_MODEL_H_
