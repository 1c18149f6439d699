//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_MOE_H_
#define SMITED_MOE_H_

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "smited/finetune.h"

namespace smited {

struct GateDecision {
  std::vector<std::size_t> experts;  // descending logit, ties to lower index
  std::vector<double> weights;       // softmax over the survivors
};

// Keeps the k largest logits. Throws UsageError("KTooLarge") for k > n and
// UsageError("InvalidConfig") for k == 0.
GateDecision top_k_gate(std::span<const double> logits, std::size_t k);
// logits = x Wg with x [L] and Wg [L, n].
GateDecision gate(std::span<const double> x, const Tensor &wg, std::size_t k);

// Differentiable gate weights [1, k] of the given experts: softmax over the
// selected columns of x Wg.
Var gate_weights(const Var &x, const Var &wg, std::span<const std::size_t> experts);

// Sparse mixture of pre-trained encoders. The gating input is the
// mean-pooled embedding from the router expert; each active expert
// re-encodes the molecule and contributes its embedding.
class MixtureOfExperts {
 public:
  // Throws DataError("ConfigMismatch") when experts disagree in config or
  // vocabulary or Wg is not [L, n].
  MixtureOfExperts(std::vector<Model> experts, Tensor wg, std::size_t k,
                   std::size_t router = 0, EmbedMode mode = EmbedMode::kMeanPool);

  std::size_t size() const noexcept { return experts_.size(); }
  std::size_t k() const noexcept { return k_; }
  std::size_t router() const noexcept { return router_; }
  EmbedMode mode() const noexcept { return mode_; }
  const Tensor &wg() const noexcept { return wg_; }
  void set_wg(Tensor wg);
  const Model &expert(std::size_t i) const { return experts_[i]; }
  Model &expert(std::size_t i) { return experts_[i]; }

  Tensor gate_input(std::span<const int> ids) const;  // [1, L]
  GateDecision route(std::span<const int> ids) const;
  // y = sum of weight_i * embedding_i over active experts only, [1, L].
  Tensor mix(std::span<const int> ids, GateDecision *decision = nullptr) const;

 private:
  std::vector<Model> experts_;
  Tensor wg_;
  std::size_t k_;
  std::size_t router_;
  EmbedMode mode_;
};

// Mixture output for precomputed embeddings: expert_embeddings[i] is row
// `row` of expert i's [N, L] embedding table.
Tensor mix_embeddings(const GateDecision &decision,
                      std::span<const Tensor> expert_embeddings, std::size_t row);

struct MoeFinetuneResult {
  Tensor wg;
  Head head;
  std::vector<double> epoch_loss;
};

// Trains Wg and a task head with frozen experts. gate_inputs is [N, L];
// expert_embeddings holds one [N, L] table per expert. Gradients reach Wg
// through the softmax weights of the active experts only.
MoeFinetuneResult moe_finetune(const Tensor &gate_inputs,
                               std::span<const Tensor> expert_embeddings,
                               const Tensor &labels, std::size_t k,
                               const FinetuneSettings &settings);

// Convenience wrapper computing the inputs from a mixture's encoders.
MoeFinetuneResult moe_finetune(const MixtureOfExperts &moe,
                               std::span<const std::vector<int>> ids,
                               const Tensor &labels,
                               const FinetuneSettings &settings);

// Ensemble manifest: JSON with "experts" (checkpoint paths), "k", "gate"
// (Wg checkpoint path), "router", "embedding" and optionally "head".
struct MoeManifest {
  std::vector<std::filesystem::path> experts;
  std::size_t k = 2;
  std::filesystem::path gate;
  std::filesystem::path head;
  std::size_t router = 0;
  EmbedMode mode = EmbedMode::kMeanPool;
};
MoeManifest read_moe_manifest(const std::filesystem::path &path);
void write_moe_manifest(const MoeManifest &manifest,
                        const std::filesystem::path &path);

// Wg stored as checkpoint kind "gate".
void save_gate(const Tensor &wg, const std::filesystem::path &path);
Tensor load_gate(const std::filesystem::path &path);

}  // namespace smited

#endif  // SMITED_MOE_H_
