//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/moe.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "smited/error.h"
#include "smited/optim.h"

namespace smited {
namespace {

void check_k(std::size_t k, std::size_t n) {
  if (k == 0) throw UsageError("InvalidConfig", "k must be at least 1");
  if (k > n) {
    throw UsageError("KTooLarge", "k = " + std::to_string(k) + " exceeds " +
                                      std::to_string(n) + " experts");
  }
}

Tensor row_of(const Tensor &t, std::size_t r) {
  const auto span = t.row_span(r);
  return Tensor({1, t.cols()}, std::vector<double>(span.begin(), span.end()));
}

}  // namespace

GateDecision top_k_gate(std::span<const double> logits, std::size_t k) {
  check_k(k, logits.size());
  std::vector<std::size_t> order(logits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return logits[a] > logits[b];
  });
  GateDecision d;
  d.experts.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  const double top = logits[d.experts.front()];
  double total = 0.0;
  for (std::size_t e : d.experts) {
    d.weights.push_back(std::exp(logits[e] - top));
    total += d.weights.back();
  }
  for (double &w : d.weights) w /= total;
  return d;
}

GateDecision gate(std::span<const double> x, const Tensor &wg, std::size_t k) {
  if (wg.rank() != 2 || wg.dim(0) != x.size()) {
    throw_shape_mismatch("gate", Shape{x.size()}, wg.shape());
  }
  std::vector<double> logits(wg.dim(1), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < logits.size(); ++j) logits[j] += x[i] * wg.at(i, j);
  }
  return top_k_gate(logits, k);
}

Var gate_weights(const Var &x, const Var &wg, std::span<const std::size_t> experts) {
  const Var logits = ad::matmul(x, wg);
  std::vector<Var> cols;
  for (std::size_t e : experts) cols.push_back(ad::slice_cols(logits, e, e + 1));
  return ad::softmax(ad::concat(cols, 1));
}

MixtureOfExperts::MixtureOfExperts(std::vector<Model> experts, Tensor wg,
                                   std::size_t k, std::size_t router,
                                   EmbedMode mode)
    : experts_(std::move(experts)), k_(k), router_(router), mode_(mode) {
  if (experts_.empty()) throw UsageError("InvalidConfig", "mixture needs at least one expert");
  check_k(k_, experts_.size());
  if (router_ >= experts_.size()) {
    throw UsageError("InvalidConfig", "router index outside the expert list");
  }
  for (std::size_t i = 1; i < experts_.size(); ++i) {
    if (!(experts_[i].config() == experts_[0].config()) ||
        experts_[i].vocab().tokens() != experts_[0].vocab().tokens()) {
      throw DataError("ConfigMismatch", "expert " + std::to_string(i) +
                                            " differs in config or vocabulary from expert 0");
    }
  }
  set_wg(std::move(wg));
}

void MixtureOfExperts::set_wg(Tensor wg) {
  const Shape want{experts_[0].config().hidden, experts_.size()};
  if (wg.shape() != want) {
    throw DataError("ConfigMismatch", "gate matrix is " + shape_string(wg.shape()) +
                                          ", expected " + shape_string(want));
  }
  wg_ = std::move(wg);
}

Tensor MixtureOfExperts::gate_input(std::span<const int> ids) const {
  return embed_ids(experts_[router_], ids, EmbedMode::kMeanPool);
}

GateDecision MixtureOfExperts::route(std::span<const int> ids) const {
  return gate(gate_input(ids).data(), wg_, k_);
}

Tensor MixtureOfExperts::mix(std::span<const int> ids, GateDecision *decision) const {
  const GateDecision d = route(ids);
  Tensor y({1, experts_[0].config().hidden});
  for (std::size_t j = 0; j < d.experts.size(); ++j) {
    const Tensor e = embed_ids(experts_[d.experts[j]], ids, mode_);
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += d.weights[j] * e[c];
  }
  if (decision) *decision = d;
  return y;
}

Tensor mix_embeddings(const GateDecision &decision,
                      std::span<const Tensor> expert_embeddings, std::size_t row) {
  Tensor y({1, expert_embeddings[0].cols()});
  for (std::size_t j = 0; j < decision.experts.size(); ++j) {
    const auto e = expert_embeddings[decision.experts[j]].row_span(row);
    for (std::size_t c = 0; c < y.size(); ++c) y[c] += decision.weights[j] * e[c];
  }
  return y;
}

MoeFinetuneResult moe_finetune(const Tensor &gate_inputs,
                               std::span<const Tensor> expert_embeddings,
                               const Tensor &labels, std::size_t k,
                               const FinetuneSettings &settings) {
  const std::size_t n_experts = expert_embeddings.size();
  check_k(k, n_experts);
  if (gate_inputs.rank() != 2) {
    throw DataError("LabelShapeMismatch", "gate inputs must be [N, L]");
  }
  const std::size_t n = gate_inputs.dim(0), width = gate_inputs.dim(1);
  for (const Tensor &e : expert_embeddings) {
    if (e.rank() != 2 || e.dim(0) != n) {
      throw DataError("LabelShapeMismatch", "expert embeddings must be [N, L]");
    }
  }
  if (settings.batch_size == 0) throw UsageError("InvalidConfig", "batch_size must be positive");
  const std::size_t embed_width = expert_embeddings[0].cols();
  const std::size_t outputs = task_output_width(labels, n, settings);
  Rng root(settings.seed);
  Rng init_rng = root.fork(3);
  ParameterSet gate_params;
  Tensor wg({width, n_experts});
  for (double &v : wg.data()) v = static_cast<float>(init_rng.uniform(-1e-2, 1e-2));
  gate_params.add("gate.wg", std::move(wg));
  MoeFinetuneResult result{{},
                           Head::create(settings.task, embed_width,
                                        settings.hidden ? settings.hidden : embed_width,
                                        outputs, settings.seed),
                           {}};
  Head &head = result.head;
  Rng order_rng = root.fork(1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  AdamState gate_state, head_state;
  const AdamSettings adam{.lr = settings.lr, .round_to_f32 = true};
  for (std::size_t epoch = 0; epoch < settings.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.below(i)]);
    }
    double total = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += settings.batch_size) {
      const std::size_t b = std::min(settings.batch_size, n - begin);
      Tape tape;
      const Var wg_var = tape.variable(gate_params[0].value);
      std::vector<Var> rows;
      Tensor batch_labels({b, labels.cols()});
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t r = order[begin + i];
        const Tensor x = row_of(gate_inputs, r);
        const GateDecision d = gate(x.data(), gate_params[0].value, k);
        Tensor stacked({k, embed_width});
        for (std::size_t j = 0; j < k; ++j) {
          const auto e = expert_embeddings[d.experts[j]].row_span(r);
          std::copy(e.begin(), e.end(), stacked.row_span(j).begin());
        }
        rows.push_back(ad::matmul(gate_weights(tape.constant(x), wg_var, d.experts),
                                  tape.constant(std::move(stacked))));
        const auto l = labels.row_span(r);
        std::copy(l.begin(), l.end(), batch_labels.row_span(i).begin());
      }
      const Var loss = task_loss(settings.task, head.forward(tape, ad::concat(rows, 0)),
                                 batch_labels);
      tape.backward(loss);
      Gradients gate_grads(1), head_grads(head.params().size());
      gate_grads[0] = tape.grad(wg_var);
      tape.collect(head_grads);
      adam_step(gate_params, gate_grads, gate_state, adam);
      adam_step(head.params(), head_grads, head_state, adam);
      total += loss.value()[0];
      ++batches;
    }
    result.epoch_loss.push_back(total / static_cast<double>(batches));
  }
  result.wg = gate_params[0].value;
  return result;
}

MoeFinetuneResult moe_finetune(const MixtureOfExperts &moe,
                               std::span<const std::vector<int>> ids,
                               const Tensor &labels,
                               const FinetuneSettings &settings) {
  const Tensor gate_inputs = embed_all(moe.expert(moe.router()), ids, EmbedMode::kMeanPool);
  std::vector<Tensor> tables;
  for (std::size_t i = 0; i < moe.size(); ++i) {
    tables.push_back(embed_all(moe.expert(i), ids, moe.mode()));
  }
  return moe_finetune(gate_inputs, tables, labels, moe.k(), settings);
}

MoeManifest read_moe_manifest(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw DataError("FileNotFound", "cannot open " + path.string());
  const auto base = path.parent_path();
  auto resolve = [&](const std::string &p) {
    const std::filesystem::path q(p);
    return q.is_absolute() || base.empty() ? q : base / q;
  };
  MoeManifest m;
  try {
    const nlohmann::json j = nlohmann::json::parse(in);
    for (const auto &p : j.at("experts")) m.experts.push_back(resolve(p.get<std::string>()));
    m.k = j.at("k").get<std::size_t>();
    m.gate = resolve(j.at("gate").get<std::string>());
    if (j.contains("head")) m.head = resolve(j.at("head").get<std::string>());
    m.router = j.value("router", std::size_t{0});
    m.mode = parse_embed_mode(j.value("embedding", std::string("mean_pool")));
  } catch (const nlohmann::json::exception &e) {
    throw DataError("MalformedManifest", path.string() + ": " + e.what());
  }
  if (m.experts.empty()) throw DataError("MalformedManifest", "no experts listed");
  check_k(m.k, m.experts.size());
  return m;
}

void write_moe_manifest(const MoeManifest &manifest,
                        const std::filesystem::path &path) {
  nlohmann::ordered_json j;
  std::vector<std::string> experts;
  for (const auto &p : manifest.experts) experts.push_back(p.string());
  j["experts"] = experts;
  j["k"] = manifest.k;
  j["gate"] = manifest.gate.string();
  if (!manifest.head.empty()) j["head"] = manifest.head.string();
  j["router"] = manifest.router;
  j["embedding"] = std::string(embed_mode_name(manifest.mode));
  std::ofstream out(path);
  if (!out) throw DataError("FileNotWritable", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void save_gate(const Tensor &wg, const std::filesystem::path &path) {
  CheckpointData data;
  data.meta["kind"] = "gate";
  data.params.add("gate.wg", wg, true);
  save_checkpoint_file(data, path);
}

Tensor load_gate(const std::filesystem::path &path) {
  const CheckpointData data = load_checkpoint_file(path);
  if (data.meta.value("kind", "") != "gate" || data.params.size() != 1 ||
      data.params[0].value.rank() != 2) {
    throw DataError("CorruptCheckpoint", path.string() + " does not hold a gate matrix");
  }
  return data.params[0].value;
}

}  // namespace smited
