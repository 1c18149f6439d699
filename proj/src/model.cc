//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/model.h"

#include <cmath>

#include "smited/error.h"
#include "smited/optim.h"

namespace smited {
namespace {

[[noreturn]] void mismatch(const std::string &why) {
  throw DataError("ConfigMismatch", why);
}

struct ParamSpec {
  std::string name;
  Shape shape;
  enum Init { kUniform, kZero, kOne, kEmbedding, kGaussian } init;
  bool trainable = true;
};

std::string layer_name(std::size_t layer, const char *suffix) {
  return "layer" + std::to_string(layer) + "." + suffix;
}

// Canonical parameter list for a config, in checkpoint order.
std::vector<ParamSpec> parameter_specs(const ModelConfig &c) {
  const std::size_t v = c.vocab_size, l = c.hidden, f = c.ffn_width(),
                    dl = c.max_len * c.hidden;
  std::vector<ParamSpec> s;
  s.push_back({"embedding", {v, l}, ParamSpec::kEmbedding});
  for (std::size_t i = 0; i < c.layers; ++i) {
    for (const char *p : {"wq", "wk", "wv", "wo"}) {
      s.push_back({layer_name(i, p), {l, l}, ParamSpec::kUniform});
      std::string bias = p;
      bias[0] = 'b';
      s.push_back({layer_name(i, bias.c_str()), {l}, ParamSpec::kZero});
    }
    s.push_back({layer_name(i, "ln1.gamma"), {l}, ParamSpec::kOne});
    s.push_back({layer_name(i, "ln1.beta"), {l}, ParamSpec::kZero});
    s.push_back({layer_name(i, "ffn.w1"), {l, f}, ParamSpec::kUniform});
    s.push_back({layer_name(i, "ffn.b1"), {f}, ParamSpec::kZero});
    s.push_back({layer_name(i, "ffn.w2"), {f, l}, ParamSpec::kUniform});
    s.push_back({layer_name(i, "ffn.b2"), {l}, ParamSpec::kZero});
    s.push_back({layer_name(i, "ln2.gamma"), {l}, ParamSpec::kOne});
    s.push_back({layer_name(i, "ln2.beta"), {l}, ParamSpec::kZero});
    s.push_back({layer_name(i, "features"),
                 {c.heads * c.features, c.head_dim()},
                 ParamSpec::kGaussian,
                 false});
  }
  s.push_back({"latent.enc.w1", {dl, l}, ParamSpec::kUniform});
  s.push_back({"latent.enc.b1", {l}, ParamSpec::kZero});
  s.push_back({"latent.enc.ln.gamma", {l}, ParamSpec::kOne});
  s.push_back({"latent.enc.ln.beta", {l}, ParamSpec::kZero});
  s.push_back({"latent.enc.w2", {l, l}, ParamSpec::kUniform});
  s.push_back({"latent.dec.w3", {l, l}, ParamSpec::kUniform});
  s.push_back({"latent.dec.b3", {l}, ParamSpec::kZero});
  s.push_back({"latent.dec.ln.gamma", {l}, ParamSpec::kOne});
  s.push_back({"latent.dec.ln.beta", {l}, ParamSpec::kZero});
  s.push_back({"latent.dec.w4", {l, dl}, ParamSpec::kUniform});
  s.push_back({"head.dense.w", {l, l}, ParamSpec::kUniform});
  s.push_back({"head.dense.b", {l}, ParamSpec::kZero});
  s.push_back({"head.ln.gamma", {l}, ParamSpec::kOne});
  s.push_back({"head.ln.beta", {l}, ParamSpec::kZero});
  s.push_back({"head.out.w", {l, v}, ParamSpec::kUniform});
  s.push_back({"head.out.b", {v}, ParamSpec::kZero});
  return s;
}

Tensor initial_value(const ParamSpec &spec, Rng &rng) {
  Tensor t(spec.shape);
  switch (spec.init) {
    case ParamSpec::kZero: break;
    case ParamSpec::kOne: t.fill(1.0); break;
    case ParamSpec::kEmbedding:
      for (double &x : t.data()) x = rng.normal(0.0, 0.02);
      break;
    case ParamSpec::kGaussian:
      for (double &x : t.data()) x = rng.normal();
      break;
    case ParamSpec::kUniform: {
      const double bound = 1.0 / std::sqrt(static_cast<double>(spec.shape[0]));
      for (double &x : t.data()) x = rng.uniform(-bound, bound);
      break;
    }
  }
  for (double &x : t.data()) x = static_cast<double>(static_cast<float>(x));
  return t;
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string &why) {
    throw UsageError("InvalidConfig", "invalid model config: " + why);
  };
  if (vocab_size <= static_cast<std::size_t>(Vocabulary::kSpecialCount)) {
    fail("vocab_size must exceed the 5 special tokens");
  }
  if (max_len < 4) fail("max_len (D) must be at least 4");
  if (heads == 0 || hidden == 0 || hidden % heads != 0) {
    fail("hidden must be a positive multiple of heads");
  }
  if (head_dim() % 2 != 0) fail("head dimension must be even");
  if (layers == 0) fail("layers must be positive");
  if (features == 0) fail("features must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) fail("dropout must lie in [0, 1)");
  if (!(rope_base > 1.0)) fail("rope_base must exceed 1");
}

nlohmann::ordered_json config_to_json(const ModelConfig &c) {
  return {{"vocab_size", c.vocab_size}, {"max_len", c.max_len},
          {"hidden", c.hidden},         {"heads", c.heads},
          {"layers", c.layers},         {"ffn_dim", c.ffn_width()},
          {"features", c.features},     {"dropout", c.dropout},
          {"rope_base", c.rope_base}};
}

ModelConfig config_from_json(const nlohmann::ordered_json &j) {
  ModelConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.max_len = j.at("max_len").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.heads = j.at("heads").get<std::size_t>();
    c.layers = j.at("layers").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.features = j.at("features").get<std::size_t>();
    c.dropout = j.at("dropout").get<double>();
    c.rope_base = j.at("rope_base").get<double>();
  } catch (const nlohmann::json::exception &e) {
    mismatch(std::string("model config incomplete: ") + e.what());
  }
  try {
    c.validate();
  } catch (const UsageError &e) {
    mismatch(e.what());
  }
  return c;
}

Model Model::create(const ModelConfig &config, Vocabulary vocab,
                    std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParameterSet params;
  for (const ParamSpec &spec : parameter_specs(config)) {
    params.add(spec.name, initial_value(spec, rng), spec.trainable);
  }
  return Model(config, std::move(vocab), std::move(params));
}

Model::Model(const ModelConfig &config, Vocabulary vocab, ParameterSet params)
    : config_(config), vocab_(std::move(vocab)), params_(std::move(params)) {
  try {
    config_.validate();
  } catch (const UsageError &e) {
    mismatch(e.what());
  }
  if (vocab_.size() != config_.vocab_size) {
    mismatch("vocabulary has " + std::to_string(vocab_.size()) +
             " entries, config says " + std::to_string(config_.vocab_size));
  }
  const auto specs = parameter_specs(config_);
  if (specs.size() != params_.size()) {
    mismatch("expected " + std::to_string(specs.size()) + " parameters, found " +
             std::to_string(params_.size()));
  }
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (params_[i].name != specs[i].name ||
        params_[i].value.shape() != specs[i].shape) {
      mismatch("parameter " + std::to_string(i) + " is " + params_[i].name +
               shape_string(params_[i].value.shape()) + ", expected " +
               specs[i].name + shape_string(specs[i].shape));
    }
    params_[i].trainable = specs[i].trainable;
  }
  bind_ids();
}

void Model::bind_ids() {
  auto id = [&](const std::string &name) { return params_.id_of(name); };
  ids_.embedding = id("embedding");
  ids_.layers.clear();
  projections_.clear();
  const std::size_t m = config_.features;
  for (std::size_t i = 0; i < config_.layers; ++i) {
    auto n = [&](const char *s) { return id(layer_name(i, s)); };
    ids_.layers.push_back({n("wq"), n("bq"), n("wk"), n("bk"), n("wv"), n("bv"),
                           n("wo"), n("bo"), n("ln1.gamma"), n("ln1.beta"),
                           n("ffn.w1"), n("ffn.b1"), n("ffn.w2"), n("ffn.b2"),
                           n("ln2.gamma"), n("ln2.beta"), n("features")});
    const Tensor &all = params_[ids_.layers.back().features].value;
    const std::size_t d = config_.head_dim();
    for (std::size_t h = 0; h < config_.heads; ++h) {
      Tensor p({m, d});
      std::copy_n(all.data().begin() + static_cast<std::ptrdiff_t>(h * m * d),
                  m * d, p.data().begin());
      projections_.push_back(std::move(p));
    }
  }
  ids_.enc_w1 = id("latent.enc.w1");
  ids_.enc_b1 = id("latent.enc.b1");
  ids_.enc_ln_gamma = id("latent.enc.ln.gamma");
  ids_.enc_ln_beta = id("latent.enc.ln.beta");
  ids_.enc_w2 = id("latent.enc.w2");
  ids_.dec_w3 = id("latent.dec.w3");
  ids_.dec_b3 = id("latent.dec.b3");
  ids_.dec_ln_gamma = id("latent.dec.ln.gamma");
  ids_.dec_ln_beta = id("latent.dec.ln.beta");
  ids_.dec_w4 = id("latent.dec.w4");
  ids_.head_w = id("head.dense.w");
  ids_.head_b = id("head.dense.b");
  ids_.head_ln_gamma = id("head.ln.gamma");
  ids_.head_ln_beta = id("head.ln.beta");
  ids_.head_out_w = id("head.out.w");
  ids_.head_out_b = id("head.out.b");
  ids_.encoder_begin = ids_.embedding;
  ids_.encoder_end = ids_.enc_w1;
}

CheckpointData Model::to_checkpoint() const {
  CheckpointData data;
  data.meta["kind"] = "model";
  data.meta["config"] = config_to_json(config_);
  data.meta["vocabulary"] = vocab_.tokens();
  data.params = params_;
  return data;
}

Model Model::from_checkpoint(const CheckpointData &data) {
  if (data.meta.value("kind", "") != "model") {
    throw DataError("CorruptCheckpoint", "checkpoint does not hold a model");
  }
  const ModelConfig config = config_from_json(data.meta.at("config"));
  std::vector<std::string> tokens;
  try {
    tokens = data.meta.at("vocabulary").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception &e) {
    mismatch(std::string("vocabulary missing: ") + e.what());
  }
  const auto specials = Vocabulary::special_tokens();
  if (tokens.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), tokens.begin())) {
    mismatch("vocabulary does not start with the special tokens");
  }
  Vocabulary vocab(std::vector<std::string>(
      tokens.begin() + static_cast<std::ptrdiff_t>(specials.size()), tokens.end()));
  return Model(config, std::move(vocab), data.params);
}

void Model::save(const std::filesystem::path &path) const {
  save_checkpoint_file(to_checkpoint(), path);
}

Model Model::load(const std::filesystem::path &path) {
  return from_checkpoint(load_checkpoint_file(path));
}

std::vector<double> pad_mask(std::span<const int> ids) {
  std::vector<double> mask(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    mask[i] = ids[i] == Vocabulary::kPad ? 0.0 : 1.0;
  }
  return mask;
}

Forward::Forward(Tape &tape, const Model &model, ForwardOptions options)
    : tape_(tape), model_(model), options_(options),
      bound_(model.params().size()) {
  if (options_.training && model.config().dropout > 0.0 && !options_.rng) {
    throw UsageError("training forward with dropout needs an rng");
  }
}

Var Forward::param(std::size_t id) {
  if (!bound_[id].valid()) {
    const bool track = !options_.no_grad &&
                       !(options_.freeze_encoder && model_.is_encoder_param(id));
    bound_[id] = tape_.parameter(model_.params(), id, track);
  }
  return bound_[id];
}

Var Forward::dropout(const Var &x) {
  if (!options_.training || model_.config().dropout == 0.0) return x;
  return ad::dropout(x, model_.config().dropout, *options_.rng);
}

Var Forward::attention_block(std::size_t layer, const Var &x,
                             std::span<const double> key_mask) {
  const ModelConfig &c = model_.config();
  const Model::LayerIds &p = model_.ids().layers[layer];
  auto affine = [&](std::size_t w, std::size_t b) {
    return ad::add_bias(ad::matmul(x, param(w)), param(b));
  };
  const Var q = ad::rotary(affine(p.wq, p.bq), c.heads, c.rope_base);
  const Var k = ad::rotary(affine(p.wk, p.bk), c.heads, c.rope_base);
  const Var v = affine(p.wv, p.bv);
  const std::size_t d = c.head_dim();
  // u -> u / d^(1/4) on both sides makes E[phi(q).phi(k)] = exp(q.k / sqrt(d)).
  const double scale = 1.0 / std::pow(static_cast<double>(d), 0.25);
  std::vector<Var> heads;
  for (std::size_t h = 0; h < c.heads; ++h) {
    const Var qh = ad::scale(ad::slice_cols(q, h * d, (h + 1) * d), scale);
    const Var kh = ad::scale(ad::slice_cols(k, h * d, (h + 1) * d), scale);
    const Var vh = ad::slice_cols(v, h * d, (h + 1) * d);
    heads.push_back(
        linear_attention(qh, kh, vh, model_.projection(layer, h), key_mask));
  }
  const Var merged = heads.size() == 1 ? heads[0] : ad::concat(heads, 1);
  return ad::add_bias(ad::matmul(merged, param(p.wo)), param(p.bo));
}

Var Forward::encode_tokens(std::span<const int> ids,
                           std::span<const double> key_mask) {
  const ModelConfig &c = model_.config();
  if (ids.size() != c.max_len) {
    throw_shape_mismatch("encode_tokens", {ids.size()}, {c.max_len});
  }
  std::vector<double> mask;
  if (key_mask.empty()) {
    mask = pad_mask(ids);
    key_mask = mask;
  } else if (key_mask.size() != ids.size()) {
    throw_shape_mismatch("encode_tokens", {ids.size()}, {key_mask.size()});
  }
  Var x = ad::embedding(param(model_.ids().embedding), ids);
  for (std::size_t layer = 0; layer < c.layers; ++layer) {
    const Model::LayerIds &p = model_.ids().layers[layer];
    const Var attended = dropout(attention_block(layer, x, key_mask));
    x = ad::layernorm(ad::add(x, attended), param(p.ln1_gamma), param(p.ln1_beta));
    const Var hidden =
        ad::gelu(ad::add_bias(ad::matmul(x, param(p.ffn_w1)), param(p.ffn_b1)));
    const Var ffn = dropout(
        ad::add_bias(ad::matmul(hidden, param(p.ffn_w2)), param(p.ffn_b2)));
    x = ad::layernorm(ad::add(x, ffn), param(p.ln2_gamma), param(p.ln2_beta));
  }
  return x;
}

Var Forward::latent_encode(const Var &states) {
  const ModelConfig &c = model_.config();
  const Shape expected = {c.max_len, c.hidden};
  if (states.shape() != expected) {
    throw_shape_mismatch("latent_encode", states.shape(), expected);
  }
  const Model::Ids &p = model_.ids();
  const Var flat = ad::reshape(states, {1, c.max_len * c.hidden});
  const Var h = ad::gelu(ad::add_bias(ad::matmul(flat, param(p.enc_w1)),
                                      param(p.enc_b1)));
  const Var n = ad::layernorm(h, param(p.enc_ln_gamma), param(p.enc_ln_beta));
  return ad::matmul(n, param(p.enc_w2));
}

Var Forward::latent_decode(const Var &z) {
  const ModelConfig &c = model_.config();
  const Shape expected = {1, c.hidden};
  if (z.shape() != expected) throw_shape_mismatch("latent_decode", z.shape(), expected);
  const Model::Ids &p = model_.ids();
  const Var h = ad::gelu(ad::add_bias(ad::matmul(z, param(p.dec_w3)),
                                      param(p.dec_b3)));
  const Var n = ad::layernorm(h, param(p.dec_ln_gamma), param(p.dec_ln_beta));
  return ad::reshape(ad::matmul(n, param(p.dec_w4)), {c.max_len, c.hidden});
}

Var Forward::lm_head(const Var &states) {
  const ModelConfig &c = model_.config();
  if (states.value().rank() != 2 || states.shape()[1] != c.hidden) {
    throw_shape_mismatch("lm_head", states.shape(), {c.max_len, c.hidden});
  }
  const Model::Ids &p = model_.ids();
  const Var h = ad::gelu(ad::add_bias(ad::matmul(states, param(p.head_w)),
                                      param(p.head_b)));
  const Var n = ad::layernorm(h, param(p.head_ln_gamma), param(p.head_ln_beta));
  return ad::add_bias(ad::matmul(n, param(p.head_out_w)), param(p.head_out_b));
}

}  // namespace smited
