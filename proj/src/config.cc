//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/config.h"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "smited/error.h"

namespace smited {

namespace {

std::string_view trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value,
                            std::string_view expected) {
  throw UsageError("BadValue", "config key '" + std::string(key) + "' expects " +
                                   std::string(expected) + ", got '" +
                                   std::string(value) + "'");
}

std::size_t parse_size(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty() ||
      !std::isfinite(out)) {
    bad_value(key, value, "a finite number");
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Key {
  std::string_view name;
  std::function<void(RunConfig &, std::string_view)> set;
  std::function<std::string(const RunConfig &)> get;
};

template <class Member>
Key size_key(std::string_view name, Member member) {
  return {name,
          [name, member](RunConfig &c, std::string_view v) {
            std::invoke(member, c) = parse_size(name, v);
          },
          [member](const RunConfig &c) {
            return std::to_string(std::invoke(member, const_cast<RunConfig &>(c)));
          }};
}

template <class Member>
Key double_key(std::string_view name, Member member) {
  return {name,
          [name, member](RunConfig &c, std::string_view v) {
            std::invoke(member, c) = parse_double(name, v);
          },
          [member](const RunConfig &c) {
            return format_double(std::invoke(member, const_cast<RunConfig &>(c)));
          }};
}

template <class Member>
Key string_key(std::string_view name, Member member) {
  return {name,
          [member](RunConfig &c, std::string_view v) {
            std::invoke(member, c) = std::string(v);
          },
          [member](const RunConfig &c) {
            return std::invoke(member, const_cast<RunConfig &>(c));
          }};
}

const std::vector<Key> &keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back({"seed",
                 [](RunConfig &c, std::string_view v) { c.seed = parse_size("seed", v); },
                 [](const RunConfig &c) {
                   return c.seed ? std::to_string(*c.seed) : std::string();
                 }});
    k.push_back(size_key("threads", [](RunConfig &c) -> auto & { return c.threads; }));

    k.push_back(size_key("model.hidden", [](RunConfig &c) -> auto & { return c.model.hidden; }));
    k.push_back(size_key("model.layers", [](RunConfig &c) -> auto & { return c.model.layers; }));
    k.push_back(size_key("model.heads", [](RunConfig &c) -> auto & { return c.model.heads; }));
    k.push_back(size_key("model.max_len", [](RunConfig &c) -> auto & { return c.model.max_len; }));
    k.push_back(size_key("model.features", [](RunConfig &c) -> auto & { return c.model.features; }));
    k.push_back(size_key("model.ffn_dim", [](RunConfig &c) -> auto & { return c.model.ffn_dim; }));
    k.push_back(double_key("model.dropout", [](RunConfig &c) -> auto & { return c.model.dropout; }));
    k.push_back(double_key("model.rope_base", [](RunConfig &c) -> auto & { return c.model.rope_base; }));

    k.push_back(size_key("train.batch_size", [](RunConfig &c) -> auto & { return c.train.batch_size; }));
    k.push_back(double_key("train.lr", [](RunConfig &c) -> auto & { return c.train.adam.lr; }));
    k.push_back(double_key("train.beta1", [](RunConfig &c) -> auto & { return c.train.adam.beta1; }));
    k.push_back(double_key("train.beta2", [](RunConfig &c) -> auto & { return c.train.adam.beta2; }));
    k.push_back(double_key("train.eps", [](RunConfig &c) -> auto & { return c.train.adam.eps; }));
    k.push_back(size_key("train.phase1_steps", [](RunConfig &c) -> auto & { return c.train.schedule.phase1_steps; }));
    k.push_back(size_key("train.phase2_steps", [](RunConfig &c) -> auto & { return c.train.schedule.phase2_steps; }));
    k.push_back(size_key("train.phase1_epochs", [](RunConfig &c) -> auto & { return c.phase1_epochs; }));
    k.push_back(size_key("train.phase2_epochs", [](RunConfig &c) -> auto & { return c.phase2_epochs; }));
    k.push_back(double_key("train.encoder_frac", [](RunConfig &c) -> auto & { return c.train.schedule.encoder_frac; }));
    k.push_back(double_key("train.mlm_weight", [](RunConfig &c) -> auto & { return c.train.schedule.mlm_weight; }));
    k.push_back(double_key("train.reconstruction_weight", [](RunConfig &c) -> auto & { return c.train.schedule.reconstruction_weight; }));
    k.push_back(double_key("train.decay_start", [](RunConfig &c) -> auto & { return c.train.schedule.decay_start; }));
    k.push_back(double_key("train.final_lr_scale", [](RunConfig &c) -> auto & { return c.train.schedule.final_lr_scale; }));

    k.push_back(double_key("masking.select_frac", [](RunConfig &c) -> auto & { return c.train.masking.select_frac; }));
    k.push_back(double_key("masking.mask_frac", [](RunConfig &c) -> auto & { return c.train.masking.mask_frac; }));
    k.push_back(double_key("masking.random_frac", [](RunConfig &c) -> auto & { return c.train.masking.random_frac; }));
    k.push_back(double_key("masking.keep_frac", [](RunConfig &c) -> auto & { return c.train.masking.keep_frac; }));

    k.push_back({"finetune.task",
                 [](RunConfig &c, std::string_view v) {
                   try {
                     c.finetune.task = parse_task_kind(v);
                   } catch (const Error &) {
                     bad_value("finetune.task", v, "classify or regress");
                   }
                 },
                 [](const RunConfig &c) {
                   return std::string(task_kind_name(c.finetune.task));
                 }});
    k.push_back(size_key("finetune.epochs", [](RunConfig &c) -> auto & { return c.finetune.epochs; }));
    k.push_back(size_key("finetune.batch_size", [](RunConfig &c) -> auto & { return c.finetune.batch_size; }));
    k.push_back(double_key("finetune.lr", [](RunConfig &c) -> auto & { return c.finetune.lr; }));
    k.push_back(size_key("finetune.hidden", [](RunConfig &c) -> auto & { return c.finetune.hidden; }));
    k.push_back(size_key("finetune.classes", [](RunConfig &c) -> auto & { return c.finetune.classes; }));

    k.push_back(string_key("paths.corpus", [](RunConfig &c) -> auto & { return c.corpus_path; }));
    k.push_back(string_key("paths.vocab", [](RunConfig &c) -> auto & { return c.vocab_path; }));
    k.push_back(string_key("paths.output", [](RunConfig &c) -> auto & { return c.output_path; }));
    return k;
  }();
  return table;
}

std::string_view unquote(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    return v.substr(1, v.size() - 2);
  }
  return v;
}

}  // namespace

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw UsageError("MissingSeed", "training commands need a seed (--seed or 'seed = N')");
  return *seed;
}

PretrainSchedule RunConfig::schedule_for(std::size_t n) const {
  PretrainSchedule s = train.schedule;
  const std::size_t batch = std::max<std::size_t>(1, train.batch_size);
  const std::size_t per_epoch = (n + batch - 1) / batch;
  if (phase1_epochs) s.phase1_steps = phase1_epochs * per_epoch;
  if (phase2_epochs) s.phase2_steps = phase2_epochs * per_epoch;
  return s;
}

std::vector<std::string_view> profile_names() { return {"desk", "paper-fidelity"}; }

RunConfig profile_config(std::string_view name) {
  RunConfig c;
  c.profile = std::string(name);
  c.train.adam.round_to_f32 = true;
  if (name == "desk") {
    c.model.hidden = 64;
    c.model.layers = 2;
    c.model.heads = 4;
    c.model.max_len = 32;
    c.model.features = 32;
    c.model.ffn_dim = 128;
    c.train.batch_size = 32;
    c.train.adam.lr = 2e-3;
    c.train.schedule.phase1_steps = 1700;
    c.train.schedule.phase2_steps = 300;
    c.train.schedule.decay_start = 0.5;
    c.train.schedule.final_lr_scale = 0.05;
    c.finetune.epochs = 50;
    c.finetune.batch_size = 32;
    c.finetune.lr = 1e-3;
  } else if (name == "paper-fidelity") {
    c.model.hidden = 768;
    c.model.layers = 12;
    c.model.heads = 12;
    c.model.max_len = 202;
    c.model.features = 32;
    c.model.ffn_dim = 0;
    c.model.dropout = 0.2;
    c.train.batch_size = 288;
    c.train.adam.lr = 1.6e-4;
    c.phase1_epochs = 20;
    c.phase2_epochs = 20;
    c.finetune.epochs = 500;
    c.finetune.batch_size = 32;
    c.finetune.lr = 3e-5;
  } else {
    throw UsageError("UnknownProfile", "unknown profile '" + std::string(name) +
                                           "' (expected desk or paper-fidelity)");
  }
  return c;
}

void set_config_value(RunConfig &config, std::string_view key, std::string_view value) {
  if (key == "profile") {
    // Switching profile keeps nothing else; callers apply it first.
    RunConfig fresh = profile_config(value);
    fresh.seed = config.seed;
    config = std::move(fresh);
    return;
  }
  for (const Key &k : keys()) {
    if (k.name == key) {
      k.set(config, value);
      return;
    }
  }
  throw UsageError("UnknownKey", "unknown config key '" + std::string(key) + "'");
}

RunConfig parse_run_config(std::istream &in, std::string_view base_profile) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::string section, line;
  std::size_t line_no = 0;
  std::optional<std::string> profile;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view s = line;
    if (const auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        throw UsageError("MalformedConfig", "line " + std::to_string(line_no) +
                                                ": bad section header");
      }
      section = std::string(trim(s.substr(1, s.size() - 2)));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("MalformedConfig",
                       "line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string_view key = trim(s.substr(0, eq));
    const std::string_view value = unquote(trim(s.substr(eq + 1)));
    if (key.empty()) {
      throw UsageError("MalformedConfig", "line " + std::to_string(line_no) + ": empty key");
    }
    std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (full == "profile") {
      profile = std::string(value);
    } else {
      entries.emplace_back(std::move(full), std::string(value));
    }
  }
  RunConfig config = profile_config(
      !base_profile.empty() ? std::string(base_profile) : profile.value_or("desk"));
  for (const auto &[key, value] : entries) set_config_value(config, key, value);
  return config;
}

RunConfig load_run_config(const std::filesystem::path &path,
                          std::string_view base_profile) {
  std::ifstream in(path);
  if (!in) throw DataError("FileNotFound", "cannot open config " + path.string());
  return parse_run_config(in, base_profile);
}

std::string config_text(const RunConfig &config) {
  std::ostringstream out;
  out << "profile = \"" << config.profile << "\"\n";
  std::string section;
  for (const Key &k : keys()) {
    const std::string value = k.get(config);
    const auto dot = k.name.find('.');
    const std::string key_section =
        dot == std::string_view::npos ? "" : std::string(k.name.substr(0, dot));
    const std::string_view leaf =
        dot == std::string_view::npos ? k.name : k.name.substr(dot + 1);
    if (key_section != section) {
      section = key_section;
      out << "\n[" << section << "]\n";
    }
    if (k.name == "seed" && value.empty()) {
      out << "# seed unset\n";
      continue;
    }
    const bool quoted = key_section == "paths" || k.name == "finetune.task";
    out << leaf << " = " << (quoted ? "\"" : "") << value << (quoted ? "\"" : "") << "\n";
  }
  return out.str();
}

}  // namespace smited
