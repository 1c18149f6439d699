//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#ifndef SMITED_CONFIG_H_
#define SMITED_CONFIG_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "smited/finetune.h"
#include "smited/model.h"
#include "smited/training.h"

namespace smited {

// Everything a CLI run needs besides its input and output flags. Built from
// a named profile, then a config file, then command-line overrides.
struct RunConfig {
  std::string profile = "desk";
  ModelConfig model;
  TrainSettings train;
  // When nonzero these replace the phase step counts with whole passes over
  // the corpus at pre-training time.
  std::size_t phase1_epochs = 0;
  std::size_t phase2_epochs = 0;
  FinetuneSettings finetune;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string corpus_path;
  std::string vocab_path;
  std::string output_path;

  // Seed required by training commands. Throws UsageError("MissingSeed").
  std::uint64_t require_seed() const;
  // Phase step counts for a corpus of n sequences.
  PretrainSchedule schedule_for(std::size_t n) const;
};

std::vector<std::string_view> profile_names();
// Throws UsageError("UnknownProfile").
RunConfig profile_config(std::string_view name);

// One "key = value" assignment with a dotted key such as "model.hidden".
// Throws UsageError("UnknownKey") or UsageError("BadValue").
void set_config_value(RunConfig &config, std::string_view key,
                      std::string_view value);

// Plain-text config: "key = value" lines, "[section]" headers that prefix
// the following keys, "#" comments, optionally quoted strings. A
// "profile" key selects the base profile wherever it appears; a nonempty
// `base_profile` takes precedence over it. Throws
// UsageError("MalformedConfig") plus the set_config_value errors.
RunConfig parse_run_config(std::istream &in, std::string_view base_profile = {});
RunConfig load_run_config(const std::filesystem::path &path,
                          std::string_view base_profile = {});

// Effective config in the same syntax; parse_run_config reads it back to
// an equal config.
std::string config_text(const RunConfig &config);

}  // namespace smited

#endif  // SMITED_CONFIG_H_
