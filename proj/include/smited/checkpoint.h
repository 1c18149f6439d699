//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

// Binary container: the 8-byte magic "SMITED01", a little-endian u64
// manifest length, a JSON manifest, then little-endian 32-bit floats for
// every parameter at the offsets the manifest lists.

#ifndef SMITED_CHECKPOINT_H_
#define SMITED_CHECKPOINT_H_

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "smited/parameters.h"

namespace smited {

inline constexpr char kCheckpointMagic[] = "SMITED01";
inline constexpr int kCheckpointVersion = 1;

struct CheckpointData {
  // Free-form metadata (kind, config, vocabulary, ...).
  nlohmann::ordered_json meta;
  ParameterSet params;
};

// Values are stored as floats; parameters already rounded to float
// precision reload bit for bit.
void write_checkpoint(const CheckpointData &data, std::ostream &out);
// Throws DataError("CorruptCheckpoint") on a bad magic, version, manifest,
// length or checksum.
CheckpointData read_checkpoint(std::istream &in);

void save_checkpoint_file(const CheckpointData &data,
                          const std::filesystem::path &path);
CheckpointData load_checkpoint_file(const std::filesystem::path &path);

}  // namespace smited

#endif  // SMITED_CHECKPOINT_H_
