//
// smited - Copyright 2026 The smited Authors.
// SPDX-License-Identifier: Apache-2.0
//

#include "smited/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "smited/error.h"
#include "smited/smiles.h"

namespace smited {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::size_t kMagicSize = 8;

[[noreturn]] void corrupt(const std::string &why) {
  throw DataError("CorruptCheckpoint", "corrupt checkpoint: " + why);
}

std::string encode_floats(const ParameterSet &params) {
  std::string bytes;
  bytes.reserve(params.scalar_count() * sizeof(float));
  for (const Parameter &p : params) {
    for (double v : p.value.data()) {
      const float f = static_cast<float>(v);
      char raw[sizeof(float)];
      std::memcpy(raw, &f, sizeof(float));
      bytes.append(raw, sizeof(float));
    }
  }
  return bytes;
}

}  // namespace

void write_checkpoint(const CheckpointData &data, std::ostream &out) {
  const std::string payload = encode_floats(data.params);
  nlohmann::ordered_json manifest;
  manifest["format_version"] = kCheckpointVersion;
  manifest["meta"] = data.meta;
  nlohmann::ordered_json list = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const Parameter &p : data.params) {
    list.push_back({{"name", p.name},
                    {"shape", p.value.shape()},
                    {"offset", offset},
                    {"trainable", p.trainable}});
    offset += p.value.size() * sizeof(float);
  }
  manifest["parameters"] = std::move(list);
  manifest["data_bytes"] = payload.size();
  manifest["data_fnv1a64"] = chem::fnv1a64(payload);
  const std::string text = manifest.dump();
  const std::uint64_t length = text.size();
  out.write(kCheckpointMagic, kMagicSize);
  out.write(reinterpret_cast<const char *>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("IoError", "failed writing checkpoint");
}

CheckpointData read_checkpoint(std::istream &in) {
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() < kMagicSize + sizeof(std::uint64_t)) corrupt("file too short");
  if (bytes.compare(0, kMagicSize, kCheckpointMagic) != 0) corrupt("bad magic");
  std::uint64_t length = 0;
  std::memcpy(&length, bytes.data() + kMagicSize, sizeof(length));
  const std::size_t header = kMagicSize + sizeof(length);
  if (length > bytes.size() - header) corrupt("manifest length exceeds file");
  nlohmann::ordered_json manifest;
  try {
    manifest = nlohmann::ordered_json::parse(bytes.substr(header, length));
  } catch (const nlohmann::json::exception &e) {
    corrupt(std::string("manifest is not valid JSON (") + e.what() + ")");
  }
  CheckpointData data;
  try {
    if (manifest.at("format_version").get<int>() != kCheckpointVersion) {
      corrupt("unsupported format version");
    }
    const std::string payload = bytes.substr(header + length);
    if (payload.size() != manifest.at("data_bytes").get<std::size_t>()) {
      corrupt("data length " + std::to_string(payload.size()) + " != manifest " +
              manifest.at("data_bytes").dump());
    }
    if (chem::fnv1a64(payload) != manifest.at("data_fnv1a64").get<std::uint64_t>()) {
      corrupt("data checksum mismatch");
    }
    data.meta = manifest.at("meta");
    for (const auto &entry : manifest.at("parameters")) {
      const Shape shape = entry.at("shape").get<Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      const std::size_t count = shape_size(shape);
      if (offset > payload.size() || count * sizeof(float) > payload.size() - offset) {
        corrupt("parameter " + entry.at("name").get<std::string>() +
                " lies outside the data block");
      }
      Tensor value(shape);
      for (std::size_t i = 0; i < count; ++i) {
        float f;
        std::memcpy(&f, payload.data() + offset + i * sizeof(float), sizeof(float));
        value[i] = static_cast<double>(f);
      }
      data.params.add(entry.at("name").get<std::string>(), std::move(value),
                      entry.at("trainable").get<bool>());
    }
  } catch (const nlohmann::json::exception &e) {
    corrupt(std::string("malformed manifest (") + e.what() + ")");
  } catch (const DataError &e) {
    if (e.kind() == "CorruptCheckpoint") throw;
    corrupt(e.what());
  }
  return data;
}

void save_checkpoint_file(const CheckpointData &data,
                          const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("IoError", "cannot write " + path.string());
  write_checkpoint(data, out);
}

CheckpointData load_checkpoint_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("IoError", "cannot read " + path.string());
  return read_checkpoint(in);
}

}  // namespace smited
