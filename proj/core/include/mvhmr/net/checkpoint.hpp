#pragma once

#include <filesystem>
#include <memory>

#include <nlohmann/json.hpp>

#include "mvhmr/net/discriminator.hpp"
#include "mvhmr/net/network.hpp"

namespace mvhmr::net {

inline constexpr int kCheckpointVersion = 1;

// Layout: 8-byte magic "MVHMRCK\0", u64 little-endian header length, JSON
// header (format version, architecture echo, user metadata, and per tensor
// name/shape/dtype/byte offset), then raw little-endian float32 values.
void save_checkpoint(const std::filesystem::path& path, Network& model, Discriminator* disc = nullptr,
                     const nlohmann::json& meta = nlohmann::json::object());

struct LoadedCheckpoint {
  std::unique_ptr<Network> model;
  std::unique_ptr<Discriminator> disc;  // null when the file has none
  nlohmann::json meta;
};

// Throws std::runtime_error with the path on I/O or format problems.
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mvhmr::net
