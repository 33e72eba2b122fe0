#pragma once

#include <filesystem>

#include <json.hpp>

#include "har/nn/layers.hpp"

namespace har::nn {

// Checkpoint container:
//
//   HARKIT-CHECKPOINT 1\n
//   <single-line JSON header>\n
//   <payload>
//
// The header carries caller metadata (architecture, seed, ...) plus
// "dtype": "f32le", "payload_bytes", and "tensors": [{name, shape, trainable}].
// The payload is every tensor, in that order, as little-endian float32.

inline constexpr const char* kCheckpointMagic = "HARKIT-CHECKPOINT 1";

void save_checkpoint(const std::filesystem::path& path, nlohmann::json header, const TensorList<float>& tensors);

nlohmann::json read_checkpoint_header(const std::filesystem::path& path);

/// Overwrites the values of `into`; names and shapes must match the file exactly.
/// Returns the header.
nlohmann::json load_checkpoint(const std::filesystem::path& path, const TensorList<float>& into);

}  // namespace har::nn
