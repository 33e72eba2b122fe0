#pragma once

#include <filesystem>

#include "har/data/types.hpp"

namespace har::data {

/// Canonical window file: one line of JSON header, then N*C*W float32 values
/// (little-endian, window-major then channel-major), then four int32 arrays of
/// length N in the order listed in the header's "label_arrays" field:
/// activity, person, stream_id, stream_pos.
void write_windows(const std::filesystem::path& path, const WindowSet& ws);

/// Throws har::io::FormatError on a malformed or truncated file.
WindowSet read_windows(const std::filesystem::path& path);

}  // namespace har::data
