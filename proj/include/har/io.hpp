#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace har::io {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Little-endian scalar arrays regardless of host byte order.
void write_f32le(std::ostream& os, std::span<const float> values);
void write_i32le(std::ostream& os, std::span<const std::int32_t> values);
std::vector<float> read_f32le(std::istream& is, std::size_t count);
std::vector<std::int32_t> read_i32le(std::istream& is, std::size_t count);

/// Writes to a sibling temp file and renames, so readers never see a partial file.
void write_text_file(const std::filesystem::path& path, const std::string& contents);
std::string read_text_file(const std::filesystem::path& path);

/// 64-bit FNV-1a, used for config hashes and seed derivation.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace har::io
