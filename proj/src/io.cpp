#include "har/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace har::io {

namespace {

template <typename U>
U to_little(U v) {
  if constexpr (std::endian::native == std::endian::big) {
    U out = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) out = (out << 8) | ((v >> (8 * i)) & 0xFF);
    return out;
  } else {
    return v;
  }
}

template <typename V, typename U>
void write_words(std::ostream& os, std::span<const V> values) {
  std::vector<U> buf(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) buf[i] = to_little(std::bit_cast<U>(values[i]));
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(U)));
  if (!os) throw std::runtime_error("write failed");
}

template <typename V, typename U>
std::vector<V> read_words(std::istream& is, std::size_t count) {
  std::vector<U> buf(count);
  is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(count * sizeof(U)));
  if (static_cast<std::size_t>(is.gcount()) != count * sizeof(U)) {
    throw FormatError("truncated payload: expected " + std::to_string(count * sizeof(U)) + " bytes");
  }
  std::vector<V> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<V>(to_little(buf[i]));
  return out;
}

}  // namespace

void write_f32le(std::ostream& os, std::span<const float> values) { write_words<float, std::uint32_t>(os, values); }
void write_i32le(std::ostream& os, std::span<const std::int32_t> values) {
  write_words<std::int32_t, std::uint32_t>(os, values);
}
std::vector<float> read_f32le(std::istream& is, std::size_t count) { return read_words<float, std::uint32_t>(is, count); }
std::vector<std::int32_t> read_i32le(std::istream& is, std::size_t count) {
  return read_words<std::int32_t, std::uint32_t>(is, count);
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << contents;
    if (!os) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace har::io
