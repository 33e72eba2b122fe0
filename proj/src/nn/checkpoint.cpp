#include "har/nn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "har/io.hpp"

namespace har::nn {

void save_checkpoint(const std::filesystem::path& path, nlohmann::json header, const TensorList<float>& tensors) {
  nlohmann::json entries = nlohmann::json::array();
  std::size_t floats = 0;
  for (const auto& t : tensors) {
    entries.push_back({{"name", t.name}, {"shape", t.var.shape()}, {"trainable", t.trainable}});
    floats += t.var.size();
  }
  header["dtype"] = "f32le";
  header["tensors"] = std::move(entries);
  header["payload_bytes"] = floats * 4;

  std::ostringstream os(std::ios::binary);
  os << kCheckpointMagic << '\n' << header.dump() << '\n';
  for (const auto& t : tensors) io::write_f32le(os, t.var.value().values());
  io::write_text_file(path, os.str());
}

namespace {

nlohmann::json read_header(std::istream& is, const std::filesystem::path& path) {
  std::string magic, line;
  if (!std::getline(is, magic) || magic != kCheckpointMagic) {
    throw io::FormatError(path.string() + " is not a checkpoint (bad magic line)");
  }
  if (!std::getline(is, line)) throw io::FormatError(path.string() + ": missing checkpoint header");
  try {
    return nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError(path.string() + ": malformed checkpoint header: " + e.what());
  }
}

}  // namespace

nlohmann::json read_checkpoint_header(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_header(is, path);
}

nlohmann::json load_checkpoint(const std::filesystem::path& path, const TensorList<float>& into) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint " + path.string());
  nlohmann::json header = read_header(is, path);
  const auto& entries = header.at("tensors");
  if (entries.size() != into.size()) {
    throw io::FormatError(path.string() + ": checkpoint holds " + std::to_string(entries.size()) +
                          " tensors, model expects " + std::to_string(into.size()));
  }
  for (std::size_t i = 0; i < into.size(); ++i) {
    const auto name = entries[i].at("name").get<std::string>();
    const auto shape = entries[i].at("shape").get<Shape>();
    if (name != into[i].name || shape != into[i].var.shape()) {
      throw io::FormatError(path.string() + ": tensor " + std::to_string(i) + " is " + name + shape_string(shape) +
                            ", model expects " + into[i].name + shape_string(into[i].var.shape()));
    }
  }
  for (const auto& t : into) {
    auto values = io::read_f32le(is, t.var.size());
    Var<float> v = t.var;
    std::copy(values.begin(), values.end(), v.value().data());
  }
  return header;
}

}  // namespace har::nn
