#include "har/data/window_io.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "har/io.hpp"

namespace har::data {

namespace {
constexpr const char* kFormat = "harkit-windows";
constexpr int kVersion = 1;
}  // namespace

void write_windows(const std::filesystem::path& path, const WindowSet& ws) {
  ws.validate();
  const std::size_t n = ws.size();
  nlohmann::json header = {{"format", kFormat},
                           {"version", kVersion},
                           {"dtype", "f32le"},
                           {"label_dtype", "i32le"},
                           {"label_arrays", {"activity", "person", "stream_id", "stream_pos"}},
                           {"num_windows", n},
                           {"channels", ws.num_channels()},
                           {"window_len", ws.window_len()},
                           {"step", ws.meta.step},
                           {"sample_rate_hz", ws.meta.sample_rate_hz},
                           {"dataset", ws.meta.dataset},
                           {"channel_names", ws.meta.channel_names},
                           {"activity_names", ws.meta.activity_names},
                           {"num_activities", ws.meta.num_activities},
                           {"extra", ws.meta.extra}};
  std::ostringstream os(std::ios::binary);
  os << header.dump() << '\n';
  for (const auto& w : ws.windows) io::write_f32le(os, w.values);
  std::vector<std::int32_t> col(n);
  auto emit = [&](auto get) {
    for (std::size_t i = 0; i < n; ++i) col[i] = static_cast<std::int32_t>(get(ws.windows[i]));
    io::write_i32le(os, col);
  };
  emit([](const Window& w) { return w.activity; });
  emit([](const Window& w) { return w.person; });
  emit([](const Window& w) { return w.stream_id; });
  emit([](const Window& w) { return w.stream_pos; });
  io::write_text_file(path, os.str());
}

WindowSet read_windows(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw io::FormatError("cannot open window file " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw io::FormatError(path.string() + ": missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError(path.string() + ": header is not valid JSON: " + e.what());
  }
  if (header.value("format", "") != kFormat || header.value("version", 0) != kVersion) {
    throw io::FormatError(path.string() + ": not a version " + std::to_string(kVersion) + " window file");
  }
  if (header.value("dtype", "") != "f32le") throw io::FormatError(path.string() + ": unsupported dtype");

  WindowSet ws;
  try {
    ws.meta.dataset = header.at("dataset").get<std::string>();
    ws.meta.channel_names = header.at("channel_names").get<std::vector<std::string>>();
    ws.meta.activity_names = header.at("activity_names").get<std::vector<std::string>>();
    ws.meta.num_activities = header.at("num_activities").get<std::size_t>();
    ws.meta.window_len = header.at("window_len").get<std::size_t>();
    ws.meta.step = header.at("step").get<std::size_t>();
    ws.meta.sample_rate_hz = header.at("sample_rate_hz").get<double>();
    ws.meta.extra = header.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw io::FormatError(path.string() + ": incomplete header: " + e.what());
  }
  const std::size_t n = header.at("num_windows").get<std::size_t>();
  const std::size_t per = ws.num_channels() * ws.meta.window_len;
  if (header.at("channels").get<std::size_t>() != ws.num_channels()) {
    throw io::FormatError(path.string() + ": channel count disagrees with channel names");
  }
  try {
    const auto values = io::read_f32le(is, n * per);
    std::array<std::vector<std::int32_t>, 4> cols;
    for (auto& c : cols) c = io::read_i32le(is, n);
    ws.windows.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto& w = ws.windows[i];
      w.values.assign(values.begin() + static_cast<std::ptrdiff_t>(i * per),
                      values.begin() + static_cast<std::ptrdiff_t>((i + 1) * per));
      w.activity = cols[0][i];
      w.person = cols[1][i];
      w.stream_id = cols[2][i];
      w.stream_pos = static_cast<std::size_t>(cols[3][i]);
    }
  } catch (const io::FormatError& e) {
    throw io::FormatError(path.string() + ": " + e.what());
  }
  if (is.peek() != std::char_traits<char>::eof()) throw io::FormatError(path.string() + ": trailing bytes after payload");
  ws.validate();
  return ws;
}

}  // namespace har::data
