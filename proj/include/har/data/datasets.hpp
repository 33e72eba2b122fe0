#pragma once

#include <filesystem>
#include <string_view>

#include "har/data/types.hpp"

namespace har::data {

enum class Dataset { uci_smartphone, pamap2, realdisp };

Dataset dataset_from_string(std::string_view name);
std::string_view to_string(Dataset d);

/// Published windowing protocol of each benchmark.
struct WindowingProtocol {
  int downsample_factor = 1;
  double window_seconds = 0.0;
  double step_seconds = 0.0;
  double native_rate_hz = 0.0;
};

WindowingProtocol protocol_for(Dataset d);

struct ParsedDataset {
  Dataset dataset;
  std::vector<SensorStream> streams;
  std::vector<std::string> activity_names;
  IngestReport report;
};

/// Reads the dataset's published file layout under root. Throws
/// std::runtime_error listing the expected paths when files are missing.
///
///  uci_smartphone  RawData/{labels.txt, acc_expXX_userYY.txt, gyro_expXX_userYY.txt}
///                  (activities 7-12 are merged into one transition class)
///  pamap2          Protocol/subject101.dat .. subject109.dat
///                  (12 protocol activities; hand/chest/ankle acc16, gyro, mag)
///  realdisp        subject1_ideal.log .. subject17_ideal.log
///                  (33 activities; acc, gyro, mag of 9 IMUs)
ParsedDataset parse_dataset(Dataset d, const std::filesystem::path& root);

/// Applies the protocol (downsampling, window/step) and the majority label rule.
WindowSet prepare_windows(ParsedDataset& parsed);

}  // namespace har::data
