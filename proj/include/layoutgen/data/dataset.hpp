#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "layoutgen/graphs/diagram.hpp"

namespace layoutgen::data {

struct Sample {
  std::string sample_id;
  graphs::BubbleDiagram diagram;
  graphs::LayoutMasks gt_masks;  // binary {-1, +1}
  bool operator==(const Sample&) const = default;
};

struct Dataset {
  int resolution = 64;
  std::vector<Sample> samples;
  bool operator==(const Dataset&) const = default;
};

inline constexpr int kMinRooms = 5;
inline constexpr int kMaxRooms = 8;

/// Problems reading or validating a dataset directory.
struct DatasetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Writes `manifest.json` and one `<id>.json` per sample; each file is written
/// to a temporary name and renamed into place.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
/// Reads and validates the whole directory, or throws DatasetError naming the
/// sample and field at fault.
Dataset load_dataset(const std::filesystem::path& dir);

std::string sample_to_json(const Sample& s);
/// `id` is used for error messages and stored as the sample id.
Sample sample_from_json(const std::string& text, const std::string& id, int resolution);

/// Diagram-only JSON (the same schema without "masks").
std::string diagram_to_json(const graphs::BubbleDiagram& d);
graphs::BubbleDiagram diagram_from_json(const std::string& text);

struct FoldSpec {
  int held_out_room_count = 8;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
};

/// Test set: every sample with exactly `held_out` rooms; train: the rest.
FoldSpec kfold_split(const Dataset& ds, int held_out);

/// Samples whose ids are listed, in list order.
std::vector<const Sample*> select(const Dataset& ds, const std::vector<std::string>& ids);

/// Writes `bytes` to `path` via a sibling temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace layoutgen::data
