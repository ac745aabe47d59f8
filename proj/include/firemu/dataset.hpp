#ifndef FIREMU_DATASET_HPP
#define FIREMU_DATASET_HPP

#include "firemu/firesim.hpp"
#include "firemu/grids.hpp"
#include "firemu/preprocess.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace firemu {

struct ManifestEntry {
  std::string id;
  std::filesystem::path elevation;
  std::filesystem::path landclass;
  std::filesystem::path weather;
  std::filesystem::path ignition;
  std::filesystem::path arrival;
  std::string split = "train";  // "train" or "test"
  SampleWindow window;
};

/// Paths inside entries are relative to `root` on disk and absolute once loaded.
struct RunManifest {
  std::filesystem::path root;
  std::uint64_t seed = 0;
  double test_split = 0.2;
  int num_classes = 4;
  std::vector<ManifestEntry> samples;

  const ManifestEntry& find(const std::string& id) const;
  std::vector<std::size_t> indices(const std::string& split) const;
};

RunManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

Scene load_scene(const ManifestEntry& entry);
FireSample load_sample(const RunManifest& manifest, const ManifestEntry& entry);
/// split is "train", "test" or "all".
std::vector<FireSample> load_samples(const RunManifest& manifest, const std::string& split = "all");

/// Window used for the i-th generated fire: start after one or two intervals,
/// predict one or two intervals ahead.
SampleWindow default_window(std::size_t index, int intervals);

}  // namespace firemu

#endif  // FIREMU_DATASET_HPP
