#include "firemu/dataset.hpp"

#include "firemu/keyvalue.hpp"

#include <algorithm>
#include <stdexcept>

namespace firemu {

namespace fs = std::filesystem;

const ManifestEntry& RunManifest::find(const std::string& id) const {
  const auto it = std::find_if(samples.begin(), samples.end(), [&](const ManifestEntry& e) { return e.id == id; });
  if (it == samples.end()) throw std::out_of_range("manifest has no sample '" + id + "'");
  return *it;
}

std::vector<std::size_t> RunManifest::indices(const std::string& split) const {
  if (split != "all" && split != "train" && split != "test") {
    throw std::invalid_argument("unknown split '" + split + "' (expected train, test or all)");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (split == "all" || samples[i].split == split) out.push_back(i);
  }
  return out;
}

RunManifest read_manifest(const fs::path& path) {
  const auto blocks = read_key_value_file(path);
  RunManifest m;
  m.root = fs::absolute(path).parent_path();
  const auto& head = blocks.front();
  m.seed = static_cast<std::uint64_t>(head.get_int_or("seed", 0));
  m.test_split = head.get_double_or("test_split", m.test_split);
  m.num_classes = static_cast<int>(head.get_int_or("num_classes", m.num_classes));
  for (std::size_t b = 1; b < blocks.size(); ++b) {
    const auto& kv = blocks[b];
    if (kv.name != "sample") throw std::runtime_error(path.string() + ": unexpected block [" + kv.name + "]");
    ManifestEntry e;
    e.id = kv.get("id");
    auto file = [&](const char* key) {
      const fs::path p = m.root / kv.get(key);
      if (!fs::exists(p)) throw std::runtime_error(path.string() + ": sample '" + e.id + "' refers to missing " + p.string());
      return p;
    };
    e.elevation = file("elevation");
    e.landclass = file("landclass");
    e.weather = file("weather");
    e.ignition = file("ignition");
    // Arrival grids appear only after simulation.
    e.arrival = m.root / kv.get_or("arrival", e.id + "/arrival.asc");
    e.split = kv.get_or("split", "train");
    if (e.split != "train" && e.split != "test") throw std::runtime_error(path.string() + ": bad split for '" + e.id + "'");
    e.window.t_start = static_cast<int>(kv.get_int_or("t_start", 0));
    e.window.horizon = static_cast<int>(kv.get_int_or("horizon", 1));
    m.samples.push_back(std::move(e));
  }
  if (m.samples.empty()) throw std::runtime_error(path.string() + ": manifest lists no samples");
  return m;
}

void write_manifest(const RunManifest& m, const fs::path& path) {
  std::vector<KeyValueBlock> blocks(1);
  blocks[0].set("seed", std::to_string(m.seed));
  blocks[0].set("test_split", std::to_string(m.test_split));
  blocks[0].set("num_classes", std::to_string(m.num_classes));
  blocks[0].set("count", std::to_string(m.samples.size()));
  const fs::path root = fs::absolute(path).parent_path();
  auto rel = [&](const fs::path& p) { return (p.is_absolute() ? p.lexically_relative(root) : p).generic_string(); };
  for (const auto& e : m.samples) {
    KeyValueBlock kv;
    kv.name = "sample";
    kv.set("id", e.id);
    kv.set("elevation", rel(e.elevation));
    kv.set("landclass", rel(e.landclass));
    kv.set("weather", rel(e.weather));
    kv.set("ignition", rel(e.ignition));
    kv.set("arrival", rel(e.arrival));
    kv.set("split", e.split);
    kv.set("t_start", std::to_string(e.window.t_start));
    kv.set("horizon", std::to_string(e.window.horizon));
    blocks.push_back(std::move(kv));
  }
  write_text_file(path, format_key_value(blocks));
}

Scene load_scene(const ManifestEntry& e) {
  Scene s{read_ascii_grid(e.elevation), read_landclass_grid(e.landclass)};
  s.validate();
  return s;
}

FireSample load_sample(const RunManifest& m, const ManifestEntry& e) {
  if (!fs::exists(e.arrival)) throw std::runtime_error("sample '" + e.id + "' has not been simulated (" + e.arrival.string() + ")");
  FireSample s = make_sample(load_scene(e), read_weather_csv(e.weather), read_arrival_grid(e.arrival), e.window,
                             m.num_classes);
  s.id = e.id;
  return s;
}

std::vector<FireSample> load_samples(const RunManifest& m, const std::string& split) {
  std::vector<FireSample> out;
  for (const auto i : m.indices(split)) out.push_back(load_sample(m, m.samples[i]));
  return out;
}

SampleWindow default_window(std::size_t index, int intervals) {
  SampleWindow w;
  w.t_start = 1 + static_cast<int>(index % 2);
  w.horizon = 1 + static_cast<int>((index / 2) % 2);
  if (w.t_start + w.horizon > intervals) {
    w.t_start = std::max(0, intervals - w.horizon);
    w.horizon = std::min(w.horizon, intervals);
  }
  return w;
}

}  // namespace firemu
