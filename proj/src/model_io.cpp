#include "firemu/emulator.hpp"
#include "firemu/keyvalue.hpp"
#include "firemu/text.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace firemu {

namespace {

constexpr std::array<char, 4> kMagic{'F', 'E', 'M', 'U'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + static_cast<std::size_t>(i)])) << (8 * i);
  return v;
}

std::runtime_error model_error(const std::filesystem::path& path, const std::string& what) {
  return std::runtime_error(path.string() + ": " + what);
}

}  // namespace

std::string model_header_text(const Model& model) {
  KeyValueBlock config;
  config.set("depth", std::to_string(model.config.depth));
  config.set("base_channels", std::to_string(model.config.base_channels));
  config.set("latent_channels", std::to_string(model.config.latent_channels));
  config.set("weather_dim", std::to_string(model.config.weather_dim));
  config.set("input_channels", std::to_string(model.config.input_channels));
  config.set("recurrent_convs", std::to_string(model.config.recurrent_convs));
  config.set("segment_count", std::to_string(model.params.segments().size()));
  config.set("total", std::to_string(model.params.total_count()));
  KeyValueBlock table;
  table.name = "segments";
  for (const auto& s : model.params.segments()) {
    std::ostringstream row;
    row << s.weight_shape.n << ' ' << s.weight_shape.c << ' ' << s.weight_shape.h << ' ' << s.weight_shape.w << ' '
        << s.bias_size << ' ' << s.size();
    table.set(s.name, row.str());
  }
  return format_key_value({config, table});
}

void save_model(const Model& model, const std::filesystem::path& path) {
  const std::string header = model_header_text(model);
  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, kModelFileVersion);
  put_u32(out, static_cast<std::uint32_t>(header.size()));
  out += header;
  const auto& v = model.params.values();
  out.reserve(out.size() + static_cast<std::size_t>(v.size()) * 4);
  for (Index i = 0; i < v.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(v[i]));
  write_text_file(path, out);
}

Model load_model(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() < 4) throw model_error(path, "truncated file");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw model_error(path, "bad magic");
  if (bytes.size() < 12) throw model_error(path, "truncated file");
  const auto version = get_u32(bytes, 4);
  if (version != kModelFileVersion) {
    throw model_error(path, "version mismatch: file has " + std::to_string(version) + ", expected " +
                                std::to_string(kModelFileVersion));
  }
  const std::size_t header_len = get_u32(bytes, 8);
  if (bytes.size() < 12 + header_len) throw model_error(path, "truncated file");
  const auto blocks = parse_key_value_text(std::string_view(bytes).substr(12, header_len));

  Model model;
  const auto& cfg = blocks.front();
  model.config.depth = static_cast<int>(cfg.get_int("depth"));
  model.config.base_channels = static_cast<int>(cfg.get_int("base_channels"));
  model.config.latent_channels = static_cast<int>(cfg.get_int("latent_channels"));
  model.config.weather_dim = static_cast<int>(cfg.get_int("weather_dim"));
  model.config.input_channels = static_cast<int>(cfg.get_int("input_channels"));
  model.config.recurrent_convs = static_cast<int>(cfg.get_int("recurrent_convs"));
  model.config.validate();

  const auto table = std::find_if(blocks.begin(), blocks.end(), [](const auto& b) { return b.name == "segments"; });
  if (table == blocks.end()) throw model_error(path, "header has no segment table");
  Index declared_total = 0;
  for (const auto& [name, row] : table->entries()) {
    const auto f = text::split_whitespace(row);
    if (f.size() != 6) throw model_error(path, "malformed segment row for '" + name + "'");
    std::array<long long, 6> v{};
    for (std::size_t i = 0; i < 6; ++i) {
      const auto parsed = text::parse_int(f[i]);
      if (!parsed || *parsed < 0) throw model_error(path, "malformed segment row for '" + name + "'");
      v[i] = *parsed;
    }
    const auto& s = model.params.add(name, {v[0], v[1], v[2], v[3]}, v[4]);
    if (s.size() != v[5]) throw model_error(path, "segment '" + name + "' count disagrees with its shape");
    declared_total += s.size();
  }
  if (declared_total != cfg.get_int("total")) throw model_error(path, "segment table total disagrees with header");

  // The table must describe exactly the layout this config builds.
  const Model reference = build_model(model.config, 0);
  const auto& expect = reference.params.segments();
  const auto& got = model.params.segments();
  bool consistent = expect.size() == got.size();
  for (std::size_t i = 0; consistent && i < got.size(); ++i) {
    consistent = expect[i].name == got[i].name && expect[i].weight_shape == got[i].weight_shape &&
                 expect[i].bias_size == got[i].bias_size;
  }
  if (!consistent) throw model_error(path, "segment table does not match the model configuration");

  const std::size_t payload = bytes.size() - 12 - header_len;
  const auto expected = static_cast<std::size_t>(declared_total) * 4;
  if (payload < expected) throw model_error(path, "truncated file");
  if (payload > expected) throw model_error(path, "trailing bytes after parameters");
  auto& values = model.params.values();
  for (Index i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<float>(get_u32(bytes, 12 + header_len + static_cast<std::size_t>(i) * 4));
  }
  return model;
}

}  // namespace firemu
