#include "firemu/keyvalue.hpp"

#include "firemu/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace firemu {
namespace text {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::vector<std::string_view> split(std::string_view s, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

namespace {
template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}
}  // namespace

std::optional<double> parse_double(std::string_view s) { return parse_number<double>(s); }
std::optional<float> parse_float(std::string_view s) { return parse_number<float>(s); }
std::optional<long long> parse_int(std::string_view s) { return parse_number<long long>(s); }

std::string format_float(float v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace text

bool KeyValueBlock::has(std::string_view key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == key; });
}

const std::string& KeyValueBlock::get(std::string_view key) const {
  // Last assignment wins.
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  throw std::invalid_argument("missing key '" + std::string(key) + "'" +
                              (name.empty() ? std::string() : " in block [" + name + "]"));
}

std::string KeyValueBlock::get_or(std::string_view key, std::string fallback) const {
  return has(key) ? get(key) : fallback;
}

double KeyValueBlock::get_double(std::string_view key) const {
  const auto v = text::parse_double(get(key));
  if (!v) throw std::invalid_argument("key '" + std::string(key) + "' is not a number: " + get(key));
  return *v;
}

double KeyValueBlock::get_double_or(std::string_view key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueBlock::get_int(std::string_view key) const {
  const auto v = text::parse_int(get(key));
  if (!v) throw std::invalid_argument("key '" + std::string(key) + "' is not an integer: " + get(key));
  return *v;
}

long long KeyValueBlock::get_int_or(std::string_view key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KeyValueBlock::get_bool_or(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto v = text::lower(get(key));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("key '" + std::string(key) + "' is not a boolean: " + get(key));
}

void KeyValueBlock::set(std::string key, std::string value) {
  for (auto& e : entries_) {
    if (e.first == key) {
      e.second = std::move(value);
      return;
    }
  }
  entries_.emplace_back(std::move(key), std::move(value));
}

std::vector<KeyValueBlock> parse_key_value_text(std::string_view contents) {
  std::vector<KeyValueBlock> blocks(1);
  std::size_t line_no = 0;
  std::istringstream in{std::string(contents)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = text::trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("line " + std::to_string(line_no) + ": unterminated block header");
      }
      KeyValueBlock block;
      block.name = std::string(text::trim(line.substr(1, line.size() - 2)));
      blocks.push_back(std::move(block));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected key=value");
    }
    blocks.back().set(std::string(text::trim(line.substr(0, eq))), std::string(text::trim(line.substr(eq + 1))));
  }
  return blocks;
}

std::vector<KeyValueBlock> read_key_value_file(const std::filesystem::path& path) {
  return parse_key_value_text(read_text_file(path));
}

std::string format_key_value(const std::vector<KeyValueBlock>& blocks) {
  std::ostringstream out;
  bool first = true;
  for (const auto& block : blocks) {
    if (!block.name.empty()) {
      if (!first) out << '\n';
      out << '[' << block.name << "]\n";
    }
    for (const auto& [k, v] : block.entries()) out << k << '=' << v << '\n';
    first = false;
  }
  return out.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

}  // namespace firemu
