#ifndef FIREMU_KEYVALUE_HPP
#define FIREMU_KEYVALUE_HPP

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace firemu {

/// Flat key=value text. Blank lines and lines starting with '#' are ignored.
/// Lines of the form "[name]" open a new block.
class KeyValueBlock {
 public:
  std::string name;

  bool has(std::string_view key) const;
  const std::string& get(std::string_view key) const;
  std::string get_or(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key) const;
  double get_double_or(std::string_view key, double fallback) const;
  long long get_int(std::string_view key) const;
  long long get_int_or(std::string_view key, long long fallback) const;
  bool get_bool_or(std::string_view key, bool fallback) const;

  void set(std::string key, std::string value);
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// The first block holds entries preceding any "[name]" line (name empty).
std::vector<KeyValueBlock> parse_key_value_text(std::string_view text);
std::vector<KeyValueBlock> read_key_value_file(const std::filesystem::path& path);
std::string format_key_value(const std::vector<KeyValueBlock>& blocks);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace firemu

#endif  // FIREMU_KEYVALUE_HPP
