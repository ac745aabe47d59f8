#ifndef FIREMU_TEST_SUPPORT_HPP
#define FIREMU_TEST_SUPPORT_HPP

#include "firemu/keyvalue.hpp"

#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <filesystem>
#include <string>

namespace firemu::testing {

/// Fresh per-test scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  const auto dir = std::filesystem::temp_directory_path() / "firemu_tests" /
                   (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& dir, const std::string& name,
                                        const std::string& text) {
  const auto p = dir / name;
  write_text_file(p, text);
  return p;
}

/// Message of the exception `f` throws, or "" when it returns normally.
template <typename F>
std::string error_of(F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

}  // namespace firemu::testing

#endif  // FIREMU_TEST_SUPPORT_HPP
