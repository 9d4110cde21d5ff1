#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "spatial_smooth/error.hpp"

namespace testing_support {

/// Fresh directory under the system temp dir, named after the running test.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  std::string name = "spatial_smooth_";
  if (info) name += std::string(info->test_suite_name()) + "_" + info->name();
  for (char& c : name)
    if (c == '/') c = '_';
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream(path) << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <class F>
spatial_smooth::ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const spatial_smooth::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return spatial_smooth::ErrorCode::InvalidArgument;
}

}  // namespace testing_support
