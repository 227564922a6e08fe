#pragma once

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "radfuse/error.hpp"

// Asserts that `stmt` throws radfuse::Error of the given category.
#define EXPECT_RADFUSE_ERROR(stmt, cat)                                                  \
  do {                                                                                   \
    try {                                                                                \
      stmt;                                                                              \
      ADD_FAILURE() << "expected radfuse::Error(" #cat ")";                              \
    } catch (const radfuse::Error& e) {                                                  \
      EXPECT_EQ(e.category(), radfuse::ErrorCategory::cat) << e.what();                  \
    }                                                                                    \
  } while (0)

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = std::filesystem::temp_directory_path() /
            ("radfuse_" + tag + "_" + (info ? std::string(info->name()) : std::string("x")));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};
