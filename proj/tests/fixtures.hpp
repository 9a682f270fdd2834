#pragma once

#include <filesystem>
#include <string>

#include "cqmine/query.hpp"
#include "cqmine/relational.hpp"

namespace cqmine::fixture {

inline std::filesystem::path beer_dir() { return std::filesystem::path(CQMINE_DATA_DIR) / "beer"; }

inline const Schema& beer_schema() {
  static const Schema s = load_schema(beer_dir() / "schema.txt");
  return s;
}

inline const Instance& beer() {
  static const Instance inst = load_instance(beer_schema(), beer_dir());
  return inst;
}

inline Query q(const std::string& text) { return parse_query(text, beer_schema()); }

// A scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() /
           ("cqmine_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace cqmine::fixture
