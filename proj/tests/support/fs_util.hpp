#pragma once

#include <filesystem>
#include <string>

namespace strata::testing {

namespace fs = std::filesystem;

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "strata");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const fs::path& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

void write_text(const fs::path& p, const std::string& text);
std::string read_text(const fs::path& p);
/// Recursively copies a directory tree, replacing the destination.
void copy_tree(const fs::path& from, const fs::path& to);

}  // namespace strata::testing
