#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ranatomy::testing {

std::filesystem::path fixture_dir();
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& data);

// Files with the given extension directly inside `dir`, sorted by name.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& dir, const std::string& ext);

// RANATOMY_UPDATE_GOLDENS=1 rewrites goldens instead of comparing.
bool update_goldens();

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Runs cli_main with the given arguments; returns exit status and output.
struct CliRun {
  int status = 0;
  std::string out;
  std::string err;
};
CliRun run_cli(const std::vector<std::string>& args);

}  // namespace ranatomy::testing
