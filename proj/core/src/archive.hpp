#pragma once

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ranatomy::detail {

struct ArchiveMember {
  std::string name;  // path inside the archive, '/'-separated
  std::string data;
};

class ArchiveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

[[nodiscard]] bool is_archive_name(const std::string& file_name);

/// Regular-file members whose name passes `keep`, in archive order.
/// Handles tar (plain or gzip-compressed, ustar/GNU/pax names) and zip
/// (stored or deflated). Throws ArchiveError on malformed input.
[[nodiscard]] std::vector<ArchiveMember> read_archive(const std::filesystem::path& path,
                                                      const std::function<bool(const std::string&)>& keep);

}  // namespace ranatomy::detail
