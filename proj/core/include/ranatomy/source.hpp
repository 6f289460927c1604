#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ranatomy {

/// Half-open byte range [begin, end) into a source buffer.
struct Span {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;

  [[nodiscard]] std::uint32_t size() const { return end - begin; }
  [[nodiscard]] bool contains(const Span& other) const {
    return begin <= other.begin && other.end <= end;
  }
  friend bool operator==(const Span&, const Span&) = default;
};

struct LineCol {
  std::uint32_t line = 1;    // 1-based
  std::uint32_t column = 1;  // 1-based, in bytes
};

// Maps byte offsets to line/column positions.
class LineIndex {
 public:
  explicit LineIndex(std::string_view source);

  [[nodiscard]] LineCol locate(std::uint32_t offset) const;
  [[nodiscard]] std::size_t line_count() const { return starts_.size(); }

 private:
  std::vector<std::uint32_t> starts_;
};

}  // namespace ranatomy
