#include "archive.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace ranatomy::detail {

namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// ---- tar (through zlib, which passes uncompressed input through) ----

class GzReader {
 public:
  explicit GzReader(const std::filesystem::path& path) : file_(gzopen(path.string().c_str(), "rb")) {
    if (file_ == nullptr) throw ArchiveError("cannot open " + path.string());
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;
  ~GzReader() { gzclose(file_); }

  // Reads exactly n bytes; false at a clean end of stream.
  bool read(char* out, std::size_t n) {
    std::size_t got = 0;
    while (got < n) {
      int r = gzread(file_, out + got, static_cast<unsigned>(n - got));
      if (r < 0) throw ArchiveError("corrupt compressed stream");
      if (r == 0) break;
      got += static_cast<std::size_t>(r);
    }
    if (got == 0) return false;
    if (got < n) throw ArchiveError("truncated tar archive");
    return true;
  }

  void skip(std::uint64_t n) {
    char buf[8192];
    while (n > 0) {
      auto step = static_cast<std::size_t>(std::min<std::uint64_t>(n, sizeof buf));
      if (!read(buf, step)) throw ArchiveError("truncated tar archive");
      n -= step;
    }
  }

 private:
  gzFile file_;
};

std::uint64_t parse_octal(const char* field, std::size_t len) {
  // GNU base-256 encoding for large sizes.
  if ((static_cast<unsigned char>(field[0]) & 0x80) != 0) {
    std::uint64_t v = static_cast<unsigned char>(field[0]) & 0x7F;
    for (std::size_t i = 1; i < len; ++i) v = (v << 8) | static_cast<unsigned char>(field[i]);
    return v;
  }
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < len; ++i) {
    char c = field[i];
    if (c == ' ' || c == '\0') {
      if (v != 0) break;
      continue;
    }
    if (c < '0' || c > '7') throw ArchiveError("bad octal field in tar header");
    v = v * 8 + static_cast<std::uint64_t>(c - '0');
  }
  return v;
}

std::string c_field(const char* field, std::size_t len) {
  return std::string(field, strnlen(field, len));
}

std::uint64_t padded(std::uint64_t size) { return (size + 511) / 512 * 512; }

// "len path=value\n" records.
std::string pax_path(const std::string& data) {
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t space = data.find(' ', pos);
    if (space == std::string::npos) break;
    std::size_t len = std::stoul(data.substr(pos, space - pos));
    if (len == 0 || pos + len > data.size()) break;
    std::string rec = data.substr(space + 1, len - (space + 1 - pos) - 1);
    if (rec.rfind("path=", 0) == 0) return rec.substr(5);
    pos += len;
  }
  return {};
}

std::vector<ArchiveMember> read_tar(const std::filesystem::path& path,
                                    const std::function<bool(const std::string&)>& keep) {
  GzReader in(path);
  std::vector<ArchiveMember> out;
  std::string long_name;
  char header[512];
  while (in.read(header, sizeof header)) {
    if (std::all_of(header, header + 512, [](char c) { return c == 0; })) break;
    const std::uint64_t size = parse_octal(header + 124, 12);
    const char type = header[156];
    std::string name;
    if (!long_name.empty()) {
      name = std::move(long_name);
      long_name.clear();
    } else {
      name = c_field(header, 100);
      if (std::memcmp(header + 257, "ustar", 5) == 0) {
        std::string prefix = c_field(header + 345, 155);
        if (!prefix.empty()) name = prefix + "/" + name;
      }
    }

    if (type == 'L' || type == 'x') {
      std::string data(static_cast<std::size_t>(size), '\0');
      if (size > 0 && !in.read(data.data(), data.size())) throw ArchiveError("truncated tar archive");
      in.skip(padded(size) - size);
      long_name = type == 'L' ? c_field(data.data(), data.size()) : pax_path(data);
      continue;
    }
    const bool regular = type == '0' || type == '\0' || type == '7';
    if (regular && keep(name)) {
      std::string data(static_cast<std::size_t>(size), '\0');
      if (size > 0 && !in.read(data.data(), data.size())) throw ArchiveError("truncated tar archive");
      in.skip(padded(size) - size);
      out.push_back({name, std::move(data)});
    } else {
      in.skip(padded(size));
    }
  }
  return out;
}

// ---- zip ----

std::uint32_t le32(const std::string& b, std::size_t at) {
  if (at + 4 > b.size()) throw ArchiveError("truncated zip archive");
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t le16(const std::string& b, std::size_t at) {
  if (at + 2 > b.size()) throw ArchiveError("truncated zip archive");
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

std::string inflate_raw(const char* data, std::size_t size, std::size_t expected) {
  std::string out(expected, '\0');
  z_stream zs{};
  if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw ArchiveError("inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data));
  zs.avail_in = static_cast<uInt>(size);
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  int rc = inflate(&zs, Z_FINISH);
  inflateEnd(&zs);
  if (rc != Z_STREAM_END || zs.total_out != expected) throw ArchiveError("corrupt deflate data in zip");
  return out;
}

std::vector<ArchiveMember> read_zip(const std::filesystem::path& path,
                                    const std::function<bool(const std::string&)>& keep) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ArchiveError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  if (buf.size() < 22) throw ArchiveError("not a zip archive");
  std::size_t eocd = std::string::npos;
  const std::size_t lowest = buf.size() > 22 + 0xFFFF ? buf.size() - 22 - 0xFFFF : 0;
  for (std::size_t i = buf.size() - 22 + 1; i-- > lowest;) {
    if (le32(buf, i) == 0x06054b50) {
      eocd = i;
      break;
    }
  }
  if (eocd == std::string::npos) throw ArchiveError("zip end record not found");
  const std::uint16_t entries = le16(buf, eocd + 10);
  std::size_t pos = le32(buf, eocd + 16);

  std::vector<ArchiveMember> out;
  for (std::uint16_t e = 0; e < entries; ++e) {
    if (le32(buf, pos) != 0x02014b50) throw ArchiveError("bad zip central directory");
    const std::uint16_t method = le16(buf, pos + 10);
    const std::uint32_t csize = le32(buf, pos + 20);
    const std::uint32_t usize = le32(buf, pos + 24);
    const std::uint16_t name_len = le16(buf, pos + 28);
    const std::uint16_t extra_len = le16(buf, pos + 30);
    const std::uint16_t comment_len = le16(buf, pos + 32);
    const std::uint32_t local = le32(buf, pos + 42);
    if (pos + 46 + name_len > buf.size()) throw ArchiveError("truncated zip archive");
    std::string name = buf.substr(pos + 46, name_len);
    pos += 46u + name_len + extra_len + comment_len;

    if (name.empty() || name.back() == '/' || !keep(name)) continue;
    if (csize == 0xFFFFFFFFu || usize == 0xFFFFFFFFu) throw ArchiveError("zip64 archives are not supported");
    if (le32(buf, local) != 0x04034b50) throw ArchiveError("bad zip local header");
    const std::size_t data_at = local + 30u + le16(buf, local + 26) + le16(buf, local + 28);
    if (data_at + csize > buf.size()) throw ArchiveError("truncated zip archive");
    if (method == 0) {
      out.push_back({name, buf.substr(data_at, csize)});
    } else if (method == 8) {
      out.push_back({name, inflate_raw(buf.data() + data_at, csize, usize)});
    } else {
      throw ArchiveError("unsupported zip compression method " + std::to_string(method));
    }
  }
  return out;
}

}  // namespace

bool is_archive_name(const std::string& file_name) {
  std::string n = lower(file_name);
  return ends_with(n, ".tar.gz") || ends_with(n, ".tgz") || ends_with(n, ".tar") || ends_with(n, ".zip");
}

std::vector<ArchiveMember> read_archive(const std::filesystem::path& path,
                                        const std::function<bool(const std::string&)>& keep) {
  if (ends_with(lower(path.filename().string()), ".zip")) return read_zip(path, keep);
  return read_tar(path, keep);
}

}  // namespace ranatomy::detail
