#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "tutorgen/error.hpp"

namespace tutorgen::io {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline void write_all(int fd, std::string_view data, const std::filesystem::path& path) {
  while (!data.empty()) {
    ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw IoError("write to '" + path.string() + "' failed: " + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

class Fd {
 public:
  Fd(const std::filesystem::path& path, int flags) : path_(path) {
    fd_ = ::open(path.c_str(), flags | O_CLOEXEC, 0644);
    if (fd_ < 0) {
      throw IoError("cannot open '" + path.string() + "': " + std::strerror(errno));
    }
  }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() {
    if (fd_ >= 0) ::close(fd_);
  }

  void write(std::string_view data) { write_all(fd_, data, path_); }

  void sync() {
    if (::fsync(fd_) != 0) {
      throw IoError("fsync '" + path_.string() + "' failed: " + std::strerror(errno));
    }
  }

 private:
  int fd_ = -1;
  std::filesystem::path path_;
};

}  // namespace detail

/// Replace `path` with `data` via write-to-temp, fsync, rename.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view data) {
  auto tmp = path;
  tmp += ".tmp";
  {
    detail::Fd fd(tmp, O_WRONLY | O_CREAT | O_TRUNC);
    fd.write(data);
    fd.sync();
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename to '" + path.string() + "' failed: " + ec.message());
}

/// Append `data` with a single durable write. The payload is staged in a
/// fsynced side file first so a crash never leaves the caller without a
/// complete copy of what was being appended.
inline void append_durable(const std::filesystem::path& path, std::string_view data) {
  auto staged = path;
  staged += ".pending";
  {
    detail::Fd fd(staged, O_WRONLY | O_CREAT | O_TRUNC);
    fd.write(data);
    fd.sync();
  }
  {
    detail::Fd fd(path, O_WRONLY | O_CREAT | O_APPEND);
    fd.write(data);
    fd.sync();
  }
  std::filesystem::remove(staged);
}

inline void write_file(const std::filesystem::path& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << data;
  if (!out) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace tutorgen::io
