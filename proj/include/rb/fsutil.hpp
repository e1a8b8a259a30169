// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_FSUTIL_HPP
#define RB_FSUTIL_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "rb/bytes.hpp"

namespace rb::fsutil {

// Temp sibling of a target file, renamed over it on commit. If commit is
// never called (error paths, exceptions) the destructor removes the temp
// file, leaving any pre-existing target untouched.
class PendingFile {
 public:
  explicit PendingFile(const std::filesystem::path& target);
  ~PendingFile();
  PendingFile(const PendingFile&) = delete;
  PendingFile& operator=(const PendingFile&) = delete;

  void write(ByteSpan data);

  // Flushes, optionally stamps the mtime, fsyncs and renames over target.
  void commit(std::optional<std::int64_t> mtime_seconds);

  const std::filesystem::path& temp_path() const { return temp_; }

 private:
  std::filesystem::path target_;
  std::filesystem::path temp_;
  std::ofstream out_;
  bool committed_ = false;
};

// Suffix marker carried by every in-flight temp file; tests scan for it.
extern const char* kPendingSuffix;

void set_mtime(const std::filesystem::path& path, std::int64_t mtime_seconds);
std::int64_t get_mtime(const std::filesystem::path& path);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, ByteSpan data);

}  // namespace rb::fsutil

#endif
