// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/fsutil.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <random>

namespace rb::fsutil {

namespace fs = std::filesystem;

const char* kPendingSuffix = ".rb-part";

namespace {

std::string random_token() {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  static const char* hex = "0123456789abcdef";
  std::string out;
  std::uint64_t v = rng();
  for (int i = 0; i < 12; ++i) {
    out.push_back(hex[v & 0xF]);
    v >>= 4;
  }
  return out;
}

}  // namespace

PendingFile::PendingFile(const fs::path& target) : target_(target) {
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  temp_ = target;
  temp_ += kPendingSuffix;
  temp_ += "." + random_token();
  out_.open(temp_, std::ios::binary | std::ios::trunc);
  if (!out_.is_open()) {
    throw Error("cannot create temp file " + temp_.string());
  }
}

PendingFile::~PendingFile() {
  if (!committed_) {
    out_.close();
    std::error_code ec;
    fs::remove(temp_, ec);
  }
}

void PendingFile::write(ByteSpan data) {
  out_.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size()));
  if (!out_) throw Error("write failed on " + temp_.string());
}

void PendingFile::commit(std::optional<std::int64_t> mtime_seconds) {
  out_.flush();
  if (!out_) throw Error("flush failed on " + temp_.string());
  out_.close();

  if (mtime_seconds) set_mtime(temp_, *mtime_seconds);

  int fd = ::open(temp_.c_str(), O_RDONLY);
  if (fd >= 0) {
    ::fsync(fd);
    ::close(fd);
  }
  std::error_code ec;
  fs::rename(temp_, target_, ec);
  if (ec) {
    throw Error("rename " + temp_.string() + " -> " + target_.string() +
                " failed: " + ec.message());
  }
  committed_ = true;
}

void set_mtime(const fs::path& path, std::int64_t mtime_seconds) {
  struct timespec times[2];
  times[0].tv_sec = mtime_seconds;
  times[0].tv_nsec = 0;
  times[1].tv_sec = mtime_seconds;
  times[1].tv_nsec = 0;
  if (::utimensat(AT_FDCWD, path.c_str(), times, 0) != 0) {
    throw Error("utimensat " + path.string() + ": " + std::strerror(errno));
  }
}

std::int64_t get_mtime(const fs::path& path) {
  struct ::stat st{};
  if (::stat(path.c_str(), &st) != 0) {
    throw Error("stat " + path.string() + ": " + std::strerror(errno));
  }
  return static_cast<std::int64_t>(st.st_mtime);
}

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.is_open()) throw Error("cannot open " + path.string());
  Bytes data((std::istreambuf_iterator<char>(in)),
             std::istreambuf_iterator<char>());
  return data;
}

void write_file(const fs::path& path, ByteSpan data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out.is_open()) throw Error("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw Error("write failed on " + path.string());
}

}  // namespace rb::fsutil
