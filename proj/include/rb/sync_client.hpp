// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_SYNC_CLIENT_HPP
#define RB_SYNC_CLIENT_HPP

#include <chrono>
#include <filesystem>
#include <string>

#include "rb/channel.hpp"
#include "rb/delta.hpp"
#include "rb/wire.hpp"

namespace rb::sync {

// The remote end never produced a working agent (failed handshake, channel
// closed before the magic arrived).
class AgentUnavailableError : public SyncError {
 public:
  using SyncError::SyncError;
};

// The agent reported a per-file error (e.g. no such file).
class RemoteFileError : public SyncError {
 public:
  using SyncError::SyncError;
};

struct SyncStats {
  std::uint64_t literal_bytes = 0;
  std::uint64_t copied_bytes = 0;
  std::uint64_t wire_bytes = 0;  // both directions, frames and magic included
  std::chrono::duration<double> elapsed{0};

  std::uint64_t source_len() const { return literal_bytes + copied_bytes; }
};

// Local half of the sync protocol. One client per channel; files transfer
// sequentially. The local copy, when present, serves as the delta basis.
class SyncClient {
 public:
  explicit SyncClient(transport::ByteChannel& channel);
  ~SyncClient();

  // Replaces local_path atomically with the remote file's content: writes a
  // temp sibling, verifies the whole-file digest, stamps the remote mtime,
  // then renames. On any failure the pre-existing local file is untouched.
  SyncStats sync_file(const std::string& remote_path,
                      const std::filesystem::path& local_path,
                      std::uint32_t block_size = kDefaultBlockSize);

  void quit();

 private:
  void handshake();

  transport::ByteChannel& channel_;
  FrameWriter writer_;
  FrameReader reader_;
  bool handshaken_ = false;
  bool quit_sent_ = false;
};

}  // namespace rb::sync

#endif
