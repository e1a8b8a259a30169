// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_PROC_STREAM_HPP
#define RB_PROC_STREAM_HPP

#include <memory>

#include "rb/subprocess.hpp"
#include "rb/transport.hpp"

namespace rb::transport {

// ExecHandle backed by a local child process (used by both the loopback
// transport and the ssh client transport).
class SubprocessExecHandle : public ExecHandle {
 public:
  explicit SubprocessExecHandle(proc::SpawnSpec spec);

  std::size_t read_stdout(std::span<std::uint8_t> out) override;
  std::size_t read_stderr(std::span<std::uint8_t> out) override;
  std::optional<int> try_wait() override;
  int wait() override;

 private:
  proc::Subprocess child_;
};

// ByteChannel over a child's stdin/stdout. stderr passes through to the
// parent's stderr. The destructor closes stdin and gives the child a grace
// period to exit before killing it.
class SubprocessChannel : public ByteChannel {
 public:
  explicit SubprocessChannel(proc::SpawnSpec spec);
  ~SubprocessChannel() override;

  std::size_t read(std::span<std::uint8_t> out) override;
  void write(ByteSpan data) override;
  void close_write() override;

 private:
  proc::Subprocess child_;
  bool write_open_ = true;
};

}  // namespace rb::transport

#endif
