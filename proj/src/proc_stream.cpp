// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/proc_stream.hpp"

#include <chrono>
#include <thread>

namespace rb::transport {

namespace {

proc::SpawnSpec with_pipes(proc::SpawnSpec spec, bool stdin_pipe) {
  spec.pipe_stdin = stdin_pipe;
  spec.pipe_stdout = true;
  spec.pipe_stderr = stdin_pipe ? false : true;
  return spec;
}

}  // namespace

SubprocessExecHandle::SubprocessExecHandle(proc::SpawnSpec spec)
    : child_(with_pipes(std::move(spec), false)) {}

std::size_t SubprocessExecHandle::read_stdout(std::span<std::uint8_t> out) {
  return child_.read_stdout(out);
}

std::size_t SubprocessExecHandle::read_stderr(std::span<std::uint8_t> out) {
  return child_.read_stderr(out);
}

std::optional<int> SubprocessExecHandle::try_wait() { return child_.try_wait(); }

int SubprocessExecHandle::wait() { return child_.wait(); }

SubprocessChannel::SubprocessChannel(proc::SpawnSpec spec)
    : child_(with_pipes(std::move(spec), true)) {}

SubprocessChannel::~SubprocessChannel() {
  child_.close_stdin();
  for (int i = 0; i < 20 && child_.running(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
}

std::size_t SubprocessChannel::read(std::span<std::uint8_t> out) {
  return child_.read_stdout(out);
}

void SubprocessChannel::write(ByteSpan data) {
  if (!write_open_) throw ChannelError("write after close_write");
  try {
    child_.write_stdin(data);
  } catch (const proc::SpawnError& e) {
    throw ChannelError(e.what());
  }
}

void SubprocessChannel::close_write() {
  write_open_ = false;
  child_.close_stdin();
}

}  // namespace rb::transport
