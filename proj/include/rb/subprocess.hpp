// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_SUBPROCESS_HPP
#define RB_SUBPROCESS_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rb/bytes.hpp"

namespace rb::proc {

struct SpawnSpec {
  std::vector<std::string> argv;  // argv[0] resolved via PATH
  std::optional<std::filesystem::path> cwd;
  std::vector<std::pair<std::string, std::string>> env_overrides;
  bool pipe_stdin = false;
  bool pipe_stdout = false;
  bool pipe_stderr = false;
};

class SpawnError : public Error {
 public:
  using Error::Error;
};

// A spawned child process with optional pipes. Read/write calls block; the
// destructor kills and reaps a child that is still running.
class Subprocess {
 public:
  explicit Subprocess(const SpawnSpec& spec);
  ~Subprocess();
  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  std::size_t read_stdout(std::span<std::uint8_t> out);
  std::size_t read_stderr(std::span<std::uint8_t> out);
  void write_stdin(ByteSpan data);
  void close_stdin();

  // Exit code, or 128+signal for a signaled child.
  std::optional<int> try_wait();
  int wait();
  void kill();

  bool running();

 private:
  int pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  int stderr_fd_ = -1;
  std::optional<int> status_;
};

// Runs to completion, capturing stdout/stderr.
struct RunResult {
  int status;
  std::string out;
  std::string err;
};

RunResult run(const SpawnSpec& spec);

}  // namespace rb::proc

#endif
