// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/subprocess.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

extern char** environ;

namespace rb::proc {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw SpawnError(what + ": " + std::strerror(errno));
}

std::size_t read_fd(int fd, std::span<std::uint8_t> out) {
  if (fd < 0) return 0;
  while (true) {
    ssize_t n = ::read(fd, out.data(), out.size());
    if (n >= 0) return static_cast<std::size_t>(n);
    if (errno != EINTR) throw_errno("read from child");
  }
}

void close_quiet(int& fd) {
  if (fd >= 0) {
    ::close(fd);
    fd = -1;
  }
}

}  // namespace

Subprocess::Subprocess(const SpawnSpec& spec) {
  if (spec.argv.empty()) throw SpawnError("empty argv");

  int in_pipe[2] = {-1, -1};
  int out_pipe[2] = {-1, -1};
  int err_pipe[2] = {-1, -1};
  if (spec.pipe_stdin && ::pipe(in_pipe) != 0) throw_errno("pipe");
  if (spec.pipe_stdout && ::pipe(out_pipe) != 0) throw_errno("pipe");
  if (spec.pipe_stderr && ::pipe(err_pipe) != 0) throw_errno("pipe");

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  if (spec.pipe_stdin) {
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], 0);
    posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
  }
  if (spec.pipe_stdout) {
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], 1);
    posix_spawn_file_actions_addclose(&actions, out_pipe[0]);
  }
  if (spec.pipe_stderr) {
    posix_spawn_file_actions_adddup2(&actions, err_pipe[1], 2);
    posix_spawn_file_actions_addclose(&actions, err_pipe[0]);
  }
  if (spec.cwd) {
    posix_spawn_file_actions_addchdir_np(&actions, spec.cwd->c_str());
  }

  // Build envp: inherited environment with overrides applied last.
  std::vector<std::string> env_storage;
  for (char** e = environ; *e != nullptr; ++e) {
    std::string_view entry(*e);
    bool overridden = false;
    for (const auto& [k, v] : spec.env_overrides) {
      if (entry.size() > k.size() && entry[k.size()] == '=' &&
          entry.compare(0, k.size(), k) == 0) {
        overridden = true;
        break;
      }
    }
    if (!overridden) env_storage.emplace_back(entry);
  }
  for (const auto& [k, v] : spec.env_overrides) {
    env_storage.push_back(k + "=" + v);
  }
  std::vector<char*> envp;
  envp.reserve(env_storage.size() + 1);
  for (auto& s : env_storage) envp.push_back(s.data());
  envp.push_back(nullptr);

  std::vector<char*> argv;
  std::vector<std::string> argv_storage(spec.argv);
  argv.reserve(argv_storage.size() + 1);
  for (auto& s : argv_storage) argv.push_back(s.data());
  argv.push_back(nullptr);

  pid_t pid = -1;
  int rc = posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(),
                        envp.data());
  posix_spawn_file_actions_destroy(&actions);

  // Parent keeps the far ends.
  if (spec.pipe_stdin) ::close(in_pipe[0]);
  if (spec.pipe_stdout) ::close(out_pipe[1]);
  if (spec.pipe_stderr) ::close(err_pipe[1]);

  if (rc != 0) {
    if (spec.pipe_stdin) ::close(in_pipe[1]);
    if (spec.pipe_stdout) ::close(out_pipe[0]);
    if (spec.pipe_stderr) ::close(err_pipe[0]);
    errno = rc;
    throw_errno("spawn '" + spec.argv[0] + "'");
  }

  pid_ = pid;
  stdin_fd_ = in_pipe[1];
  stdout_fd_ = out_pipe[0];
  stderr_fd_ = err_pipe[0];
}

Subprocess::~Subprocess() {
  close_quiet(stdin_fd_);
  close_quiet(stdout_fd_);
  close_quiet(stderr_fd_);
  if (pid_ > 0 && !status_) {
    ::kill(pid_, SIGKILL);
    int raw = 0;
    ::waitpid(pid_, &raw, 0);
  }
}

std::size_t Subprocess::read_stdout(std::span<std::uint8_t> out) {
  return read_fd(stdout_fd_, out);
}

std::size_t Subprocess::read_stderr(std::span<std::uint8_t> out) {
  return read_fd(stderr_fd_, out);
}

void Subprocess::write_stdin(ByteSpan data) {
  if (stdin_fd_ < 0) throw SpawnError("stdin not piped or already closed");
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(stdin_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      if (errno == EPIPE) throw SpawnError("child closed stdin");
      throw_errno("write to child");
    }
    off += static_cast<std::size_t>(n);
  }
}

void Subprocess::close_stdin() { close_quiet(stdin_fd_); }

std::optional<int> Subprocess::try_wait() {
  if (status_) return status_;
  int raw = 0;
  pid_t r = ::waitpid(pid_, &raw, WNOHANG);
  if (r == 0) return std::nullopt;
  if (r < 0) throw_errno("waitpid");
  status_ = WIFEXITED(raw) ? WEXITSTATUS(raw) : 128 + WTERMSIG(raw);
  return status_;
}

int Subprocess::wait() {
  if (status_) return *status_;
  int raw = 0;
  while (::waitpid(pid_, &raw, 0) < 0) {
    if (errno != EINTR) throw_errno("waitpid");
  }
  status_ = WIFEXITED(raw) ? WEXITSTATUS(raw) : 128 + WTERMSIG(raw);
  return *status_;
}

void Subprocess::kill() {
  if (pid_ > 0 && !status_) ::kill(pid_, SIGTERM);
}

bool Subprocess::running() { return !try_wait().has_value(); }

RunResult run(const SpawnSpec& spec) {
  SpawnSpec s = spec;
  s.pipe_stdout = true;
  s.pipe_stderr = true;
  Subprocess child(s);
  if (s.pipe_stdin) child.close_stdin();

  // Drain stderr on a helper thread so a chatty child cannot deadlock.
  std::string err;
  std::thread err_reader([&] {
    std::uint8_t buf[4096];
    while (std::size_t n = child.read_stderr(buf)) {
      err.append(reinterpret_cast<char*>(buf), n);
    }
  });
  std::string out;
  std::uint8_t buf[4096];
  while (std::size_t n = child.read_stdout(buf)) {
    out.append(reinterpret_cast<char*>(buf), n);
  }
  err_reader.join();
  return RunResult{child.wait(), std::move(out), std::move(err)};
}

}  // namespace rb::proc
