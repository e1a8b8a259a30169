// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include <csignal>
#include <cstring>

#include "rb/cli.hpp"

extern char** environ;

int main(int argc, char** argv) {
  // Broken pipes (a vanished remote or agent) surface as write errors.
  std::signal(SIGPIPE, SIG_IGN);

  std::vector<std::string> args(argv + 1, argv + argc);
  std::map<std::string, std::string> env;
  for (char** e = environ; *e != nullptr; ++e) {
    const char* eq = std::strchr(*e, '=');
    if (eq != nullptr) env.emplace(std::string(*e, eq), std::string(eq + 1));
  }
  return rb::cli::run_main(args, env);
}
