// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <csignal>

int main(int argc, char** argv) {
  // Sync tests talk to child processes that may die mid-write.
  std::signal(SIGPIPE, SIG_IGN);
  return doctest::Context(argc, argv).run();
}
