// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_CLI_HPP
#define RB_CLI_HPP

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "rb/orchestrator.hpp"
#include "rb/transport.hpp"

namespace rb::cli {

// Exit codes.
constexpr int kExitOk = 0;
constexpr int kExitBuildFailed = 1;   // remote build returned nonzero
constexpr int kExitUsage = 2;
constexpr int kExitConnect = 3;       // connection/auth/host-key failure
constexpr int kExitSyncFailed = 4;    // build succeeded, a transfer did not

struct ParsedInvocation {
  enum class Mode { Build, Agent, Usage };

  Mode mode = Mode::Usage;
  orchestrator::BuildRequest request;    // Build
  orchestrator::Tunables tunables;       // Build
  std::filesystem::path agent_root;      // Agent
  std::string error;                     // Usage: empty means --help
  std::vector<std::string> warnings;
};

// Total over all inputs: every argv/env pair yields Build, Agent or Usage.
// Short flags accept juxtaposed values (-o-d'$ISAFOR') and separated ones
// (-o -d is the single option word "-d"); each -o contributes exactly one
// word. A flag always wins over its environment variable.
ParsedInvocation parse_args(const std::vector<std::string>& argv,
                            const std::map<std::string, std::string>& env);

std::string usage();

// Renders a request back into argv form (flags then sessions).
std::vector<std::string> render_args(const orchestrator::BuildRequest& req);

// Dispatches a parsed invocation; `transport_override` lets tests run the
// whole flow over an in-process transport.
int run_main(const std::vector<std::string>& argv,
             const std::map<std::string, std::string>& env,
             transport::Transport* transport_override = nullptr,
             std::ostream& out = std::cout, std::ostream& err = std::cerr,
             hostkeys::LookupLog* lookup_log = nullptr);

}  // namespace rb::cli

#endif
