// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_SSH_TRANSPORT_HPP
#define RB_SSH_TRANSPORT_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rb/transport.hpp"

namespace rb::transport {

// Production transport over the OpenSSH client binary. Key-based
// authentication only (BatchMode); host keys are restricted to RSA and
// checked strictly against the configured known_hosts file. The client
// command is configurable so tests can substitute a local shim.
struct SshConfig {
  std::vector<std::string> ssh_argv{"ssh"};
  std::optional<std::filesystem::path> known_hosts_file;
  bool control_master = true;  // multiplex channels over one authenticated session
  int connect_timeout_seconds = 30;
};

class SshTransport : public Transport {
 public:
  explicit SshTransport(SshConfig config);
  ~SshTransport() override;

  std::unique_ptr<Connection> dial(const Endpoint& endpoint,
                                   const HostKeyVerifier& verifier) override;

  std::unique_ptr<Connection> dial_via_tunnel(
      const ProxySpec& proxy, const Endpoint& target,
      const HostKeyVerifier& proxy_verifier,
      const HostKeyVerifier& stage2_verifier) override;

  // Client argv prefix (options only, no host) for the given endpoint.
  // Exposed for tests: the flag layout is part of the tool's contract with
  // the system ssh client.
  std::vector<std::string> base_argv(const Endpoint& endpoint) const;

  // argv of the stage-1 tunnel process for a proxy jump.
  std::vector<std::string> tunnel_argv(const ProxySpec& proxy,
                                       const Endpoint& target) const;

 private:
  SshConfig config_;
  std::filesystem::path control_dir_;
};

// Maps a failed ssh probe (exit status + stderr) onto the transport error
// taxonomy. Exposed for tests.
[[noreturn]] void throw_connect_failure(const Endpoint& endpoint, int stage,
                                        int status, const std::string& stderr_text);

// Remote listing command used by stat_tree.
std::string stat_tree_command(const std::string& dir);

// Parses one "<size> <mtime> <path>" line; empty optional for blanks.
std::optional<RemoteFileStat> parse_stat_line(const std::string& line);

}  // namespace rb::transport

#endif
