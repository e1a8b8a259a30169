// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_LOOPBACK_HPP
#define RB_LOOPBACK_HPP

#include <filesystem>
#include <map>
#include <set>
#include <string>

#include "rb/transport.hpp"

namespace rb::transport {

// In-process transport for hermetic tests. Each registered host is a local
// sandbox directory standing in for the remote machine's home: exec runs
// argv through /bin/sh with HOME and the working directory remapped to the
// sandbox, so "~" resolves inside it; stat_tree resolves paths under the
// sandbox directly. Channel and exec semantics mirror the ssh transport.
class LoopbackTransport : public Transport {
 public:
  struct Host {
    std::filesystem::path root;
    HostKey key;
    bool reachable = true;
    bool reachable_from_proxy = true;
    bool accept_auth = true;
  };

  void add_host(const std::string& name, Host host);

  // Marks a local forward port as already bound (simulates another process
  // holding it).
  void bind_local_port(int port);

  std::unique_ptr<Connection> dial(const Endpoint& endpoint,
                                   const HostKeyVerifier& verifier) override;

  std::unique_ptr<Connection> dial_via_tunnel(
      const ProxySpec& proxy, const Endpoint& target,
      const HostKeyVerifier& proxy_verifier,
      const HostKeyVerifier& stage2_verifier) override;

 private:
  const Host* find_host(const std::string& name) const;

  std::map<std::string, Host> hosts_;
  std::set<int> bound_ports_;
};

// Resolves a remote-style path ("~", "~/x", absolute, or relative) inside a
// sandbox root. Exposed for tests.
std::filesystem::path loopback_resolve(const std::filesystem::path& root,
                                       const std::string& remote_path);

}  // namespace rb::transport

#endif
