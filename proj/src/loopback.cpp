// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/loopback.hpp"

#include <sys/stat.h>

#include <algorithm>

#include "rb/proc_stream.hpp"
#include "rb/shell.hpp"

namespace rb::transport {

namespace fs = std::filesystem;

std::filesystem::path loopback_resolve(const fs::path& root,
                                       const std::string& remote_path) {
  if (remote_path.empty() || remote_path == "~") return root;
  if (remote_path.rfind("~/", 0) == 0) return root / remote_path.substr(2);
  fs::path p(remote_path);
  if (p.is_absolute()) return root / p.relative_path();
  return root / p;
}

namespace {

class LoopbackConnection : public Connection {
 public:
  LoopbackConnection(fs::path root, Topology topology)
      : root_(std::move(root)), topology_(topology) {}

  Topology topology() const override { return topology_; }

  std::unique_ptr<ExecHandle> exec(const std::vector<std::string>& argv) override {
    return std::make_unique<SubprocessExecHandle>(spawn_spec(argv));
  }

  std::vector<RemoteFileStat> stat_tree(const std::string& dir) override {
    fs::path base = loopback_resolve(root_, dir);
    std::vector<RemoteFileStat> out;
    std::error_code ec;
    if (!fs::is_directory(base, ec)) return out;
    for (auto it = fs::recursive_directory_iterator(base, ec);
         it != fs::recursive_directory_iterator(); ++it) {
      if (!it->is_regular_file(ec)) continue;
      struct ::stat st{};
      if (::stat(it->path().c_str(), &st) != 0) continue;
      out.push_back(RemoteFileStat{
          fs::relative(it->path(), base).generic_string(),
          static_cast<std::uint64_t>(st.st_size),
          static_cast<std::int64_t>(st.st_mtime)});
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.path < b.path; });
    return out;
  }

  std::unique_ptr<ByteChannel> open_channel(
      const std::vector<std::string>& argv) override {
    return std::make_unique<SubprocessChannel>(spawn_spec(argv));
  }

 private:
  proc::SpawnSpec spawn_spec(const std::vector<std::string>& argv) const {
    // Through /bin/sh, like the remote side of an ssh session, so tilde
    // expansion behaves the same on both transports.
    proc::SpawnSpec spec;
    spec.argv = {"/bin/sh", "-c", shell::join(argv)};
    spec.cwd = root_;
    spec.env_overrides = {{"HOME", root_.string()}};
    return spec;
  }

  fs::path root_;
  Topology topology_;
};

}  // namespace

void LoopbackTransport::add_host(const std::string& name, Host host) {
  hosts_[name] = std::move(host);
}

void LoopbackTransport::bind_local_port(int port) { bound_ports_.insert(port); }

const LoopbackTransport::Host* LoopbackTransport::find_host(
    const std::string& name) const {
  auto it = hosts_.find(name);
  return it == hosts_.end() ? nullptr : &it->second;
}

std::unique_ptr<Connection> LoopbackTransport::dial(
    const Endpoint& endpoint, const HostKeyVerifier& verifier) {
  const Host* host = find_host(endpoint.host);
  if (host == nullptr || !host->reachable) {
    throw ConnectError("cannot reach host " + endpoint.host);
  }
  verifier.require(verifier.check(host->key.type, host->key.blob));
  if (!host->accept_auth) {
    throw AuthError("key-based authentication rejected by " + endpoint.host +
                    " (password authentication is unsupported)");
  }
  return std::make_unique<LoopbackConnection>(host->root, Topology::Direct);
}

std::unique_ptr<Connection> LoopbackTransport::dial_via_tunnel(
    const ProxySpec& proxy, const Endpoint& target,
    const HostKeyVerifier& proxy_verifier,
    const HostKeyVerifier& stage2_verifier) {
  const Host* proxy_host = find_host(proxy.host);
  if (proxy_host == nullptr || !proxy_host->reachable) {
    throw ProxyConnectError("cannot reach proxy " + proxy.host);
  }
  proxy_verifier.require(
      proxy_verifier.check(proxy_host->key.type, proxy_host->key.blob));
  if (!proxy_host->accept_auth) {
    throw AuthError("key-based authentication rejected by proxy " + proxy.host +
                    " (password authentication is unsupported)");
  }

  if (bound_ports_.count(proxy.forward_port) != 0) {
    throw PortInUseError(proxy.forward_port,
                         "local forward port " +
                             std::to_string(proxy.forward_port) +
                             " is already in use");
  }

  const Host* target_host = find_host(target.host);
  if (target_host == nullptr || !target_host->reachable_from_proxy) {
    throw ProxyConnectError("target " + target.host +
                            " is not reachable from proxy " + proxy.host);
  }

  // The tunneled session terminates at the target, which presents its own
  // host key on the [localhost]:forward_port connection.
  stage2_verifier.require(
      stage2_verifier.check(target_host->key.type, target_host->key.blob));
  if (!target_host->accept_auth) {
    throw AuthError("key-based authentication rejected by " + target.host +
                    " (password authentication is unsupported)");
  }
  return std::make_unique<LoopbackConnection>(target_host->root,
                                              Topology::Tunneled);
}

}  // namespace rb::transport
