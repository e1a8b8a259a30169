// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_TRANSPORT_HPP
#define RB_TRANSPORT_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rb/channel.hpp"
#include "rb/hostkeys.hpp"

namespace rb::transport {

struct Endpoint {
  std::string host;
  int port = 22;
  std::string user;  // empty: current user
};

struct ProxySpec {
  std::string host;
  int forward_port = 2222;  // local end of the tunnel
};

enum class Topology { Direct, Tunneled };

struct RemoteFileStat {
  std::string path;  // relative to the queried directory
  std::uint64_t size = 0;
  std::int64_t mtime = 0;  // whole seconds since epoch
};

struct HostKey {
  hostkeys::KeyType type;
  Bytes blob;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ConnectError : public TransportError {
 public:
  using TransportError::TransportError;
};

class ProxyConnectError : public ConnectError {
 public:
  using ConnectError::ConnectError;
};

class PortInUseError : public ConnectError {
 public:
  PortInUseError(int port, const std::string& message)
      : ConnectError(message), port(port) {}
  int port;
};

// Key-based authentication was rejected. Password authentication is not
// available at all, so the message always says so.
class AuthError : public TransportError {
 public:
  using TransportError::TransportError;
};

class HostKeyError : public TransportError {
 public:
  HostKeyError(hostkeys::VerifyResult result, int stage, std::string message)
      : TransportError(std::move(message)), result(std::move(result)),
        stage(stage) {}

  hostkeys::VerifyResult result;
  int stage;  // 1 = proxy hop, 2 = tunneled target, 0 = direct
};

class ChannelError : public TransportError {
 public:
  using TransportError::TransportError;
};

// A started remote command. Output is streamed, never buffered to
// completion; the exit status becomes available once after termination.
// Drain stdout and stderr concurrently if the command may fill either pipe.
class ExecHandle {
 public:
  virtual ~ExecHandle() = default;
  virtual std::size_t read_stdout(std::span<std::uint8_t> out) = 0;  // 0 = EOF
  virtual std::size_t read_stderr(std::span<std::uint8_t> out) = 0;  // 0 = EOF
  virtual std::optional<int> try_wait() = 0;
  virtual int wait() = 0;
};

// An authenticated remote session. Distinct channels may be used from
// different threads concurrently; a single channel is single-threaded.
class Connection {
 public:
  virtual ~Connection() = default;

  virtual Topology topology() const = 0;

  virtual std::unique_ptr<ExecHandle> exec(
      const std::vector<std::string>& argv) = 0;

  // Recursive listing of regular files under dir (size, mtime in whole
  // seconds). A missing directory yields an empty list: the artifact
  // directory may not exist before the first build.
  virtual std::vector<RemoteFileStat> stat_tree(const std::string& dir) = 0;

  virtual std::unique_ptr<ByteChannel> open_channel(
      const std::vector<std::string>& argv) = 0;
};

// Host-key policy bundle for one hop: which known_hosts entries apply and
// how a presented key is judged. Backends that observe the server key call
// check(); backends that delegate the byte comparison call preflight(),
// which enforces the entry-presence and RSA-availability half of the policy.
class HostKeyVerifier {
 public:
  HostKeyVerifier(const std::vector<hostkeys::KnownHostsEntry>& entries,
                  std::string host, int port, int stage,
                  hostkeys::LookupLog* log = nullptr)
      : entries_(entries), host_(std::move(host)), port_(port), stage_(stage),
        log_(log) {}

  hostkeys::VerifyResult check(const hostkeys::KeyType& type,
                               ByteSpan blob) const;
  hostkeys::VerifyResult preflight() const;

  // Throws HostKeyError unless the result is Accepted.
  void require(const hostkeys::VerifyResult& result) const;

  const std::string& host() const { return host_; }
  int port() const { return port_; }
  int stage() const { return stage_; }

 private:
  const std::vector<hostkeys::KnownHostsEntry>& entries_;
  std::string host_;
  int port_;
  int stage_;
  hostkeys::LookupLog* log_;
};

// Session backend: the loopback world used by tests or the SSH client.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual std::unique_ptr<Connection> dial(const Endpoint& endpoint,
                                           const HostKeyVerifier& verifier) = 0;

  // Two-stage proxy jump: authenticated hop to the proxy carrying a local
  // forward from 127.0.0.1:forward_port to the target, then a session dialed
  // through that forward. stage2 verification is against the presented key
  // of the TARGET machine.
  virtual std::unique_ptr<Connection> dial_via_tunnel(
      const ProxySpec& proxy, const Endpoint& target,
      const HostKeyVerifier& proxy_verifier,
      const HostKeyVerifier& stage2_verifier) = 0;
};

// Connects with host-key verification against known_hosts. The presented
// key must verify as a stored RSA key for (endpoint.host, endpoint.port).
std::unique_ptr<Connection> connect(Transport& transport,
                                    const Endpoint& endpoint,
                                    const hostkeys::KnownHosts& known_hosts,
                                    hostkeys::LookupLog* log = nullptr);

// Proxy jump per the tunnel topology above. Stage 2 looks up
// "[localhost]:<forward_port>" — never the plain target hostname — and the
// stored key there must be the target's.
std::unique_ptr<Connection> connect_via_proxy(
    Transport& transport, const ProxySpec& proxy, const Endpoint& target,
    const hostkeys::KnownHosts& known_hosts,
    hostkeys::LookupLog* log = nullptr);

}  // namespace rb::transport

#endif
