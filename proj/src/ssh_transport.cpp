// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/ssh_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <sstream>
#include <thread>

#include "rb/proc_stream.hpp"
#include "rb/shell.hpp"
#include "rb/subprocess.hpp"

namespace rb::transport {

namespace fs = std::filesystem;

namespace {

bool contains(const std::string& haystack, const char* needle) {
  return haystack.find(needle) != std::string::npos;
}

// Binds (and immediately releases) the local forward port to produce a
// clear error before the tunnel process races for it.
void probe_local_port(int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  int rc = ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  ::close(fd);
  if (rc != 0) {
    throw PortInUseError(port, "local forward port " + std::to_string(port) +
                                   " is already in use");
  }
}

bool port_accepting(int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) return false;
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  int rc = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  ::close(fd);
  return rc == 0;
}

class SshConnection : public Connection {
 public:
  SshConnection(std::vector<std::string> base, std::string host,
                Topology topology, std::unique_ptr<proc::Subprocess> tunnel)
      : base_(std::move(base)), host_(std::move(host)), topology_(topology),
        tunnel_(std::move(tunnel)) {}

  ~SshConnection() override {
    if (tunnel_) tunnel_->kill();
  }

  Topology topology() const override { return topology_; }

  std::unique_ptr<ExecHandle> exec(const std::vector<std::string>& argv) override {
    return std::make_unique<SubprocessExecHandle>(spec_for(shell::join(argv)));
  }

  std::vector<RemoteFileStat> stat_tree(const std::string& dir) override {
    proc::RunResult result = proc::run(spec_for(stat_tree_command(dir)));
    if (result.status != 0) {
      throw ChannelError("remote listing of " + dir +
                         " failed: " + result.err);
    }
    std::vector<RemoteFileStat> out;
    std::istringstream lines(result.out);
    std::string line;
    while (std::getline(lines, line)) {
      if (auto stat = parse_stat_line(line)) out.push_back(std::move(*stat));
    }
    return out;
  }

  std::unique_ptr<ByteChannel> open_channel(
      const std::vector<std::string>& argv) override {
    return std::make_unique<SubprocessChannel>(spec_for(shell::join(argv)));
  }

 private:
  proc::SpawnSpec spec_for(const std::string& command) const {
    proc::SpawnSpec spec;
    spec.argv = base_;
    spec.argv.push_back("--");
    spec.argv.push_back(host_);
    spec.argv.push_back(command);
    return spec;
  }

  std::vector<std::string> base_;
  std::string host_;
  Topology topology_;
  std::unique_ptr<proc::Subprocess> tunnel_;
};

}  // namespace

std::string stat_tree_command(const std::string& dir) {
  // Relative paths keep the local prefix (and any remote tilde expansion)
  // out of the parsed output.
  return "d=" + shell::quote(dir) +
         "; test -d \"$d\" || exit 0; cd \"$d\" && "
         "find . -type f -exec stat -c '%s %Y %n' {} +";
}

std::optional<RemoteFileStat> parse_stat_line(const std::string& line) {
  if (line.empty()) return std::nullopt;
  std::istringstream in(line);
  std::uint64_t size = 0;
  std::int64_t mtime = 0;
  if (!(in >> size >> mtime)) return std::nullopt;
  std::string path;
  std::getline(in, path);
  while (!path.empty() && path.front() == ' ') path.erase(path.begin());
  if (path.rfind("./", 0) == 0) path.erase(0, 2);
  if (path.empty()) return std::nullopt;
  return RemoteFileStat{path, size, mtime};
}

[[noreturn]] void throw_connect_failure(const Endpoint& endpoint, int stage,
                                        int status,
                                        const std::string& stderr_text) {
  using hostkeys::VerifyOutcome;
  std::string where = endpoint.host + ":" + std::to_string(endpoint.port);

  if (contains(stderr_text, "Host key verification failed") ||
      contains(stderr_text, "IDENTIFICATION HAS CHANGED")) {
    throw HostKeyError({VerifyOutcome::Rejected, stderr_text}, stage,
                       "host key for " + where +
                           " does not match known_hosts: " + stderr_text);
  }
  if (contains(stderr_text, "no matching host key type") ||
      contains(stderr_text, "Unable to negotiate")) {
    throw HostKeyError(
        {VerifyOutcome::UnsupportedKeyType, stderr_text}, stage,
        "no RSA host key available from " + where +
            " (only RSA host keys are supported; install one, e.g. "
            "ssh-keyscan -t rsa " + endpoint.host +
            " >> ~/.ssh/known_hosts): " + stderr_text);
  }
  if (contains(stderr_text, "Permission denied")) {
    throw AuthError("key-based authentication to " + where +
                    " was rejected (password authentication is unsupported): " +
                    stderr_text);
  }
  throw ConnectError("ssh connection to " + where + " failed (status " +
                     std::to_string(status) + "): " + stderr_text);
}

SshTransport::SshTransport(SshConfig config) : config_(std::move(config)) {
  if (config_.control_master) {
    std::error_code ec;
    control_dir_ = fs::temp_directory_path(ec) /
                   ("rb-ssh-" + std::to_string(::getpid()));
    fs::create_directories(control_dir_, ec);
    if (ec) config_.control_master = false;
  }
}

SshTransport::~SshTransport() {
  if (config_.control_master) {
    std::error_code ec;
    fs::remove_all(control_dir_, ec);
  }
}

std::vector<std::string> SshTransport::base_argv(const Endpoint& endpoint) const {
  std::vector<std::string> argv = config_.ssh_argv;
  argv.insert(argv.end(), {
      "-x",
      "-o", "BatchMode=yes",
      "-o", "StrictHostKeyChecking=yes",
      "-o", "HostKeyAlgorithms=rsa-sha2-512,rsa-sha2-256,ssh-rsa",
      "-o", "ConnectTimeout=" + std::to_string(config_.connect_timeout_seconds),
  });
  if (config_.known_hosts_file) {
    argv.push_back("-o");
    argv.push_back("UserKnownHostsFile=" + config_.known_hosts_file->string());
  }
  if (config_.control_master) {
    argv.insert(argv.end(), {
        "-o", "ControlMaster=auto",
        "-o", "ControlPath=" + (control_dir_ / "cm-%C").string(),
        "-o", "ControlPersist=60",
    });
  }
  if (endpoint.port != 22) {
    argv.push_back("-p");
    argv.push_back(std::to_string(endpoint.port));
  }
  if (!endpoint.user.empty()) {
    argv.push_back("-l");
    argv.push_back(endpoint.user);
  }
  return argv;
}

std::vector<std::string> SshTransport::tunnel_argv(const ProxySpec& proxy,
                                                   const Endpoint& target) const {
  std::vector<std::string> argv = base_argv(Endpoint{proxy.host, 22, ""});
  argv.insert(argv.end(), {
      "-N",
      "-o", "ExitOnForwardFailure=yes",
      "-L", std::to_string(proxy.forward_port) + ":" + target.host + ":" +
                std::to_string(target.port),
      "--", proxy.host,
  });
  return argv;
}

std::unique_ptr<Connection> SshTransport::dial(const Endpoint& endpoint,
                                               const HostKeyVerifier& verifier) {
  // The ssh client performs the byte-for-byte key comparison during its
  // handshake; the preflight enforces the policy half we can check locally
  // (entry present, RSA available).
  verifier.require(verifier.preflight());

  std::vector<std::string> base = base_argv(endpoint);

  proc::SpawnSpec probe;
  probe.argv = base;
  probe.argv.insert(probe.argv.end(), {"--", endpoint.host, "true"});
  proc::RunResult result = proc::run(probe);
  if (result.status != 0) {
    throw_connect_failure(endpoint, verifier.stage(), result.status, result.err);
  }
  return std::make_unique<SshConnection>(std::move(base), endpoint.host,
                                         verifier.stage() == 2
                                             ? Topology::Tunneled
                                             : Topology::Direct,
                                         nullptr);
}

std::unique_ptr<Connection> SshTransport::dial_via_tunnel(
    const ProxySpec& proxy, const Endpoint& target,
    const HostKeyVerifier& proxy_verifier,
    const HostKeyVerifier& stage2_verifier) {
  proxy_verifier.require(proxy_verifier.preflight());
  probe_local_port(proxy.forward_port);

  proc::SpawnSpec spec;
  spec.argv = tunnel_argv(proxy, target);
  spec.pipe_stderr = true;
  auto tunnel = std::make_unique<proc::Subprocess>(spec);

  // Wait until the local end of the forward accepts connections.
  auto deadline = std::chrono::steady_clock::now() +
                  std::chrono::seconds(config_.connect_timeout_seconds);
  while (!port_accepting(proxy.forward_port)) {
    if (auto status = tunnel->try_wait()) {
      std::string err;
      std::uint8_t buf[4096];
      while (std::size_t n = tunnel->read_stderr(buf)) {
        err.append(reinterpret_cast<char*>(buf), n);
      }
      if (contains(err, "Host key verification failed") ||
          contains(err, "IDENTIFICATION HAS CHANGED") ||
          contains(err, "no matching host key type") ||
          contains(err, "Permission denied")) {
        throw_connect_failure(Endpoint{proxy.host, 22, ""}, 1, *status, err);
      }
      if (contains(err, "bind") && contains(err, "Address already in use")) {
        throw PortInUseError(proxy.forward_port,
                             "local forward port " +
                                 std::to_string(proxy.forward_port) +
                                 " is already in use: " + err);
      }
      throw ProxyConnectError("proxy tunnel via " + proxy.host +
                              " exited (status " + std::to_string(*status) +
                              "): " + err);
    }
    if (std::chrono::steady_clock::now() > deadline) {
      throw ProxyConnectError("proxy tunnel via " + proxy.host +
                              " did not come up in time");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }

  // Stage 2 rides the forward: the ssh client naturally consults the
  // [localhost]:<forward_port> known_hosts entry, which must carry the
  // TARGET machine's RSA key.
  Endpoint hop{"localhost", proxy.forward_port, target.user};
  stage2_verifier.require(stage2_verifier.preflight());

  std::vector<std::string> base = base_argv(hop);
  proc::SpawnSpec probe;
  probe.argv = base;
  probe.argv.insert(probe.argv.end(), {"--", hop.host, "true"});
  proc::RunResult result = proc::run(probe);
  if (result.status != 0) {
    throw_connect_failure(hop, 2, result.status, result.err);
  }
  return std::make_unique<SshConnection>(std::move(base), hop.host,
                                         Topology::Tunneled, std::move(tunnel));
}

}  // namespace rb::transport
