// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/transport.hpp"

#include <sstream>

namespace rb::transport {

namespace {

std::string stage_label(int stage) {
  switch (stage) {
    case 1: return "stage 1 (proxy hop)";
    case 2: return "stage 2 (tunneled target)";
    default: return "connection";
  }
}

}  // namespace

hostkeys::VerifyResult HostKeyVerifier::check(const hostkeys::KeyType& type,
                                              ByteSpan blob) const {
  auto stored = hostkeys::lookup(entries_, host_, port_, log_);
  return hostkeys::verify(stored, type, blob);
}

hostkeys::VerifyResult HostKeyVerifier::preflight() const {
  auto stored = hostkeys::lookup(entries_, host_, port_, log_);
  if (stored.empty()) {
    return hostkeys::verify(stored, hostkeys::key_type_from_name("ssh-rsa"), {});
  }
  bool has_rsa = false;
  for (const auto& e : stored) {
    if (e.type.algo == hostkeys::KeyAlgo::Rsa) {
      has_rsa = true;
      break;
    }
  }
  if (!has_rsa) {
    return {hostkeys::VerifyOutcome::UnsupportedKeyType,
            "known_hosts has no RSA key for " + host_ +
                "; only RSA host keys are supported — install one (e.g. "
                "ssh-keyscan -t rsa " + host_ + " >> ~/.ssh/known_hosts)"};
  }
  return {hostkeys::VerifyOutcome::Accepted, ""};
}

void HostKeyVerifier::require(const hostkeys::VerifyResult& result) const {
  if (result.accepted()) return;
  std::ostringstream msg;
  msg << "host key verification failed at " << stage_label(stage_) << " for "
      << host_;
  if (port_ != 22) msg << " (known_hosts pattern [" << host_ << "]:" << port_ << ")";
  msg << ": " << hostkeys::outcome_name(result.outcome);
  if (!result.detail.empty()) msg << " — " << result.detail;
  throw HostKeyError(result, stage_, msg.str());
}

std::unique_ptr<Connection> connect(Transport& transport,
                                    const Endpoint& endpoint,
                                    const hostkeys::KnownHosts& known_hosts,
                                    hostkeys::LookupLog* log) {
  HostKeyVerifier verifier(known_hosts.entries, endpoint.host, endpoint.port,
                           0, log);
  return transport.dial(endpoint, verifier);
}

std::unique_ptr<Connection> connect_via_proxy(
    Transport& transport, const ProxySpec& proxy, const Endpoint& target,
    const hostkeys::KnownHosts& known_hosts, hostkeys::LookupLog* log) {
  HostKeyVerifier proxy_verifier(known_hosts.entries, proxy.host, 22, 1, log);
  // The tunneled session terminates at the target, so the key stored under
  // [localhost]:<forward_port> must be the target machine's key.
  HostKeyVerifier stage2_verifier(known_hosts.entries, "localhost",
                                  proxy.forward_port, 2, log);
  return transport.dial_via_tunnel(proxy, target, proxy_verifier,
                                   stage2_verifier);
}

}  // namespace rb::transport
