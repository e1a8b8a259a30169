// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_HOSTKEYS_HPP
#define RB_HOSTKEYS_HPP

#include <string>
#include <string_view>
#include <vector>

#include "rb/bytes.hpp"

namespace rb::hostkeys {

enum class KeyAlgo { Rsa, Ecdsa, Ed25519, Other };

struct KeyType {
  KeyAlgo algo = KeyAlgo::Other;
  std::string name;  // wire name, e.g. "ssh-rsa"
};

KeyType key_type_from_name(std::string_view name);

struct KnownHostsEntry {
  std::string host_pattern;  // plain hostname or "[host]:port"
  KeyType type;
  std::string key_base64;
  Bytes key_blob;  // decoded key_base64
  std::string comment;
};

struct KnownHosts {
  std::vector<KnownHostsEntry> entries;
  int skipped_lines = 0;  // malformed lines, counted rather than fatal
};

enum class VerifyOutcome { Accepted, Rejected, UnknownHost, UnsupportedKeyType };

struct VerifyResult {
  VerifyOutcome outcome;
  std::string detail;

  bool accepted() const { return outcome == VerifyOutcome::Accepted; }
};

const char* outcome_name(VerifyOutcome o);

// Records which known_hosts patterns a lookup consulted; lets callers assert
// e.g. that a tunneled connection only ever checked "[localhost]:2222".
struct LookupLog {
  std::vector<std::string> consulted;
};

// Lenient line parser for the standard known_hosts format:
//   <patterns> <key-type> <base64> [comment]
// Comma-separated patterns expand to one entry each. Unparseable lines are
// skipped and counted. Hashed ("|1|...") patterns parse but never match.
KnownHosts parse_known_hosts(std::string_view text);

// One well-formed known_hosts line for the entry (no trailing newline).
std::string serialize(const KnownHostsEntry& entry);

// Standard known_hosts matching: port 22 matches plain hostname patterns,
// any other port matches only "[host]:port" patterns.
std::vector<KnownHostsEntry> lookup(const std::vector<KnownHostsEntry>& entries,
                                    std::string_view host, int port,
                                    LookupLog* log = nullptr);

// Verification policy: only RSA host keys are supported, and a key is
// accepted only when a stored RSA entry's blob equals the presented blob
// byte for byte. Never terminates abnormally.
VerifyResult verify(const std::vector<KnownHostsEntry>& stored,
                    const KeyType& presented_type, ByteSpan presented_blob);

}  // namespace rb::hostkeys

#endif
