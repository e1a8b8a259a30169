// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/hostkeys.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "rb/base64.hpp"

namespace rb::hostkeys {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::vector<std::string> split_ws(std::string_view line, std::size_t max_fields) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (i < line.size() && fields.size() < max_fields) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    if (fields.size() == max_fields - 1) {
      // Last field takes the rest of the line (the free-form comment).
      std::size_t end = line.size();
      while (end > i && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
      fields.emplace_back(line.substr(i, end - i));
      break;
    }
    std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    fields.emplace_back(line.substr(start, i - start));
  }
  return fields;
}

}  // namespace

KeyType key_type_from_name(std::string_view name) {
  KeyType t;
  t.name = std::string(name);
  if (name == "ssh-rsa") {
    t.algo = KeyAlgo::Rsa;
  } else if (name.rfind("ecdsa-sha2-", 0) == 0) {
    t.algo = KeyAlgo::Ecdsa;
  } else if (name == "ssh-ed25519") {
    t.algo = KeyAlgo::Ed25519;
  } else {
    t.algo = KeyAlgo::Other;
  }
  return t;
}

const char* outcome_name(VerifyOutcome o) {
  switch (o) {
    case VerifyOutcome::Accepted: return "Accepted";
    case VerifyOutcome::Rejected: return "Rejected";
    case VerifyOutcome::UnknownHost: return "UnknownHost";
    case VerifyOutcome::UnsupportedKeyType: return "UnsupportedKeyType";
  }
  return "?";
}

KnownHosts parse_known_hosts(std::string_view text) {
  KnownHosts result;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(
        pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
    pos = (eol == std::string_view::npos) ? text.size() + 1 : eol + 1;

    // Trim and ignore blanks/comments.
    std::size_t b = 0, e = line.size();
    while (b < e && std::isspace(static_cast<unsigned char>(line[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(line[e - 1]))) --e;
    line = line.substr(b, e - b);
    if (line.empty() || line[0] == '#') continue;

    if (line[0] == '@') {
      // Marker lines (@revoked, @cert-authority) are out of scope.
      ++result.skipped_lines;
      continue;
    }

    auto fields = split_ws(line, 4);
    if (fields.size() < 3) {
      ++result.skipped_lines;
      continue;
    }
    auto blob = base64_decode(fields[2]);
    if (!blob) {
      ++result.skipped_lines;
      continue;
    }
    KeyType type = key_type_from_name(fields[1]);
    std::string comment = fields.size() > 3 ? fields[3] : "";

    // Comma-separated patterns expand to one entry per pattern.
    std::string_view patterns = fields[0];
    std::size_t p = 0;
    while (p <= patterns.size()) {
      std::size_t comma = patterns.find(',', p);
      std::string_view pat = patterns.substr(
          p, comma == std::string_view::npos ? patterns.size() - p : comma - p);
      p = (comma == std::string_view::npos) ? patterns.size() + 1 : comma + 1;
      if (pat.empty()) continue;
      result.entries.push_back(KnownHostsEntry{
          std::string(pat), type, fields[2], *blob, comment});
    }
  }
  return result;
}

std::string serialize(const KnownHostsEntry& entry) {
  std::ostringstream out;
  out << entry.host_pattern << ' ' << entry.type.name << ' ' << entry.key_base64;
  if (!entry.comment.empty()) out << ' ' << entry.comment;
  return out.str();
}

std::vector<KnownHostsEntry> lookup(const std::vector<KnownHostsEntry>& entries,
                                    std::string_view host, int port,
                                    LookupLog* log) {
  std::string wanted;
  if (port == 22) {
    wanted = lower(host);
  } else {
    wanted = "[" + lower(host) + "]:" + std::to_string(port);
  }
  if (log != nullptr) log->consulted.push_back(wanted);

  std::vector<KnownHostsEntry> found;
  for (const auto& e : entries) {
    if (e.host_pattern.starts_with("|")) continue;  // hashed: never matches
    if (lower(e.host_pattern) == wanted) found.push_back(e);
  }
  return found;
}

VerifyResult verify(const std::vector<KnownHostsEntry>& stored,
                    const KeyType& presented_type, ByteSpan presented_blob) {
  if (stored.empty()) {
    return {VerifyOutcome::UnknownHost,
            "host is not present in known_hosts; add an RSA host key for it "
            "(e.g. ssh-keyscan -t rsa <host> >> ~/.ssh/known_hosts)"};
  }
  if (presented_type.algo != KeyAlgo::Rsa) {
    return {VerifyOutcome::UnsupportedKeyType,
            "host presented a " + presented_type.name +
                " key, but only RSA host keys are supported; install an RSA "
                "host key for this host (e.g. ssh-keyscan -t rsa <host> >> "
                "~/.ssh/known_hosts)"};
  }
  for (const auto& e : stored) {
    if (e.type.algo != KeyAlgo::Rsa) continue;
    if (e.key_blob.size() == presented_blob.size() &&
        std::equal(e.key_blob.begin(), e.key_blob.end(), presented_blob.begin())) {
      return {VerifyOutcome::Accepted, ""};
    }
  }
  return {VerifyOutcome::Rejected,
          "presented RSA host key does not match any stored key for this host"};
}

}  // namespace rb::hostkeys
