// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/hostkeys.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

#include "rb/base64.hpp"
#include "support/test_util.hpp"

using namespace rb;
using namespace rb::hostkeys;

namespace {

std::string line_for(const std::string& pattern, const std::string& type,
                     const std::string& blob_text,
                     const std::string& comment = "") {
  std::string line = pattern + " " + type + " " +
                     base64_encode(as_bytes(blob_text));
  if (!comment.empty()) line += " " + comment;
  return line;
}

}  // namespace

TEST_CASE("empty file parses to nothing") {
  KnownHosts kh = parse_known_hosts("");
  CHECK(kh.entries.empty());
  CHECK(kh.skipped_lines == 0);
}

TEST_CASE("single plain entry") {
  KnownHosts kh = parse_known_hosts(line_for("example.org", "ssh-rsa", "KEY1"));
  REQUIRE(kh.entries.size() == 1);
  CHECK(kh.entries[0].host_pattern == "example.org");
  CHECK(kh.entries[0].type.algo == KeyAlgo::Rsa);
  CHECK(kh.entries[0].key_blob == Bytes{'K', 'E', 'Y', '1'});
}

TEST_CASE("bracketed port pattern is preserved verbatim") {
  KnownHosts kh =
      parse_known_hosts(line_for("[localhost]:2222", "ssh-rsa", "KEY1"));
  REQUIRE(kh.entries.size() == 1);
  CHECK(kh.entries[0].host_pattern == "[localhost]:2222");
}

TEST_CASE("comma-separated patterns expand to multiple entries") {
  KnownHosts kh =
      parse_known_hosts(line_for("a.example,b.example", "ssh-rsa", "K"));
  REQUIRE(kh.entries.size() == 2);
  CHECK(kh.entries[0].host_pattern == "a.example");
  CHECK(kh.entries[1].host_pattern == "b.example");
  CHECK(kh.entries[0].key_blob == kh.entries[1].key_blob);
}

TEST_CASE("comments, blanks and malformed lines") {
  std::ostringstream text;
  text << "# a comment\n"
       << "\n"
       << line_for("good.example", "ssh-rsa", "K") << "\n"
       << "only-two fields\n"
       << "bad.example ssh-rsa not!!base64\n"
       << "@revoked revoked.example ssh-rsa " << base64_encode(as_bytes("K"))
       << "\n";
  KnownHosts kh = parse_known_hosts(text.str());
  REQUIRE(kh.entries.size() == 1);
  CHECK(kh.entries[0].host_pattern == "good.example");
  CHECK(kh.skipped_lines == 3);
}

TEST_CASE("key types map from wire names") {
  CHECK(key_type_from_name("ssh-rsa").algo == KeyAlgo::Rsa);
  CHECK(key_type_from_name("ecdsa-sha2-nistp256").algo == KeyAlgo::Ecdsa);
  CHECK(key_type_from_name("ecdsa-sha2-nistp521").algo == KeyAlgo::Ecdsa);
  CHECK(key_type_from_name("ssh-ed25519").algo == KeyAlgo::Ed25519);
  CHECK(key_type_from_name("ssh-dss").algo == KeyAlgo::Other);
}

TEST_CASE("lookup follows the port convention") {
  KnownHosts kh = parse_known_hosts(
      line_for("example.org", "ssh-rsa", "K1") + "\n" +
      line_for("[example.org]:2222", "ssh-rsa", "K2") + "\n" +
      line_for("[localhost]:2222", "ssh-rsa", "K3"));

  auto plain = lookup(kh.entries, "example.org", 22);
  REQUIRE(plain.size() == 1);
  CHECK(plain[0].key_blob == Bytes{'K', '1'});

  // Port 2222 must not see the plain entry...
  auto ported = lookup(kh.entries, "example.org", 2222);
  REQUIRE(ported.size() == 1);
  CHECK(ported[0].key_blob == Bytes{'K', '2'});

  // ...and port 22 must not see bracketed entries.
  CHECK(lookup(kh.entries, "localhost", 22).empty());

  auto tunneled = lookup(kh.entries, "localhost", 2222);
  REQUIRE(tunneled.size() == 1);
  CHECK(tunneled[0].key_blob == Bytes{'K', '3'});
}

TEST_CASE("lookup with no entry for the port is empty") {
  KnownHosts kh = parse_known_hosts(line_for("example.org", "ssh-rsa", "K"));
  CHECK(lookup(kh.entries, "example.org", 2222).empty());
  CHECK(lookup(kh.entries, "other.example", 22).empty());
}

TEST_CASE("hashed patterns never match") {
  std::string hashed = "|1|salt|hash ssh-rsa " + base64_encode(as_bytes("K"));
  KnownHosts kh = parse_known_hosts(hashed);
  REQUIRE(kh.entries.size() == 1);
  CHECK(lookup(kh.entries, "anything.example", 22).empty());
}

TEST_CASE("lookup records consulted patterns") {
  KnownHosts kh = parse_known_hosts(line_for("example.org", "ssh-rsa", "K"));
  LookupLog log;
  lookup(kh.entries, "example.org", 22, &log);
  lookup(kh.entries, "localhost", 2222, &log);
  REQUIRE(log.consulted.size() == 2);
  CHECK(log.consulted[0] == "example.org");
  CHECK(log.consulted[1] == "[localhost]:2222");
}

TEST_CASE("verify outcomes") {
  Bytes key_x{'X', '1'};
  Bytes key_y{'Y', '2'};
  auto rsa_x = test::make_entry("h", "ssh-rsa", key_x);
  auto ecdsa_y = test::make_entry("h", "ecdsa-sha2-nistp256", key_y);

  SUBCASE("empty stored list is an unknown host") {
    VerifyResult r = verify({}, key_type_from_name("ssh-rsa"), key_x);
    CHECK(r.outcome == VerifyOutcome::UnknownHost);
  }
  SUBCASE("exact RSA match is accepted") {
    VerifyResult r = verify({rsa_x}, key_type_from_name("ssh-rsa"), key_x);
    CHECK(r.outcome == VerifyOutcome::Accepted);
  }
  SUBCASE("non-RSA presented key is unsupported, with the RSA remedy") {
    VerifyResult r =
        verify({rsa_x}, key_type_from_name("ecdsa-sha2-nistp256"), key_y);
    CHECK(r.outcome == VerifyOutcome::UnsupportedKeyType);
    CHECK(r.detail.find("RSA") != std::string::npos);
    CHECK(r.detail.find("ssh-keyscan -t rsa") != std::string::npos);
  }
  SUBCASE("differing RSA blob is rejected") {
    VerifyResult r = verify({rsa_x}, key_type_from_name("ssh-rsa"), key_y);
    CHECK(r.outcome == VerifyOutcome::Rejected);
  }
  SUBCASE("stored non-RSA entries cannot accept an RSA key") {
    VerifyResult r = verify({ecdsa_y}, key_type_from_name("ssh-rsa"), key_y);
    CHECK(r.outcome == VerifyOutcome::Rejected);
  }
}

TEST_CASE("verify never accepts without a byte-equal stored blob") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<KnownHostsEntry> stored;
    int n = static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) {
      const char* type = (rng() % 2 == 0) ? "ssh-rsa" : "ecdsa-sha2-nistp256";
      stored.push_back(test::make_entry("h", type, test::random_bytes(rng, 8)));
    }
    Bytes presented = test::random_bytes(rng, 8);
    const char* ptype = (rng() % 3 == 0) ? "ssh-ed25519" : "ssh-rsa";
    VerifyResult r = verify(stored, key_type_from_name(ptype), presented);
    if (r.outcome == VerifyOutcome::Accepted) {
      bool match = false;
      for (const auto& e : stored) {
        if (e.key_blob == presented) match = true;
      }
      CHECK(match);
    }
  }
}

TEST_CASE("parse then re-serialize preserves content") {
  std::vector<std::string> lines = {
      line_for("example.org", "ssh-rsa", "KEY1"),
      line_for("[localhost]:2222", "ssh-rsa", "KEY2", "a comment here"),
      line_for("a.example", "ecdsa-sha2-nistp256", "KEY3"),
  };
  std::string text;
  for (const auto& l : lines) text += l + "\n";

  KnownHosts kh = parse_known_hosts(text);
  REQUIRE(kh.entries.size() == lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    // Content-preserving modulo whitespace: compare token streams.
    std::istringstream expect(lines[i]);
    std::istringstream got(serialize(kh.entries[i]));
    std::string a, b;
    while (expect >> a) {
      REQUIRE((got >> b));
      CHECK(a == b);
    }
    CHECK_FALSE((got >> b));
  }
}
