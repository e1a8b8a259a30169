// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/checksum.hpp"

#include <doctest.h>

#include <random>

#include "support/test_util.hpp"

using namespace rb;
using namespace rb::sync;

namespace {

// Independent oracle: direct evaluation of the defining formula,
// s1 = sum x_i mod 2^16, s2 = sum (L - i) * x_i mod 2^16.
std::uint32_t scratch_weak(ByteSpan block) {
  std::uint64_t s1 = 0;
  std::uint64_t s2 = 0;
  const std::uint64_t len = block.size();
  for (std::uint64_t i = 0; i < len; ++i) {
    s1 += block[i];
    s2 += (len - i) * block[i];
  }
  return static_cast<std::uint32_t>((s1 % 65536) + 65536 * (s2 % 65536));
}

}  // namespace

TEST_CASE("weak checksum worked values") {
  // [1,2,3]: s1 = 6, s2 = 3*1 + 2*2 + 1*3 = 10, value = 6 + 65536*10.
  const Bytes a{1, 2, 3};
  CHECK(scratch_weak(a) == 655366u);
  CHECK(weak_checksum(a) == 655366u);

  // [2,3,4]: s1 = 9, s2 = 3*2 + 2*3 + 1*4 = 16, value = 9 + 65536*16.
  const Bytes b{2, 3, 4};
  CHECK(scratch_weak(b) == 1048585u);
  CHECK(weak_checksum(b) == 1048585u);

  const Bytes zero{0};
  CHECK(weak_checksum(zero) == 0u);
}

TEST_CASE("roll matches the worked window slide") {
  const Bytes window{1, 2, 3};
  RollingState st = weak_init(window);
  CHECK(st.value() == 655366u);

  // Slide [1,2,3] -> [2,3,4]: s1' = 9, s2' = 10 - 3*1 + 9 = 16.
  RollingState next = roll(st, 1, 4, 3);
  CHECK(next.s1 == 9u);
  CHECK(next.s2 == 16u);
  CHECK(next.value() == 1048585u);
  CHECK(next.value() == weak_checksum(Bytes{2, 3, 4}));
}

TEST_CASE("roll with identical byte is the identity") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 50; ++i) {
    Bytes window = test::random_bytes(rng, 64);
    RollingState st = weak_init(window);
    RollingState same = roll(st, window[0], window[0], window.size());
    CHECK(same.s1 == st.s1);
    CHECK(same.s2 == st.s2);
  }
}

TEST_CASE("iterated roll equals scratch recomputation at every offset") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t len = 256 + static_cast<std::size_t>(rng() % 2048);
    const std::size_t window = 16 + static_cast<std::size_t>(rng() % 128);
    Bytes buf = test::random_bytes(rng, len);

    RollingState st = weak_init(ByteSpan(buf.data(), window));
    CHECK(st.value() == scratch_weak(ByteSpan(buf.data(), window)));
    for (std::size_t off = 1; off + window <= buf.size(); ++off) {
      st = roll(st, buf[off - 1], buf[off + window - 1], window);
      CHECK(st.value() == scratch_weak(ByteSpan(buf.data() + off, window)));
    }
  }
}

TEST_CASE("sha256 known vector") {
  // SHA-256("abc"), the classic test vector.
  Digest d = sha256(as_bytes("abc"));
  CHECK(hex_digest(d) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(hex_digest(sha256({})) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}
