// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_CHECKSUM_HPP
#define RB_CHECKSUM_HPP

#include <array>
#include <cstdint>
#include <memory>

#include "rb/bytes.hpp"

namespace rb::sync {

using Digest = std::array<std::uint8_t, 32>;

// Weak 32-bit window checksum used to find candidate block matches.
//
// For a window x_0..x_{L-1}:
//   s1 = (sum x_i) mod 65536
//   s2 = (sum (L - i) * x_i) mod 65536   (first byte weighted L)
//   value = s1 + 65536 * s2
//
// Both halves update in O(1) when the window slides one byte. The modulus
// and the weighting are normative: independent implementations of the wire
// protocol must produce identical values.
std::uint32_t weak_checksum(ByteSpan block);

struct RollingState {
  std::uint32_t s1 = 0;
  std::uint32_t s2 = 0;

  std::uint32_t value() const { return s1 | (s2 << 16); }
};

RollingState weak_init(ByteSpan block);

// Slide a window of length `len` one byte: drop `out` from the front, append
// `in` at the back.
RollingState roll(RollingState state, std::uint8_t out, std::uint8_t in,
                  std::uint64_t len);

// Strong 256-bit digest (SHA-256).
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(ByteSpan data);
  Digest finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Digest sha256(ByteSpan data);

std::string hex_digest(const Digest& d);

}  // namespace rb::sync

#endif
