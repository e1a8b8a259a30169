// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/checksum.hpp"

#include <openssl/evp.h>

namespace rb::sync {

namespace {

inline std::uint32_t mod16(std::int64_t v) {
  v %= 65536;
  if (v < 0) v += 65536;
  return static_cast<std::uint32_t>(v);
}

}  // namespace

RollingState weak_init(ByteSpan block) {
  // s2 accumulates prefix sums: after the loop it equals sum (L - i) * x_i.
  RollingState st;
  for (std::uint8_t b : block) {
    st.s1 = (st.s1 + b) & 0xFFFF;
    st.s2 = (st.s2 + st.s1) & 0xFFFF;
  }
  return st;
}

std::uint32_t weak_checksum(ByteSpan block) { return weak_init(block).value(); }

RollingState roll(RollingState state, std::uint8_t out, std::uint8_t in,
                  std::uint64_t len) {
  RollingState next;
  next.s1 = mod16(static_cast<std::int64_t>(state.s1) - out + in);
  next.s2 = mod16(static_cast<std::int64_t>(state.s2) -
                  static_cast<std::int64_t>(len) * out + next.s1);
  return next;
}

struct Sha256::Impl {
  EVP_MD_CTX* ctx = nullptr;
};

Sha256::Sha256() : impl_(std::make_unique<Impl>()) {
  impl_->ctx = EVP_MD_CTX_new();
  if (impl_->ctx == nullptr ||
      EVP_DigestInit_ex(impl_->ctx, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 context initialization failed");
  }
}

Sha256::~Sha256() {
  if (impl_ && impl_->ctx != nullptr) EVP_MD_CTX_free(impl_->ctx);
}

void Sha256::update(ByteSpan data) {
  if (EVP_DigestUpdate(impl_->ctx, data.data(), data.size()) != 1) {
    throw Error("SHA-256 update failed");
  }
}

Digest Sha256::finish() {
  Digest out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(impl_->ctx, out.data(), &len) != 1 ||
      len != out.size()) {
    throw Error("SHA-256 finalization failed");
  }
  return out;
}

Digest sha256(ByteSpan data) {
  Sha256 h;
  h.update(data);
  return h.finish();
}

std::string hex_digest(const Digest& d) {
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (std::uint8_t b : d) {
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 0xF]);
  }
  return out;
}

}  // namespace rb::sync
