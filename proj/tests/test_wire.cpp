// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/wire.hpp"

#include <doctest.h>

#include <random>

#include "support/test_util.hpp"

using namespace rb;
using namespace rb::sync;

TEST_CASE("scalar byte order is big-endian") {
  Bytes out;
  put_u32(out, 0x12345678u);
  CHECK(out == Bytes{0x12, 0x34, 0x56, 0x78});

  std::size_t pos = 0;
  CHECK(get_u32(out, pos) == 0x12345678u);
  CHECK(pos == 4);

  out.clear();
  put_u64(out, 0x0102030405060708ull);
  pos = 0;
  CHECK(get_u64(out, pos) == 0x0102030405060708ull);

  out.clear();
  put_u16(out, 0xBEEF);
  pos = 0;
  CHECK(get_u16(out, pos) == 0xBEEF);
}

TEST_CASE("message encode/decode round-trips") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    FileRequestMsg req;
    req.path = "heaps/session-" + std::to_string(rng() % 100000);
    req.block_size = 64 + static_cast<std::uint32_t>(rng() % 10000);
    FileRequestMsg back = FileRequestMsg::decode(req.encode());
    CHECK(back.path == req.path);
    CHECK(back.block_size == req.block_size);

    FileEndMsg end;
    end.source_len = rng();
    end.mtime_seconds = rng() % (1ull << 33);
    for (auto& b : end.digest) b = static_cast<std::uint8_t>(rng());
    FileEndMsg end_back = FileEndMsg::decode(end.encode());
    CHECK(end_back.source_len == end.source_len);
    CHECK(end_back.mtime_seconds == end.mtime_seconds);
    CHECK(end_back.digest == end.digest);

    SigMsg sig;
    sig.weak = static_cast<std::uint32_t>(rng());
    for (auto& b : sig.strong) b = static_cast<std::uint8_t>(rng());
    SigMsg sig_back = SigMsg::decode(sig.encode());
    CHECK(sig_back.weak == sig.weak);
    CHECK(sig_back.strong == sig.strong);
  }
}

TEST_CASE("decode rejects truncation and trailing garbage") {
  FileRequestMsg req{"abc", 2048};
  Bytes good = req.encode();

  Bytes trunc(good.begin(), good.end() - 1);
  CHECK_THROWS_AS(FileRequestMsg::decode(trunc), ProtocolError);

  Bytes extra = good;
  extra.push_back(0);
  CHECK_THROWS_AS(FileRequestMsg::decode(extra), ProtocolError);
}

TEST_CASE("frames round-trip over a duplex channel") {
  auto [a, b] = test::DuplexPipe::make();
  FrameWriter writer(*a);
  FrameReader reader(*b);

  writer.write_magic();
  CHECK(reader.try_read_magic());

  writer.write_frame(FrameTag::Quit, {});
  writer.write_frame(FrameTag::Literal, as_bytes("hello"));
  a->close_write();

  auto f1 = reader.read();
  REQUIRE(f1.has_value());
  CHECK(f1->tag == FrameTag::Quit);
  CHECK(f1->payload.empty());

  auto f2 = reader.read();
  REQUIRE(f2.has_value());
  CHECK(f2->tag == FrameTag::Literal);
  CHECK(to_string(f2->payload) == "hello");

  CHECK_FALSE(reader.read().has_value());  // clean EOF at a boundary

  CHECK(writer.bytes_written() == 4 + 5 + 5 + 5);
  CHECK(reader.bytes_read() == writer.bytes_written());
}

TEST_CASE("bad magic and truncated frames are protocol errors") {
  {
    auto [a, b] = test::DuplexPipe::make();
    a->write(as_bytes("XYZ1"));
    FrameReader reader(*b);
    CHECK_THROWS_AS(reader.try_read_magic(), ProtocolError);
  }
  {
    auto [a, b] = test::DuplexPipe::make();
    Bytes partial;
    put_u32(partial, 10);
    partial.push_back(static_cast<std::uint8_t>(FrameTag::Literal));
    partial.push_back('x');  // 1 of 10 payload bytes
    a->write(partial);
    a->close_write();
    FrameReader reader(*b);
    CHECK_THROWS_AS(reader.read(), Error);
  }
  {
    auto [a, b] = test::DuplexPipe::make();
    Bytes oversized;
    put_u32(oversized, kMaxFramePayload + 1);
    oversized.push_back(static_cast<std::uint8_t>(FrameTag::Literal));
    a->write(oversized);
    FrameReader reader(*b);
    CHECK_THROWS_AS(reader.read(), ProtocolError);
  }
}
