// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_WIRE_HPP
#define RB_WIRE_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "rb/bytes.hpp"
#include "rb/channel.hpp"
#include "rb/checksum.hpp"

/*
  Sync wire protocol (big-endian throughout):

    magic "RBS1" (4 bytes) sent by each side when the stream opens, then
    length-prefixed frames: u32 payload_len, u8 tag, payload.

    0x01 FileRequest  u16 path_len, path utf8, u32 block_size
    0x02 SigHeader    u64 basis_len, u64 sig_count
    0x03 Sig          u32 weak, 32-byte strong          (repeated sig_count times)
    0x10 Copy         u64 index
    0x11 Literal      raw bytes (at most 64 KiB per frame)
    0x12 FileEnd      u64 source_len, u64 mtime_seconds, 32-byte digest
    0x7E Error        utf8 reason
    0x7F Quit         (empty)

  The receiver sends FileRequest + SigHeader + Sigs; the sender replies with
  a Copy/Literal stream followed by FileEnd, and loops until Quit.
*/

namespace rb::sync {

constexpr std::array<std::uint8_t, 4> kMagic{0x52, 0x42, 0x53, 0x31};  // "RBS1"

constexpr std::size_t kLiteralChunkMax = 64 * 1024;
constexpr std::size_t kMaxFramePayload = 128 * 1024;

enum class FrameTag : std::uint8_t {
  FileRequest = 0x01,
  SigHeader = 0x02,
  Sig = 0x03,
  Copy = 0x10,
  Literal = 0x11,
  FileEnd = 0x12,
  Error = 0x7E,
  Quit = 0x7F,
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

struct Frame {
  FrameTag tag;
  Bytes payload;
};

// Big-endian scalar helpers.
void put_u16(Bytes& out, std::uint16_t v);
void put_u32(Bytes& out, std::uint32_t v);
void put_u64(Bytes& out, std::uint64_t v);

// Cursor-style reads; throw ProtocolError past the end of the payload.
std::uint16_t get_u16(ByteSpan in, std::size_t& pos);
std::uint32_t get_u32(ByteSpan in, std::size_t& pos);
std::uint64_t get_u64(ByteSpan in, std::size_t& pos);

struct FileRequestMsg {
  std::string path;
  std::uint32_t block_size = 0;

  Bytes encode() const;
  static FileRequestMsg decode(ByteSpan payload);
};

struct SigHeaderMsg {
  std::uint64_t basis_len = 0;
  std::uint64_t sig_count = 0;

  Bytes encode() const;
  static SigHeaderMsg decode(ByteSpan payload);
};

struct SigMsg {
  std::uint32_t weak = 0;
  Digest strong{};

  Bytes encode() const;
  static SigMsg decode(ByteSpan payload);
};

struct FileEndMsg {
  std::uint64_t source_len = 0;
  std::uint64_t mtime_seconds = 0;
  Digest digest{};

  Bytes encode() const;
  static FileEndMsg decode(ByteSpan payload);
};

class FrameWriter {
 public:
  explicit FrameWriter(transport::ByteChannel& ch) : ch_(ch) {}

  void write_magic();
  void write_frame(FrameTag tag, ByteSpan payload);

  std::uint64_t bytes_written() const { return bytes_; }

 private:
  transport::ByteChannel& ch_;
  std::uint64_t bytes_ = 0;
};

class FrameReader {
 public:
  explicit FrameReader(transport::ByteChannel& ch) : ch_(ch) {}

  // Returns false at a clean end-of-stream (no magic byte arrived at all).
  bool try_read_magic();

  // nullopt at a clean end-of-stream on a frame boundary; ProtocolError on a
  // truncated or oversized frame.
  std::optional<Frame> read();

  std::uint64_t bytes_read() const { return bytes_; }

 private:
  transport::ByteChannel& ch_;
  std::uint64_t bytes_ = 0;
};

}  // namespace rb::sync

#endif
