// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/wire.hpp"

#include <cstring>

namespace rb::sync {

void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
}

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) {
    out.push_back(static_cast<std::uint8_t>((v >> (i * 8)) & 0xFF));
  }
}

void put_u64(Bytes& out, std::uint64_t v) {
  for (int i = 7; i >= 0; --i) {
    out.push_back(static_cast<std::uint8_t>((v >> (i * 8)) & 0xFF));
  }
}

namespace {

void need(ByteSpan in, std::size_t pos, std::size_t n) {
  if (pos + n > in.size()) throw ProtocolError("truncated frame payload");
}

}  // namespace

std::uint16_t get_u16(ByteSpan in, std::size_t& pos) {
  need(in, pos, 2);
  std::uint16_t v = static_cast<std::uint16_t>(
      (static_cast<std::uint16_t>(in[pos]) << 8) | in[pos + 1]);
  pos += 2;
  return v;
}

std::uint32_t get_u32(ByteSpan in, std::size_t& pos) {
  need(in, pos, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | in[pos + i];
  pos += 4;
  return v;
}

std::uint64_t get_u64(ByteSpan in, std::size_t& pos) {
  need(in, pos, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[pos + i];
  pos += 8;
  return v;
}

Bytes FileRequestMsg::encode() const {
  if (path.size() > 0xFFFF) throw ProtocolError("path too long");
  Bytes out;
  put_u16(out, static_cast<std::uint16_t>(path.size()));
  out.insert(out.end(), path.begin(), path.end());
  put_u32(out, block_size);
  return out;
}

FileRequestMsg FileRequestMsg::decode(ByteSpan payload) {
  std::size_t pos = 0;
  FileRequestMsg msg;
  std::uint16_t len = get_u16(payload, pos);
  need(payload, pos, len);
  msg.path.assign(reinterpret_cast<const char*>(payload.data()) + pos, len);
  pos += len;
  msg.block_size = get_u32(payload, pos);
  if (pos != payload.size()) throw ProtocolError("trailing bytes in FileRequest");
  return msg;
}

Bytes SigHeaderMsg::encode() const {
  Bytes out;
  put_u64(out, basis_len);
  put_u64(out, sig_count);
  return out;
}

SigHeaderMsg SigHeaderMsg::decode(ByteSpan payload) {
  std::size_t pos = 0;
  SigHeaderMsg msg;
  msg.basis_len = get_u64(payload, pos);
  msg.sig_count = get_u64(payload, pos);
  if (pos != payload.size()) throw ProtocolError("trailing bytes in SigHeader");
  return msg;
}

Bytes SigMsg::encode() const {
  Bytes out;
  put_u32(out, weak);
  out.insert(out.end(), strong.begin(), strong.end());
  return out;
}

SigMsg SigMsg::decode(ByteSpan payload) {
  std::size_t pos = 0;
  SigMsg msg;
  msg.weak = get_u32(payload, pos);
  need(payload, pos, msg.strong.size());
  std::memcpy(msg.strong.data(), payload.data() + pos, msg.strong.size());
  pos += msg.strong.size();
  if (pos != payload.size()) throw ProtocolError("trailing bytes in Sig");
  return msg;
}

Bytes FileEndMsg::encode() const {
  Bytes out;
  put_u64(out, source_len);
  put_u64(out, mtime_seconds);
  out.insert(out.end(), digest.begin(), digest.end());
  return out;
}

FileEndMsg FileEndMsg::decode(ByteSpan payload) {
  std::size_t pos = 0;
  FileEndMsg msg;
  msg.source_len = get_u64(payload, pos);
  msg.mtime_seconds = get_u64(payload, pos);
  need(payload, pos, msg.digest.size());
  std::memcpy(msg.digest.data(), payload.data() + pos, msg.digest.size());
  pos += msg.digest.size();
  if (pos != payload.size()) throw ProtocolError("trailing bytes in FileEnd");
  return msg;
}

void FrameWriter::write_magic() {
  ch_.write(ByteSpan{kMagic.data(), kMagic.size()});
  bytes_ += kMagic.size();
}

void FrameWriter::write_frame(FrameTag tag, ByteSpan payload) {
  if (payload.size() > kMaxFramePayload) {
    throw ProtocolError("frame payload exceeds limit");
  }
  Bytes header;
  put_u32(header, static_cast<std::uint32_t>(payload.size()));
  header.push_back(static_cast<std::uint8_t>(tag));
  ch_.write(header);
  if (!payload.empty()) ch_.write(payload);
  bytes_ += header.size() + payload.size();
}

bool FrameReader::try_read_magic() {
  std::array<std::uint8_t, 4> got{};
  if (!transport::read_exact(ch_, got)) return false;
  bytes_ += got.size();
  if (got != kMagic) throw ProtocolError("bad protocol magic");
  return true;
}

std::optional<Frame> FrameReader::read() {
  std::array<std::uint8_t, 5> header{};
  if (!transport::read_exact(ch_, header)) return std::nullopt;
  bytes_ += header.size();
  std::uint32_t len = 0;
  for (int i = 0; i < 4; ++i) len = (len << 8) | header[i];
  if (len > kMaxFramePayload) throw ProtocolError("frame payload exceeds limit");

  Frame frame;
  frame.tag = static_cast<FrameTag>(header[4]);
  frame.payload.resize(len);
  if (len > 0 && !transport::read_exact(ch_, frame.payload)) {
    throw ProtocolError("stream ended inside a frame");
  }
  bytes_ += len;
  return frame;
}

}  // namespace rb::sync
