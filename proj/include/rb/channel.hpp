// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_CHANNEL_HPP
#define RB_CHANNEL_HPP

#include <cstddef>
#include <span>

#include "rb/bytes.hpp"

namespace rb::transport {

// Bidirectional ordered reliable byte stream. A channel is single-consumer
// for reads and single-producer for writes; reads return 0 at end-of-stream
// rather than throwing when the peer closes.
class ByteChannel {
 public:
  virtual ~ByteChannel() = default;

  // Returns the number of bytes read, 0 at end-of-stream.
  virtual std::size_t read(std::span<std::uint8_t> out) = 0;

  virtual void write(ByteSpan data) = 0;

  // Signals end-of-stream to the peer; further writes are invalid.
  virtual void close_write() = 0;
};

// Reads exactly out.size() bytes. Returns false if end-of-stream occurs
// before the first byte; throws rb::Error on a truncated tail.
bool read_exact(ByteChannel& ch, std::span<std::uint8_t> out);

}  // namespace rb::transport

#endif
