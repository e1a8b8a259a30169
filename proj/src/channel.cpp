// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/channel.hpp"

namespace rb::transport {

bool read_exact(ByteChannel& ch, std::span<std::uint8_t> out) {
  std::size_t got = 0;
  while (got < out.size()) {
    std::size_t n = ch.read(out.subspan(got));
    if (n == 0) {
      if (got == 0) return false;
      throw Error("stream ended mid-read");
    }
    got += n;
  }
  return true;
}

}  // namespace rb::transport
