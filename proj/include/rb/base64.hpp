// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_BASE64_HPP
#define RB_BASE64_HPP

#include <optional>
#include <string>
#include <string_view>

#include "rb/bytes.hpp"

namespace rb {

// Strict base64 (RFC 4648 alphabet, optional '=' padding). Returns nullopt on
// any character outside the alphabet or a malformed tail group.
std::optional<Bytes> base64_decode(std::string_view text);

std::string base64_encode(ByteSpan data);

}  // namespace rb

#endif
