// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_AGENT_HPP
#define RB_AGENT_HPP

#include <filesystem>

#include "rb/channel.hpp"

namespace rb::sync {

// Remote half of the sync: answers FileRequest+signatures with a
// Copy/Literal stream followed by FileEnd, serving files under root_dir.
// Loops until a Quit frame or end-of-stream. A request for a missing file
// gets an Error frame and the loop continues; protocol violations get an
// Error frame and close the channel.
void serve_agent(transport::ByteChannel& channel,
                 const std::filesystem::path& root_dir);

}  // namespace rb::sync

#endif
