// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_SHELL_HPP
#define RB_SHELL_HPP

#include <string>
#include <string_view>
#include <vector>

namespace rb::shell {

// Quotes one word for POSIX sh. Words consisting of safe characters pass
// through unquoted. A leading "~/" (or a bare "~") is kept outside the
// quotes so the remote shell still performs tilde expansion; everything
// after it is quoted verbatim.
std::string quote(std::string_view word);

// Joins argv into a single sh command line.
std::string join(const std::vector<std::string>& argv);

}  // namespace rb::shell

#endif
