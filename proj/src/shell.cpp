// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/shell.hpp"

namespace rb::shell {

namespace {

bool safe_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.' ||
         c == '/' || c == ':' || c == ',' || c == '=' || c == '+' || c == '%';
}

std::string single_quote(std::string_view word) {
  std::string out = "'";
  for (char c : word) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

}  // namespace

std::string quote(std::string_view word) {
  if (word == "~") return "~";
  std::string prefix;
  if (word.size() >= 2 && word[0] == '~' && word[1] == '/') {
    prefix = "~/";
    word.remove_prefix(2);
  }

  if (word.empty() && prefix.empty()) return "''";

  bool all_safe = true;
  for (char c : word) {
    if (!safe_char(c)) {
      all_safe = false;
      break;
    }
  }
  if (all_safe && (prefix.empty() ? word[0] != '~' : true)) {
    return prefix + std::string(word);
  }
  return prefix + single_quote(word);
}

std::string join(const std::vector<std::string>& argv) {
  std::string out;
  for (const auto& word : argv) {
    if (!out.empty()) out.push_back(' ');
    out += quote(word);
  }
  return out;
}

}  // namespace rb::shell
