// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_SESSIONS_HPP
#define RB_SESSIONS_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rb/bytes.hpp"

namespace rb::sessions {

// A named build unit with at most one parent; building it requires all of
// its ancestors, and its artifact is a single heap image named after it.
struct Session {
  std::string name;
  std::optional<std::string> parent;
  std::filesystem::path dir;  // catalog directory it was declared in
};

struct SessionCatalog {
  std::map<std::string, Session> sessions;
  std::vector<std::filesystem::path> root_dirs;

  bool contains(const std::string& name) const {
    return sessions.find(name) != sessions.end();
  }
};

// Ancestors-first (topological) list of session names, deduplicated.
struct SyncSet {
  std::vector<std::string> sessions;

  bool contains(const std::string& name) const;
};

enum class CatalogErrorKind {
  MissingCatalog,
  DuplicateSession,
  UnknownParent,
  CycleDetected,
  SyntaxError,
  UnknownSession,
};

class CatalogError : public Error {
 public:
  CatalogError(CatalogErrorKind kind, std::string message,
               std::vector<std::string> names = {},
               std::filesystem::path file = {}, int line = 0)
      : Error(std::move(message)),
        kind(kind),
        names(std::move(names)),
        file(std::move(file)),
        line(line) {}

  CatalogErrorKind kind;
  std::vector<std::string> names;
  std::filesystem::path file;
  int line;
};

/*
  CATALOG file grammar (UTF-8, one declaration per line, '#' comments,
  blank lines ignored, tokens separated by arbitrary whitespace):

    session <name>              root session
    session <name> = <parent>   child session

  Names match [A-Za-z0-9_.-]+.
*/

bool valid_session_name(std::string_view name);

// Loads <dir>/CATALOG from every root dir. Later directories may extend the
// catalog but may not redeclare an existing session name. Validates that all
// parent edges resolve and form a forest.
SessionCatalog parse_catalog(const std::vector<std::filesystem::path>& root_dirs);

// The chain root..name inclusive (the session itself is a member).
SyncSet ancestors(const SessionCatalog& catalog, const std::string& name);

// Default mode: union of ancestors over all targets, ancestors first.
// Incremental mode: exactly newly_built intersected with the catalog,
// topologically ordered.
SyncSet sync_set(const SessionCatalog& catalog,
                 const std::vector<std::string>& targets, bool incremental,
                 const std::set<std::string>& newly_built);

}  // namespace rb::sessions

#endif
