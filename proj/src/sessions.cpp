// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/sessions.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace rb::sessions {

namespace fs = std::filesystem;

bool SyncSet::contains(const std::string& name) const {
  return std::find(sessions.begin(), sessions.end(), name) != sessions.end();
}

bool valid_session_name(std::string_view name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '.' || c == '-';
  });
}

namespace {

std::vector<std::string> tokenize(std::string_view line) {
  // Strip comment; '#' cannot occur inside a name.
  std::size_t hash = line.find('#');
  if (hash != std::string_view::npos) line = line.substr(0, hash);

  std::vector<std::string> tokens;
  std::istringstream in{std::string(line)};
  std::string tok;
  while (in >> tok) tokens.push_back(tok);
  return tokens;
}

[[noreturn]] void syntax_error(const fs::path& file, int line_no,
                               const std::string& what) {
  std::ostringstream msg;
  msg << file.string() << ":" << line_no << ": " << what;
  throw CatalogError(CatalogErrorKind::SyntaxError, msg.str(), {}, file, line_no);
}

void load_catalog_file(const fs::path& dir, SessionCatalog& catalog) {
  fs::path file = dir / "CATALOG";
  std::ifstream in(file);
  if (!in.is_open()) {
    throw CatalogError(CatalogErrorKind::MissingCatalog,
                       "no CATALOG file in session directory " + dir.string(),
                       {}, file);
  }

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto tokens = tokenize(line);
    if (tokens.empty()) continue;

    if (tokens[0] != "session") {
      syntax_error(file, line_no, "expected 'session', got '" + tokens[0] + "'");
    }
    if (tokens.size() != 2 && !(tokens.size() == 4 && tokens[2] == "=")) {
      syntax_error(file, line_no,
                   "expected 'session <name>' or 'session <name> = <parent>'");
    }
    const std::string& name = tokens[1];
    if (!valid_session_name(name)) {
      syntax_error(file, line_no, "invalid session name '" + name + "'");
    }

    Session session{name, std::nullopt, dir};
    if (tokens.size() == 4) {
      if (!valid_session_name(tokens[3])) {
        syntax_error(file, line_no, "invalid parent name '" + tokens[3] + "'");
      }
      session.parent = tokens[3];
    }

    if (catalog.contains(name)) {
      throw CatalogError(CatalogErrorKind::DuplicateSession,
                         "session '" + name + "' declared more than once",
                         {name}, file, line_no);
    }
    catalog.sessions.emplace(name, std::move(session));
  }
}

// Walks parent chains; reports the first cycle found, listed child-last.
void check_edges(const SessionCatalog& catalog) {
  for (const auto& [name, session] : catalog.sessions) {
    if (session.parent && !catalog.contains(*session.parent)) {
      throw CatalogError(
          CatalogErrorKind::UnknownParent,
          "session '" + name + "' has unknown parent '" + *session.parent + "'",
          {name, *session.parent});
    }
  }

  std::set<std::string> safe;  // known to reach a root
  for (const auto& [name, _] : catalog.sessions) {
    std::vector<std::string> path;
    std::set<std::string> on_path;
    const std::string* cur = &name;
    while (true) {
      if (safe.count(*cur)) break;
      if (on_path.count(*cur)) {
        // Trim the tail that precedes the cycle entry point.
        auto entry = std::find(path.begin(), path.end(), *cur);
        std::vector<std::string> cycle(entry, path.end());
        std::ostringstream msg;
        msg << "session parent cycle:";
        for (const auto& n : cycle) msg << " " << n;
        throw CatalogError(CatalogErrorKind::CycleDetected, msg.str(), cycle);
      }
      path.push_back(*cur);
      on_path.insert(*cur);
      const auto& parent = catalog.sessions.at(*cur).parent;
      if (!parent) break;
      cur = &*parent;
    }
    safe.insert(path.begin(), path.end());
  }
}

}  // namespace

SessionCatalog parse_catalog(const std::vector<fs::path>& root_dirs) {
  SessionCatalog catalog;
  catalog.root_dirs = root_dirs;
  for (const auto& dir : root_dirs) {
    load_catalog_file(dir, catalog);
  }
  check_edges(catalog);
  return catalog;
}

SyncSet ancestors(const SessionCatalog& catalog, const std::string& name) {
  if (!catalog.contains(name)) {
    throw CatalogError(CatalogErrorKind::UnknownSession,
                       "unknown session '" + name + "'", {name});
  }
  std::vector<std::string> chain;
  const std::string* cur = &name;
  while (true) {
    chain.push_back(*cur);
    const auto& parent = catalog.sessions.at(*cur).parent;
    if (!parent) break;
    cur = &*parent;
  }
  std::reverse(chain.begin(), chain.end());
  return SyncSet{std::move(chain)};
}

SyncSet sync_set(const SessionCatalog& catalog,
                 const std::vector<std::string>& targets, bool incremental,
                 const std::set<std::string>& newly_built) {
  SyncSet result;
  std::set<std::string> seen;

  if (incremental) {
    // Exactly the newly built sessions the catalog knows, parents first.
    // Depth ordering is topological since a child is deeper than its parent.
    std::vector<std::pair<int, std::string>> members;
    for (const auto& name : newly_built) {
      if (!catalog.contains(name)) continue;
      int depth = 0;
      const std::string* cur = &name;
      while (catalog.sessions.at(*cur).parent) {
        cur = &*catalog.sessions.at(*cur).parent;
        ++depth;
      }
      members.emplace_back(depth, name);
    }
    std::sort(members.begin(), members.end());
    for (auto& [_, name] : members) result.sessions.push_back(name);
    return result;
  }

  for (const auto& target : targets) {
    for (auto& name : ancestors(catalog, target).sessions) {
      if (seen.insert(name).second) result.sessions.push_back(name);
    }
  }
  return result;
}

}  // namespace rb::sessions
