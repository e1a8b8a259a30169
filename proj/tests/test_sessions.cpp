// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/sessions.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>

#include "support/test_util.hpp"

using namespace rb;
using namespace rb::sessions;

namespace {

void write_catalog(const std::filesystem::path& dir, const std::string& text) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "CATALOG");
  out << text;
}

// Brute-force oracle: follow parent pointers, collect into a set.
std::set<std::string> walk_ancestors(const SessionCatalog& catalog,
                                     const std::string& name) {
  std::set<std::string> out;
  const std::string* cur = &name;
  while (true) {
    out.insert(*cur);
    const auto& parent = catalog.sessions.at(*cur).parent;
    if (!parent) break;
    cur = &*parent;
  }
  return out;
}

bool is_topological(const SessionCatalog& catalog,
                    const std::vector<std::string>& order) {
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;
  for (const auto& name : order) {
    const auto& parent = catalog.sessions.at(name).parent;
    if (parent && position.count(*parent) &&
        position[*parent] > position[name]) {
      return false;
    }
  }
  return true;
}

// Random forest: node i may pick any earlier node as parent.
SessionCatalog random_forest(std::mt19937_64& rng, int max_nodes,
                             std::vector<std::string>& names) {
  SessionCatalog catalog;
  int n = 1 + static_cast<int>(rng() % max_nodes);
  for (int i = 0; i < n; ++i) {
    std::string name = "s" + std::to_string(i);
    Session s{name, std::nullopt, "."};
    if (i > 0 && rng() % 4 != 0) {
      s.parent = "s" + std::to_string(rng() % i);
    }
    catalog.sessions.emplace(name, s);
    names.push_back(name);
  }
  return catalog;
}

}  // namespace

TEST_CASE("catalog grammar: roots and children") {
  test::TempDir dir("catalog");
  write_catalog(dir.path(), "session A\nsession B = A\n");
  SessionCatalog catalog = parse_catalog({dir.path()});
  REQUIRE(catalog.sessions.size() == 2);
  CHECK_FALSE(catalog.sessions.at("A").parent.has_value());
  CHECK(catalog.sessions.at("B").parent == "A");
}

TEST_CASE("catalog grammar: comments, blanks, flexible whitespace") {
  test::TempDir dir("catalog");
  write_catalog(dir.path(),
                "# heading\n"
                "\n"
                "session   A   # trailing comment\n"
                "\tsession\tB\t=\tA\n");
  SessionCatalog catalog = parse_catalog({dir.path()});
  CHECK(catalog.sessions.size() == 2);
  CHECK(catalog.sessions.at("B").parent == "A");
}

TEST_CASE("declarations union across directories, dir recorded") {
  test::TempDir d1("cat1");
  test::TempDir d2("cat2");
  write_catalog(d1.path(), "session A\n");
  write_catalog(d2.path(), "session B = A\n");
  SessionCatalog catalog = parse_catalog({d1.path(), d2.path()});
  REQUIRE(catalog.sessions.size() == 2);
  CHECK(catalog.sessions.at("A").dir == d1.path());
  CHECK(catalog.sessions.at("B").dir == d2.path());
}

TEST_CASE("order-insensitive for disjoint declarations") {
  test::TempDir d1("cat1");
  test::TempDir d2("cat2");
  write_catalog(d1.path(), "session A\nsession B = A\n");
  write_catalog(d2.path(), "session C\n");
  SessionCatalog forward = parse_catalog({d1.path(), d2.path()});
  SessionCatalog backward = parse_catalog({d2.path(), d1.path()});
  REQUIRE(forward.sessions.size() == backward.sessions.size());
  for (const auto& [name, session] : forward.sessions) {
    CHECK(backward.sessions.at(name).parent == session.parent);
  }
}

TEST_CASE("catalog errors") {
  SUBCASE("missing catalog file") {
    test::TempDir dir("empty");
    try {
      parse_catalog({dir.path()});
      FAIL("expected MissingCatalog");
    } catch (const CatalogError& e) {
      CHECK(e.kind == CatalogErrorKind::MissingCatalog);
    }
  }
  SUBCASE("missing directory") {
    try {
      parse_catalog({"/nonexistent/dir"});
      FAIL("expected MissingCatalog");
    } catch (const CatalogError& e) {
      CHECK(e.kind == CatalogErrorKind::MissingCatalog);
    }
  }
  SUBCASE("duplicate session, same file") {
    test::TempDir dir("dup");
    write_catalog(dir.path(), "session A\nsession A\n");
    try {
      parse_catalog({dir.path()});
      FAIL("expected DuplicateSession");
    } catch (const CatalogError& e) {
      CHECK(e.kind == CatalogErrorKind::DuplicateSession);
      CHECK(e.names == std::vector<std::string>{"A"});
    }
  }
  SUBCASE("duplicate session across directories") {
    test::TempDir d1("dup1");
    test::TempDir d2("dup2");
    write_catalog(d1.path(), "session A\n");
    write_catalog(d2.path(), "session A\n");
    try {
      parse_catalog({d1.path(), d2.path()});
      FAIL("expected DuplicateSession");
    } catch (const CatalogError& e) {
      CHECK(e.kind == CatalogErrorKind::DuplicateSession);
    }
  }
  SUBCASE("unknown parent") {
    test::TempDir dir("orphan");
    write_catalog(dir.path(), "session B = A\n");
    try {
      parse_catalog({dir.path()});
      FAIL("expected UnknownParent");
    } catch (const CatalogError& e) {
      CHECK(e.kind == CatalogErrorKind::UnknownParent);
      CHECK(e.names == std::vector<std::string>{"B", "A"});
    }
  }
  SUBCASE("cycle detected") {
    test::TempDir dir("cycle");
    write_catalog(dir.path(), "session A = B\nsession B = A\n");
    try {
      parse_catalog({dir.path()});
      FAIL("expected CycleDetected");
    } catch (const CatalogError& e) {
      CHECK(e.kind == CatalogErrorKind::CycleDetected);
      std::set<std::string> cycle(e.names.begin(), e.names.end());
      CHECK(cycle == std::set<std::string>{"A", "B"});
    }
  }
  SUBCASE("syntax errors carry file and line") {
    test::TempDir dir("syntax");
    write_catalog(dir.path(), "session A\nnot a declaration\n");
    try {
      parse_catalog({dir.path()});
      FAIL("expected SyntaxError");
    } catch (const CatalogError& e) {
      CHECK(e.kind == CatalogErrorKind::SyntaxError);
      CHECK(e.line == 2);
      CHECK(e.file == dir.path() / "CATALOG");
    }
  }
  SUBCASE("invalid name characters") {
    test::TempDir dir("badname");
    write_catalog(dir.path(), "session A/B\n");
    try {
      parse_catalog({dir.path()});
      FAIL("expected SyntaxError");
    } catch (const CatalogError& e) {
      CHECK(e.kind == CatalogErrorKind::SyntaxError);
    }
  }
}

TEST_CASE("ancestors of a root is the root alone") {
  test::TempDir dir("anc");
  write_catalog(dir.path(), "session A\n");
  SessionCatalog catalog = parse_catalog({dir.path()});
  CHECK(ancestors(catalog, "A").sessions == std::vector<std::string>{"A"});
}

TEST_CASE("ancestors of a chain, root first") {
  test::TempDir dir("anc");
  write_catalog(dir.path(), "session A\nsession B = A\nsession C = B\n");
  SessionCatalog catalog = parse_catalog({dir.path()});
  CHECK(ancestors(catalog, "C").sessions ==
        std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("ancestors of an unknown session") {
  test::TempDir dir("anc");
  write_catalog(dir.path(), "session A\nsession B = A\n");
  SessionCatalog catalog = parse_catalog({dir.path()});
  try {
    ancestors(catalog, "X");
    FAIL("expected UnknownSession");
  } catch (const CatalogError& e) {
    CHECK(e.kind == CatalogErrorKind::UnknownSession);
  }
}

TEST_CASE("sync_set default mode is the ancestor closure") {
  test::TempDir dir("sset");
  write_catalog(dir.path(), "session A\nsession B = A\nsession C = B\n");
  SessionCatalog catalog = parse_catalog({dir.path()});

  // The default is to synchronize all ancestors of the built sessions.
  CHECK(sync_set(catalog, {"C"}, false, {}).sessions ==
        std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("sync_set incremental returns exactly the newly built") {
  test::TempDir dir("sset");
  write_catalog(dir.path(), "session A\nsession B = A\nsession C = B\n");
  SessionCatalog catalog = parse_catalog({dir.path()});

  CHECK(sync_set(catalog, {"C"}, true, {"C"}).sessions ==
        std::vector<std::string>{"C"});
  CHECK(sync_set(catalog, {"C"}, true, {}).sessions.empty());
  // Unknown newly built names are not sync_set's business.
  CHECK(sync_set(catalog, {"C"}, true, {"C", "zz"}).sessions ==
        std::vector<std::string>{"C"});
  // Ordered ancestors-first even when given out of order.
  CHECK(sync_set(catalog, {"C"}, true, {"C", "A", "B"}).sessions ==
        std::vector<std::string>{"A", "B", "C"});
}

TEST_CASE("random forests: oracle equivalence, topo order, monotonicity") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> names;
    SessionCatalog catalog = random_forest(rng, 20, names);

    for (const auto& name : names) {
      SyncSet chain = ancestors(catalog, name);
      std::set<std::string> got(chain.sessions.begin(), chain.sessions.end());
      CHECK(got == walk_ancestors(catalog, name));
      CHECK(got.size() == chain.sessions.size());  // no duplicates
      CHECK(is_topological(catalog, chain.sessions));
    }

    // Union semantics + monotonicity when targets grow.
    std::vector<std::string> targets;
    std::set<std::string> prev_set;
    for (int k = 0; k < 4 && k < static_cast<int>(names.size()); ++k) {
      targets.push_back(names[rng() % names.size()]);
      SyncSet set = sync_set(catalog, targets, false, {});
      std::set<std::string> expect;
      for (const auto& t : targets) {
        auto anc = walk_ancestors(catalog, t);
        expect.insert(anc.begin(), anc.end());
      }
      std::set<std::string> got(set.sessions.begin(), set.sessions.end());
      CHECK(got == expect);
      CHECK(got.size() == set.sessions.size());
      CHECK(is_topological(catalog, set.sessions));
      CHECK(std::includes(got.begin(), got.end(), prev_set.begin(),
                          prev_set.end()));
      prev_set = got;
    }
  }
}
