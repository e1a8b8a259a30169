// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#ifndef RB_ORCHESTRATOR_HPP
#define RB_ORCHESTRATOR_HPP

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rb/sessions.hpp"
#include "rb/sync_client.hpp"
#include "rb/transport.hpp"

namespace rb::orchestrator {

// Everything parsed from the command line and environment; the single
// input that drives a build run.
struct BuildRequest {
  std::vector<std::string> sessions;
  std::vector<std::filesystem::path> session_dirs;
  transport::Endpoint remote;
  std::string remote_base = "~";
  std::vector<std::string> remote_opts;  // passed verbatim, one word each
  bool incremental = false;
  std::optional<transport::ProxySpec> proxy;
  bool verbose = false;
};

// Knobs beyond the short-flag surface, all with conservative defaults.
struct Tunables {
  std::chrono::milliseconds poll_interval{2000};
  std::uint32_t block_size = sync::kDefaultBlockSize;
  std::string remote_root;  // empty: <remote_base>/heaps
  std::filesystem::path local_root{"heaps"};
  std::filesystem::path known_hosts_path;  // empty: ~/.ssh/known_hosts
  std::vector<std::string> agent_argv{"remote_build", "agent"};
  std::vector<std::string> ssh_argv{"ssh"};
  int sync_jobs = 1;
};

std::string default_remote_root(const BuildRequest& req);

struct FileMeta {
  std::uint64_t size = 0;
  std::int64_t mtime = 0;

  bool operator==(const FileMeta&) const = default;
};

// Remote artifact directory as it looked before the build started; a file
// counts as newly built only relative to this.
struct HeapSnapshot {
  std::chrono::system_clock::time_point taken_at;
  std::map<std::string, FileMeta> files;  // path relative to artifact root
};

struct HeapArtifact {
  std::string session;
  std::string remote_path;  // relative to artifact root
  std::uint64_t size = 0;
  std::int64_t mtime = 0;
  bool stable = false;    // unchanged across two consecutive polls
  bool companion = false; // log/<session>* file synced alongside the heap
};

struct SessionReport {
  bool synced = false;  // the heap artifact itself landed locally
  int heap_syncs = 0;
  sync::SyncStats stats;  // aggregated over heap and companions
  std::string error;
};

struct BuildReport {
  int exit_status = -1;  // mirrors the remote build's exit status
  std::map<std::string, SessionReport> per_session;
  std::uint64_t total_wire_bytes = 0;
  std::chrono::duration<double> build_duration{0};
  std::chrono::duration<double> sync_duration{0};
  std::vector<std::string> warnings;
  bool sync_failures = false;
};

// argv for the remote build: <remote_base>/bin/isabelle build -b, the
// verbatim remote options in order, then the sessions. A "~" base is left
// for the remote shell to expand.
std::vector<std::string> build_command(const BuildRequest& req);

// (session, companion) attribution for an artifact path.
std::pair<std::string, bool> classify_artifact(const std::string& rel_path);

HeapSnapshot snapshot_heaps(transport::Connection& conn,
                            const std::string& artifact_root);

// A file is NEW if the snapshot lacks it or its (size, mtime) changed, and
// STABLE once two consecutive polls agree on (size, mtime). Unstable
// artifacts are reported so callers can defer them, never sync them.
std::vector<HeapArtifact> detect_new_heaps(
    const HeapSnapshot& snapshot,
    const std::vector<transport::RemoteFileStat>& prev_poll,
    const std::vector<transport::RemoteFileStat>& cur_poll);

// The whole flow: connect (directly or via the proxy), snapshot, start the
// remote build, poll and sync stable new artifacts while it runs, final
// sweep after exit, then (default mode) the ancestor closure of the
// targets. A failed build still syncs whatever completed.
BuildReport run(const BuildRequest& req, const sessions::SessionCatalog& catalog,
                transport::Transport& transport, const Tunables& tunables,
                std::ostream& log, hostkeys::LookupLog* lookup_log = nullptr);

void print_report(const BuildReport& report, bool verbose, std::ostream& out);

}  // namespace rb::orchestrator

#endif
