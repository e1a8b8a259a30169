// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/orchestrator.hpp"

#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "rb/fsutil.hpp"

namespace rb::orchestrator {

namespace fs = std::filesystem;

std::string default_remote_root(const BuildRequest& req) {
  if (req.remote_base == "~") return "~/heaps";
  std::string base = req.remote_base;
  while (base.size() > 1 && base.back() == '/') base.pop_back();
  return base + "/heaps";
}

std::vector<std::string> build_command(const BuildRequest& req) {
  std::string base = req.remote_base;
  while (base.size() > 1 && base.back() == '/') base.pop_back();
  std::vector<std::string> argv;
  argv.push_back(base == "~" ? "~/bin/isabelle" : base + "/bin/isabelle");
  argv.push_back("build");
  argv.push_back("-b");
  argv.insert(argv.end(), req.remote_opts.begin(), req.remote_opts.end());
  argv.insert(argv.end(), req.sessions.begin(), req.sessions.end());
  return argv;
}

std::pair<std::string, bool> classify_artifact(const std::string& rel_path) {
  fs::path p(rel_path);
  std::string base = p.filename().string();
  bool companion = p.has_parent_path() && *p.begin() == "log";
  if (companion) {
    // log/<session>[.ext]: strip the suffix to recover the session name.
    std::size_t dot = base.find('.');
    if (dot != std::string::npos) base.resize(dot);
  }
  return {base, companion};
}

HeapSnapshot snapshot_heaps(transport::Connection& conn,
                            const std::string& artifact_root) {
  HeapSnapshot snapshot;
  snapshot.taken_at = std::chrono::system_clock::now();
  for (const auto& stat : conn.stat_tree(artifact_root)) {
    snapshot.files[stat.path] = FileMeta{stat.size, stat.mtime};
  }
  return snapshot;
}

std::vector<HeapArtifact> detect_new_heaps(
    const HeapSnapshot& snapshot,
    const std::vector<transport::RemoteFileStat>& prev_poll,
    const std::vector<transport::RemoteFileStat>& cur_poll) {
  std::map<std::string, FileMeta> prev;
  for (const auto& stat : prev_poll) prev[stat.path] = {stat.size, stat.mtime};

  std::vector<HeapArtifact> out;
  for (const auto& stat : cur_poll) {
    FileMeta meta{stat.size, stat.mtime};
    auto snap = snapshot.files.find(stat.path);
    if (snap != snapshot.files.end() && snap->second == meta) continue;

    auto [session, companion] = classify_artifact(stat.path);
    auto p = prev.find(stat.path);
    bool stable = p != prev.end() && p->second == meta;
    out.push_back(HeapArtifact{session, stat.path, stat.size, stat.mtime,
                               stable, companion});
  }
  return out;
}

namespace {

// Serializes log writes from the output pumps and the sync workers.
class Logger {
 public:
  explicit Logger(std::ostream& out) : out_(out) {}

  void line(const std::string& text) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << text << '\n';
    out_.flush();
  }

 private:
  std::ostream& out_;
  std::mutex mu_;
};

// Forwards one exec output stream to the log, line by line.
void pump_stream(const std::function<std::size_t(std::span<std::uint8_t>)>& read,
                 Logger& log) {
  std::string pending;
  std::uint8_t buf[4096];
  while (std::size_t n = read(buf)) {
    pending.append(reinterpret_cast<char*>(buf), n);
    std::size_t eol;
    while ((eol = pending.find('\n')) != std::string::npos) {
      log.line(pending.substr(0, eol));
      pending.erase(0, eol + 1);
    }
  }
  if (!pending.empty()) log.line(pending);
}

std::string format_stats(const sync::SyncStats& stats) {
  std::ostringstream out;
  out << stats.source_len() << " bytes (literal " << stats.literal_bytes
      << ", copied " << stats.copied_bytes << ", wire " << stats.wire_bytes
      << ") in " << std::fixed << std::setprecision(2)
      << stats.elapsed.count() << "s";
  return out.str();
}

// Transfers artifacts, at most once per remote path, over a bounded set of
// worker channels. Per-artifact failures are recorded, not fatal.
class SyncEngine {
 public:
  SyncEngine(transport::Connection& conn, const BuildRequest& req,
             const sessions::SessionCatalog& catalog, const Tunables& tunables,
             const std::string& remote_root, BuildReport& report, Logger& log)
      : conn_(conn), req_(req), catalog_(catalog), tunables_(tunables),
        remote_root_(remote_root), report_(report), log_(log) {
    int jobs = std::max(1, tunables.sync_jobs);
    for (int i = 0; i < jobs; ++i) {
      workers_.emplace_back([this] { worker_loop(); });
    }
  }

  ~SyncEngine() { finish(); }

  // Queues an artifact unless this remote path was already handled.
  void enqueue(const HeapArtifact& art) {
    std::unique_lock<std::mutex> lock(mu_);
    if (!seen_paths_.insert(art.remote_path).second) return;
    if (!art.companion && !catalog_.sessions.empty() &&
        !catalog_.contains(art.session)) {
      report_.warnings.push_back("syncing session '" + art.session +
                                 "' not present in the local catalog");
    }
    queue_.push_back(art);
    ++outstanding_;
    lock.unlock();
    queue_cv_.notify_one();
  }

  bool already_queued(const std::string& remote_path) {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_paths_.count(remote_path) != 0;
  }

  // Blocks until everything queued so far is done.
  void drain() {
    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [this] { return outstanding_ == 0; });
  }

  void finish() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (stopping_) return;
      stopping_ = true;
    }
    queue_cv_.notify_all();
    for (auto& w : workers_) {
      if (w.joinable()) w.join();
    }
  }

 private:
  struct Worker {
    std::unique_ptr<transport::ByteChannel> channel;
    std::unique_ptr<sync::SyncClient> client;
  };

  void worker_loop() {
    Worker worker;
    while (true) {
      HeapArtifact art;
      {
        std::unique_lock<std::mutex> lock(mu_);
        queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
        if (queue_.empty()) {
          if (stopping_) return;
          continue;
        }
        art = queue_.front();
        queue_.pop_front();
      }
      sync_one(worker, art);
      {
        std::lock_guard<std::mutex> lock(mu_);
        --outstanding_;
      }
      done_cv_.notify_all();
    }
  }

  void sync_one(Worker& worker, const HeapArtifact& art) {
    fs::path local = tunables_.local_root / fs::path(art.remote_path);
    try {
      sync::SyncStats stats;
      if (!agent_unavailable_.load()) {
        try {
          if (!worker.client) {
            std::vector<std::string> argv = tunables_.agent_argv;
            argv.push_back(remote_root_);
            worker.channel = conn_.open_channel(argv);
            worker.client = std::make_unique<sync::SyncClient>(*worker.channel);
          }
          stats = worker.client->sync_file(art.remote_path, local,
                                           tunables_.block_size);
        } catch (const sync::AgentUnavailableError& e) {
          // No agent on the remote side: stream whole files from now on.
          agent_unavailable_.store(true);
          worker.client.reset();
          worker.channel.reset();
          log_.line("warning: " + std::string(e.what()) +
                    "; falling back to full-file streaming");
          stats = fetch_full(art, local);
        }
      } else {
        stats = fetch_full(art, local);
      }
      record_success(art, stats);
    } catch (const std::exception& e) {
      record_failure(art, e.what());
    }
  }

  // Fallback when the remote has no agent binary: cat the file through the
  // connection and trust the poll's size/mtime.
  sync::SyncStats fetch_full(const HeapArtifact& art, const fs::path& local) {
    auto started = std::chrono::steady_clock::now();
    std::string remote_file = remote_root_ == "~"
                                  ? "~/" + art.remote_path
                                  : remote_root_ + "/" + art.remote_path;
    auto handle = conn_.exec({"cat", remote_file});

    fsutil::PendingFile pending(local);
    std::uint64_t total = 0;
    std::uint8_t buf[64 * 1024];
    while (std::size_t n = handle->read_stdout(buf)) {
      pending.write(ByteSpan(buf, n));
      total += n;
    }
    if (handle->wait() != 0) {
      throw sync::SyncError("remote read of " + art.remote_path + " failed");
    }
    if (total != art.size) {
      throw sync::SyncError("remote file " + art.remote_path +
                            " changed size during transfer");
    }
    pending.commit(art.mtime);

    sync::SyncStats stats;
    stats.literal_bytes = total;
    stats.wire_bytes = total;
    stats.elapsed = std::chrono::steady_clock::now() - started;
    return stats;
  }

  void record_success(const HeapArtifact& art, const sync::SyncStats& stats) {
    std::lock_guard<std::mutex> lock(mu_);
    auto& entry = report_.per_session[art.session];
    entry.stats.literal_bytes += stats.literal_bytes;
    entry.stats.copied_bytes += stats.copied_bytes;
    entry.stats.wire_bytes += stats.wire_bytes;
    entry.stats.elapsed += stats.elapsed;
    if (!art.companion) {
      entry.synced = true;
      entry.heap_syncs += 1;
    }
    report_.total_wire_bytes += stats.wire_bytes;
    report_.sync_duration += stats.elapsed;
    std::string line = "synced " + art.remote_path;
    if (req_.verbose) line += ": " + format_stats(stats);
    log_.line(line);
  }

  void record_failure(const HeapArtifact& art, const std::string& what) {
    std::lock_guard<std::mutex> lock(mu_);
    auto& entry = report_.per_session[art.session];
    entry.error = what;
    report_.sync_failures = true;
    log_.line("sync of " + art.remote_path + " failed: " + what);
  }

  transport::Connection& conn_;
  const BuildRequest& req_;
  const sessions::SessionCatalog& catalog_;
  const Tunables& tunables_;
  std::string remote_root_;
  BuildReport& report_;
  Logger& log_;

  std::mutex mu_;
  std::condition_variable queue_cv_;
  std::condition_variable done_cv_;
  std::deque<HeapArtifact> queue_;
  std::set<std::string> seen_paths_;
  std::size_t outstanding_ = 0;
  bool stopping_ = false;
  std::atomic<bool> agent_unavailable_{false};
  std::vector<std::thread> workers_;
};

}  // namespace

BuildReport run(const BuildRequest& req, const sessions::SessionCatalog& catalog,
                transport::Transport& transport, const Tunables& tunables,
                std::ostream& log_stream, hostkeys::LookupLog* lookup_log) {
  BuildReport report;
  Logger log(log_stream);

  hostkeys::KnownHosts known_hosts;
  if (!tunables.known_hosts_path.empty() &&
      fs::exists(tunables.known_hosts_path)) {
    std::ifstream in(tunables.known_hosts_path);
    std::stringstream text;
    text << in.rdbuf();
    known_hosts = hostkeys::parse_known_hosts(text.str());
    if (known_hosts.skipped_lines > 0) {
      report.warnings.push_back(
          std::to_string(known_hosts.skipped_lines) +
          " unparseable known_hosts line(s) ignored");
    }
  }

  std::unique_ptr<transport::Connection> conn;
  if (req.proxy) {
    conn = transport::connect_via_proxy(transport, *req.proxy, req.remote,
                                        known_hosts, lookup_log);
  } else {
    conn = transport::connect(transport, req.remote, known_hosts, lookup_log);
  }

  const std::string remote_root = tunables.remote_root.empty()
                                      ? default_remote_root(req)
                                      : tunables.remote_root;

  HeapSnapshot snapshot = snapshot_heaps(*conn, remote_root);

  auto build_started = std::chrono::steady_clock::now();
  auto build = conn->exec(build_command(req));
  std::thread out_pump([&] {
    pump_stream([&](std::span<std::uint8_t> b) { return build->read_stdout(b); },
                log);
  });
  std::thread err_pump([&] {
    pump_stream([&](std::span<std::uint8_t> b) { return build->read_stderr(b); },
                log);
  });

  std::vector<transport::RemoteFileStat> prev_poll;
  std::vector<transport::RemoteFileStat> cur_poll;
  int exit_status = 0;

  {
    SyncEngine engine(*conn, req, catalog, tunables, remote_root, report, log);

    // Poll-and-sync loop: runs until the remote build ends.
    while (true) {
      if (auto status = build->try_wait()) {
        exit_status = *status;
        break;
      }
      std::this_thread::sleep_for(tunables.poll_interval);
      cur_poll = conn->stat_tree(remote_root);
      for (const auto& art : detect_new_heaps(snapshot, prev_poll, cur_poll)) {
        if (art.stable) engine.enqueue(art);
      }
      prev_poll = std::move(cur_poll);
    }

    out_pump.join();
    err_pump.join();
    report.exit_status = exit_status;
    report.build_duration = std::chrono::steady_clock::now() - build_started;

    // Final sweep: the build has exited, so everything new is final.
    cur_poll = conn->stat_tree(remote_root);
    for (const auto& art : detect_new_heaps(snapshot, cur_poll, cur_poll)) {
      engine.enqueue(art);
    }
    engine.drain();

    // Default mode also ships the targets' ancestors whose heaps predate
    // the build (the remote copy is the source of truth for them).
    if (!req.incremental) {
      sessions::SyncSet closure = sessions::sync_set(catalog, req.sessions,
                                                     false, {});
      std::map<std::string, transport::RemoteFileStat> listing;
      for (const auto& stat : cur_poll) listing[stat.path] = stat;

      for (const auto& name : closure.sessions) {
        bool have_heap = false;
        for (const auto& [path, stat] : listing) {
          auto [session, companion] = classify_artifact(path);
          if (session != name) continue;
          if (!companion) have_heap = true;
          if (engine.already_queued(path)) continue;
          engine.enqueue(HeapArtifact{session, path, stat.size, stat.mtime,
                                      true, companion});
        }
        if (!have_heap && report.per_session.find(name) == report.per_session.end()) {
          report.per_session[name].error = "no heap image on the remote host";
          report.warnings.push_back("session '" + name +
                                    "' has no heap image on the remote host");
        }
      }
      engine.drain();
    }

    engine.finish();
  }

  return report;
}

void print_report(const BuildReport& report, bool verbose, std::ostream& out) {
  for (const auto& warning : report.warnings) {
    out << "warning: " << warning << '\n';
  }
  int synced = 0;
  for (const auto& [name, entry] : report.per_session) {
    if (entry.synced) ++synced;
    if (verbose && entry.synced) {
      out << name << ": " << format_stats(entry.stats) << '\n';
    }
    if (!entry.error.empty()) {
      out << name << ": failed: " << entry.error << '\n';
    }
  }
  out << "remote build exit status " << report.exit_status << "; synced "
      << synced << " session(s), " << report.total_wire_bytes
      << " bytes over the wire (build " << std::fixed << std::setprecision(1)
      << report.build_duration.count() << "s, sync "
      << report.sync_duration.count() << "s)\n";
  out.flush();
}

}  // namespace rb::orchestrator
