// Copyright 2026 The remote_build Authors
// Licensed under the Apache License, Version 2.0

#include "rb/cli.hpp"

#include <unistd.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "rb/agent.hpp"
#include "rb/sessions.hpp"
#include "rb/ssh_transport.hpp"

namespace rb::cli {

namespace fs = std::filesystem;

namespace {

const char* kUsageText =
    "Usage: remote_build [OPTIONS] SESSIONS ...\n"
    "\n"
    "  Options are:\n"
    "    -B DIR       base directory for remote Isabelle installations (default:\n"
    "                 $REMOTE_BUILD_REMOTE_BASE, or if former not set ~)\n"
    "    -d DIR       include session directory\n"
    "    -r HOST      remote host name (default: $REMOTE_BUILD_REMOTE_HOST)\n"
    "    -o OPTION    add option for remote isabelle call, e.g., -o -d -o '$ISAFOR'\n"
    "    -i           incremental: only synchronize heap images that are newly\n"
    "                 built on the remote host (default: synchronize all session\n"
    "                 heaps together with their ancestors)\n"
    "    -P PROXY     connect to remote host via proxy jump; PROXY may either be a\n"
    "                 HOST or a specification HOST:PORT (default PORT: 2222)\n"
    "    -v           be verbose\n"
    "\n"
    "  Build and copy heap images, observing implicit settings:\n"
    "\n"
    "  REMOTE_BUILD_REMOTE_HOST=\"...\"\n"
    "  REMOTE_BUILD_REMOTE_BASE=\"...\"\n"
    "\n"
    "  Additional options:\n"
    "    --poll-interval SECONDS   remote artifact poll interval (default: 2)\n"
    "    --block-size BYTES        delta transfer block size (default: 2048, min 64)\n"
    "    --local-root DIR          local artifact directory (default: heaps)\n"
    "    --remote-root DIR         remote artifact directory (default: <base>/heaps)\n"
    "    --known-hosts FILE        known_hosts file (default: ~/.ssh/known_hosts)\n"
    "    --jobs N                  concurrent file transfers (default: 1)\n"
    "    --agent-cmd CMD           remote agent command (default: 'remote_build agent')\n"
    "    --ssh-cmd CMD             ssh client command (default: 'ssh')\n"
    "    --settings FILE           read implicit settings from FILE\n"
    "    --help                    print this message\n";

ParsedInvocation usage_error(std::string message) {
  ParsedInvocation inv;
  inv.mode = ParsedInvocation::Mode::Usage;
  inv.error = std::move(message);
  return inv;
}

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string word;
  while (in >> word) words.push_back(word);
  return words;
}

bool parse_port(std::string_view text, int& port) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return false;
  if (value < 1 || value > 65535) return false;
  port = value;
  return true;
}

// HOST or HOST:PORT (default port 2222).
bool parse_proxy(const std::string& text, transport::ProxySpec& proxy) {
  std::size_t colon = text.rfind(':');
  if (colon == std::string::npos) {
    if (text.empty()) return false;
    proxy.host = text;
    proxy.forward_port = 2222;
    return true;
  }
  std::string host = text.substr(0, colon);
  if (host.empty()) return false;
  int port = 0;
  if (!parse_port(text.substr(colon + 1), port)) return false;
  proxy.host = host;
  proxy.forward_port = port;
  return true;
}

// [user@]host
void parse_remote_host(const std::string& text, transport::Endpoint& endpoint) {
  std::size_t at = text.find('@');
  if (at != std::string::npos && at > 0) {
    endpoint.user = text.substr(0, at);
    endpoint.host = text.substr(at + 1);
  } else {
    endpoint.host = text;
  }
}

// Simple KEY=VALUE settings file, '#' comments, optional double quotes.
std::map<std::string, std::string> read_settings_file(const fs::path& path) {
  std::map<std::string, std::string> settings;
  std::ifstream in(path);
  if (!in.is_open()) {
    throw Error("cannot open settings file " + path.string());
  }
  std::string line;
  while (std::getline(in, line)) {
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.erase(s.begin());
      while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.pop_back();
      return s;
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (!key.empty()) settings[key] = value;
  }
  return settings;
}

struct RawFlags {
  std::optional<std::string> base;
  std::vector<std::string> dirs;
  std::optional<std::string> remote;
  std::vector<std::string> opts;
  bool incremental = false;
  std::optional<std::string> proxy;
  bool verbose = false;
  std::vector<std::string> positionals;

  std::optional<std::string> poll_interval;
  std::optional<std::string> block_size;
  std::optional<std::string> local_root;
  std::optional<std::string> remote_root;
  std::optional<std::string> known_hosts;
  std::optional<std::string> jobs;
  std::optional<std::string> agent_cmd;
  std::optional<std::string> ssh_cmd;
  std::optional<std::string> settings_file;
  bool help = false;
};

// Returns an error message, or empty on success.
std::string scan_args(const std::vector<std::string>& argv, RawFlags& flags) {
  std::size_t i = 0;
  auto take_value = [&](const std::string& name,
                        std::optional<std::string> attached,
                        std::optional<std::string>& slot) -> std::string {
    if (attached) {
      slot = *attached;
      return "";
    }
    if (i + 1 >= argv.size()) return "option " + name + " requires an argument";
    slot = argv[++i];
    return "";
  };

  for (; i < argv.size(); ++i) {
    const std::string& tok = argv[i];
    if (tok == "--") {
      flags.positionals.insert(flags.positionals.end(), argv.begin() + i + 1,
                               argv.end());
      break;
    }
    if (tok.rfind("--", 0) == 0) {
      std::string name = tok;
      std::optional<std::string> attached;
      std::size_t eq = tok.find('=');
      if (eq != std::string::npos) {
        name = tok.substr(0, eq);
        attached = tok.substr(eq + 1);
      }
      std::string err;
      if (name == "--help") {
        flags.help = true;
      } else if (name == "--poll-interval") {
        err = take_value(name, attached, flags.poll_interval);
      } else if (name == "--block-size") {
        err = take_value(name, attached, flags.block_size);
      } else if (name == "--local-root") {
        err = take_value(name, attached, flags.local_root);
      } else if (name == "--remote-root") {
        err = take_value(name, attached, flags.remote_root);
      } else if (name == "--known-hosts") {
        err = take_value(name, attached, flags.known_hosts);
      } else if (name == "--jobs") {
        err = take_value(name, attached, flags.jobs);
      } else if (name == "--agent-cmd") {
        err = take_value(name, attached, flags.agent_cmd);
      } else if (name == "--ssh-cmd") {
        err = take_value(name, attached, flags.ssh_cmd);
      } else if (name == "--settings") {
        err = take_value(name, attached, flags.settings_file);
      } else {
        err = "unknown option " + name;
      }
      if (!err.empty()) return err;
      continue;
    }
    if (tok.size() >= 2 && tok[0] == '-') {
      // Short flags; value flags consume the rest of the token or the next
      // word (even one starting with '-').
      for (std::size_t j = 1; j < tok.size(); ++j) {
        char c = tok[j];
        std::optional<std::string> attached;
        if (j + 1 < tok.size()) attached = tok.substr(j + 1);
        std::optional<std::string> value;
        std::string err;
        switch (c) {
          case 'B':
            err = take_value("-B", attached, flags.base);
            break;
          case 'd':
            err = take_value("-d", attached, value);
            if (err.empty()) flags.dirs.push_back(*value);
            break;
          case 'r':
            err = take_value("-r", attached, flags.remote);
            break;
          case 'o':
            err = take_value("-o", attached, value);
            if (err.empty()) flags.opts.push_back(*value);
            break;
          case 'P':
            err = take_value("-P", attached, flags.proxy);
            break;
          case 'i':
            flags.incremental = true;
            break;
          case 'v':
            flags.verbose = true;
            break;
          default:
            err = std::string("unknown option -") + c;
        }
        if (!err.empty()) return err;
        if (c == 'B' || c == 'd' || c == 'r' || c == 'o' || c == 'P') break;
      }
      continue;
    }
    flags.positionals.push_back(tok);
  }
  return "";
}

std::string env_or_setting(const std::map<std::string, std::string>& env,
                           const std::map<std::string, std::string>& settings,
                           const std::string& key) {
  auto e = env.find(key);
  if (e != env.end() && !e->second.empty()) return e->second;
  auto s = settings.find(key);
  if (s != settings.end()) return s->second;
  return "";
}

}  // namespace

std::string usage() { return kUsageText; }

ParsedInvocation parse_args(const std::vector<std::string>& argv,
                            const std::map<std::string, std::string>& env) {
  // Agent subcommand (remote side of the sync protocol); deliberately not
  // part of the usage text.
  if (!argv.empty() && argv[0] == "agent") {
    if (argv.size() != 2) {
      return usage_error("agent mode takes exactly one argument: the root directory");
    }
    ParsedInvocation inv;
    inv.mode = ParsedInvocation::Mode::Agent;
    inv.agent_root = argv[1];
    return inv;
  }

  RawFlags flags;
  std::string err = scan_args(argv, flags);
  if (!err.empty()) return usage_error(err);
  if (flags.help) return ParsedInvocation{};  // Usage with empty error

  ParsedInvocation inv;
  inv.mode = ParsedInvocation::Mode::Build;
  orchestrator::BuildRequest& req = inv.request;
  orchestrator::Tunables& tun = inv.tunables;

  std::map<std::string, std::string> settings;
  if (flags.settings_file) {
    try {
      settings = read_settings_file(*flags.settings_file);
    } catch (const Error& e) {
      return usage_error(e.what());
    }
  }

  // Flag wins over environment, environment over the settings file.
  std::string host = flags.remote.value_or(
      env_or_setting(env, settings, "REMOTE_BUILD_REMOTE_HOST"));
  std::string base = flags.base.value_or(
      env_or_setting(env, settings, "REMOTE_BUILD_REMOTE_BASE"));

  req.sessions = flags.positionals;
  for (const auto& dir : flags.dirs) req.session_dirs.emplace_back(dir);
  req.remote_opts = flags.opts;
  req.incremental = flags.incremental;
  req.verbose = flags.verbose;
  req.remote_base = base.empty() ? "~" : base;
  if (!host.empty()) parse_remote_host(host, req.remote);

  if (flags.proxy) {
    transport::ProxySpec proxy;
    if (!parse_proxy(*flags.proxy, proxy)) {
      return usage_error("malformed proxy specification '" + *flags.proxy +
                         "' (expected HOST or HOST:PORT)");
    }
    req.proxy = proxy;
  }

  if (req.sessions.empty()) {
    return usage_error("no sessions given");
  }
  for (const auto& name : req.sessions) {
    if (!sessions::valid_session_name(name)) {
      return usage_error("invalid session name '" + name + "'");
    }
  }
  if (req.remote.host.empty()) {
    return usage_error(
        "no remote host: use -r or set REMOTE_BUILD_REMOTE_HOST");
  }

  auto setting_or = [&](const std::optional<std::string>& flag,
                        const char* key) -> std::optional<std::string> {
    if (flag) return flag;
    auto s = settings.find(key);
    if (s != settings.end()) return s->second;
    return std::nullopt;
  };

  if (auto v = setting_or(flags.poll_interval, "poll-interval")) {
    try {
      double seconds = std::stod(*v);
      if (seconds <= 0 || seconds > 3600) throw std::invalid_argument("range");
      tun.poll_interval =
          std::chrono::milliseconds(static_cast<long>(seconds * 1000));
    } catch (...) {
      return usage_error("invalid --poll-interval '" + *v + "'");
    }
  }
  if (auto v = setting_or(flags.block_size, "block-size")) {
    try {
      long value = std::stol(*v);
      if (value < sync::kMinBlockSize || value > (1 << 26)) {
        throw std::invalid_argument("range");
      }
      tun.block_size = static_cast<std::uint32_t>(value);
    } catch (...) {
      return usage_error("invalid --block-size '" + *v + "' (min 64)");
    }
  }
  if (auto v = setting_or(flags.local_root, "local-root")) tun.local_root = *v;
  if (auto v = setting_or(flags.remote_root, "remote-root")) tun.remote_root = *v;
  if (auto v = setting_or(flags.known_hosts, "known-hosts")) {
    tun.known_hosts_path = *v;
  }
  if (auto v = setting_or(flags.jobs, "jobs")) {
    try {
      long value = std::stol(*v);
      if (value < 1 || value > 64) throw std::invalid_argument("range");
      tun.sync_jobs = static_cast<int>(value);
    } catch (...) {
      return usage_error("invalid --jobs '" + *v + "'");
    }
  }
  if (auto v = setting_or(flags.agent_cmd, "agent-cmd")) {
    auto words = split_words(*v);
    if (words.empty()) return usage_error("empty --agent-cmd");
    tun.agent_argv = words;
  }
  if (auto v = setting_or(flags.ssh_cmd, "ssh-cmd")) {
    auto words = split_words(*v);
    if (words.empty()) return usage_error("empty --ssh-cmd");
    tun.ssh_argv = words;
  }

  return inv;
}

std::vector<std::string> render_args(const orchestrator::BuildRequest& req) {
  std::vector<std::string> argv;
  if (req.remote_base != "~") {
    argv.push_back("-B");
    argv.push_back(req.remote_base);
  }
  for (const auto& dir : req.session_dirs) {
    argv.push_back("-d");
    argv.push_back(dir.string());
  }
  if (!req.remote.host.empty()) {
    argv.push_back("-r");
    argv.push_back(req.remote.user.empty()
                       ? req.remote.host
                       : req.remote.user + "@" + req.remote.host);
  }
  for (const auto& opt : req.remote_opts) {
    argv.push_back("-o");
    argv.push_back(opt);
  }
  if (req.incremental) argv.push_back("-i");
  if (req.proxy) {
    argv.push_back("-P");
    argv.push_back(req.proxy->host + ":" + std::to_string(req.proxy->forward_port));
  }
  if (req.verbose) argv.push_back("-v");
  argv.push_back("--");
  argv.insert(argv.end(), req.sessions.begin(), req.sessions.end());
  return argv;
}

namespace {

// ByteChannel over the process's own stdin/stdout (agent mode).
class StdioChannel : public transport::ByteChannel {
 public:
  std::size_t read(std::span<std::uint8_t> out) override {
    while (true) {
      ssize_t n = ::read(0, out.data(), out.size());
      if (n >= 0) return static_cast<std::size_t>(n);
      if (errno != EINTR) throw Error("stdin read failed");
    }
  }

  void write(ByteSpan data) override {
    std::size_t off = 0;
    while (off < data.size()) {
      ssize_t n = ::write(1, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error("stdout write failed");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  void close_write() override { ::close(1); }
};

fs::path default_known_hosts(const std::map<std::string, std::string>& env) {
  auto home = env.find("HOME");
  if (home == env.end() || home->second.empty()) return {};
  return fs::path(home->second) / ".ssh" / "known_hosts";
}

}  // namespace

int run_main(const std::vector<std::string>& argv,
             const std::map<std::string, std::string>& env,
             transport::Transport* transport_override, std::ostream& out,
             std::ostream& err, hostkeys::LookupLog* lookup_log) {
  ParsedInvocation inv = parse_args(argv, env);

  switch (inv.mode) {
    case ParsedInvocation::Mode::Usage:
      if (inv.error.empty()) {
        out << usage();
        return kExitOk;
      }
      err << "remote_build: " << inv.error << "\n\n" << usage();
      return kExitUsage;

    case ParsedInvocation::Mode::Agent:
      try {
        StdioChannel channel;
        sync::serve_agent(channel, inv.agent_root);
        return kExitOk;
      } catch (const std::exception& e) {
        err << "remote_build agent: " << e.what() << '\n';
        return 1;
      }

    case ParsedInvocation::Mode::Build:
      break;
  }

  if (inv.tunables.known_hosts_path.empty()) {
    inv.tunables.known_hosts_path = default_known_hosts(env);
  }

  sessions::SessionCatalog catalog;
  try {
    catalog = sessions::parse_catalog(inv.request.session_dirs);
    if (!inv.request.incremental) {
      // Default mode needs local ancestry for every target.
      for (const auto& name : inv.request.sessions) {
        if (!catalog.contains(name)) {
          throw sessions::CatalogError(
              sessions::CatalogErrorKind::UnknownSession,
              "unknown session '" + name +
                  "'; add its session directory with -d (or use -i)",
              {name});
        }
      }
    }
  } catch (const sessions::CatalogError& e) {
    err << "remote_build: " << e.what() << '\n';
    return kExitUsage;
  }

  std::unique_ptr<transport::SshTransport> owned_transport;
  transport::Transport* transport = transport_override;
  if (transport == nullptr) {
    transport::SshConfig config;
    config.ssh_argv = inv.tunables.ssh_argv;
    if (!inv.tunables.known_hosts_path.empty()) {
      config.known_hosts_file = inv.tunables.known_hosts_path;
    }
    owned_transport = std::make_unique<transport::SshTransport>(config);
    transport = owned_transport.get();
  }

  try {
    orchestrator::BuildReport report = orchestrator::run(
        inv.request, catalog, *transport, inv.tunables, err, lookup_log);
    orchestrator::print_report(report, inv.request.verbose, err);
    if (report.exit_status != 0) return kExitBuildFailed;
    if (report.sync_failures) return kExitSyncFailed;
    return kExitOk;
  } catch (const transport::TransportError& e) {
    err << "remote_build: " << e.what() << '\n';
    return kExitConnect;
  } catch (const std::exception& e) {
    err << "remote_build: " << e.what() << '\n';
    return kExitSyncFailed;
  }
}

}  // namespace rb::cli
