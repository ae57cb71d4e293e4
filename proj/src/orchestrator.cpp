#include "satqic/orchestrator.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "satqic/rng.hpp"
#include "satqic/sim.hpp"
#include "satqic/udp_driver.hpp"

namespace fs = std::filesystem;

namespace satqic {

std::optional<EndpointSpec> builtin_endpoint(const std::string& name) {
  if (name == "newreno") return EndpointSpec{name, EndpointKind::BuiltinNewReno, "", ""};
  if (name == "cubic") return EndpointSpec{name, EndpointKind::BuiltinCubic, "", ""};
  if (name == "ratestartup")
    return EndpointSpec{name, EndpointKind::BuiltinRateStartup, "", ""};
  return std::nullopt;
}

uint64_t derive_run_seed(uint64_t shuffle_seed, const std::string& scenario,
                         const std::string& client, const std::string& server,
                         int iteration) {
  uint64_t h = fnv1a(scenario);
  h = fnv1a("|", h);
  h = fnv1a(client, h);
  h = fnv1a("|", h);
  h = fnv1a(server, h);
  return mix_seed(shuffle_seed ^ h ^ (0x17ull * static_cast<uint64_t>(iteration + 1)));
}

RunPlan make_plan(const std::vector<ScenarioSpec>& scenarios,
                  const std::vector<EndpointSpec>& clients,
                  const std::vector<EndpointSpec>& servers, uint64_t shuffle_seed) {
  if (scenarios.empty() || clients.empty() || servers.empty())
    throw ConfigError("plan needs at least one scenario, client and server");
  auto check_unique = [](const std::vector<EndpointSpec>& eps, const char* role) {
    std::set<std::string> names;
    for (const auto& e : eps)
      if (!names.insert(e.name).second)
        throw ConfigError(std::string("duplicate ") + role + " name: " + e.name);
  };
  check_unique(clients, "client");
  check_unique(servers, "server");

  RunPlan plan;
  plan.shuffle_seed = shuffle_seed;
  for (const auto& sc : scenarios)
    for (const auto& c : clients)
      for (const auto& s : servers)
        for (int i = 0; i < sc.iterations; ++i)
          plan.entries.push_back(
              {sc, c, s, i, derive_run_seed(shuffle_seed, sc.name, c.name, s.name, i)});

  // Fisher-Yates with an explicit RNG keeps the order reproducible.
  Rng rng(mix_seed(shuffle_seed));
  for (size_t i = plan.entries.size(); i > 1; --i)
    std::swap(plan.entries[i - 1], plan.entries[rng.next_below(i)]);
  return plan;
}

std::vector<uint8_t> generate_file_content(uint64_t size, uint64_t seed) {
  std::vector<uint8_t> data(size);
  Rng rng(seed);
  size_t i = 0;
  for (; i + 8 <= size; i += 8) {
    const uint64_t v = rng.next_u64();
    std::memcpy(data.data() + i, &v, 8);
  }
  if (i < size) {
    const uint64_t v = rng.next_u64();
    std::memcpy(data.data() + i, &v, size - i);
  }
  return data;
}

uint64_t content_hash(const std::vector<uint8_t>& data) {
  return fnv1a(std::string_view(reinterpret_cast<const char*>(data.data()), data.size()));
}

TransferOutcome classify_outcome(const std::optional<std::vector<uint8_t>>& downloaded,
                                 const std::vector<uint8_t>& served, double wall_time_s,
                                 double timeout_s) {
  TransferOutcome out;
  if (downloaded && wall_time_s < timeout_s &&
      content_hash(*downloaded) == content_hash(served) && *downloaded == served) {
    out.status = TransferStatus::Success;
    out.time_to_completion_s = wall_time_s;
    out.goodput_bps = static_cast<double>(served.size()) * 8.0 / wall_time_s;
  } else if (wall_time_s >= timeout_s) {
    out.status = TransferStatus::Timeout;
  } else {
    out.status = TransferStatus::Error;
  }
  return out;
}

namespace {

CcAlgorithm algorithm_of(const EndpointSpec& ep) {
  switch (ep.kind) {
    case EndpointKind::BuiltinCubic: return CcAlgorithm::Cubic;
    case EndpointKind::BuiltinRateStartup: return CcAlgorithm::RateStartup;
    default: return CcAlgorithm::NewReno;
  }
}

void write_file(const fs::path& path, const std::vector<uint8_t>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
}

std::optional<std::vector<uint8_t>> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  return std::vector<uint8_t>((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
}

uint64_t wire_bytes(const Trace& trace, Direction dir) {
  uint64_t total = 0;
  for (const auto& r : trace.records())
    if (r.tap == Tap::ServerSide && r.direction == dir) total += r.size;
  return total;
}

struct ChildProcess {
  pid_t pid = -1;

  ChildProcess() = default;
  ChildProcess(const ChildProcess&) = delete;
  ChildProcess& operator=(const ChildProcess&) = delete;
  ChildProcess(ChildProcess&& other) noexcept : pid(other.pid) { other.pid = -1; }
  ChildProcess& operator=(ChildProcess&& other) noexcept {
    if (this != &other) {
      kill_now();
      pid = other.pid;
      other.pid = -1;
    }
    return *this;
  }

  static ChildProcess spawn(const std::string& command, const std::string& workdir,
                            const std::vector<std::pair<std::string, std::string>>& env) {
    ChildProcess child;
    child.pid = ::fork();
    if (child.pid == 0) {
      if (!workdir.empty()) {
        if (::chdir(workdir.c_str()) != 0) _exit(127);
      }
      for (const auto& [k, v] : env) ::setenv(k.c_str(), v.c_str(), 1);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), nullptr);
      _exit(127);
    }
    return child;
  }

  // Returns the exit code, or nullopt on timeout (the process is then killed).
  std::optional<int> wait_for(double timeout_s) {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    while (std::chrono::steady_clock::now() < deadline) {
      int status = 0;
      const pid_t r = ::waitpid(pid, &status, WNOHANG);
      if (r == pid) {
        pid = -1;
        return WIFEXITED(status) ? WEXITSTATUS(status) : 128;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    kill_now();
    return std::nullopt;
  }

  void kill_now() {
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      int status = 0;
      ::waitpid(pid, &status, 0);
      pid = -1;
    }
  }

  ~ChildProcess() { kill_now(); }
};

struct RunContext {
  const PlanEntry& entry;
  fs::path www_dir;
  fs::path downloads_dir;
  fs::path logs_dir;
  fs::path trace_path;
  std::string file_name;
  std::vector<uint8_t> served;
};

TransferOutcome run_builtin_pair(const RunContext& ctx) {
  const ScenarioSpec& spec = ctx.entry.scenario;
  ServerEndpoint server(algorithm_of(ctx.entry.server));
  server.add_file(ctx.file_name, ctx.served);
  const uint32_t conn_id = static_cast<uint32_t>(mix_seed(ctx.entry.seed ^ 0xc0))
                           | 1u;  // nonzero
  ClientEndpoint client(ctx.file_name, conn_id);

  RunIdentity id{spec.name, ctx.entry.client.name, ctx.entry.server.name,
                 ctx.entry.iteration, ctx.entry.seed};
  SimResult sim = run_simulation(spec, server, client, ctx.entry.seed, id);
  write_trace_file(sim.trace, ctx.trace_path.string());

  std::optional<std::vector<uint8_t>> downloaded;
  if (sim.completed) {
    downloaded = std::move(sim.downloaded);
    write_file(ctx.downloads_dir / ctx.file_name, *downloaded);
  }
  TransferOutcome outcome =
      classify_outcome(downloaded, ctx.served, sim.finish_time, spec.timeout_s);
  if (outcome.status == TransferStatus::Success) {
    // The trace is the source of truth for reported metrics.
    outcome = compute_outcome_metrics(sim.trace, spec);
  } else {
    outcome.wire_bytes_forward = wire_bytes(sim.trace, Direction::Forward);
    outcome.wire_bytes_reverse = wire_bytes(sim.trace, Direction::Reverse);
  }
  return outcome;
}

TransferOutcome run_live_pair(const RunContext& ctx) {
  const ScenarioSpec& spec = ctx.entry.scenario;
  RunIdentity id{spec.name, ctx.entry.client.name, ctx.entry.server.name,
                 ctx.entry.iteration, ctx.entry.seed};
  UdpLinkDriver driver(spec, ctx.entry.seed, id);

  // Reserve a port for the server ahead of spawning it.
  uint16_t server_port = 0;
  ::close(bind_udp_socket("127.0.0.1", 0, &server_port));
  const std::string server_addr = "127.0.0.1:" + std::to_string(server_port);
  driver.set_server_addr(server_addr);

  std::atomic<bool> stop{false};
  const double grace = 5.0;

  std::thread driver_thread([&] { driver.run(spec.timeout_s + grace, stop); });

  // Server side.
  std::optional<ChildProcess> server_proc;
  std::thread server_thread;
  ServerEndpoint builtin_server(algorithm_of(ctx.entry.server));
  if (ctx.entry.server.kind == EndpointKind::External) {
    server_proc = ChildProcess::spawn(
        ctx.entry.server.external_command, ctx.entry.server.external_workdir,
        {{"ROLE", "server"},
         {"WWW_DIR", ctx.www_dir.string()},
         {"LOGS_DIR", ctx.logs_dir.string()},
         {"BIND_ADDR", server_addr}});
  } else {
    builtin_server.add_file(ctx.file_name, ctx.served);
    server_thread = std::thread([&] {
      run_endpoint_over_udp(builtin_server, server_addr, "", spec.timeout_s + grace, &stop);
    });
  }
  // Give the server a moment to bind before traffic starts.
  std::this_thread::sleep_for(std::chrono::milliseconds(200));

  // Client side (blocking; its runtime is the measured wall time).
  const auto start = std::chrono::steady_clock::now();
  bool client_ok = false;
  if (ctx.entry.client.kind == EndpointKind::External) {
    ChildProcess client_proc = ChildProcess::spawn(
        ctx.entry.client.external_command, ctx.entry.client.external_workdir,
        {{"ROLE", "client"},
         {"DOWNLOADS_DIR", ctx.downloads_dir.string()},
         {"LOGS_DIR", ctx.logs_dir.string()},
         {"REQUESTS", ctx.file_name},
         {"SERVER_ADDR", driver.client_side_addr()}});
    const auto exit_code = client_proc.wait_for(spec.timeout_s);
    client_ok = exit_code.has_value() && *exit_code == 0;
  } else {
    const uint32_t conn_id =
        static_cast<uint32_t>(mix_seed(ctx.entry.seed ^ 0xc0)) | 1u;
    ClientEndpoint client(ctx.file_name, conn_id);
    client_ok = run_endpoint_over_udp(client, "", driver.client_side_addr(),
                                      spec.timeout_s, &stop) &&
                !client.failed();
    if (client_ok) write_file(ctx.downloads_dir / ctx.file_name, client.received_data());
  }
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count();
  if (!client_ok && wall < spec.timeout_s) wall = std::min(wall, spec.timeout_s - 1e-3);

  stop.store(true);
  driver_thread.join();
  if (server_thread.joinable()) server_thread.join();
  if (server_proc) server_proc->kill_now();

  Trace trace = driver.take_trace();
  write_trace_file(trace, ctx.trace_path.string());

  const auto downloaded = read_file(ctx.downloads_dir / ctx.file_name);
  TransferOutcome outcome = classify_outcome(client_ok ? downloaded : std::nullopt,
                                             ctx.served, wall, spec.timeout_s);
  if (outcome.status == TransferStatus::Success) {
    try {
      outcome = compute_outcome_metrics(trace, spec);
    } catch (const InconsistentTraceError&) {
      // Opaque traffic (no plaintext headers): keep the wall-clock metrics.
      outcome.efficiency = outcome.goodput_bps / spec.forward.data_rate_bps;
      outcome.wire_bytes_forward = wire_bytes(trace, Direction::Forward);
      outcome.wire_bytes_reverse = wire_bytes(trace, Direction::Reverse);
    }
  } else {
    outcome.wire_bytes_forward = wire_bytes(trace, Direction::Forward);
    outcome.wire_bytes_reverse = wire_bytes(trace, Direction::Reverse);
  }
  return outcome;
}

}  // namespace

ResultMatrix execute_plan(const RunPlan& plan, const std::string& out_dir) {
  ResultMatrix matrix;
  matrix.version = kHarnessVersion;
  matrix.shuffle_seed = plan.shuffle_seed;

  const fs::path out(out_dir);
  fs::create_directories(out / "traces");
  fs::create_directories(out / "www");
  fs::create_directories(out / "downloads");
  fs::create_directories(out / "logs");

  // Scenario roster in first-appearance order of the unshuffled product is
  // not recoverable from the shuffled entries; sort by name instead.
  std::map<std::string, ScenarioSpec> scenario_index;
  for (const auto& e : plan.entries) scenario_index.emplace(e.scenario.name, e.scenario);
  for (const auto& [name, spec] : scenario_index) matrix.scenarios.push_back(spec);

  // Pre-size every cell so outcomes land at their iteration index.
  for (const auto& e : plan.entries) {
    auto& cell = matrix.cells[e.scenario.name][{e.client.name, e.server.name}];
    if (cell.size() < static_cast<size_t>(e.scenario.iterations))
      cell.resize(e.scenario.iterations);
  }

  for (const auto& entry : plan.entries) {
    const std::string run_tag = entry.scenario.name + "_" + entry.client.name + "_" +
                                entry.server.name + "_" + std::to_string(entry.iteration);
    RunContext ctx{entry,
                   out / "www",
                   out / "downloads",
                   out / "logs",
                   out / "traces" / (run_tag + ".trace"),
                   run_tag + ".bin",
                   generate_file_content(entry.scenario.file_size,
                                         mix_seed(entry.seed ^ 0xf11eull))};
    write_file(ctx.www_dir / ctx.file_name, ctx.served);

    TransferOutcome outcome;
    try {
      const bool both_builtin = entry.client.kind != EndpointKind::External &&
                                entry.server.kind != EndpointKind::External;
      outcome = both_builtin ? run_builtin_pair(ctx) : run_live_pair(ctx);
    } catch (const std::exception&) {
      outcome.status = TransferStatus::Error;  // infrastructure failure
    }
    outcome.trace_file = "traces/" + run_tag + ".trace";
    matrix.cells[entry.scenario.name][{entry.client.name, entry.server.name}]
        [entry.iteration] = outcome;
  }
  return matrix;
}

}  // namespace satqic
