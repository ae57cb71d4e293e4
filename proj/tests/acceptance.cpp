// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion is self-contained and uses the library directly,
// except the end-to-end determinism check, which drives the CLI binary named
// by the SATQIC_BIN environment variable.

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <variant>
#include <vector>

#include "satqic/analysis.hpp"
#include "satqic/endpoint.hpp"
#include "satqic/linkem.hpp"
#include "satqic/orchestrator.hpp"
#include "satqic/report.hpp"
#include "satqic/rng.hpp"
#include "satqic/sim.hpp"

using namespace satqic;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int n, const std::string& what, bool ok, const std::string& detail = "") {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << what;
  if (!detail.empty()) std::cout << " [" << detail << "]";
  std::cout << "\n";
  if (!ok) ++g_failures;
}

double elapsed_s(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::vector<uint8_t> make_content(uint64_t size, uint64_t seed) {
  return generate_file_content(size, seed);
}

struct TransferResult {
  bool completed = false;
  double finish_time = 0.0;
  double efficiency = 0.0;
  Trace trace;
};

TransferResult run_transfer(const ScenarioSpec& spec, CcAlgorithm cca, uint64_t seed,
                            const std::vector<uint8_t>& content) {
  ServerEndpoint server(cca);
  server.add_file("f", content);
  ClientEndpoint client("f", 1);
  TransferResult r;
  SimResult sim = run_simulation(spec, server, client, seed);
  r.completed = sim.completed;
  r.finish_time = sim.finish_time;
  r.trace = std::move(sim.trace);
  if (r.completed)
    r.efficiency = static_cast<double>(spec.file_size) * 8.0 / r.finish_time /
                   spec.forward.data_rate_bps;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------

void criterion_1_rtt() {
  const auto start = Clock::now();
  Channel ch(builtin_scenario("SAT"), 1);
  const double rtt = ch.measured_rtt(100);
  const double serialization = 100.0 * 8 / 20e6 + 100.0 * 8 / 2e6;
  const bool ok =
      std::fabs(rtt - (0.6 + serialization)) <= 0.001 && elapsed_s(start) < 1.0;
  std::ostringstream d;
  d << "measured " << rtt * 1000 << " ms";
  report(1, "SAT channel RTT is 600 ms plus serialization", ok, d.str());
}

void criterion_2_rate() {
  Channel ch(builtin_scenario("SAT"), 2);
  const double window_start = 1.3, window_end = 11.3;  // after the 0.3 s delay
  uint64_t delivered_bytes = 0;
  double now = 0.0;
  while (now < 12.0) {
    const auto fate = ch.offer(Direction::Forward, kMtuBytes, now);
    if (const auto* d = std::get_if<Delivered>(&fate)) {
      if (d->delivery_time > window_start && d->delivery_time <= window_end)
        delivered_bytes += kMtuBytes;
    }
    now += 1e-4;  // offered load far above the line rate
  }
  const double rate = static_cast<double>(delivered_bytes) * 8.0 /
                      (window_end - window_start);
  const bool ok = std::fabs(rate - 20e6) <= 0.02 * 20e6;
  std::ostringstream d;
  d << rate / 1e6 << " Mbit/s";
  report(2, "saturated forward direction delivers 20 Mbit/s within 2%", ok, d.str());
}

void criterion_3_loss() {
  ScenarioSpec spec = builtin_scenario("SAT");
  spec.forward.data_rate_bps = 1e9;
  spec.forward.queue_capacity = 100000;
  spec.forward.plr = 0.01;

  auto drop_pattern = [&](uint64_t seed) {
    Channel ch(spec, seed);
    std::vector<uint8_t> fates;
    double now = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const auto fate = ch.offer(Direction::Forward, kMtuBytes, now);
      fates.push_back(static_cast<uint8_t>(fate.index()));
      now += 2e-5;
    }
    return fates;
  };

  const auto a = drop_pattern(77);
  const auto b = drop_pattern(77);
  int losses = 0, overflows = 0;
  for (uint8_t f : a) {
    if (f == 2) ++losses;     // DroppedRandomLoss
    if (f == 1) ++overflows;  // DroppedQueueOverflow
  }
  const bool ok = losses >= 905 && losses <= 1095 && overflows == 0 && a == b;
  std::ostringstream d;
  d << losses << " losses in 100000";
  report(3, "plr 0.01 drops fall in the binomial 3-sigma band, deterministically",
         ok, d.str());
}

// Results shared between criteria 4 and 5.
std::map<std::pair<int, std::string>, TransferResult> g_baseline;

void criterion_4_terr() {
  const auto spec = builtin_scenario("TERR");
  const auto content = make_content(spec.file_size, 4);
  bool ok = true;
  std::ostringstream d;
  for (CcAlgorithm cca : {CcAlgorithm::NewReno, CcAlgorithm::Cubic}) {
    const auto start = Clock::now();
    auto r = run_transfer(spec, cca, 1, content);
    const double wall = elapsed_s(start);
    ok = ok && r.completed && r.efficiency >= 0.85 && wall < 30.0;
    d << (cca == CcAlgorithm::NewReno ? "newreno " : "cubic ") << r.efficiency << " ";
    g_baseline[{static_cast<int>(cca), "TERR"}] = std::move(r);
  }
  report(4, "10 MiB over TERR reaches efficiency >= 0.85 for NewReno and CUBIC", ok,
         d.str());
}

void criterion_5_sat() {
  const auto spec = builtin_scenario("SAT");
  const auto content = make_content(spec.file_size, 4);
  bool ok = true;
  std::ostringstream d;
  for (CcAlgorithm cca : {CcAlgorithm::NewReno, CcAlgorithm::Cubic}) {
    const auto r = run_transfer(spec, cca, 1, content);
    const auto& terr = g_baseline[{static_cast<int>(cca), "TERR"}];
    ok = ok && r.completed && terr.completed && r.efficiency < terr.efficiency &&
         r.finish_time >= 3.0;
    d << (cca == CcAlgorithm::NewReno ? "newreno " : "cubic ") << r.efficiency
      << " in " << r.finish_time << "s ";
  }
  report(5, "SAT efficiency degrades against TERR and takes >= 3 s", ok, d.str());
}

void criterion_6_clusters() {
  // The directional cluster finding on the lossy satellite path. The built-in
  // loss-based senders settle near the AIMD equilibrium (roughly a dozen
  // packets per 600 ms RTT at plr 0.01), so the probe transfer is sized to
  // finish within the timeout at that rate.
  auto satl = builtin_scenario("SATL");
  satl.file_size = 2 * 1024 * 1024;
  auto sat = builtin_scenario("SAT");
  sat.file_size = satl.file_size;
  const auto content = make_content(satl.file_size, 6);

  auto mean_eff = [&](const ScenarioSpec& spec, CcAlgorithm cca) {
    double sum = 0.0;
    int n = 0;
    for (int i = 0; i < 10; ++i) {
      const auto r = run_transfer(spec, cca, mix_seed(6000 + i), content);
      if (r.completed) {
        sum += r.efficiency;
        ++n;
      }
    }
    return n > 0 ? sum / n : 0.0;
  };

  const double reno_satl = mean_eff(satl, CcAlgorithm::NewReno);
  const double cubic_satl = mean_eff(satl, CcAlgorithm::Cubic);
  const double reno_sat = mean_eff(sat, CcAlgorithm::NewReno);
  const bool ok = reno_satl > 0.0 && cubic_satl > 0.0 && reno_satl < cubic_satl &&
                  reno_satl < 0.5 * reno_sat;
  std::ostringstream d;
  d << "newreno SATL " << reno_satl << ", cubic SATL " << cubic_satl
    << ", newreno SAT " << reno_sat;
  report(6, "lossy-path clusters: NewReno collapses below CUBIC and below half its "
            "loss-free mean", ok, d.str());
}

void criterion_7_intervals() {
  constexpr uint64_t space = 1 << 20;
  std::vector<uint8_t> bitmap(space, 0);
  IntervalSet set;
  Rng rng(7);
  bool ok = true;
  for (int i = 0; i < 10000 && ok; ++i) {
    const uint64_t start = rng.next_below(space);
    const uint64_t len = 1 + rng.next_below(4096);
    const uint64_t end = std::min(space, start + len);
    if (start >= end) continue;
    uint64_t fresh = 0, overlap = 0;
    for (uint64_t b = start; b < end; ++b) {
      (bitmap[b] ? overlap : fresh)++;
      bitmap[b] = 1;
    }
    const auto ins = set.insert(start, end);
    ok = ins.new_bytes == fresh && ins.overlap_bytes == overlap;
  }
  uint64_t covered = 0;
  for (uint8_t b : bitmap) covered += b;
  ok = ok && set.total_bytes() == covered;
  report(7, "interval set matches the brute-force bitmap over 10^4 insertions", ok);
}

void criterion_8_metric_rules() {
  TransferOutcome s1, s2, t;
  s1.status = TransferStatus::Success;
  s1.efficiency = 0.5;
  s1.goodput_bps = 2e6;
  s2.status = TransferStatus::Success;
  s2.efficiency = 0.25;
  s2.goodput_bps = 1e6;
  t.status = TransferStatus::Timeout;

  std::map<CellKey, std::vector<TransferOutcome>> cells;
  cells[{"a", "s"}] = {s1, t, s2};
  const auto agg = aggregate(cells);
  const bool ok = agg.mean_efficiency && *agg.mean_efficiency == 0.375 &&
                  agg.mean_goodput_bps && *agg.mean_goodput_bps == 1.5e6 &&
                  agg.timeouts == 1 && agg.errors == 0 && agg.successes == 2 &&
                  agg.efficiency_cdf == std::vector<double>{0.0, 0.25, 0.5};
  report(8, "aggregation excludes failures from means and pins them at 0 in the CDF",
         ok);
}

void criterion_9_redundancy() {
  // Every data packet crosses the forward link seven times.
  constexpr uint64_t chunk = 1475;
  constexpr int chunks = 10;
  ScenarioSpec spec = builtin_scenario("SAT");
  spec.file_size = chunk * chunks;

  Trace trace;
  PacketRecord req;
  req.timestamp_ns = 0;
  req.tap = Tap::ClientSide;
  req.direction = Direction::Reverse;
  req.size = 20;
  req.fate = RecordFate::Delivered;
  req.annotation = Annotation{PacketKind::Request, 0, 0, 1};
  trace.record(req);

  int64_t ts = 1;
  for (int copy = 0; copy < 7; ++copy) {
    for (int c = 0; c < chunks; ++c) {
      PacketRecord r;
      r.timestamp_ns = ts++;
      r.tap = Tap::ServerSide;
      r.direction = Direction::Forward;
      r.size = static_cast<int>(chunk) + 25;
      r.fate = RecordFate::Delivered;
      r.annotation = Annotation{PacketKind::Data, static_cast<uint64_t>(c) * chunk,
                                chunk, static_cast<uint64_t>(copy * chunks + c + 1)};
      trace.record(r);
    }
  }
  for (int c = 0; c < chunks; ++c) {
    PacketRecord r;
    r.timestamp_ns = to_ns(1.0) + c;
    r.tap = Tap::ClientSide;
    r.direction = Direction::Forward;
    r.size = static_cast<int>(chunk) + 25;
    r.fate = RecordFate::Delivered;
    r.annotation = Annotation{PacketKind::Data, static_cast<uint64_t>(c) * chunk,
                              chunk, static_cast<uint64_t>(c + 1)};
    trace.record(r);
  }

  const auto out = compute_outcome_metrics(trace, spec);
  const bool ok = out.status == TransferStatus::Success &&
                  out.redundancy_factor >= 6.9 && out.redundancy_factor <= 7.1;
  std::ostringstream d;
  d << "redundancy " << out.redundancy_factor;
  report(9, "sevenfold data transmission yields redundancy in [6.9, 7.1]", ok, d.str());
}

void criterion_10_determinism() {
  const char* bin = std::getenv("SATQIC_BIN");
  if (!bin) {
    report(10, "end-to-end run determinism", false, "SATQIC_BIN not set");
    return;
  }
  const fs::path base =
      fs::temp_directory_path() / ("satqic_accept_" + std::to_string(::getpid()));
  fs::remove_all(base);
  fs::create_directories(base);

  auto spec = builtin_scenario("TERR");
  spec.file_size = 300000;
  spec.iterations = 2;
  spec.timeout_s = 30.0;
  const fs::path scenario_file = base / "scenario.txt";
  std::ofstream(scenario_file) << serialize_scenario(spec);

  auto invoke = [&](const std::string& out) {
    const std::string cmd = std::string("\"") + bin + "\" run --scenario " +
                            scenario_file.string() +
                            " --clients newreno --servers cubic --seed 5 --out " +
                            (base / out).string() + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };

  bool ok = invoke("out1") && invoke("out2");
  if (ok) {
    const std::string r1 = slurp(base / "out1" / "result.json");
    ok = !r1.empty() && r1 == slurp(base / "out2" / "result.json");
    int traces = 0;
    for (const auto& f : fs::directory_iterator(base / "out1" / "traces")) {
      ++traces;
      const auto other = base / "out2" / "traces" / f.path().filename();
      ok = ok && fs::exists(other) && slurp(f.path()) == slurp(other);
    }
    ok = ok && traces == 2;
  }
  fs::remove_all(base);
  report(10, "two identically seeded runs produce byte-identical results and traces",
         ok);
}

void criterion_11_time_offset() {
  const fs::path base =
      fs::temp_directory_path() / ("satqic_accept_plot_" + std::to_string(::getpid()));
  fs::create_directories(base);

  auto run_cell = [&](const ScenarioSpec& spec, const std::string& csv_name) {
    const auto content = make_content(spec.file_size, 11);
    std::vector<Trace> traces;
    std::vector<TransferOutcome> outcomes;
    for (int i = 0; i < 3; ++i) {
      auto r = run_transfer(spec, CcAlgorithm::NewReno, mix_seed(1100 + i), content);
      TransferOutcome o = compute_outcome_metrics(r.trace, spec);
      traces.push_back(std::move(r.trace));
      outcomes.push_back(std::move(o));
    }
    const auto plot = render_time_offset(traces, outcomes);
    int expected_highlight = static_cast<int>(select_median_run(outcomes));
    write_time_offset(*plot, (base / "p.svg").string(), (base / csv_name).string());
    return expected_highlight;
  };

  auto inspect_csv = [&](const std::string& csv_name, int expected_highlight,
                         int& retx_rows, bool& highlight_ok) {
    std::ifstream in(base / csv_name);
    std::string line;
    std::getline(in, line);  // header
    retx_rows = 0;
    highlight_ok = true;
    bool any_highlight = false;
    while (std::getline(in, line)) {
      std::stringstream row(line);
      std::string field;
      std::vector<std::string> fields;
      while (std::getline(row, field, ',')) fields.push_back(field);
      if (fields.size() != 6) {
        highlight_ok = false;
        continue;
      }
      if (fields[4] == "retransmission") ++retx_rows;
      const bool highlighted = fields[5] == "1";
      if (highlighted) any_highlight = true;
      if (highlighted != (std::stoi(fields[0]) == expected_highlight))
        highlight_ok = false;
    }
    highlight_ok = highlight_ok && any_highlight;
  };

  auto sat = builtin_scenario("SAT");
  sat.file_size = 1 << 20;
  auto satl = builtin_scenario("SATL");
  satl.file_size = 1 << 20;

  const int sat_highlight = run_cell(sat, "sat.csv");
  const int satl_highlight = run_cell(satl, "satl.csv");

  int sat_retx = 0, satl_retx = 0;
  bool sat_hl_ok = false, satl_hl_ok = false;
  inspect_csv("sat.csv", sat_highlight, sat_retx, sat_hl_ok);
  inspect_csv("satl.csv", satl_highlight, satl_retx, satl_hl_ok);

  const bool ok = sat_retx == 0 && satl_retx >= 1 && sat_hl_ok && satl_hl_ok;
  std::ostringstream d;
  d << "SAT retx rows " << sat_retx << ", SATL retx rows " << satl_retx;
  fs::remove_all(base);
  report(11, "time-offset sidecar: loss-free run has no retransmission points, lossy "
             "run has some, median run highlighted", ok, d.str());
}

}  // namespace

int main() {
  criterion_1_rtt();
  criterion_2_rate();
  criterion_3_loss();
  criterion_4_terr();
  criterion_5_sat();
  criterion_6_clusters();
  criterion_7_intervals();
  criterion_8_metric_rules();
  criterion_9_redundancy();
  criterion_10_determinism();
  criterion_11_time_offset();
  std::cout << (g_failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES PRESENT")
            << "\n";
  return g_failures == 0 ? 0 : 1;
}
