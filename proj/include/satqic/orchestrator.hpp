#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "satqic/analysis.hpp"
#include "satqic/scenarios.hpp"

namespace satqic {

enum class EndpointKind { BuiltinNewReno, BuiltinCubic, BuiltinRateStartup, External };

struct EndpointSpec {
  std::string name;
  EndpointKind kind = EndpointKind::BuiltinNewReno;
  std::string external_command;  // run via /bin/sh -c, External only
  std::string external_workdir;
};

// Built-in endpoints by their canonical names: newreno, cubic, ratestartup.
std::optional<EndpointSpec> builtin_endpoint(const std::string& name);

struct PlanEntry {
  ScenarioSpec scenario;
  EndpointSpec client;
  EndpointSpec server;
  int iteration = 0;   // 0-based within the triple
  uint64_t seed = 0;   // per-run RNG seed
};

struct RunPlan {
  uint64_t shuffle_seed = 0;
  std::vector<PlanEntry> entries;  // seeded permutation of the cross product
};

// Full cross product x iterations, deterministically shuffled; per-run seeds
// derive from (shuffle_seed, scenario, client, server, iteration).
RunPlan make_plan(const std::vector<ScenarioSpec>& scenarios,
                  const std::vector<EndpointSpec>& clients,
                  const std::vector<EndpointSpec>& servers, uint64_t shuffle_seed);

uint64_t derive_run_seed(uint64_t shuffle_seed, const std::string& scenario,
                         const std::string& client, const std::string& server,
                         int iteration);

// scenario -> (client, server) -> outcomes in iteration order.
struct ResultMatrix {
  std::string version;
  uint64_t shuffle_seed = 0;
  std::vector<ScenarioSpec> scenarios;
  std::map<std::string, std::map<CellKey, std::vector<TransferOutcome>>> cells;
};

// Status classification of one finished (or timed-out) run.
TransferOutcome classify_outcome(const std::optional<std::vector<uint8_t>>& downloaded,
                                 const std::vector<uint8_t>& served, double wall_time_s,
                                 double timeout_s);

// Executes every plan entry sequentially. Traces and per-run files land under
// out_dir (traces/, www/, downloads/). Infrastructure failures are recorded
// as Error outcomes for the affected entry.
ResultMatrix execute_plan(const RunPlan& plan, const std::string& out_dir);

std::vector<uint8_t> generate_file_content(uint64_t size, uint64_t seed);
uint64_t content_hash(const std::vector<uint8_t>& data);

inline constexpr const char* kHarnessVersion = "satqic 0.1.0";

}  // namespace satqic
