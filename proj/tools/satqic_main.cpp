#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "satqic/orchestrator.hpp"
#include "satqic/report.hpp"

namespace fs = std::filesystem;
using namespace satqic;

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<ScenarioSpec> resolve_scenarios(const std::string& arg) {
  std::vector<ScenarioSpec> out;
  for (const auto& name : split_csv(arg)) {
    if (is_builtin_scenario(name)) {
      out.push_back(builtin_scenario(name));
    } else if (fs::exists(name)) {
      std::ifstream in(name);
      std::stringstream buf;
      buf << in.rdbuf();
      out.push_back(parse_scenario(buf.str()));
    } else {
      throw CLI::ValidationError("--scenario",
                                 "unknown scenario or missing file: " + name);
    }
  }
  return out;
}

std::vector<EndpointSpec> resolve_endpoints(
    const std::string& arg, const std::map<std::string, std::string>& externals) {
  std::vector<EndpointSpec> out;
  for (const auto& name : split_csv(arg)) {
    if (auto it = externals.find(name); it != externals.end()) {
      out.push_back({name, EndpointKind::External, it->second, ""});
    } else if (auto ep = builtin_endpoint(name)) {
      out.push_back(*ep);
    } else {
      throw CLI::ValidationError("endpoint", "unknown endpoint: " + name);
    }
  }
  return out;
}

int cmd_run(const std::string& scenario_arg, const std::string& clients_arg,
            const std::string& servers_arg,
            const std::vector<std::string>& external_args, int iterations,
            uint64_t seed, double timeout_s, const std::string& out_dir) {
  std::map<std::string, std::string> externals;
  for (const auto& e : external_args) {
    const auto eq = e.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--external", "expected <name>=<cmd>");
    externals[e.substr(0, eq)] = e.substr(eq + 1);
  }

  auto scenarios = resolve_scenarios(scenario_arg);
  for (auto& sc : scenarios) {
    if (iterations > 0) sc.iterations = iterations;
    if (timeout_s > 0) sc.timeout_s = timeout_s;
  }
  const auto clients = resolve_endpoints(clients_arg, externals);
  const auto servers = resolve_endpoints(servers_arg, externals);

  const RunPlan plan = make_plan(scenarios, clients, servers, seed);
  std::cerr << "executing " << plan.entries.size() << " runs\n";
  const ResultMatrix matrix = execute_plan(plan, out_dir);
  emit_results(matrix, out_dir);
  std::cerr << "wrote " << out_dir << "/result.json\n";
  return 0;
}

// Recomputes every run's metrics from its trace; the trace is the source of
// truth, so this rewrites result.json with identical values after `run`.
int cmd_analyze(const std::string& out_dir) {
  ResultMatrix matrix = read_results(out_dir);
  std::map<std::string, const ScenarioSpec*> specs;
  for (const auto& sc : matrix.scenarios) specs[sc.name] = &sc;

  for (auto& [scenario, cells] : matrix.cells) {
    for (auto& [key, runs] : cells) {
      for (auto& run : runs) {
        if (run.status != TransferStatus::Success) continue;
        const fs::path trace_path = fs::path(out_dir) / run.trace_file;
        if (!fs::exists(trace_path)) {
          std::cerr << "missing trace: " << trace_path << "\n";
          return 1;
        }
        const Trace trace = read_trace_file(trace_path.string());
        TransferOutcome fresh = compute_outcome_metrics(trace, *specs.at(scenario));
        fresh.trace_file = run.trace_file;
        run = fresh;
      }
    }
  }
  emit_results(matrix, out_dir);
  std::cerr << "reanalyzed metrics written to " << out_dir << "/result.json\n";
  return 0;
}

int cmd_report(const std::string& out_dir) {
  if (!fs::exists(fs::path(out_dir) / "result.json")) {
    std::cerr << "missing " << out_dir << "/result.json\n";
    return 1;
  }
  const ResultMatrix matrix = read_results(out_dir);
  const fs::path plots = fs::path(out_dir) / "plots";
  fs::create_directories(plots);

  std::vector<std::string> names;
  for (const auto& sc : matrix.scenarios) names.push_back(sc.name);

  for (const auto& name : names) {
    const auto heat = render_heatmap(matrix, name);
    write_heatmap(heat, (plots / ("heatmap_" + name + ".svg")).string(),
                  (plots / ("heatmap_" + name + ".csv")).string());
    write_violin_data(matrix, name, (plots / ("violin_" + name + ".csv")).string());
  }
  write_cdf(render_cdf(matrix, names), (plots / "cdf_efficiency.svg").string(),
            (plots / "cdf_efficiency.csv").string());

  for (const auto& [scenario, cells] : matrix.cells) {
    for (const auto& [key, runs] : cells) {
      std::vector<Trace> traces;
      for (const auto& run : runs) {
        const fs::path p = fs::path(out_dir) / run.trace_file;
        traces.push_back(fs::exists(p) ? read_trace_file(p.string()) : Trace{});
      }
      const auto plot = render_time_offset(traces, runs);
      const std::string base = "time_offset_" + scenario + "_" + key.client + "_" +
                               key.server;
      if (!plot) {
        std::cerr << "skipping " << base << ": no annotated iteration\n";
        continue;
      }
      write_time_offset(*plot, (plots / (base + ".svg")).string(),
                        (plots / (base + ".csv")).string());
    }
  }
  std::cerr << "plots written to " << plots << "\n";
  return 0;
}

int cmd_scenario(const std::string& name_or_file) {
  if (is_builtin_scenario(name_or_file)) {
    std::cout << serialize_scenario(builtin_scenario(name_or_file));
    return 0;
  }
  if (!fs::exists(name_or_file)) {
    std::cerr << "unknown scenario or missing file: " << name_or_file << "\n";
    return 2;
  }
  std::ifstream in(name_or_file);
  std::stringstream buf;
  buf << in.rdbuf();
  std::cout << serialize_scenario(parse_scenario(buf.str()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"satellite-link transport measurement harness"};
  app.require_subcommand(1);

  std::string scenario_arg = "SAT", clients_arg = "newreno,cubic",
              servers_arg = "newreno,cubic", out_dir = "results";
  std::vector<std::string> external_args;
  int iterations = 0;
  uint64_t seed = 1;
  double timeout_s = 0.0;

  auto* run = app.add_subcommand("run", "plan and execute the measurement matrix");
  run->add_option("--scenario", scenario_arg, "scenario names or files, comma-separated");
  run->add_option("--clients", clients_arg, "client endpoints, comma-separated");
  run->add_option("--servers", servers_arg, "server endpoints, comma-separated");
  run->add_option("--external", external_args, "<name>=<cmd> external endpoint");
  run->add_option("--iterations", iterations, "override iterations per combination");
  run->add_option("--seed", seed, "shuffle/derivation seed");
  run->add_option("--timeout-s", timeout_s, "override per-run timeout");
  run->add_option("--out", out_dir, "output directory");

  auto* analyze = app.add_subcommand("analyze", "recompute metrics from traces");
  analyze->add_option("--out", out_dir, "results directory");

  auto* report = app.add_subcommand("report", "render plot artifacts");
  report->add_option("--out", out_dir, "results directory");

  std::string scenario_name;
  auto* scenario = app.add_subcommand("scenario", "print a scenario definition");
  scenario->add_option("name", scenario_name, "builtin name or scenario file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed())
      return cmd_run(scenario_arg, clients_arg, servers_arg, external_args, iterations,
                     seed, timeout_s, out_dir);
    if (analyze->parsed()) return cmd_analyze(out_dir);
    if (report->parsed()) return cmd_report(out_dir);
    if (scenario->parsed()) return cmd_scenario(scenario_name);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
