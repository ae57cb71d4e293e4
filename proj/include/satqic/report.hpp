#pragma once

#include <optional>
#include <string>
#include <vector>

#include "satqic/orchestrator.hpp"

namespace satqic {

// result.json writer/reader. Serialization is canonical: fixed key order and
// round-trip-exact float formatting, so identical matrices give identical
// bytes.
void emit_results(const ResultMatrix& matrix, const std::string& out_dir);
std::string results_to_json(const ResultMatrix& matrix);
ResultMatrix parse_results(const std::string& json_text);
ResultMatrix read_results(const std::string& out_dir);

struct HeatmapCell {
  std::string client;
  std::string server;
  std::optional<double> mean_goodput_bps;  // absent -> failure marker applies
  std::string failure_marker;              // "T" or "E" when no run succeeded
  double normalized = 0.0;                 // min-max over the scenario
};

struct HeatmapData {
  std::string scenario;
  std::vector<std::string> clients;  // rows
  std::vector<std::string> servers;  // columns
  std::vector<HeatmapCell> cells;    // row-major
};

HeatmapData render_heatmap(const ResultMatrix& matrix, const std::string& scenario);
void write_heatmap(const HeatmapData& data, const std::string& svg_path,
                   const std::string& csv_path);

struct CdfSeries {
  std::string scenario;
  std::vector<double> efficiencies;  // sorted, failures at 0
};

std::vector<CdfSeries> render_cdf(const ResultMatrix& matrix,
                                  const std::vector<std::string>& scenarios);
void write_cdf(const std::vector<CdfSeries>& series, const std::string& svg_path,
               const std::string& csv_path);

struct TimeOffsetPoint {
  int iteration = 0;
  double time_s = 0.0;
  uint64_t offset = 0;
  uint32_t length = 0;
  OffsetClass cls = OffsetClass::FirstTransmission;
  bool highlighted = false;
};

struct TimeOffsetData {
  RunIdentity id;  // iteration field unused
  int highlighted_iteration = -1;  // select_median_run choice, -1 if none
  std::vector<TimeOffsetPoint> points;
};

// Builds the time-offset plot for one (scenario, client, server) cell from
// the traces of all its iterations. Returns nullopt when no iteration has
// annotated data records.
std::optional<TimeOffsetData> render_time_offset(
    const std::vector<Trace>& iterations, const std::vector<TransferOutcome>& outcomes);
void write_time_offset(const TimeOffsetData& data, const std::string& svg_path,
                       const std::string& csv_path);

// Per-implementation-per-role efficiency distributions with quartiles
// (violin source data; KDE rendering is out of scope).
void write_violin_data(const ResultMatrix& matrix, const std::string& scenario,
                       const std::string& csv_path);

// Abstract plot color classes mapped in one palette table.
std::string palette_color(const std::string& cls);

}  // namespace satqic
