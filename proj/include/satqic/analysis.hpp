#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "satqic/capture.hpp"
#include "satqic/scenarios.hpp"

namespace satqic {

// Sorted, disjoint, non-adjacent half-open byte ranges.
class IntervalSet {
 public:
  struct InsertResult {
    uint64_t new_bytes = 0;
    uint64_t overlap_bytes = 0;
  };

  // Inserts [start, end); returns how many bytes were newly covered and how
  // many were already covered. start < end required.
  InsertResult insert(uint64_t start, uint64_t end);

  bool covers(uint64_t start, uint64_t end) const;
  bool contains(uint64_t point) const;

  // Length of the contiguous prefix starting at 0.
  uint64_t contiguous_prefix() const;

  uint64_t total_bytes() const { return total_bytes_; }
  bool empty() const { return ranges_.empty(); }

  // start -> end
  const std::map<uint64_t, uint64_t>& ranges() const { return ranges_; }

 private:
  std::map<uint64_t, uint64_t> ranges_;
  uint64_t total_bytes_ = 0;
};

enum class TransferStatus { Success, Timeout, Error };

struct TransferOutcome {
  TransferStatus status = TransferStatus::Error;
  double time_to_completion_s = 0.0;  // Success only
  double goodput_bps = 0.0;           // Success only
  double efficiency = 0.0;            // 0 for non-Success
  uint64_t wire_bytes_forward = 0;
  uint64_t wire_bytes_reverse = 0;
  double redundancy_factor = 0.0;
  uint64_t nonmonotone_offset_count = 0;
  std::string trace_file;  // relative path, set by the orchestrator
};

enum class OffsetClass { FirstTransmission, Retransmission };

struct OffsetEvent {
  double timestamp_s = 0.0;
  uint64_t offset = 0;
  uint32_t length = 0;
  OffsetClass cls = OffsetClass::FirstTransmission;
};

// Classifies every annotated Forward Data record at the ServerSide tap by
// first-seen byte intervals: any overlap with already-seen bytes marks the
// whole event as a retransmission.
std::vector<OffsetEvent> classify_offsets(const Trace& trace);

class InconsistentTraceError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Recomputes the Success metrics of a run from its trace. The clock starts at
// the first ClientSide Request record and stops at the ClientSide delivery
// that first completes coverage of [0, file_size).
TransferOutcome compute_outcome_metrics(const Trace& trace, const ScenarioSpec& spec);

struct QuartileSummary {
  double q1 = 0.0;
  double q2 = 0.0;
  double q3 = 0.0;
};

// Interpolated quantile over a sorted sample (linear between order statistics).
double quantile(const std::vector<double>& sorted, double q);
QuartileSummary quartiles(std::vector<double> values);

struct CellKey {
  std::string client;
  std::string server;
  auto operator<=>(const CellKey&) const = default;
};

struct ScenarioAggregate {
  // Over Success outcomes only.
  std::optional<double> mean_goodput_bps;
  std::optional<double> max_goodput_bps;
  std::optional<double> mean_efficiency;
  std::optional<double> max_efficiency;
  int successes = 0;
  int timeouts = 0;
  int errors = 0;
  // Per-run efficiency with non-Success as 0, sorted ascending (CDF series).
  std::vector<double> efficiency_cdf;
  // Per-cell mean goodput over successes; absent when the cell has none.
  std::map<CellKey, std::optional<double>> cell_mean_goodput;
  // Per-implementation-per-role efficiency distributions.
  std::map<std::string, std::vector<double>> client_role_efficiency;
  std::map<std::string, std::vector<double>> server_role_efficiency;
};

ScenarioAggregate aggregate(const std::map<CellKey, std::vector<TransferOutcome>>& cells);

// Among Success outcomes sorted by time to completion, picks the lower
// median; returns the index into `outcomes`.
size_t select_median_run(const std::vector<TransferOutcome>& outcomes);

}  // namespace satqic
