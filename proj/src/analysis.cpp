#include "satqic/analysis.hpp"

#include <algorithm>
#include <cmath>

namespace satqic {

IntervalSet::InsertResult IntervalSet::insert(uint64_t start, uint64_t end) {
  if (start >= end) throw UsageError("empty or inverted range");
  InsertResult res;

  // Overlap accounting against the current ranges.
  uint64_t covered = 0;
  auto it = ranges_.upper_bound(start);
  if (it != ranges_.begin()) {
    auto prev = std::prev(it);
    if (prev->second > start) covered += std::min(prev->second, end) - start;
  }
  for (; it != ranges_.end() && it->first < end; ++it)
    covered += std::min(it->second, end) - it->first;
  res.overlap_bytes = covered;
  res.new_bytes = (end - start) - covered;

  // Merge: absorb every range overlapping or touching [start, end).
  uint64_t new_start = start, new_end = end;
  auto first = ranges_.upper_bound(start);
  if (first != ranges_.begin()) {
    auto prev = std::prev(first);
    if (prev->second >= start) first = prev;
  }
  auto last = first;
  while (last != ranges_.end() && last->first <= end) {
    new_start = std::min(new_start, last->first);
    new_end = std::max(new_end, last->second);
    ++last;
  }
  ranges_.erase(first, last);
  ranges_[new_start] = new_end;
  total_bytes_ += res.new_bytes;
  return res;
}

bool IntervalSet::covers(uint64_t start, uint64_t end) const {
  if (start >= end) return true;
  auto it = ranges_.upper_bound(start);
  if (it == ranges_.begin()) return false;
  --it;
  return it->second >= end;
}

bool IntervalSet::contains(uint64_t point) const { return covers(point, point + 1); }

uint64_t IntervalSet::contiguous_prefix() const {
  auto it = ranges_.find(0);
  return it == ranges_.end() ? 0 : it->second;
}

std::vector<OffsetEvent> classify_offsets(const Trace& trace) {
  std::vector<OffsetEvent> events;
  IntervalSet seen;
  for (const auto& r : trace.records()) {
    if (r.tap != Tap::ServerSide || r.direction != Direction::Forward) continue;
    if (!r.annotation || r.annotation->kind != PacketKind::Data) continue;
    if (r.annotation->length == 0) continue;
    OffsetEvent e;
    e.timestamp_s = to_seconds(r.timestamp_ns);
    e.offset = r.annotation->offset;
    e.length = r.annotation->length;
    const auto ins = seen.insert(e.offset, e.offset + e.length);
    e.cls = ins.overlap_bytes > 0 ? OffsetClass::Retransmission
                                  : OffsetClass::FirstTransmission;
    events.push_back(e);
  }
  return events;
}

TransferOutcome compute_outcome_metrics(const Trace& trace, const ScenarioSpec& spec) {
  TransferOutcome out;
  std::optional<double> request_time;
  std::optional<double> completion_time;
  IntervalSet delivered;
  IntervalSet sent_first;
  uint64_t forward_data_payload = 0;
  uint64_t max_offset_seen = 0;
  bool any_data_sent = false;

  for (const auto& r : trace.records()) {
    if (r.tap == Tap::ServerSide) {
      out.wire_bytes_forward += r.direction == Direction::Forward ? r.size : 0;
      out.wire_bytes_reverse += r.direction == Direction::Reverse ? r.size : 0;
      if (r.direction == Direction::Forward && r.annotation &&
          r.annotation->kind == PacketKind::Data) {
        forward_data_payload += r.annotation->length;
        if (r.annotation->length > 0) {
          // Fresh offsets appearing below the send frontier, excluding plain
          // retransmissions.
          const auto ins = sent_first.insert(r.annotation->offset,
                                             r.annotation->offset + r.annotation->length);
          if (ins.overlap_bytes == 0 && any_data_sent &&
              r.annotation->offset < max_offset_seen)
            ++out.nonmonotone_offset_count;
          max_offset_seen = std::max(max_offset_seen, r.annotation->offset);
          any_data_sent = true;
        }
      }
      continue;
    }
    // ClientSide tap.
    if (!request_time && r.direction == Direction::Reverse && r.annotation &&
        r.annotation->kind == PacketKind::Request)
      request_time = to_seconds(r.timestamp_ns);
    if (!completion_time && r.direction == Direction::Forward &&
        r.fate == RecordFate::Delivered && r.annotation &&
        r.annotation->kind == PacketKind::Data && r.annotation->length > 0) {
      delivered.insert(r.annotation->offset, r.annotation->offset + r.annotation->length);
      if (delivered.contiguous_prefix() >= spec.file_size)
        completion_time = to_seconds(r.timestamp_ns);
    }
  }

  if (!request_time) throw InconsistentTraceError("trace has no client Request record");
  if (!completion_time)
    throw InconsistentTraceError("trace never completes coverage of the file");

  out.status = TransferStatus::Success;
  out.time_to_completion_s = *completion_time - *request_time;
  out.goodput_bps = static_cast<double>(spec.file_size) * 8.0 / out.time_to_completion_s;
  out.efficiency = out.goodput_bps / spec.forward.data_rate_bps;
  out.redundancy_factor =
      static_cast<double>(forward_data_payload) / static_cast<double>(spec.file_size);
  return out;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw UsageError("quantile of empty sample");
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

QuartileSummary quartiles(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

ScenarioAggregate aggregate(const std::map<CellKey, std::vector<TransferOutcome>>& cells) {
  ScenarioAggregate agg;
  double goodput_sum = 0.0, eff_sum = 0.0;
  double goodput_max = 0.0, eff_max = 0.0;

  for (const auto& [key, runs] : cells) {
    double cell_goodput_sum = 0.0;
    int cell_successes = 0;
    for (const auto& run : runs) {
      const double eff = run.status == TransferStatus::Success ? run.efficiency : 0.0;
      agg.efficiency_cdf.push_back(eff);
      agg.client_role_efficiency[key.client].push_back(eff);
      agg.server_role_efficiency[key.server].push_back(eff);
      switch (run.status) {
        case TransferStatus::Success:
          ++agg.successes;
          ++cell_successes;
          cell_goodput_sum += run.goodput_bps;
          goodput_sum += run.goodput_bps;
          eff_sum += run.efficiency;
          goodput_max = std::max(goodput_max, run.goodput_bps);
          eff_max = std::max(eff_max, run.efficiency);
          break;
        case TransferStatus::Timeout:
          ++agg.timeouts;
          break;
        case TransferStatus::Error:
          ++agg.errors;
          break;
      }
    }
    agg.cell_mean_goodput[key] =
        cell_successes > 0 ? std::optional<double>(cell_goodput_sum / cell_successes)
                           : std::nullopt;
  }

  if (agg.successes > 0) {
    agg.mean_goodput_bps = goodput_sum / agg.successes;
    agg.max_goodput_bps = goodput_max;
    agg.mean_efficiency = eff_sum / agg.successes;
    agg.max_efficiency = eff_max;
  }
  std::sort(agg.efficiency_cdf.begin(), agg.efficiency_cdf.end());
  return agg;
}

size_t select_median_run(const std::vector<TransferOutcome>& outcomes) {
  std::vector<size_t> successes;
  for (size_t i = 0; i < outcomes.size(); ++i)
    if (outcomes[i].status == TransferStatus::Success) successes.push_back(i);
  if (successes.empty()) throw UsageError("no successful run to select");
  std::sort(successes.begin(), successes.end(), [&](size_t a, size_t b) {
    if (outcomes[a].time_to_completion_s != outcomes[b].time_to_completion_s)
      return outcomes[a].time_to_completion_s < outcomes[b].time_to_completion_s;
    return a < b;
  });
  return successes[(successes.size() - 1) / 2];
}

}  // namespace satqic
