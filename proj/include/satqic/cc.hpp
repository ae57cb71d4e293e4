#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "satqic/linkem.hpp"

namespace satqic {

enum class CcAlgorithm { NewReno, Cubic, RateStartup };
enum class CcPhase { SlowStart, Avoidance, Recovery };

inline constexpr double kCubicC = 0.4;       // MTU units per second cubed
inline constexpr double kCubicBeta = 0.7;
inline constexpr double kInfSsthresh = std::numeric_limits<double>::infinity();
inline constexpr double kMinRto = 1.0;       // must exceed the 600 ms path RTT
inline constexpr int kReorderThreshold = 3;  // packet-number loss threshold
inline constexpr double kTimeThresholdFactor = 9.0 / 8.0;

// Per-connection congestion control state.
struct CongestionState {
  CcAlgorithm algorithm = CcAlgorithm::NewReno;
  double cwnd = 10.0 * kMtuBytes;  // initial window 10 MTU
  double ssthresh = kInfSsthresh;
  CcPhase phase = CcPhase::SlowStart;
  double srtt = 0.0;    // 0 until the first sample
  double rttvar = 0.0;
  struct {
    double w_max = 0.0;        // bytes at last loss
    double k = 0.0;            // seconds to the curve inflection
    double epoch_start = 0.0;  // virtual seconds
  } cubic;
  double pacing_rate = 0.0;  // bits/second; derived for window CCAs

  // RateStartup bookkeeping: double the pacing rate each round until the
  // delivery rate stops growing by >= 25%, then pin it there.
  struct {
    bool pinned = false;
    double round_start = 0.0;
    uint64_t round_delivered = 0;
    double last_delivery_rate = 0.0;
  } rate;
};

CongestionState cc_init(CcAlgorithm algorithm);

// RFC 6298-style smoothed RTT update.
void cc_on_rtt_sample(CongestionState& state, double sample);

double cc_rto(const CongestionState& state);

// Window growth on newly acknowledged bytes.
void cc_on_ack(CongestionState& state, uint64_t newly_acked, double now);

// Multiplicative decrease; the caller enforces once-per-round semantics for
// NewReno via its recovery bookkeeping.
void cc_on_loss(CongestionState& state, double now);

// The raw cubic window curve in bytes at `now`, before the Reno-friendly floor.
double cubic_window(const CongestionState& state, double now);

double pacing_rate_bps(const CongestionState& state);
double pacing_interval(const CongestionState& state, int packet_size_bytes);

// Sender-side record of one transmitted packet.
struct SentPacket {
  uint64_t packet_number = 0;
  uint64_t offset = 0;
  uint32_t length = 0;
  double send_time = 0.0;
  bool acked = false;
  bool lost = false;
  bool retransmission = false;
  bool retx_queued = false;  // its range has been requeued after loss
};

// Loss detection over the sent log: packet-number threshold, time threshold
// after a later ack, and the retransmission timer.
struct LossDetection {
  uint64_t largest_acked = 0;
  bool any_acked = false;
  double largest_acked_time = 0.0;  // when the latest ack arrived
  double last_rto_restart = 0.0;

  std::vector<uint64_t> detect(std::span<SentPacket> sent_log,
                               const CongestionState& state, double now) const;

  // Earliest future instant at which detect() could newly declare a loss.
  double next_alarm(std::span<const SentPacket> sent_log,
                    const CongestionState& state) const;
};

}  // namespace satqic
