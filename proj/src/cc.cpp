#include "satqic/cc.hpp"

#include <algorithm>
#include <cmath>

namespace satqic {
namespace {

constexpr double kMinCwnd = 2.0 * kMtuBytes;

// Window the concurrent NewReno flow would have reached, in bytes.
double reno_friendly_window(const CongestionState& s, double now) {
  if (s.srtt <= 0.0) return s.cubic.w_max * kCubicBeta;
  const double t = now - s.cubic.epoch_start;
  const double w_max_mtu = s.cubic.w_max / kMtuBytes;
  const double w_est_mtu = w_max_mtu * kCubicBeta +
                           3.0 * (1.0 - kCubicBeta) / (1.0 + kCubicBeta) * (t / s.srtt);
  return w_est_mtu * kMtuBytes;
}

}  // namespace

CongestionState cc_init(CcAlgorithm algorithm) {
  CongestionState s;
  s.algorithm = algorithm;
  return s;
}

void cc_on_rtt_sample(CongestionState& s, double sample) {
  if (sample <= 0.0) return;
  if (s.srtt == 0.0) {
    s.srtt = sample;
    s.rttvar = sample / 2.0;
  } else {
    s.rttvar = 0.75 * s.rttvar + 0.25 * std::abs(s.srtt - sample);
    s.srtt = 0.875 * s.srtt + 0.125 * sample;
  }
}

double cc_rto(const CongestionState& s) {
  if (s.srtt == 0.0) return kMinRto;
  return std::max(kMinRto, s.srtt + 4.0 * s.rttvar);
}

double cubic_window(const CongestionState& s, double now) {
  const double t = now - s.cubic.epoch_start;
  const double w_max_mtu = s.cubic.w_max / kMtuBytes;
  const double d = t - s.cubic.k;
  const double w_mtu = w_max_mtu * kCubicBeta + kCubicC * d * d * d;
  return w_mtu * kMtuBytes;
}

void cc_on_ack(CongestionState& s, uint64_t newly_acked, double now) {
  if (newly_acked == 0) return;

  if (s.algorithm == CcAlgorithm::RateStartup) {
    s.rate.round_delivered += newly_acked;
    if (s.srtt <= 0.0) return;
    if (s.pacing_rate <= 0.0) {
      // First sample: start from what the initial window implies.
      s.pacing_rate = s.cwnd * 8.0 / s.srtt;
      s.rate.round_start = now;
      s.rate.round_delivered = 0;
    } else if (now - s.rate.round_start >= s.srtt) {
      const double rate = s.rate.round_delivered * 8.0 / (now - s.rate.round_start);
      if (!s.rate.pinned) {
        if (s.rate.last_delivery_rate > 0.0 && rate < 1.25 * s.rate.last_delivery_rate) {
          s.rate.pinned = true;
          s.pacing_rate = rate;
        } else {
          s.pacing_rate *= 2.0;
        }
        s.rate.last_delivery_rate = rate;
      }
      s.rate.round_start = now;
      s.rate.round_delivered = 0;
    }
    // In-flight cap: two pacing-rate-times-RTT worth of data.
    s.cwnd = std::max(kMinCwnd, 2.0 * s.pacing_rate * s.srtt / 8.0);
    return;
  }

  if (s.phase == CcPhase::Recovery) return;

  if (s.phase == CcPhase::SlowStart) {
    s.cwnd += static_cast<double>(newly_acked);
    if (s.cwnd >= s.ssthresh) {
      s.cwnd = s.ssthresh;
      s.phase = CcPhase::Avoidance;
    }
    return;
  }

  if (s.algorithm == CcAlgorithm::NewReno) {
    s.cwnd += kMtuBytes * static_cast<double>(newly_acked) / s.cwnd;
  } else {
    const double target = std::max(cubic_window(s, now), reno_friendly_window(s, now));
    s.cwnd = std::max(target, kMinCwnd);
  }
}

void cc_on_loss(CongestionState& s, double now) {
  switch (s.algorithm) {
    case CcAlgorithm::NewReno:
      s.ssthresh = std::max(s.cwnd / 2.0, kMinCwnd);
      s.cwnd = s.ssthresh;
      break;
    case CcAlgorithm::Cubic: {
      s.cubic.w_max = s.cwnd;
      s.cwnd = std::max(s.cwnd * kCubicBeta, kMinCwnd);
      s.ssthresh = s.cwnd;
      s.cubic.epoch_start = now;
      const double w_max_mtu = s.cubic.w_max / kMtuBytes;
      s.cubic.k = std::cbrt(w_max_mtu * (1.0 - kCubicBeta) / kCubicC);
      break;
    }
    case CcAlgorithm::RateStartup:
      // A startup loss means the doubled rate overshot; pin at the last
      // measured delivery rate.
      if (!s.rate.pinned && s.rate.last_delivery_rate > 0.0) {
        s.rate.pinned = true;
        s.pacing_rate = s.rate.last_delivery_rate;
      }
      break;
  }
  s.phase = CcPhase::Recovery;
}

double pacing_rate_bps(const CongestionState& s) {
  if (s.algorithm == CcAlgorithm::RateStartup) return s.pacing_rate;
  if (s.srtt <= 0.0) return 0.0;
  return 1.25 * s.cwnd * 8.0 / s.srtt;
}

double pacing_interval(const CongestionState& s, int packet_size_bytes) {
  const double rate = pacing_rate_bps(s);
  if (rate <= 0.0) return 0.0;
  return packet_size_bytes * 8.0 / rate;
}

std::vector<uint64_t> LossDetection::detect(std::span<SentPacket> sent_log,
                                            const CongestionState& state,
                                            double now) const {
  std::vector<uint64_t> lost;
  const double time_threshold =
      state.srtt > 0.0 ? kTimeThresholdFactor * state.srtt : kInfSsthresh;
  const bool rto_expired = now >= last_rto_restart + cc_rto(state) - 1e-12;

  bool rto_consumed = false;
  for (auto& p : sent_log) {
    if (p.acked || p.lost) continue;
    bool is_lost = false;
    if (any_acked && largest_acked >= p.packet_number + kReorderThreshold) {
      is_lost = true;
    } else if (any_acked && largest_acked > p.packet_number &&
               now >= p.send_time + time_threshold - 1e-12) {
      is_lost = true;
    } else if (rto_expired && !rto_consumed) {
      // The timer claims only the earliest outstanding packet; the caller
      // restarts the timer after reacting.
      is_lost = true;
      rto_consumed = true;
    }
    if (is_lost) {
      p.lost = true;
      lost.push_back(p.packet_number);
    }
  }
  return lost;
}

double LossDetection::next_alarm(std::span<const SentPacket> sent_log,
                                 const CongestionState& state) const {
  double alarm = kInfSsthresh;
  bool outstanding = false;
  const double time_threshold =
      state.srtt > 0.0 ? kTimeThresholdFactor * state.srtt : kInfSsthresh;
  for (const auto& p : sent_log) {
    if (p.acked || p.lost) continue;
    outstanding = true;
    if (any_acked && largest_acked > p.packet_number)
      alarm = std::min(alarm, p.send_time + time_threshold);
  }
  if (outstanding) alarm = std::min(alarm, last_rto_restart + cc_rto(state));
  return alarm;
}

}  // namespace satqic
