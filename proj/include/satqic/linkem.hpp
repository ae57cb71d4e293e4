#pragma once

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <variant>

#include "satqic/rng.hpp"

namespace satqic {

inline constexpr int kMtuBytes = 1500;

struct ScenarioSpec;  // scenarios.hpp

// One direction of the emulated path.
struct LinkDirectionParams {
  double data_rate_bps = 0.0;  // bits per second, > 0
  int queue_capacity = 1;      // packets, >= 1
  double plr = 0.0;            // packet loss ratio in [0, 1]

  void validate() const;
};

enum class Direction { Forward, Reverse };  // Forward = server -> client

struct Delivered {
  double delivery_time;  // virtual seconds at the far end
};
struct DroppedQueueOverflow {};
struct DroppedRandomLoss {};

using PacketFate = std::variant<Delivered, DroppedQueueOverflow, DroppedRandomLoss>;

inline bool is_delivered(const PacketFate& f) {
  return std::holds_alternative<Delivered>(f);
}

class UsageError : public std::logic_error {
  using std::logic_error::logic_error;
};
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Deterministic duplex link: per-direction serialization rate, drop-tail
// queue and Bernoulli loss, plus a shared one-way propagation delay. The
// channel is a pure virtual-clock state machine; callers supply `now`.
class Channel {
 public:
  Channel(const ScenarioSpec& spec, uint64_t seed);

  // Offers one packet for transmission. Pipeline: drop-tail check, then
  // serialization behind whatever is queued, then one Bernoulli loss draw
  // (a randomly lost packet still consumed link capacity).
  PacketFate offer(Direction dir, int size_bytes, double now);

  // Round trip for an idle channel: serialize+propagate one probe each way.
  double measured_rtt(int probe_size_bytes) const;

  double one_way_delay() const { return one_way_delay_; }
  const LinkDirectionParams& params(Direction dir) const {
    return side(dir).params;
  }

 private:
  struct Side {
    LinkDirectionParams params;
    std::deque<double> in_queue;  // serialization finish times of queued packets
    double next_free_time = 0.0;  // link busy until here
    double last_offer_time = 0.0;
    Rng rng;
    Side(const LinkDirectionParams& p, uint64_t seed) : params(p), rng(seed) {}
  };

  Side& side(Direction dir) { return dir == Direction::Forward ? forward_ : reverse_; }
  const Side& side(Direction dir) const {
    return dir == Direction::Forward ? forward_ : reverse_;
  }

  Side forward_;
  Side reverse_;
  double one_way_delay_;
};

}  // namespace satqic
