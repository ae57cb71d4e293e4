#include "satqic/linkem.hpp"

#include "satqic/scenarios.hpp"

namespace satqic {

void LinkDirectionParams::validate() const {
  if (data_rate_bps <= 0.0) throw ConfigError("data_rate must be > 0");
  if (queue_capacity < 1) throw ConfigError("queue_capacity must be >= 1");
  if (plr < 0.0 || plr > 1.0) throw ConfigError("plr out of range [0,1]");
}

Channel::Channel(const ScenarioSpec& spec, uint64_t seed)
    : forward_(spec.forward, mix_seed(seed ^ 0x464f52ull)),
      reverse_(spec.reverse, mix_seed(seed ^ 0x524556ull)),
      one_way_delay_(spec.one_way_delay_s) {
  spec.validate();
}

PacketFate Channel::offer(Direction dir, int size_bytes, double now) {
  if (size_bytes <= 0 || size_bytes > kMtuBytes)
    throw UsageError("packet size outside (0, MTU]");
  Side& s = side(dir);
  if (now < s.last_offer_time)
    throw UsageError("non-monotone offer timestamp");
  s.last_offer_time = now;

  // Queue occupancy = packets whose serialization has not finished by now.
  while (!s.in_queue.empty() && s.in_queue.front() <= now) s.in_queue.pop_front();
  if (static_cast<int>(s.in_queue.size()) >= s.params.queue_capacity)
    return DroppedQueueOverflow{};

  const double start = std::max(now, s.next_free_time);
  const double finish = start + size_bytes * 8.0 / s.params.data_rate_bps;
  s.next_free_time = finish;
  s.in_queue.push_back(finish);

  if (s.params.plr > 0.0 && s.rng.bernoulli(s.params.plr))
    return DroppedRandomLoss{};
  return Delivered{finish + one_way_delay_};
}

double Channel::measured_rtt(int probe_size_bytes) const {
  if (probe_size_bytes < 0 || probe_size_bytes > kMtuBytes)
    throw UsageError("probe size outside [0, MTU]");
  const double fwd = probe_size_bytes * 8.0 / forward_.params.data_rate_bps;
  const double rev = probe_size_bytes * 8.0 / reverse_.params.data_rate_bps;
  return fwd + one_way_delay_ + rev + one_way_delay_;
}

}  // namespace satqic
