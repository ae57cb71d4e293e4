#include "satqic/sim.hpp"

#include <queue>

namespace satqic {
namespace {

struct PendingDelivery {
  double time;
  uint64_t seq;  // insertion order breaks ties deterministically
  bool to_server;
  Datagram bytes;
};

struct Later {
  bool operator()(const PendingDelivery& a, const PendingDelivery& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

}  // namespace

SimResult run_simulation(const ScenarioSpec& spec, Endpoint& server,
                         ClientEndpoint& client, uint64_t seed, RunIdentity id) {
  Channel channel(spec, seed);
  SimResult result;
  result.trace = Trace(std::move(id));

  std::priority_queue<PendingDelivery, std::vector<PendingDelivery>, Later> in_flight;
  uint64_t seq = 0;
  double now = 0.0;

  auto transmit = [&](std::vector<Datagram>&& dgs, bool from_client) {
    for (auto& dg : dgs) {
      const Direction dir = from_client ? Direction::Reverse : Direction::Forward;
      const PacketFate fate = channel.offer(dir, static_cast<int>(dg.size()), now);
      PacketRecord rec;
      rec.timestamp_ns = to_ns(now);
      rec.tap = from_client ? Tap::ClientSide : Tap::ServerSide;
      rec.direction = dir;
      rec.size = static_cast<int>(dg.size());
      rec.fate = record_fate(fate);
      rec.annotation = annotate(dg.data(), dg.size());
      result.trace.record(std::move(rec));
      if (const auto* d = std::get_if<Delivered>(&fate))
        in_flight.push({d->delivery_time, seq++, from_client, std::move(dg)});
    }
  };

  auto record_arrival = [&](const PendingDelivery& p) {
    PacketRecord rec;
    rec.timestamp_ns = to_ns(p.time);
    rec.tap = p.to_server ? Tap::ServerSide : Tap::ClientSide;
    rec.direction = p.to_server ? Direction::Reverse : Direction::Forward;
    rec.size = static_cast<int>(p.bytes.size());
    rec.fate = RecordFate::Delivered;
    rec.annotation = annotate(p.bytes.data(), p.bytes.size());
    result.trace.record(std::move(rec));
  };

  constexpr uint64_t kMaxEvents = 200'000'000;
  uint64_t events = 0;

  while (!client.finished()) {
    if (++events > kMaxEvents) throw std::runtime_error("simulation event budget exceeded");

    const double t_delivery = in_flight.empty() ? kInfSsthresh : in_flight.top().time;
    const auto cw = client.next_wakeup();
    const auto sw = server.next_wakeup();
    const double t_client = cw ? *cw : kInfSsthresh;
    const double t_server = sw ? *sw : kInfSsthresh;
    double t = std::min({t_delivery, t_client, t_server});

    if (t == kInfSsthresh) break;  // everything idle, transfer stalled
    if (t > spec.timeout_s) {
      now = spec.timeout_s;
      break;
    }
    now = std::max(now, t);

    if (t_delivery <= t) {
      PendingDelivery p = in_flight.top();
      in_flight.pop();
      record_arrival(p);
      auto out = p.to_server ? server.on_datagram(p.bytes.data(), p.bytes.size(), now)
                             : client.on_datagram(p.bytes.data(), p.bytes.size(), now);
      transmit(std::move(out), !p.to_server);
    } else if (t_client <= t) {
      transmit(client.on_wakeup(now), true);
    } else {
      transmit(server.on_wakeup(now), false);
    }
  }

  // Drain in-flight packets into the receiving taps so both ends of the
  // trace describe the same delivered multiset.
  if (client.finished()) {
    while (!in_flight.empty()) {
      record_arrival(in_flight.top());
      in_flight.pop();
    }
  }

  result.completed = client.finished() && !client.failed();
  result.error_close = client.failed();
  result.finish_time = result.completed ? client.completion_time() : now;
  if (result.completed) result.downloaded = client.received_data();
  return result;
}

}  // namespace satqic
