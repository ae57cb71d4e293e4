#pragma once

#include <atomic>
#include <functional>
#include <string>

#include "satqic/capture.hpp"
#include "satqic/endpoint.hpp"
#include "satqic/linkem.hpp"
#include "satqic/scenarios.hpp"

namespace satqic {

// Maps the virtual-clock channel onto wall time for live endpoints: two local
// UDP sockets, one per side of the emulated link. Datagrams received on one
// side are offered to the channel and, when delivered, re-sent out the other
// side once their virtual delivery time has elapsed.
class UdpLinkDriver {
 public:
  UdpLinkDriver(const ScenarioSpec& spec, uint64_t seed, RunIdentity id = {});
  ~UdpLinkDriver();

  UdpLinkDriver(const UdpLinkDriver&) = delete;
  UdpLinkDriver& operator=(const UdpLinkDriver&) = delete;

  std::string client_side_addr() const;  // clients send their packets here
  std::string server_side_addr() const;
  void set_server_addr(const std::string& host_port);

  // Blocking forward loop; returns when stop() goes true or timeout passes.
  void run(double timeout_s, const std::atomic<bool>& stop);

  Trace take_trace() { return std::move(trace_); }

 private:
  Channel channel_;
  Trace trace_;
  int client_fd_ = -1;
  int server_fd_ = -1;
  uint16_t client_port_ = 0;
  uint16_t server_port_ = 0;
  std::string server_addr_;
  int64_t last_tap_ns_[2] = {INT64_MIN, INT64_MIN};

  void record_clamped(PacketRecord rec);
};

// Drives a protocol endpoint over a real UDP socket on the wall clock.
// For clients `peer` is the link driver's client-side address; servers learn
// their peer from the first datagram. Returns true when the endpoint
// finished within the timeout.
bool run_endpoint_over_udp(Endpoint& endpoint, const std::string& bind_addr,
                           const std::string& peer_addr, double timeout_s,
                           const std::atomic<bool>* stop = nullptr);

// host:port helpers
std::pair<std::string, uint16_t> split_host_port(const std::string& addr);
int bind_udp_socket(const std::string& host, uint16_t port, uint16_t* bound_port);

}  // namespace satqic
