#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satqic/analysis.hpp"
#include "satqic/cc.hpp"
#include "satqic/wire.hpp"

namespace satqic {

using Datagram = std::vector<uint8_t>;

// Event-driven protocol endpoint: fed datagrams and timer wakeups, emits
// datagrams. Pure virtual-clock state machines; the same logic runs under the
// deterministic simulator and the real-time UDP driver.
class Endpoint {
 public:
  virtual ~Endpoint() = default;
  virtual std::vector<Datagram> on_datagram(const uint8_t* data, size_t size,
                                            double now) = 0;
  virtual std::vector<Datagram> on_wakeup(double now) = 0;
  virtual std::optional<double> next_wakeup() const = 0;
  virtual bool finished() const = 0;
};

// Serves files from an in-memory map as Data packets governed by the chosen
// congestion controller; one independent connection per conn_id.
class ServerEndpoint : public Endpoint {
 public:
  explicit ServerEndpoint(CcAlgorithm cca) : cca_(cca) {}
  ~ServerEndpoint() override;

  void add_file(const std::string& name, std::vector<uint8_t> content);
  void load_dir(const std::string& www_dir);

  std::vector<Datagram> on_datagram(const uint8_t* data, size_t size, double now) override;
  std::vector<Datagram> on_wakeup(double now) override;
  std::optional<double> next_wakeup() const override;
  bool finished() const override;

  // Window trace for tests: (time, cwnd) sampled at every cc event.
  const std::vector<std::pair<double, double>>& cwnd_trace(uint32_t conn_id) const;
  const CongestionState& cc_state(uint32_t conn_id) const;
  uint64_t bytes_in_flight(uint32_t conn_id) const;

 private:
  struct Connection;

  CcAlgorithm cca_;
  std::map<std::string, std::shared_ptr<const std::vector<uint8_t>>> files_;
  // shared_ptr keeps Connection's deleter type-erased so the header stays
  // free of the connection internals.
  std::map<uint32_t, std::shared_ptr<Connection>> conns_;
};

// Requests one file, acks every Data packet (cumulative plus up to 3 SACK
// ranges), reassembles the payload, and completes on Fin.
class ClientEndpoint : public Endpoint {
 public:
  ClientEndpoint(std::string file_name, uint32_t conn_id);

  std::vector<Datagram> on_datagram(const uint8_t* data, size_t size, double now) override;
  std::vector<Datagram> on_wakeup(double now) override;
  std::optional<double> next_wakeup() const override;
  bool finished() const override;

  bool failed() const { return error_close_; }
  // Virtual time at which the byte completing the file arrived.
  double completion_time() const { return completion_time_; }
  const std::vector<uint8_t>& received_data() const { return buffer_; }
  const IntervalSet& received_intervals() const { return received_; }

 private:
  Datagram make_ack(uint64_t trigger_offset);

  std::string file_name_;
  uint32_t conn_id_;
  uint64_t next_packet_number_ = 1;
  bool request_sent_ = false;
  double last_request_time_ = 0.0;
  bool done_ = false;
  bool error_close_ = false;
  double completion_time_ = 0.0;
  double last_progress_time_ = 0.0;
  IntervalSet received_;
  std::vector<uint8_t> buffer_;
};

}  // namespace satqic
