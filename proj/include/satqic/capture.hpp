#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "satqic/linkem.hpp"
#include "satqic/wire.hpp"

namespace satqic {

enum class Tap { ClientSide, ServerSide };

// Plaintext header fields lifted from the datagram at capture time.
struct Annotation {
  PacketKind kind = PacketKind::Request;
  uint64_t offset = 0;
  uint32_t length = 0;
  uint64_t packet_number = 0;
};

enum class RecordFate { Delivered, DroppedQueueOverflow, DroppedRandomLoss };

RecordFate record_fate(const PacketFate& fate);

struct PacketRecord {
  int64_t timestamp_ns = 0;  // virtual time at the tap
  Tap tap = Tap::ClientSide;
  Direction direction = Direction::Forward;
  int size = 0;  // datagram bytes
  RecordFate fate = RecordFate::Delivered;
  std::optional<Annotation> annotation;

  bool operator==(const PacketRecord&) const;
};

struct RunIdentity {
  std::string scenario;
  std::string client;
  std::string server;
  int iteration = 0;
  uint64_t seed = 0;
};

// Ordered capture of every datagram crossing the emulated link, as seen from
// the two taps. Timestamps must be non-decreasing per tap.
class Trace {
 public:
  Trace() = default;
  explicit Trace(RunIdentity id) : id_(std::move(id)) {}

  void record(PacketRecord rec);

  const std::vector<PacketRecord>& records() const { return records_; }
  const RunIdentity& id() const { return id_; }
  RunIdentity& id() { return id_; }

 private:
  RunIdentity id_;
  std::vector<PacketRecord> records_;
  int64_t last_ts_[2] = {INT64_MIN, INT64_MIN};
};

int64_t to_ns(double seconds);
double to_seconds(int64_t ns);

// Annotates from the raw datagram if it parses as a valid wire packet.
std::optional<Annotation> annotate(const uint8_t* data, size_t size);

void write_trace(const Trace& trace, std::ostream& out);
void write_trace_file(const Trace& trace, const std::string& path);
Trace read_trace(std::istream& in);
Trace read_trace_file(const std::string& path);

class TraceFormatError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace satqic
