#include "satqic/endpoint.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>

namespace satqic {

namespace {
constexpr int kMaxFinRetx = 10;
constexpr double kRequestRetxInterval = kMinRto;
}  // namespace

// ---------------------------------------------------------------------------
// Server connection
// ---------------------------------------------------------------------------

struct ServerEndpoint::Connection {
  uint32_t conn_id;
  std::shared_ptr<const std::vector<uint8_t>> file;
  CongestionState cc;
  LossDetection ld;

  std::vector<SentPacket> sent_log;
  size_t scan_from = 0;  // packets before this index are acked or lost
  uint64_t next_packet_number = 1;
  uint64_t next_new_offset = 0;
  uint64_t bytes_in_flight = 0;
  IntervalSet acked;
  std::deque<std::pair<uint64_t, uint64_t>> retx_queue;  // byte ranges [a, b)

  double next_send_time = 0.0;
  bool rto_armed = false;

  // Once-per-round loss reaction: losses at or below this number do not
  // trigger another window reduction.
  uint64_t recovery_end_pktno = 0;
  bool in_recovery = false;

  // Close handshake-free teardown: Fin is repeated on a timer.
  bool fin_pending = false;  // all bytes acked, Fin (re)transmissions ongoing
  int fin_sent_count = 0;
  double next_fin_time = 0.0;
  bool error_close = false;
  bool closed = false;

  std::vector<std::pair<double, double>> cwnd_samples;

  explicit Connection(uint32_t id, CcAlgorithm cca) : conn_id(id), cc(cc_init(cca)) {}

  uint64_t file_size() const { return file ? file->size() : 0; }
  bool all_bytes_acked() const { return acked.contiguous_prefix() >= file_size(); }

  bool has_data_to_send() const {
    return !retx_queue.empty() || next_new_offset < file_size();
  }

  bool window_allows() const {
    return static_cast<double>(bytes_in_flight) + kMtuBytes <= cc.cwnd;
  }

  void sample_cwnd(double now) { cwnd_samples.emplace_back(now, cc.cwnd); }

  std::span<SentPacket> outstanding() {
    return std::span<SentPacket>(sent_log).subspan(scan_from);
  }

  void advance_scan_frontier() {
    while (scan_from < sent_log.size() &&
           (sent_log[scan_from].acked || sent_log[scan_from].lost))
      ++scan_from;
  }

  Datagram send_data_packet(double now) {
    uint64_t start, end;
    bool is_retx = false;
    // Retransmissions first; skip anything acked in the meantime.
    while (!retx_queue.empty()) {
      auto [a, b] = retx_queue.front();
      retx_queue.pop_front();
      // Trim the already-acknowledged head.
      while (a < b && acked.contains(a)) ++a;
      if (a >= b) continue;
      uint64_t e = std::min(b, a + kMaxDataPayload);
      if (e < b) retx_queue.emplace_front(e, b);
      start = a;
      end = e;
      is_retx = true;
      break;
    }
    if (!is_retx) {
      if (next_new_offset >= file_size()) return {};
      start = next_new_offset;
      end = std::min(file_size(), start + kMaxDataPayload);
      next_new_offset = end;
    }

    WirePacket pkt;
    pkt.kind = PacketKind::Data;
    pkt.conn_id = conn_id;
    pkt.packet_number = next_packet_number++;
    pkt.offset = start;
    pkt.length = static_cast<uint32_t>(end - start);
    pkt.payload.assign(file->begin() + start, file->begin() + end);

    SentPacket sp;
    sp.packet_number = pkt.packet_number;
    sp.offset = start;
    sp.length = pkt.length;
    sp.send_time = now;
    sp.retransmission = is_retx;
    sent_log.push_back(sp);
    bytes_in_flight += pkt.length;
    if (!rto_armed) {
      rto_armed = true;
      ld.last_rto_restart = now;
    }
    return encode_packet(pkt);
  }

  Datagram make_fin() {
    WirePacket fin;
    fin.kind = PacketKind::Fin;
    fin.conn_id = conn_id;
    fin.packet_number = next_packet_number++;
    return encode_packet(fin);
  }

  void on_losses(const std::vector<uint64_t>& lost, double now) {
    if (lost.empty()) return;
    uint64_t highest_lost = 0;
    for (uint64_t num : lost) highest_lost = std::max(highest_lost, num);
    for (auto& p : outstanding()) {
      if (!p.lost || p.retx_queued) continue;
      p.retx_queued = true;
      bytes_in_flight -= p.length;
      retx_queue.emplace_back(p.offset, p.offset + p.length);
    }
    advance_scan_frontier();
    // React once per congestion episode: stale losses of packets sent
    // before the last reduction must not cut the window again, even after
    // recovery has been exited.
    if (highest_lost > recovery_end_pktno) {
      cc_on_loss(cc, now);
      in_recovery = true;
      recovery_end_pktno = next_packet_number - 1;
      sample_cwnd(now);
    }
    // Timer restart after a reaction.
    ld.last_rto_restart = now;
  }

  void handle_ack(const WirePacket& ack, double now) {
    IntervalSet::InsertResult progress{};
    if (ack.ack_cumulative > 0) {
      auto r = acked.insert(0, ack.ack_cumulative);
      progress.new_bytes += r.new_bytes;
    }
    for (const auto& sr : ack.sack_ranges) {
      if (sr.length == 0) continue;
      auto r = acked.insert(sr.start, sr.start + sr.length);
      progress.new_bytes += r.new_bytes;
    }

    // Resolve outstanding packets now covered by the acknowledgment.
    uint64_t newly_acked_highest = 0;
    double rtt_sample = -1.0;
    for (auto& p : outstanding()) {
      if (p.acked) continue;
      if (!acked.covers(p.offset, p.offset + p.length)) continue;
      if (!p.lost) bytes_in_flight -= p.length;
      p.acked = true;
      if (p.packet_number > newly_acked_highest) {
        newly_acked_highest = p.packet_number;
        if (!p.retransmission) rtt_sample = now - p.send_time;  // Karn's rule
      }
    }
    advance_scan_frontier();

    if (newly_acked_highest > 0) {
      ld.any_acked = true;
      ld.largest_acked = std::max(ld.largest_acked, newly_acked_highest);
      ld.largest_acked_time = now;
      ld.last_rto_restart = now;
      if (rtt_sample > 0.0) cc_on_rtt_sample(cc, rtt_sample);
      if (in_recovery && newly_acked_highest > recovery_end_pktno) {
        in_recovery = false;
        if (cc.phase == CcPhase::Recovery) cc.phase = CcPhase::Avoidance;
      }
    }
    if (progress.new_bytes > 0 && cc.phase != CcPhase::Recovery) {
      cc_on_ack(cc, progress.new_bytes, now);
      sample_cwnd(now);
    }

    on_losses(ld.detect(outstanding(), cc, now), now);
  }
};

// ---------------------------------------------------------------------------
// ServerEndpoint
// ---------------------------------------------------------------------------

ServerEndpoint::~ServerEndpoint() = default;

void ServerEndpoint::add_file(const std::string& name, std::vector<uint8_t> content) {
  files_[name] = std::make_shared<const std::vector<uint8_t>>(std::move(content));
}

void ServerEndpoint::load_dir(const std::string& www_dir) {
  for (const auto& entry : std::filesystem::directory_iterator(www_dir)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::vector<uint8_t> content((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
    add_file(entry.path().filename().string(), std::move(content));
  }
}

std::vector<Datagram> ServerEndpoint::on_datagram(const uint8_t* data, size_t size,
                                                  double now) {
  const auto pkt = decode_packet(data, size);
  if (!pkt) return {};
  std::vector<Datagram> out;

  if (pkt->kind == PacketKind::Request) {
    if (conns_.contains(pkt->conn_id)) return {};  // duplicate request
    auto conn = std::make_shared<Connection>(pkt->conn_id, cca_);
    auto it = files_.find(pkt->file_name);
    if (it == files_.end()) {
      // Unknown file: close immediately. A Fin before any Data is the
      // protocol's error close.
      conn->error_close = true;
      conn->closed = true;
      out.push_back(conn->make_fin());
      conns_.emplace(pkt->conn_id, std::move(conn));
      return out;
    }
    conn->file = it->second;
    conn->next_send_time = now;
    conns_.emplace(pkt->conn_id, std::move(conn));
    return on_wakeup(now);
  }

  auto it = conns_.find(pkt->conn_id);
  if (it == conns_.end()) return {};
  Connection& conn = *it->second;
  if (conn.closed) return {};

  if (pkt->kind == PacketKind::Ack) {
    conn.handle_ack(*pkt, now);
    if (conn.fin_pending == false && conn.all_bytes_acked() && conn.file_size() > 0) {
      conn.fin_pending = true;
      conn.fin_sent_count = 1;
      conn.next_fin_time = now + cc_rto(conn.cc);
      out.push_back(conn.make_fin());
      return out;
    }
    auto more = on_wakeup(now);
    out.insert(out.end(), more.begin(), more.end());
  }
  return out;
}

std::vector<Datagram> ServerEndpoint::on_wakeup(double now) {
  std::vector<Datagram> out;
  for (auto& [id, conn_ptr] : conns_) {
    Connection& conn = *conn_ptr;
    if (conn.closed) continue;

    if (conn.fin_pending) {
      while (now >= conn.next_fin_time && conn.fin_sent_count < kMaxFinRetx) {
        out.push_back(conn.make_fin());
        ++conn.fin_sent_count;
        conn.next_fin_time += cc_rto(conn.cc);
      }
      if (conn.fin_sent_count >= kMaxFinRetx) conn.closed = true;
      continue;
    }

    // Timer-driven loss detection (RTO and time threshold).
    conn.on_losses(conn.ld.detect(conn.outstanding(), conn.cc, now), now);

    // Paced, window-limited sending.
    while (conn.has_data_to_send() && conn.window_allows() && now >= conn.next_send_time) {
      Datagram dg = conn.send_data_packet(now);
      if (dg.empty()) break;
      const double interval = pacing_interval(conn.cc, static_cast<int>(dg.size()));
      conn.next_send_time = interval > 0.0 ? now + interval : now;
      out.push_back(std::move(dg));
      if (interval > 0.0) break;  // paced: one packet per wakeup
    }
  }
  return out;
}

std::optional<double> ServerEndpoint::next_wakeup() const {
  double t = kInfSsthresh;
  for (const auto& [id, conn_ptr] : conns_) {
    const Connection& conn = *conn_ptr;
    if (conn.closed) continue;
    if (conn.fin_pending) {
      t = std::min(t, conn.next_fin_time);
      continue;
    }
    if (conn.has_data_to_send() && conn.window_allows())
      t = std::min(t, conn.next_send_time);
    t = std::min(t, conn.ld.next_alarm(
                        std::span<const SentPacket>(conn.sent_log).subspan(conn.scan_from),
                        conn.cc));
  }
  if (t == kInfSsthresh) return std::nullopt;
  return t;
}

bool ServerEndpoint::finished() const {
  if (conns_.empty()) return false;
  for (const auto& [id, conn] : conns_)
    if (!conn->closed) return false;
  return true;
}

const std::vector<std::pair<double, double>>& ServerEndpoint::cwnd_trace(
    uint32_t conn_id) const {
  return conns_.at(conn_id)->cwnd_samples;
}

const CongestionState& ServerEndpoint::cc_state(uint32_t conn_id) const {
  return conns_.at(conn_id)->cc;
}

uint64_t ServerEndpoint::bytes_in_flight(uint32_t conn_id) const {
  return conns_.at(conn_id)->bytes_in_flight;
}

// ---------------------------------------------------------------------------
// ClientEndpoint
// ---------------------------------------------------------------------------

ClientEndpoint::ClientEndpoint(std::string file_name, uint32_t conn_id)
    : file_name_(std::move(file_name)), conn_id_(conn_id) {}

Datagram ClientEndpoint::make_ack(uint64_t) {
  WirePacket ack;
  ack.kind = PacketKind::Ack;
  ack.conn_id = conn_id_;
  ack.packet_number = next_packet_number_++;
  const uint64_t prefix = received_.contiguous_prefix();
  ack.ack_cumulative = prefix;
  // Report the highest non-prefix ranges; those sit at the send frontier
  // where the server's loss detector needs them.
  for (auto it = received_.ranges().rbegin();
       it != received_.ranges().rend() && ack.sack_ranges.size() < 3; ++it) {
    if (it->first == 0) break;  // the prefix range
    ack.sack_ranges.push_back(
        {it->first, static_cast<uint32_t>(std::min<uint64_t>(it->second - it->first,
                                                             UINT32_MAX))});
  }
  return encode_packet(ack);
}

std::vector<Datagram> ClientEndpoint::on_datagram(const uint8_t* data, size_t size,
                                                  double now) {
  if (done_) return {};
  const auto pkt = decode_packet(data, size);
  if (!pkt || pkt->conn_id != conn_id_) return {};

  if (pkt->kind == PacketKind::Data) {
    if (pkt->length > 0) {
      const uint64_t end = pkt->offset + pkt->length;
      if (buffer_.size() < end) buffer_.resize(end);
      std::memcpy(buffer_.data() + pkt->offset, pkt->payload.data(), pkt->length);
      const auto ins = received_.insert(pkt->offset, end);
      if (ins.new_bytes > 0) last_progress_time_ = now;
    }
    return {make_ack(pkt->offset)};
  }

  if (pkt->kind == PacketKind::Fin) {
    done_ = true;
    if (received_.empty()) {
      error_close_ = true;  // Fin before any Data: server-side error close
    } else {
      completion_time_ = last_progress_time_;
    }
    return {};
  }
  return {};
}

std::vector<Datagram> ClientEndpoint::on_wakeup(double now) {
  if (done_) return {};
  // (Re)issue the request until data starts flowing.
  if (!request_sent_ || (received_.empty() && now >= last_request_time_ + kRequestRetxInterval)) {
    request_sent_ = true;
    last_request_time_ = now;
    WirePacket req;
    req.kind = PacketKind::Request;
    req.conn_id = conn_id_;
    req.packet_number = next_packet_number_++;
    req.file_name = file_name_;
    return {encode_packet(req)};
  }
  return {};
}

std::optional<double> ClientEndpoint::next_wakeup() const {
  if (done_) return std::nullopt;
  if (!request_sent_) return 0.0;
  if (received_.empty()) return last_request_time_ + kRequestRetxInterval;
  return std::nullopt;
}

bool ClientEndpoint::finished() const { return done_; }

}  // namespace satqic
