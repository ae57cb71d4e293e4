#include "satqic/wire.hpp"

#include <cstring>

namespace satqic {
namespace {

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 7; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32(const uint8_t* p) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v = (v << 8) | p[i];
  return v;
}

uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

std::vector<uint8_t> encode_packet(const WirePacket& pkt) {
  std::vector<uint8_t> out;
  out.push_back(static_cast<uint8_t>(pkt.kind));
  put_u32(out, pkt.conn_id);
  put_u64(out, pkt.packet_number);
  switch (pkt.kind) {
    case PacketKind::Request: {
      const std::string line = "GET /" + pkt.file_name + "\r\n";
      out.insert(out.end(), line.begin(), line.end());
      break;
    }
    case PacketKind::Data:
      put_u64(out, pkt.offset);
      put_u32(out, pkt.length);
      out.insert(out.end(), pkt.payload.begin(), pkt.payload.end());
      break;
    case PacketKind::Ack: {
      put_u64(out, pkt.ack_cumulative);
      out.push_back(static_cast<uint8_t>(pkt.sack_ranges.size()));
      for (const auto& r : pkt.sack_ranges) {
        put_u64(out, r.start);
        put_u32(out, r.length);
      }
      if (out.size() < kAckWireBytes) out.resize(kAckWireBytes, 0);
      break;
    }
    case PacketKind::Fin:
      break;
  }
  return out;
}

std::optional<WirePacket> decode_packet(const uint8_t* data, size_t size) {
  if (size < kBaseHeaderBytes) return std::nullopt;
  if (data[0] > 3) return std::nullopt;
  WirePacket pkt;
  pkt.kind = static_cast<PacketKind>(data[0]);
  pkt.conn_id = get_u32(data + 1);
  pkt.packet_number = get_u64(data + 5);
  const uint8_t* body = data + kBaseHeaderBytes;
  const size_t body_len = size - kBaseHeaderBytes;
  switch (pkt.kind) {
    case PacketKind::Request: {
      std::string line(reinterpret_cast<const char*>(body), body_len);
      if (line.size() < 7 || line.rfind("GET /", 0) != 0 ||
          line.substr(line.size() - 2) != "\r\n")
        return std::nullopt;
      pkt.file_name = line.substr(5, line.size() - 7);
      break;
    }
    case PacketKind::Data: {
      if (body_len < 12) return std::nullopt;
      pkt.offset = get_u64(body);
      pkt.length = get_u32(body + 8);
      if (body_len - 12 != pkt.length) return std::nullopt;
      pkt.payload.assign(body + 12, body + 12 + pkt.length);
      break;
    }
    case PacketKind::Ack: {
      if (body_len < 9) return std::nullopt;
      pkt.ack_cumulative = get_u64(body);
      const uint8_t n = body[8];
      if (n > 3 || body_len < 9 + static_cast<size_t>(n) * 12) return std::nullopt;
      for (uint8_t i = 0; i < n; ++i) {
        const uint8_t* r = body + 9 + i * 12;
        pkt.sack_ranges.push_back({get_u64(r), get_u32(r + 8)});
      }
      break;
    }
    case PacketKind::Fin:
      if (body_len != 0) return std::nullopt;
      break;
  }
  return pkt;
}

std::optional<WirePacket> decode_packet(const std::vector<uint8_t>& buf) {
  return decode_packet(buf.data(), buf.size());
}

}  // namespace satqic
