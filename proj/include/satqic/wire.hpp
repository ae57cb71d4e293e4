#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace satqic {

enum class PacketKind : uint8_t { Request = 0, Data = 1, Ack = 2, Fin = 3 };

struct SackRange {
  uint64_t start = 0;  // byte offset
  uint32_t length = 0;
  bool operator==(const SackRange&) const = default;
};

// One datagram of the reliable-transfer protocol. All integers big-endian on
// the wire; Data headers stay plaintext so capture taps can annotate offsets.
struct WirePacket {
  PacketKind kind = PacketKind::Request;
  uint32_t conn_id = 0;
  uint64_t packet_number = 0;  // strictly increasing per sender, never reused

  // Data
  uint64_t offset = 0;
  uint32_t length = 0;
  std::vector<uint8_t> payload;

  // Ack
  uint64_t ack_cumulative = 0;
  std::vector<SackRange> sack_ranges;  // at most 3

  // Request
  std::string file_name;
};

inline constexpr size_t kBaseHeaderBytes = 13;
inline constexpr size_t kDataHeaderBytes = kBaseHeaderBytes + 12;
inline constexpr size_t kMaxDataPayload = 1500 - kDataHeaderBytes;
inline constexpr size_t kAckWireBytes = 40;  // nominal ack size, padded up

std::vector<uint8_t> encode_packet(const WirePacket& pkt);

// Returns nullopt when the buffer does not parse as a valid packet.
std::optional<WirePacket> decode_packet(const uint8_t* data, size_t size);
std::optional<WirePacket> decode_packet(const std::vector<uint8_t>& buf);

}  // namespace satqic
