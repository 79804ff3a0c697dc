#pragma once

// Packet wire format, used for byte accounting and packet-trace dumps.
//
//   header  : sender u32 | outer_iter u32 | inner_step u32 | bits u8 | d u32
//   payload : d entries; the level index k packed little-endian in
//             ceil(bits/8) bytes, or an 8-byte IEEE-754 double when bits == 0
//             (unquantized).
//
// All integers are little-endian.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gsink/protocol.hpp"

namespace gsink {

inline constexpr std::size_t kWireHeaderBytes = 17;
/// Delivery-round marker for a packet copy lost on the channel.
inline constexpr std::uint32_t kDroppedRound = 0xFFFFFFFFu;

std::size_t payload_entry_bytes(const CommsConfig& config);
std::size_t wire_size(std::size_t d, const CommsConfig& config);

std::vector<std::uint8_t> encode_packet(const Packet& packet, const CommsConfig& config);

/// Decodes one packet from the front of `bytes`. Throws InvalidArgument on a
/// truncated buffer or when the header's bit width disagrees with `config`.
Packet decode_packet(std::span<const std::uint8_t> bytes, const CommsConfig& config,
                     std::size_t* consumed = nullptr);

/// One packet copy in a trace dump: the round it reached `receiver`
/// (kDroppedRound if it never did), followed by the encoded packet.
struct TraceRecord {
  std::uint32_t delivery_round = 0;
  std::uint32_t receiver = 0;
  Packet packet;
};

void write_trace_record(std::ostream& out, std::uint32_t delivery_round, std::uint32_t receiver,
                        const Packet& packet, const CommsConfig& config);
std::vector<TraceRecord> read_packet_trace(std::istream& in, const CommsConfig& config);

}  // namespace gsink
