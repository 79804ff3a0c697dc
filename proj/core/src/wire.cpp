#include "gsink/wire.hpp"

#include <bit>
#include <cstring>
#include <istream>
#include <iterator>
#include <ostream>

namespace gsink {

namespace {

void put_uint(std::vector<std::uint8_t>& out, std::uint64_t value, std::size_t nbytes) {
  for (std::size_t b = 0; b < nbytes; ++b) {
    out.push_back(static_cast<std::uint8_t>((value >> (8 * b)) & 0xFFu));
  }
}

std::uint64_t get_uint(std::span<const std::uint8_t> in, std::size_t offset, std::size_t nbytes) {
  std::uint64_t value = 0;
  for (std::size_t b = 0; b < nbytes; ++b) {
    value |= static_cast<std::uint64_t>(in[offset + b]) << (8 * b);
  }
  return value;
}

std::uint8_t header_bits(const CommsConfig& config) {
  return config.bits ? static_cast<std::uint8_t>(*config.bits) : std::uint8_t{0};
}

}  // namespace

std::size_t payload_entry_bytes(const CommsConfig& config) {
  return config.bits ? static_cast<std::size_t>((*config.bits + 7) / 8) : sizeof(double);
}

std::size_t wire_size(std::size_t d, const CommsConfig& config) {
  return kWireHeaderBytes + d * payload_entry_bytes(config);
}

std::vector<std::uint8_t> encode_packet(const Packet& packet, const CommsConfig& config) {
  const auto d = static_cast<std::size_t>(packet.payload.size());
  std::vector<std::uint8_t> out;
  out.reserve(wire_size(d, config));
  put_uint(out, packet.sender, 4);
  put_uint(out, packet.outer_iter, 4);
  put_uint(out, packet.inner_step, 4);
  put_uint(out, header_bits(config), 1);
  put_uint(out, d, 4);
  if (config.bits) {
    const UniformQuantizer q(config.s_min, config.s_max, *config.bits);
    const std::size_t width = payload_entry_bytes(config);
    for (Eigen::Index j = 0; j < packet.payload.size(); ++j) {
      put_uint(out, q.index(packet.payload(j)), width);
    }
  } else {
    for (Eigen::Index j = 0; j < packet.payload.size(); ++j) {
      put_uint(out, std::bit_cast<std::uint64_t>(packet.payload(j)), 8);
    }
  }
  return out;
}

Packet decode_packet(std::span<const std::uint8_t> bytes, const CommsConfig& config,
                     std::size_t* consumed) {
  if (bytes.size() < kWireHeaderBytes) throw InvalidArgument("decode_packet: truncated header");
  Packet packet;
  packet.sender = static_cast<AgentId>(get_uint(bytes, 0, 4));
  packet.outer_iter = static_cast<std::uint32_t>(get_uint(bytes, 4, 4));
  packet.inner_step = static_cast<std::uint32_t>(get_uint(bytes, 8, 4));
  const auto bits = static_cast<std::uint8_t>(get_uint(bytes, 12, 1));
  const auto d = static_cast<std::size_t>(get_uint(bytes, 13, 4));
  if (bits != header_bits(config)) {
    throw InvalidArgument("decode_packet: bit width in header does not match the config");
  }
  const std::size_t width = payload_entry_bytes(config);
  const std::size_t total = kWireHeaderBytes + d * width;
  if (bytes.size() < total) throw InvalidArgument("decode_packet: truncated payload");

  packet.payload.resize(static_cast<Eigen::Index>(d));
  std::size_t offset = kWireHeaderBytes;
  if (config.bits) {
    const UniformQuantizer q(config.s_min, config.s_max, *config.bits);
    for (std::size_t j = 0; j < d; ++j, offset += width) {
      packet.payload(static_cast<Eigen::Index>(j)) = q.level(get_uint(bytes, offset, width));
    }
  } else {
    for (std::size_t j = 0; j < d; ++j, offset += width) {
      packet.payload(static_cast<Eigen::Index>(j)) =
          std::bit_cast<double>(get_uint(bytes, offset, 8));
    }
  }
  if (consumed) *consumed = total;
  return packet;
}

void write_trace_record(std::ostream& out, std::uint32_t delivery_round, std::uint32_t receiver,
                        const Packet& packet, const CommsConfig& config) {
  std::vector<std::uint8_t> record;
  put_uint(record, delivery_round, 4);
  put_uint(record, receiver, 4);
  const auto encoded = encode_packet(packet, config);
  record.insert(record.end(), encoded.begin(), encoded.end());
  out.write(reinterpret_cast<const char*>(record.data()),
            static_cast<std::streamsize>(record.size()));
}

std::vector<TraceRecord> read_packet_trace(std::istream& in, const CommsConfig& config) {
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  std::vector<TraceRecord> records;
  std::size_t offset = 0;
  const std::span<const std::uint8_t> all(bytes);
  while (offset < bytes.size()) {
    if (bytes.size() - offset < 8) throw InvalidArgument("read_packet_trace: truncated record");
    TraceRecord rec;
    rec.delivery_round = static_cast<std::uint32_t>(get_uint(all, offset, 4));
    rec.receiver = static_cast<std::uint32_t>(get_uint(all, offset + 4, 4));
    std::size_t used = 0;
    rec.packet = decode_packet(all.subspan(offset + 8), config, &used);
    offset += 8 + used;
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace gsink
