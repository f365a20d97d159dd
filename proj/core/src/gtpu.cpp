#include "gtpulse/gtpu.hpp"

#include <cassert>
#include <cstdio>

namespace gtpulse {

namespace {

constexpr std::uint8_t kFlagPn = 0x01;
constexpr std::uint8_t kFlagS = 0x02;
constexpr std::uint8_t kFlagE = 0x04;
constexpr std::uint8_t kFlagPt = 0x10;

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>((b[at] << 8) | b[at + 1]);
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return (static_cast<std::uint32_t>(b[at]) << 24) |
         (static_cast<std::uint32_t>(b[at + 1]) << 16) |
         (static_cast<std::uint32_t>(b[at + 2]) << 8) |
         static_cast<std::uint32_t>(b[at + 3]);
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
}

// Walks the extension chain starting at `at`. Returns one-past-the-end of
// the chain, or nullopt if the chain is malformed or runs out of `end`.
std::optional<std::size_t> walk_ext_chain(std::span<const std::uint8_t> b,
                                          std::size_t at, std::size_t end,
                                          std::uint8_t first_type) {
  std::uint8_t next_type = first_type;
  while (next_type != 0) {
    if (at >= end) return std::nullopt;
    const std::size_t unit_len = static_cast<std::size_t>(b[at]) * 4;
    if (unit_len == 0 || at + unit_len > end) return std::nullopt;
    next_type = b[at + unit_len - 1];
    at += unit_len;
  }
  return at;
}

std::optional<InnerFlowKey> parse_inner_flow(
    std::span<const std::uint8_t> payload) {
  if (payload.size() < 20) return std::nullopt;
  if ((payload[0] >> 4) != 4) return std::nullopt;
  const std::size_t ihl = static_cast<std::size_t>(payload[0] & 0x0f) * 4;
  if (ihl < 20 || payload.size() < ihl) return std::nullopt;
  // Ports are only trustworthy in the first fragment.
  const std::uint16_t frag = read_u16(payload, 6);
  if ((frag & 0x1fff) != 0) return std::nullopt;
  const std::uint8_t protocol = payload[9];
  if (protocol != 6 && protocol != 17) return std::nullopt;
  if (payload.size() < ihl + 4) return std::nullopt;
  InnerFlowKey key;
  key.src_addr = read_u32(payload, 12);
  key.dst_addr = read_u32(payload, 16);
  key.src_port = read_u16(payload, ihl);
  key.dst_port = read_u16(payload, ihl + 2);
  key.protocol = protocol;
  return key;
}

}  // namespace

std::string format_ipv4(std::uint32_t addr) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (addr >> 24) & 0xff,
                (addr >> 16) & 0xff, (addr >> 8) & 0xff, addr & 0xff);
  return std::string(buf);
}

Result<GtpuPacket> parse_gtpu(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMandatoryHeaderSize) {
    return make_error(Errc::too_short,
                      "need at least 8 bytes, got " + std::to_string(bytes.size()));
  }
  const std::uint8_t flags = bytes[0];
  GtpuHeader header;
  header.version = flags >> 5;
  header.protocol_type = (flags & kFlagPt) != 0;
  if (header.version != 1) {
    return make_error(Errc::bad_version,
                      "version " + std::to_string(header.version) + ", expected 1");
  }
  if (!header.protocol_type) {
    return make_error(Errc::bad_version, "protocol type 0 is GTP', not GTP-U");
  }
  header.has_extension = (flags & kFlagE) != 0;
  header.has_sequence = (flags & kFlagS) != 0;
  header.has_npdu = (flags & kFlagPn) != 0;
  header.message_type = bytes[1];
  header.payload_length = read_u16(bytes, 2);
  header.teid = Teid{read_u32(bytes, 4)};

  const std::size_t declared_end =
      kMandatoryHeaderSize + header.payload_length;
  if (declared_end > bytes.size()) {
    return make_error(Errc::length_mismatch,
                      "declared length " + std::to_string(header.payload_length) +
                          " exceeds available bytes");
  }
  if (declared_end < bytes.size()) {
    return make_error(Errc::length_mismatch, "trailing bytes after declared length");
  }

  std::size_t at = kMandatoryHeaderSize;
  if (header.has_optional_block()) {
    if (at + 4 > declared_end) {
      return make_error(Errc::length_mismatch, "optional field block truncated");
    }
    header.sequence = read_u16(bytes, at);
    header.npdu = bytes[at + 2];
    header.next_ext_type = bytes[at + 3];
    at += 4;
    if (header.next_ext_type != 0) {
      if (!header.has_extension) {
        return make_error(Errc::length_mismatch,
                          "extension chain present without E flag");
      }
      const auto chain_end =
          walk_ext_chain(bytes, at, declared_end, header.next_ext_type);
      if (!chain_end) {
        return make_error(Errc::length_mismatch, "malformed extension chain");
      }
      header.ext_chain.assign(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                              bytes.begin() + static_cast<std::ptrdiff_t>(*chain_end));
      at = *chain_end;
    }
  }

  GtpuPacket packet;
  packet.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(at),
                        bytes.begin() + static_cast<std::ptrdiff_t>(declared_end));
  packet.header = std::move(header);
  if (packet.header.message_type == kMsgTypeGpdu) {
    packet.inner_flow = parse_inner_flow(packet.payload);
  }
  return packet;
}

Result<std::vector<std::uint8_t>> encode_gtpu(const GtpuPacket& packet) {
  const GtpuHeader& h = packet.header;
  assert(h.version == 1 && h.protocol_type);
  const std::size_t optional_size = h.has_optional_block() ? 4 : 0;
  const std::size_t total =
      optional_size + h.ext_chain.size() + packet.payload.size();
  if (total > 0xffff) {
    return make_error(Errc::payload_too_large,
                      "length " + std::to_string(total) + " exceeds 65535");
  }

  std::vector<std::uint8_t> out;
  out.reserve(kMandatoryHeaderSize + total);
  std::uint8_t flags = static_cast<std::uint8_t>(h.version << 5) | kFlagPt;
  if (h.has_extension) flags |= kFlagE;
  if (h.has_sequence) flags |= kFlagS;
  if (h.has_npdu) flags |= kFlagPn;
  out.push_back(flags);
  out.push_back(h.message_type);
  put_u16(out, static_cast<std::uint16_t>(total));
  put_u32(out, h.teid.value);
  if (optional_size != 0) {
    put_u16(out, h.sequence.value_or(0));
    out.push_back(h.npdu.value_or(0));
    out.push_back(h.next_ext_type);
    out.insert(out.end(), h.ext_chain.begin(), h.ext_chain.end());
  }
  out.insert(out.end(), packet.payload.begin(), packet.payload.end());
  return out;
}

Result<Teid> extract_teid(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMandatoryHeaderSize) {
    return make_error(Errc::too_short,
                      "need at least 8 bytes, got " + std::to_string(bytes.size()));
  }
  return Teid{read_u32(bytes, 4)};
}

std::vector<std::uint8_t> make_inner_ipv4(std::uint32_t src_addr,
                                          std::uint32_t dst_addr,
                                          std::uint16_t src_port,
                                          std::uint16_t dst_port,
                                          std::uint8_t protocol,
                                          std::size_t payload_size) {
  assert(protocol == 6 || protocol == 17);
  const std::size_t transport_header = protocol == 17 ? 8 : 20;
  const std::size_t total = 20 + transport_header + payload_size;
  std::vector<std::uint8_t> out;
  out.reserve(total);
  out.push_back(0x45);  // version 4, IHL 5
  out.push_back(0);     // DSCP/ECN
  put_u16(out, static_cast<std::uint16_t>(total));
  put_u16(out, 0);  // identification
  put_u16(out, 0);  // flags/fragment offset
  out.push_back(64);  // TTL
  out.push_back(protocol);
  put_u16(out, 0);  // header checksum, unvalidated
  put_u32(out, src_addr);
  put_u32(out, dst_addr);
  put_u16(out, src_port);
  put_u16(out, dst_port);
  if (protocol == 17) {
    put_u16(out, static_cast<std::uint16_t>(8 + payload_size));
    put_u16(out, 0);  // UDP checksum
  } else {
    put_u32(out, 0);          // seq
    put_u32(out, 0);          // ack
    out.push_back(5 << 4);    // data offset 5 words
    out.push_back(0x10);      // ACK flag
    put_u16(out, 0xffff);     // window
    put_u16(out, 0);          // checksum
    put_u16(out, 0);          // urgent pointer
  }
  out.resize(total, 0);
  return out;
}

GtpuPacket make_gpdu(Teid teid, std::vector<std::uint8_t> payload,
                     std::optional<std::uint16_t> sequence) {
  GtpuPacket packet;
  packet.header.teid = teid;
  packet.header.message_type = kMsgTypeGpdu;
  if (sequence) {
    packet.header.has_sequence = true;
    packet.header.sequence = *sequence;
    packet.header.npdu = 0;
  }
  packet.header.payload_length = static_cast<std::uint16_t>(
      (packet.header.has_optional_block() ? 4 : 0) + payload.size());
  packet.inner_flow = parse_inner_flow(payload);
  packet.payload = std::move(payload);
  return packet;
}

}  // namespace gtpulse
