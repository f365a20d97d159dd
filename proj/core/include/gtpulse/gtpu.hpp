#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gtpulse/result.hpp"

namespace gtpulse {

// 32-bit tunnel endpoint identifier; the key by which latency is attributed
// to a tunnel/slice. Zero is a legal wire value that callers treat as
// "unassigned".
struct Teid {
  std::uint32_t value = 0;

  bool is_unassigned() const { return value == 0; }
  auto operator<=>(const Teid&) const = default;
};

inline constexpr std::uint8_t kMsgTypeGpdu = 0xFF;
inline constexpr std::size_t kMandatoryHeaderSize = 8;

// Decoded GTP-U header.
//
// Wire layout of the mandatory header: flags byte (version | PT | reserved |
// E | S | PN), message type, 16-bit big-endian length (byte count following
// the mandatory header), 32-bit big-endian TEID at octets 4..7. When any of
// E/S/PN is set, a 4-byte optional block follows (sequence, N-PDU number,
// next-extension type), then the extension chain.
//
// `sequence` and `npdu` carry the wire values whenever the optional block is
// present; they are meaningful only when the matching flag is set.
// `ext_chain` keeps the extension headers as raw bytes: they are stepped
// over, never interpreted, but must survive re-encoding.
struct GtpuHeader {
  std::uint8_t version = 1;
  bool protocol_type = true;  // 1 = GTP-U
  bool has_extension = false;
  bool has_sequence = false;
  bool has_npdu = false;
  std::uint8_t message_type = kMsgTypeGpdu;
  std::uint16_t payload_length = 0;  // octets following the mandatory header
  Teid teid{};
  std::optional<std::uint16_t> sequence;
  std::optional<std::uint8_t> npdu;
  std::uint8_t next_ext_type = 0;
  std::vector<std::uint8_t> ext_chain;

  bool has_optional_block() const {
    return has_extension || has_sequence || has_npdu;
  }
  bool operator==(const GtpuHeader&) const = default;
};

// Inner IPv4 5-tuple, derivable only from G-PDU payloads carrying a
// well-formed IPv4+UDP or IPv4+TCP packet. Addresses are host-order numeric
// values of the four wire octets.
struct InnerFlowKey {
  std::uint32_t src_addr = 0;
  std::uint32_t dst_addr = 0;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;  // 17 = UDP, 6 = TCP

  InnerFlowKey reversed() const {
    return InnerFlowKey{dst_addr, src_addr, dst_port, src_port, protocol};
  }
  auto operator<=>(const InnerFlowKey&) const = default;
};

std::string format_ipv4(std::uint32_t addr);

struct GtpuPacket {
  GtpuHeader header;
  std::optional<InnerFlowKey> inner_flow;
  std::vector<std::uint8_t> payload;

  bool operator==(const GtpuPacket&) const = default;
};

// Full decode. Never throws on arbitrary input; malformed bytes yield
// TooShort, BadVersion, or LengthMismatch. Input must cover exactly one
// packet: trailing bytes beyond the declared length are a LengthMismatch,
// which is what makes encode(parse(b)) == b hold for every accepted input.
Result<GtpuPacket> parse_gtpu(std::span<const std::uint8_t> bytes);

// Serializes to wire bytes. The length field is recomputed from the optional
// block, extension chain, and payload. PayloadTooLarge when that total
// exceeds the 16-bit length field.
Result<std::vector<std::uint8_t>> encode_gtpu(const GtpuPacket& packet);

// TEID at octets 4..7 without touching the rest of the packet; agrees with
// parse_gtpu wherever both succeed.
Result<Teid> extract_teid(std::span<const std::uint8_t> bytes);

// Builders used by the simulator and tests.

// Minimal inner IPv4 packet with a UDP (proto 17) or TCP (proto 6) header
// and a zero-filled payload. Checksums are left zero; the codec does not
// validate them.
std::vector<std::uint8_t> make_inner_ipv4(std::uint32_t src_addr,
                                          std::uint32_t dst_addr,
                                          std::uint16_t src_port,
                                          std::uint16_t dst_port,
                                          std::uint8_t protocol,
                                          std::size_t payload_size);

// G-PDU packet with a consistent length field and decoded inner flow.
GtpuPacket make_gpdu(Teid teid, std::vector<std::uint8_t> payload,
                     std::optional<std::uint16_t> sequence = std::nullopt);

}  // namespace gtpulse
