#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "osids/net.hpp"

namespace osids {

struct CaptureStats {
    std::uint64_t skipped_non_ip = 0;      // non-IPv4 ethertype, or IPv6
    std::uint64_t skipped_non_tcp_udp = 0;
    std::uint64_t skipped_fragmented = 0;
    std::uint64_t skipped_truncated = 0;

    std::uint64_t total() const {
        return skipped_non_ip + skipped_non_tcp_udp + skipped_fragmented + skipped_truncated;
    }
};

struct CaptureResult {
    std::vector<RawPacket> packets;
    CaptureStats stats;
};

// Parses a classic capture file (magic 0xA1B2C3D4, either endianness,
// Ethernet link type) into IPv4 TCP/UDP packets in file order. Packets the
// decoder cannot use are counted and skipped, never fatal.
//
// Throws BadMagic for an unrecognized global header or link type,
// TruncatedHeader when the file ends inside a record header.
CaptureResult parse_capture(std::string_view capture_bytes);

} // namespace osids
