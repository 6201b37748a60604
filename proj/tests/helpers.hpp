#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "osids/net.hpp"

namespace testutil {

using osids::IpAddr;
using osids::Protocol;
using osids::RawPacket;
using osids::TcpFlags;

// Builds classic capture files byte by byte. big_endian emulates a file
// written on an opposite-endianness machine (byte-swapped magic).
class PcapWriter {
public:
    explicit PcapWriter(bool big_endian = false, std::uint32_t link_type = 1)
        : big_endian_(big_endian) {
        u32(0xa1b2c3d4u);
        u16(2); u16(4);  // version
        u32(0);          // thiszone
        u32(0);          // sigfigs
        u32(65535);      // snaplen
        u32(link_type);
    }

    void add_record(double ts, const std::string& frame, int truncate_to = -1) {
        const auto sec = static_cast<std::uint32_t>(ts);
        const auto usec = static_cast<std::uint32_t>((ts - sec) * 1e6 + 0.5);
        u32(sec);
        u32(usec);
        const std::uint32_t incl =
            truncate_to >= 0 ? static_cast<std::uint32_t>(truncate_to)
                             : static_cast<std::uint32_t>(frame.size());
        u32(incl);
        u32(static_cast<std::uint32_t>(frame.size()));
        bytes_ += frame.substr(0, incl);
    }

    void append_raw(const std::string& raw) { bytes_ += raw; }

    const std::string& bytes() const { return bytes_; }

    static std::string eth_ipv4_udp(const std::string& src, std::uint16_t sport,
                                    const std::string& dst, std::uint16_t dport,
                                    const std::string& payload) {
        std::string ip_payload;
        be16(ip_payload, sport);
        be16(ip_payload, dport);
        be16(ip_payload, static_cast<std::uint16_t>(8 + payload.size()));
        be16(ip_payload, 0); // checksum
        ip_payload += payload;
        return eth_frame(ipv4(17, src, dst, ip_payload));
    }

    static std::string eth_ipv4_tcp(const std::string& src, std::uint16_t sport,
                                    const std::string& dst, std::uint16_t dport,
                                    std::uint8_t flags, std::uint16_t window,
                                    std::uint32_t seq, std::uint32_t ack,
                                    const std::string& payload) {
        std::string ip_payload;
        be16(ip_payload, sport);
        be16(ip_payload, dport);
        be32(ip_payload, seq);
        be32(ip_payload, ack);
        ip_payload.push_back(static_cast<char>(5 << 4)); // data offset
        ip_payload.push_back(static_cast<char>(flags));
        be16(ip_payload, window);
        be16(ip_payload, 0); // checksum
        be16(ip_payload, 0); // urgent
        ip_payload += payload;
        return eth_frame(ipv4(6, src, dst, ip_payload));
    }

    static std::string eth_frame(const std::string& ip_packet, std::uint16_t ethertype = 0x0800) {
        std::string f(12, '\x01'); // MACs, irrelevant
        be16(f, ethertype);
        return f + ip_packet;
    }

    static std::string ipv4(std::uint8_t proto, const std::string& src, const std::string& dst,
                            const std::string& l4, std::uint16_t frag = 0) {
        std::string p;
        p.push_back(0x45); // version 4, IHL 5
        p.push_back(0);
        be16(p, static_cast<std::uint16_t>(20 + l4.size()));
        be16(p, 0);    // id
        be16(p, frag);
        p.push_back(64); // ttl
        p.push_back(static_cast<char>(proto));
        be16(p, 0); // checksum
        be32(p, IpAddr::parse(src).v);
        be32(p, IpAddr::parse(dst).v);
        return p + l4;
    }

private:
    void u16(std::uint16_t v) {
        if (big_endian_) {
            bytes_.push_back(static_cast<char>(v >> 8));
            bytes_.push_back(static_cast<char>(v & 0xff));
        } else {
            bytes_.push_back(static_cast<char>(v & 0xff));
            bytes_.push_back(static_cast<char>(v >> 8));
        }
    }

    void u32(std::uint32_t v) {
        if (big_endian_) {
            for (int i = 3; i >= 0; --i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        } else {
            for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        }
    }

    static void be16(std::string& s, std::uint16_t v) {
        s.push_back(static_cast<char>(v >> 8));
        s.push_back(static_cast<char>(v & 0xff));
    }

    static void be32(std::string& s, std::uint32_t v) {
        for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }

    std::string bytes_;
    bool big_endian_;
};

inline RawPacket make_packet(double ts, const std::string& src, std::uint16_t sport,
                             const std::string& dst, std::uint16_t dport,
                             Protocol proto = Protocol::UDP, std::size_t payload_len = 0) {
    RawPacket p;
    p.timestamp = ts;
    p.src_ip = IpAddr::parse(src);
    p.dst_ip = IpAddr::parse(dst);
    p.src_port = sport;
    p.dst_port = dport;
    p.protocol = proto;
    p.payload.assign(payload_len, 0x42);
    return p;
}

inline RawPacket make_tcp_packet(double ts, const std::string& src, std::uint16_t sport,
                                 const std::string& dst, std::uint16_t dport,
                                 std::uint8_t flags, std::uint16_t window = 4096,
                                 std::size_t payload_len = 0) {
    RawPacket p = make_packet(ts, src, sport, dst, dport, Protocol::TCP, payload_len);
    p.tcp_flags = TcpFlags::from_byte(flags);
    p.tcp_window = window;
    return p;
}

} // namespace testutil
