#pragma once

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

namespace osids {

enum class Protocol : std::uint8_t { TCP = 6, UDP = 17 };

// IPv4 address held in host byte order.
struct IpAddr {
    std::uint32_t v = 0;

    auto operator<=>(const IpAddr&) const = default;

    std::string to_string() const;
    static IpAddr parse(const std::string& s); // throws Error on malformed input
};

struct TcpFlags {
    bool fin = false, syn = false, rst = false, psh = false;
    bool ack = false, urg = false, ece = false, cwr = false;

    bool operator==(const TcpFlags&) const = default;

    std::uint8_t to_byte() const {
        return static_cast<std::uint8_t>(
            (fin << 0) | (syn << 1) | (rst << 2) | (psh << 3) |
            (ack << 4) | (urg << 5) | (ece << 6) | (cwr << 7));
    }
    static TcpFlags from_byte(std::uint8_t b) {
        TcpFlags f;
        f.fin = b & 0x01; f.syn = b & 0x02; f.rst = b & 0x04; f.psh = b & 0x08;
        f.ack = b & 0x10; f.urg = b & 0x20; f.ece = b & 0x40; f.cwr = b & 0x80;
        return f;
    }
};

struct RawPacket {
    double timestamp = 0.0; // seconds since epoch, microsecond resolution
    IpAddr src_ip, dst_ip;
    std::uint16_t src_port = 0, dst_port = 0;
    Protocol protocol = Protocol::TCP;
    // TCP only; all-zero for UDP
    std::uint32_t tcp_seq = 0, tcp_ack = 0;
    TcpFlags tcp_flags;
    std::uint16_t tcp_window = 0;
    std::vector<std::uint8_t> payload;
};

struct Endpoint {
    IpAddr ip;
    std::uint16_t port = 0;

    auto operator<=>(const Endpoint&) const = default;
};

// Canonical bidirectional 5-tuple: the lexicographically smaller endpoint is
// stored first so both directions map to the same key.
struct FlowKey {
    Endpoint a, b;
    Protocol protocol = Protocol::TCP;

    static FlowKey of(const RawPacket& p) {
        Endpoint s{p.src_ip, p.src_port}, d{p.dst_ip, p.dst_port};
        FlowKey k;
        k.protocol = p.protocol;
        if (s <= d) { k.a = s; k.b = d; } else { k.a = d; k.b = s; }
        return k;
    }

    bool operator==(const FlowKey&) const = default;
    auto operator<=>(const FlowKey&) const = default;

    std::string to_string() const;
};

struct FlowKeyHash {
    std::size_t operator()(const FlowKey& k) const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t x) {
            h ^= x;
            h *= 1099511628211ull;
        };
        mix(k.a.ip.v); mix(k.a.port); mix(k.b.ip.v); mix(k.b.port);
        mix(static_cast<std::uint64_t>(k.protocol));
        return static_cast<std::size_t>(h);
    }
};

inline constexpr const char* kBenignLabel = "BENIGN";
inline constexpr const char* kUnlabeled = "UNLABELED";
inline constexpr const char* kUnknownLabel = "UNKNOWN_ATTACK";

struct Flow {
    FlowKey key;
    Endpoint initiator;              // endpoint that sent the first packet
    std::vector<RawPacket> packets;  // ordered by timestamp, ties by capture order
    double start_time = 0.0, end_time = 0.0;
    std::string label = kUnlabeled;
};

struct AttackRecord {
    IpAddr src_ip, dst_ip;
    double start_time = 0.0, end_time = 0.0;
    std::string label;
};

} // namespace osids
