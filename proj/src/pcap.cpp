#include "osids/pcap.hpp"

#include <cstring>

#include "osids/error.hpp"

namespace osids {

namespace {

constexpr std::uint32_t kMagicUsec = 0xa1b2c3d4u;
constexpr std::uint32_t kMagicUsecSwapped = 0xd4c3b2a1u;
constexpr std::uint32_t kLinkTypeEthernet = 1;

constexpr std::uint16_t kEthertypeIPv4 = 0x0800;
constexpr std::size_t kEthHeaderLen = 14;

class RecordReader {
public:
    RecordReader(const unsigned char* p, std::size_t n, bool swapped)
        : p_(p), n_(n), swapped_(swapped) {}

    std::size_t remaining() const { return n_ - pos_; }

    std::uint32_t u32() {
        std::uint32_t v;
        std::memcpy(&v, p_ + pos_, 4);
        pos_ += 4;
        return swapped_ ? __builtin_bswap32(v) : v;
    }

    const unsigned char* data() const { return p_ + pos_; }
    void skip(std::size_t n) { pos_ += n; }

private:
    const unsigned char* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
    bool swapped_;
};

// network byte order field helpers
std::uint16_t be16(const unsigned char* p) {
    return static_cast<std::uint16_t>((p[0] << 8) | p[1]);
}
std::uint32_t be32(const unsigned char* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (p[1] << 16) | (p[2] << 8) | p[3];
}

// Decodes Ethernet/IPv4/{TCP,UDP}. Returns false (with the right counter
// bumped) when the packet is not usable.
bool decode_packet(const unsigned char* data, std::size_t len, double ts,
                   RawPacket& out, CaptureStats& stats) {
    if (len < kEthHeaderLen) {
        ++stats.skipped_truncated;
        return false;
    }
    const std::uint16_t ethertype = be16(data + 12);
    if (ethertype != kEthertypeIPv4) {
        ++stats.skipped_non_ip;
        return false;
    }
    const unsigned char* ip = data + kEthHeaderLen;
    std::size_t ip_avail = len - kEthHeaderLen;
    if (ip_avail < 20) {
        ++stats.skipped_truncated;
        return false;
    }
    const std::uint8_t version = ip[0] >> 4;
    const std::size_t ihl = static_cast<std::size_t>(ip[0] & 0x0f) * 4;
    if (version != 4) {
        ++stats.skipped_non_ip;
        return false;
    }
    if (ihl < 20 || ip_avail < ihl) {
        ++stats.skipped_truncated;
        return false;
    }
    const std::uint16_t total_len = be16(ip + 2);
    const std::uint16_t frag = be16(ip + 6);
    const bool more_fragments = frag & 0x2000;
    const std::uint16_t frag_offset = frag & 0x1fff;
    if (more_fragments || frag_offset != 0) {
        ++stats.skipped_fragmented;
        return false;
    }
    if (total_len < ihl || total_len > ip_avail) {
        ++stats.skipped_truncated;
        return false;
    }
    const std::uint8_t proto = ip[9];
    const unsigned char* l4 = ip + ihl;
    const std::size_t l4_len = total_len - ihl;

    out = RawPacket{};
    out.timestamp = ts;
    out.src_ip = IpAddr{be32(ip + 12)};
    out.dst_ip = IpAddr{be32(ip + 16)};

    if (proto == 6) { // TCP
        if (l4_len < 20) {
            ++stats.skipped_truncated;
            return false;
        }
        const std::size_t data_off = static_cast<std::size_t>(l4[12] >> 4) * 4;
        if (data_off < 20 || data_off > l4_len) {
            ++stats.skipped_truncated;
            return false;
        }
        out.protocol = Protocol::TCP;
        out.src_port = be16(l4);
        out.dst_port = be16(l4 + 2);
        out.tcp_seq = be32(l4 + 4);
        out.tcp_ack = be32(l4 + 8);
        out.tcp_flags = TcpFlags::from_byte(l4[13]);
        out.tcp_window = be16(l4 + 14);
        out.payload.assign(l4 + data_off, l4 + l4_len);
        return true;
    }
    if (proto == 17) { // UDP
        if (l4_len < 8) {
            ++stats.skipped_truncated;
            return false;
        }
        const std::uint16_t udp_len = be16(l4 + 4);
        if (udp_len < 8 || udp_len > l4_len) {
            ++stats.skipped_truncated;
            return false;
        }
        out.protocol = Protocol::UDP;
        out.src_port = be16(l4);
        out.dst_port = be16(l4 + 2);
        out.payload.assign(l4 + 8, l4 + udp_len);
        return true;
    }
    ++stats.skipped_non_tcp_udp;
    return false;
}

} // namespace

CaptureResult parse_capture(std::string_view capture_bytes) {
    const auto* data = reinterpret_cast<const unsigned char*>(capture_bytes.data());
    const std::size_t size = capture_bytes.size();

    if (size < 24) throw BadMagic("capture file shorter than the 24-byte global header");

    std::uint32_t magic;
    std::memcpy(&magic, data, 4);
    bool swapped;
    if (magic == kMagicUsec) {
        swapped = false;
    } else if (magic == kMagicUsecSwapped) {
        swapped = true;
    } else {
        throw BadMagic("unrecognized capture magic");
    }

    RecordReader hdr(data, size, swapped);
    hdr.skip(4);         // magic
    hdr.skip(2 + 2 + 4); // version major/minor, thiszone
    hdr.skip(4 + 4);     // sigfigs, snaplen
    const std::uint32_t link_type = hdr.u32();
    if (link_type != kLinkTypeEthernet)
        throw BadMagic("unsupported link type " + std::to_string(link_type) +
                       " (only Ethernet is handled)");

    CaptureResult result;
    RecordReader rec(data + 24, size - 24, swapped);
    while (rec.remaining() > 0) {
        if (rec.remaining() < 16)
            throw TruncatedHeader("capture ends inside a record header");
        const std::uint32_t ts_sec = rec.u32();
        const std::uint32_t ts_usec = rec.u32();
        const std::uint32_t incl_len = rec.u32();
        const std::uint32_t orig_len = rec.u32();
        if (rec.remaining() < incl_len) {
            // last record cut off mid-data: counted like any snapped packet
            ++result.stats.skipped_truncated;
            break;
        }
        const double ts = static_cast<double>(ts_sec) + static_cast<double>(ts_usec) * 1e-6;
        if (incl_len < orig_len) {
            ++result.stats.skipped_truncated;
            rec.skip(incl_len);
            continue;
        }
        RawPacket pkt;
        if (decode_packet(rec.data(), incl_len, ts, pkt, result.stats))
            result.packets.push_back(std::move(pkt));
        rec.skip(incl_len);
    }
    return result;
}

} // namespace osids
