#include "osids/flowset.hpp"

#include <fstream>
#include <sstream>

#include "osids/error.hpp"
#include "osids/io_util.hpp"

namespace osids {

namespace {
constexpr const char* kMagicLine = "osids.flowset 1";
}

std::string serialize_flows(const std::vector<Flow>& flows) {
    std::string out;
    out += kMagicLine;
    out += "\nflows " + std::to_string(flows.size()) + "\nend\n";

    for (const auto& f : flows) {
        out.push_back(static_cast<char>(f.key.protocol));
        put_u32(out, f.key.a.ip.v);
        put_u16(out, f.key.a.port);
        put_u32(out, f.key.b.ip.v);
        put_u16(out, f.key.b.port);
        put_u32(out, f.initiator.ip.v);
        put_u16(out, f.initiator.port);
        put_f64(out, f.start_time);
        put_f64(out, f.end_time);
        put_u16(out, static_cast<std::uint16_t>(f.label.size()));
        out += f.label;
        put_u32(out, static_cast<std::uint32_t>(f.packets.size()));
        for (const auto& p : f.packets) {
            put_f64(out, p.timestamp);
            put_u32(out, p.src_ip.v);
            put_u16(out, p.src_port);
            put_u32(out, p.dst_ip.v);
            put_u16(out, p.dst_port);
            out.push_back(static_cast<char>(p.tcp_flags.to_byte()));
            put_u16(out, p.tcp_window);
            put_u32(out, p.tcp_seq);
            put_u32(out, p.tcp_ack);
            put_u32(out, static_cast<std::uint32_t>(p.payload.size()));
            out.append(reinterpret_cast<const char*>(p.payload.data()), p.payload.size());
        }
    }
    return out;
}

std::vector<Flow> deserialize_flows(const std::string& bytes) {
    std::size_t pos = 0;
    auto read_line = [&]() {
        std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string::npos) throw BadMagic("flow container: manifest not terminated");
        std::string line = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        return line;
    };

    if (read_line() != kMagicLine)
        throw BadMagic("not a flow container (bad magic line)");
    std::size_t count = 0;
    bool have_count = false;
    for (;;) {
        std::string line = read_line();
        if (line == "end") break;
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "flows") {
            ls >> count;
            have_count = true;
        }
        // unknown manifest keys are ignored for forward compatibility
    }
    if (!have_count) throw Error("flow container: missing flow count");

    ByteReader r(reinterpret_cast<const unsigned char*>(bytes.data()) + pos, bytes.size() - pos);
    std::vector<Flow> flows;
    flows.reserve(count);
    try {
        for (std::size_t i = 0; i < count; ++i) {
            Flow f;
            const auto proto_byte = r.u8();
            if (proto_byte != 6 && proto_byte != 17)
                throw Error("flow container: bad protocol byte");
            f.key.protocol = static_cast<Protocol>(proto_byte);
            f.key.a.ip.v = r.u32();
            f.key.a.port = r.u16();
            f.key.b.ip.v = r.u32();
            f.key.b.port = r.u16();
            f.initiator.ip.v = r.u32();
            f.initiator.port = r.u16();
            f.start_time = r.f64();
            f.end_time = r.f64();
            f.label = r.bytes(r.u16());
            const std::uint32_t n_packets = r.u32();
            f.packets.reserve(n_packets);
            for (std::uint32_t j = 0; j < n_packets; ++j) {
                RawPacket p;
                p.protocol = f.key.protocol;
                p.timestamp = r.f64();
                p.src_ip.v = r.u32();
                p.src_port = r.u16();
                p.dst_ip.v = r.u32();
                p.dst_port = r.u16();
                p.tcp_flags = TcpFlags::from_byte(r.u8());
                p.tcp_window = r.u16();
                p.tcp_seq = r.u32();
                p.tcp_ack = r.u32();
                const std::uint32_t plen = r.u32();
                const std::string raw = r.bytes(plen);
                p.payload.assign(raw.begin(), raw.end());
                f.packets.push_back(std::move(p));
            }
            flows.push_back(std::move(f));
        }
    } catch (const Error& e) {
        throw Error(std::string("flow container truncated or corrupt: ") + e.what());
    }
    return flows;
}

void write_flows_file(const std::string& path, const std::vector<Flow>& flows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    const std::string bytes = serialize_flows(flows);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path);
}

std::vector<Flow> read_flows_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path);
    return deserialize_flows(read_stream(in));
}

} // namespace osids
