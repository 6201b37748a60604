#include "osids/synth.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <json.hpp>

#include "osids/error.hpp"
#include "osids/rng.hpp"

namespace osids {

SyntheticClassSpec SyntheticClassSpec::from_seed(std::string name, std::uint64_t template_seed) {
    SyntheticClassSpec spec;
    spec.name = std::move(name);
    Rng rng(template_seed);
    for (auto& b : spec.template_bytes)
        b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return spec;
}

namespace {

std::uint8_t clamp_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
}

std::array<std::uint8_t, kPayloadBytes> shared_template() {
    // fixed interpolation target for the difficulty dial
    static const auto t = [] {
        std::array<std::uint8_t, kPayloadBytes> bytes{};
        Rng rng(0xb10bull);
        for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
        return bytes;
    }();
    return t;
}

} // namespace

std::vector<Flow> generate_flows(const std::vector<SyntheticClassSpec>& specs,
                                 const std::vector<int>& counts, std::uint64_t seed,
                                 double difficulty) {
    if (specs.size() != counts.size())
        throw Error("generate_flows: one count per class spec required");
    if (difficulty < 0.0 || difficulty > 1.0)
        throw Error("generate_flows: difficulty must be in [0, 1]");
    for (int c : counts)
        if (c < 1) throw Error("generate_flows: counts must be >= 1");

    const auto base = shared_template();
    Rng rng(seed);
    std::vector<Flow> flows;
    double t0 = 1.7e9;

    for (std::size_t ci = 0; ci < specs.size(); ++ci) {
        const SyntheticClassSpec& spec = specs[ci];
        std::array<std::uint8_t, kPayloadBytes> tmpl{};
        for (int i = 0; i < kPayloadBytes; ++i)
            tmpl[i] = clamp_byte(std::round((1.0 - difficulty) * spec.template_bytes[i] +
                                            difficulty * base[i]));

        for (int fi = 0; fi < counts[ci]; ++fi) {
            Flow flow;
            flow.label = spec.name;
            const Endpoint client{
                IpAddr{(10u << 24) | (static_cast<std::uint32_t>(ci + 1) << 16) |
                       (static_cast<std::uint32_t>(fi / 250) << 8) |
                       (2u + static_cast<std::uint32_t>(fi % 250))},
                static_cast<std::uint16_t>(1024 + rng.uniform_int(0, 60000))};
            const Endpoint server{
                IpAddr{(172u << 24) | (16u << 16) | static_cast<std::uint32_t>(ci + 1)},
                spec.server_port};

            const int n_packets = rng.uniform_int(spec.min_packets, spec.max_packets);
            double ts = t0;
            for (int pi = 0; pi < n_packets; ++pi) {
                RawPacket pkt;
                pkt.protocol = Protocol::TCP;
                const bool fwd = pi == 0 || rng.uniform() < spec.fwd_bias;
                pkt.src_ip = fwd ? client.ip : server.ip;
                pkt.src_port = fwd ? client.port : server.port;
                pkt.dst_ip = fwd ? server.ip : client.ip;
                pkt.dst_port = fwd ? server.port : client.port;
                pkt.timestamp = ts;
                pkt.tcp_seq = static_cast<std::uint32_t>(rng.next_u64());
                pkt.tcp_ack = static_cast<std::uint32_t>(rng.next_u64());
                pkt.tcp_flags = TcpFlags::from_byte(spec.flag_pattern);
                pkt.tcp_window =
                    static_cast<std::uint16_t>(rng.uniform_int(spec.min_window, spec.max_window));
                const int len = rng.uniform_int(spec.min_payload, spec.max_payload);
                pkt.payload.resize(static_cast<std::size_t>(len));
                for (int b = 0; b < len; ++b)
                    pkt.payload[static_cast<std::size_t>(b)] = clamp_byte(
                        static_cast<double>(tmpl[b % kPayloadBytes]) + rng.normal() * spec.noise);
                flow.packets.push_back(std::move(pkt));
                // strictly positive gap keeps the packet order well defined
                ts += std::max(1e-6, -spec.itvt_scale * std::log(1.0 - rng.uniform()));
            }
            flow.key = FlowKey::of(flow.packets.front());
            flow.initiator = client;
            flow.start_time = flow.packets.front().timestamp;
            flow.end_time = flow.packets.back().timestamp;
            flows.push_back(std::move(flow));
            t0 += 10.0;
        }
    }
    rng.shuffle(flows);
    return flows;
}

SynthSpec parse_synth_spec(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("synthesis spec: invalid JSON: ") + e.what());
    }

    SynthSpec spec;
    spec.seed = doc.value("seed", 1ull);
    spec.difficulty = doc.value("difficulty", 0.0);
    if (!doc.contains("classes") || !doc["classes"].is_array() || doc["classes"].empty())
        throw Error("synthesis spec: 'classes' must be a non-empty array");

    static const std::vector<std::pair<std::string, std::uint8_t>> kFlagBits = {
        {"FIN", 0x01}, {"SYN", 0x02}, {"RST", 0x04}, {"PSH", 0x08},
        {"ACK", 0x10}, {"URG", 0x20}, {"ECE", 0x40}, {"CWR", 0x80}};

    for (const auto& entry : doc["classes"]) {
        if (!entry.contains("name"))
            throw Error("synthesis spec: every class needs a 'name'");
        const std::string name = entry["name"].get<std::string>();
        const std::uint64_t template_seed =
            entry.value("template_seed", std::hash<std::string>{}(name));
        SyntheticClassSpec cls = SyntheticClassSpec::from_seed(name, template_seed);
        cls.noise = entry.value("noise", cls.noise);
        cls.min_packets = entry.value("min_packets", cls.min_packets);
        cls.max_packets = entry.value("max_packets", cls.max_packets);
        cls.min_payload = entry.value("min_payload", cls.min_payload);
        cls.max_payload = entry.value("max_payload", cls.max_payload);
        cls.min_window = entry.value("min_window", cls.min_window);
        cls.max_window = entry.value("max_window", cls.max_window);
        cls.itvt_scale = entry.value("itvt_scale", cls.itvt_scale);
        cls.fwd_bias = entry.value("fwd_bias", cls.fwd_bias);
        cls.server_port = entry.value("server_port", cls.server_port);
        if (entry.contains("flags")) {
            std::uint8_t pattern = 0;
            for (const auto& f : entry["flags"]) {
                const std::string fname = f.get<std::string>();
                bool found = false;
                for (const auto& [n, bit] : kFlagBits)
                    if (n == fname) { pattern |= bit; found = true; }
                if (!found) throw Error("synthesis spec: unknown TCP flag '" + fname + "'");
            }
            cls.flag_pattern = pattern;
        }
        if (cls.min_packets < 1 || cls.max_packets < cls.min_packets || cls.max_packets > 64)
            throw Error("synthesis spec: packet count range invalid for class '" + name + "'");
        if (cls.noise < 0.0)
            throw Error("synthesis spec: noise must be >= 0 for class '" + name + "'");
        if (cls.min_payload < 0 || cls.max_payload < cls.min_payload ||
            cls.max_payload > kPayloadBytes)
            throw Error("synthesis spec: payload range invalid for class '" + name + "'");
        spec.classes.push_back(std::move(cls));
        spec.counts.push_back(entry.value("count", 100));
    }
    return spec;
}

} // namespace osids
