#include "osids/flow_assembly.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "osids/error.hpp"

namespace osids {

std::string IpAddr::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", (v >> 24) & 0xff, (v >> 16) & 0xff,
                  (v >> 8) & 0xff, v & 0xff);
    return buf;
}

IpAddr IpAddr::parse(const std::string& s) {
    unsigned a, b, c, d;
    char tail;
    if (std::sscanf(s.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail) != 4 ||
        a > 255 || b > 255 || c > 255 || d > 255)
        throw Error("malformed IPv4 address: '" + s + "'");
    return IpAddr{(a << 24) | (b << 16) | (c << 8) | d};
}

std::string FlowKey::to_string() const {
    std::string s = protocol == Protocol::TCP ? "tcp:" : "udp:";
    s += a.ip.to_string() + ":" + std::to_string(a.port) + "-";
    s += b.ip.to_string() + ":" + std::to_string(b.port);
    return s;
}

std::vector<Flow> assemble_flows(std::vector<RawPacket> packets, double idle_timeout) {
    // stable sort by timestamp keeps capture order for ties
    std::stable_sort(packets.begin(), packets.end(),
                     [](const RawPacket& x, const RawPacket& y) { return x.timestamp < y.timestamp; });

    std::vector<Flow> flows;
    std::unordered_map<FlowKey, std::size_t, FlowKeyHash> open; // key -> index into flows

    for (auto& pkt : packets) {
        const FlowKey key = FlowKey::of(pkt);
        auto it = open.find(key);
        bool start_new = true;
        if (it != open.end()) {
            Flow& f = flows[it->second];
            const bool idle = pkt.timestamp - f.end_time > idle_timeout;
            const bool syn_restart = pkt.protocol == Protocol::TCP &&
                                     pkt.tcp_flags.syn && !pkt.tcp_flags.ack;
            start_new = idle || syn_restart;
        }
        if (start_new) {
            Flow f;
            f.key = key;
            f.initiator = Endpoint{pkt.src_ip, pkt.src_port};
            f.start_time = pkt.timestamp;
            flows.push_back(std::move(f));
            open[key] = flows.size() - 1;
        }
        Flow& f = flows[open[key]];
        f.end_time = pkt.timestamp;
        f.packets.push_back(std::move(pkt));
    }
    return flows;
}

std::vector<Flow> label_flows(std::vector<Flow> flows, const std::vector<AttackRecord>& records) {
    for (auto& flow : flows) {
        const IpAddr src = flow.initiator.ip;
        const IpAddr dst = flow.initiator == flow.key.a ? flow.key.b.ip : flow.key.a.ip;

        const AttackRecord* best = nullptr;
        for (const auto& rec : records) {
            const bool pair_match = (src == rec.src_ip && dst == rec.dst_ip) ||
                                    (src == rec.dst_ip && dst == rec.src_ip);
            if (!pair_match) continue;
            if (flow.start_time < rec.start_time || flow.start_time > rec.end_time) continue;
            // latest-starting record wins; strict > keeps the first record on ties
            if (best == nullptr || rec.start_time > best->start_time) best = &rec;
        }
        flow.label = best ? best->label : kBenignLabel;
    }
    return flows;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::vector<AttackRecord> parse_attack_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<AttackRecord> records;
    bool first = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("src_ip", 0) == 0) continue; // header
        }
        auto fields = split_csv_line(line);
        if (fields.size() < 5)
            throw Error("attack CSV line " + std::to_string(lineno) + ": expected 5 fields");
        AttackRecord rec;
        rec.src_ip = IpAddr::parse(fields[0]);
        rec.dst_ip = IpAddr::parse(fields[1]);
        try {
            rec.start_time = std::stod(fields[2]);
            rec.end_time = std::stod(fields[3]);
        } catch (const std::exception&) {
            throw Error("attack CSV line " + std::to_string(lineno) + ": bad time field");
        }
        rec.label = fields[4];
        if (rec.label.empty())
            throw Error("attack CSV line " + std::to_string(lineno) + ": empty label");
        if (rec.start_time > rec.end_time)
            throw Error("attack CSV line " + std::to_string(lineno) + ": start_time > end_time");
        records.push_back(std::move(rec));
    }
    return records;
}

} // namespace osids
