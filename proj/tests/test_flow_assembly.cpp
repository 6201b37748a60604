#include <doctest.h>

#include <algorithm>
#include <map>

#include "helpers.hpp"
#include "osids/error.hpp"
#include "osids/flow_assembly.hpp"
#include "osids/flowset.hpp"
#include "osids/pcap.hpp"

using namespace osids;
using testutil::PcapWriter;
using testutil::make_packet;
using testutil::make_tcp_packet;

TEST_CASE("capture with zero records yields no packets and no skips") {
    PcapWriter w;
    const auto result = parse_capture(w.bytes());
    CHECK(result.packets.empty());
    CHECK(result.stats.total() == 0);
}

TEST_CASE("hand-assembled UDP packet decodes field by field") {
    PcapWriter w;
    w.add_record(1000.5, PcapWriter::eth_ipv4_udp("192.168.1.10", 1234, "8.8.8.8", 53, "AB"));
    const auto result = parse_capture(w.bytes());
    REQUIRE(result.packets.size() == 1);
    const RawPacket& p = result.packets[0];
    CHECK(p.protocol == Protocol::UDP);
    CHECK(p.src_ip.to_string() == "192.168.1.10");
    CHECK(p.dst_ip.to_string() == "8.8.8.8");
    CHECK(p.src_port == 1234);
    CHECK(p.dst_port == 53);
    CHECK(p.payload.size() == 2);
    CHECK(p.payload[0] == 'A');
    CHECK(p.payload[1] == 'B');
    CHECK(p.timestamp == doctest::Approx(1000.5).epsilon(1e-9));
    CHECK(result.stats.total() == 0);
}

TEST_CASE("TCP packet carries flags, window, seq and ack") {
    PcapWriter w;
    w.add_record(7.25, PcapWriter::eth_ipv4_tcp("10.0.0.1", 40000, "10.0.0.2", 80,
                                                0x12 /* SYN|ACK */, 8192, 111, 222, "xyz"));
    const auto result = parse_capture(w.bytes());
    REQUIRE(result.packets.size() == 1);
    const RawPacket& p = result.packets[0];
    CHECK(p.protocol == Protocol::TCP);
    CHECK(p.tcp_flags.syn);
    CHECK(p.tcp_flags.ack);
    CHECK_FALSE(p.tcp_flags.fin);
    CHECK(p.tcp_window == 8192);
    CHECK(p.tcp_seq == 111);
    CHECK(p.tcp_ack == 222);
    CHECK(p.payload.size() == 3);
}

TEST_CASE("byte-swapped capture header is accepted") {
    PcapWriter w(/*big_endian=*/true);
    w.add_record(42.0, PcapWriter::eth_ipv4_udp("1.2.3.4", 10, "5.6.7.8", 20, "hi"));
    const auto result = parse_capture(w.bytes());
    REQUIRE(result.packets.size() == 1);
    CHECK(result.packets[0].payload.size() == 2);
    CHECK(result.packets[0].timestamp == doctest::Approx(42.0));
}

TEST_CASE("bad magic is rejected") {
    std::string bytes = "\xde\xad\xbe\xef";
    bytes.resize(24, '\0');
    CHECK_THROWS_AS(parse_capture(bytes), BadMagic);
    CHECK_THROWS_AS(parse_capture("short"), BadMagic);
}

TEST_CASE("non-Ethernet link type is rejected") {
    PcapWriter w(false, /*link_type=*/101); // raw IP
    CHECK_THROWS_AS(parse_capture(w.bytes()), BadMagic);
}

TEST_CASE("file ending inside a record header is an error") {
    PcapWriter w;
    w.add_record(1.0, PcapWriter::eth_ipv4_udp("1.1.1.1", 1, "2.2.2.2", 2, ""));
    std::string bytes = w.bytes();
    bytes += "\x01\x02\x03"; // 3 stray bytes where a 16-byte record header should start
    CHECK_THROWS_AS(parse_capture(bytes), TruncatedHeader);
}

TEST_CASE("unusable packets are counted, not fatal") {
    PcapWriter w;
    w.add_record(1.0, PcapWriter::eth_frame(PcapWriter::ipv4(
                          17, "1.1.1.1", "2.2.2.2", "12345678"), 0x86dd)); // IPv6 ethertype
    w.add_record(2.0, PcapWriter::eth_ipv4_udp("1.1.1.1", 1, "2.2.2.2", 2, "ok"));
    w.add_record(3.0, PcapWriter::eth_frame(PcapWriter::ipv4(1, "1.1.1.1", "2.2.2.2", ""))); // ICMP
    w.add_record(4.0, PcapWriter::eth_frame(
                          PcapWriter::ipv4(17, "1.1.1.1", "2.2.2.2", "12345678", 0x2000))); // MF set
    w.add_record(5.0, PcapWriter::eth_ipv4_udp("1.1.1.1", 1, "2.2.2.2", 2, "snap"),
                 /*truncate_to=*/30); // snapped short
    const auto result = parse_capture(w.bytes());
    CHECK(result.packets.size() == 1);
    CHECK(result.stats.skipped_non_ip == 1);
    CHECK(result.stats.skipped_non_tcp_udp == 1);
    CHECK(result.stats.skipped_fragmented == 1);
    CHECK(result.stats.skipped_truncated == 1);
}

TEST_CASE("one conversation assembles into one flow with the right initiator") {
    std::vector<RawPacket> packets{
        make_packet(1.0, "10.0.0.1", 1111, "10.0.0.2", 80),
        make_packet(1.1, "10.0.0.2", 80, "10.0.0.1", 1111),
        make_packet(1.2, "10.0.0.1", 1111, "10.0.0.2", 80),
    };
    const auto flows = assemble_flows(packets, 64.0);
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].packets.size() == 3);
    CHECK(flows[0].initiator.ip.to_string() == "10.0.0.1");
    CHECK(flows[0].initiator.port == 1111);
    CHECK(flows[0].start_time == doctest::Approx(1.0));
    CHECK(flows[0].end_time == doctest::Approx(1.2));
}

TEST_CASE("idle gap splits a tuple into two flows") {
    std::vector<RawPacket> packets{
        make_packet(1.0, "10.0.0.1", 1111, "10.0.0.2", 80),
        make_packet(100.0, "10.0.0.1", 1111, "10.0.0.2", 80),
    };
    CHECK(assemble_flows(packets, 64.0).size() == 2);
    CHECK(assemble_flows(packets, 100.0).size() == 1);
}

TEST_CASE("SYN without ACK restarts a flow on a reused tuple") {
    std::vector<RawPacket> packets{
        make_tcp_packet(1.0, "10.0.0.1", 1111, "10.0.0.2", 80, 0x10 /* ACK */, 1024, 5),
        make_tcp_packet(2.0, "10.0.0.1", 1111, "10.0.0.2", 80, 0x02 /* SYN */),
    };
    const auto flows = assemble_flows(packets, 60.0);
    REQUIRE(flows.size() == 2);
    CHECK(flows[0].packets.size() == 1);
    CHECK(flows[1].packets.size() == 1);
    CHECK(flows[1].packets[0].tcp_flags.syn);

    // SYN|ACK must NOT split
    packets[1].tcp_flags.ack = true;
    CHECK(assemble_flows(packets, 60.0).size() == 1);
}

TEST_CASE("reversing every packet direction keeps keys and partitions") {
    std::vector<RawPacket> packets;
    for (int i = 0; i < 40; ++i) {
        const int tuple = i % 3;
        packets.push_back(make_packet(static_cast<double>(i), "10.0.0.1",
                                      static_cast<std::uint16_t>(5000 + tuple), "10.0.0.2",
                                      static_cast<std::uint16_t>(80 + tuple)));
    }
    auto reversed = packets;
    for (auto& p : reversed) {
        std::swap(p.src_ip, p.dst_ip);
        std::swap(p.src_port, p.dst_port);
    }
    const auto a = assemble_flows(packets, 64.0);
    const auto b = assemble_flows(reversed, 64.0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].key == b[i].key);
        CHECK(a[i].packets.size() == b[i].packets.size());
    }
}

TEST_CASE("every packet lands in exactly one flow") {
    std::vector<RawPacket> packets;
    int n = 0;
    for (int i = 0; i < 100; ++i) {
        packets.push_back(make_packet(i * 0.5, "10.0.0.1",
                                      static_cast<std::uint16_t>(1000 + i % 7), "10.0.0.2", 443));
        ++n;
    }
    const auto flows = assemble_flows(packets, 64.0);
    int total = 0;
    for (const auto& f : flows) {
        total += static_cast<int>(f.packets.size());
        for (const auto& p : f.packets) CHECK(FlowKey::of(p) == f.key);
    }
    CHECK(total == n);
}

TEST_CASE("out-of-order input is sorted stably by timestamp") {
    std::vector<RawPacket> packets{
        make_packet(2.0, "10.0.0.1", 1111, "10.0.0.2", 80, Protocol::UDP, 7),
        make_packet(1.0, "10.0.0.1", 1111, "10.0.0.2", 80, Protocol::UDP, 3),
    };
    const auto flows = assemble_flows(packets, 64.0);
    REQUIRE(flows.size() == 1);
    CHECK(flows[0].packets[0].payload.size() == 3);
    CHECK(flows[0].packets[1].payload.size() == 7);
}

TEST_CASE("label assignment follows the record window and tie rule") {
    Flow flow;
    flow.key = FlowKey::of(make_packet(100.0, "10.0.0.1", 1111, "10.0.0.2", 80));
    flow.initiator = {IpAddr::parse("10.0.0.1"), 1111};
    flow.start_time = 100.0;
    flow.packets.push_back(make_packet(100.0, "10.0.0.1", 1111, "10.0.0.2", 80));

    auto rec = [](const char* s, const char* d, double t0, double t1, const char* label) {
        return AttackRecord{IpAddr::parse(s), IpAddr::parse(d), t0, t1, label};
    };

    SUBCASE("containment") {
        const auto out =
            label_flows({flow}, {rec("10.0.0.1", "10.0.0.2", 50, 150, "DoS Hulk")});
        CHECK(out[0].label == "DoS Hulk");
    }
    SUBCASE("outside the window stays benign") {
        const auto out =
            label_flows({flow}, {rec("10.0.0.1", "10.0.0.2", 150, 200, "DoS Hulk")});
        CHECK(out[0].label == kBenignLabel);
    }
    SUBCASE("reversed record direction still matches") {
        const auto out =
            label_flows({flow}, {rec("10.0.0.2", "10.0.0.1", 50, 150, "Port Scan")});
        CHECK(out[0].label == "Port Scan");
    }
    SUBCASE("latest-starting record wins overlaps") {
        const auto out = label_flows({flow}, {rec("10.0.0.1", "10.0.0.2", 40, 150, "Early"),
                                              rec("10.0.0.1", "10.0.0.2", 90, 150, "Late")});
        CHECK(out[0].label == "Late");
    }
    SUBCASE("equal starts keep the first record in file order") {
        const auto out = label_flows({flow}, {rec("10.0.0.1", "10.0.0.2", 90, 150, "First"),
                                              rec("10.0.0.1", "10.0.0.2", 90, 150, "Second")});
        CHECK(out[0].label == "First");
    }
    SUBCASE("unrelated endpoints stay benign") {
        const auto out =
            label_flows({flow}, {rec("10.0.0.9", "10.0.0.2", 50, 150, "DoS Hulk")});
        CHECK(out[0].label == kBenignLabel);
    }
}

TEST_CASE("attack CSV parses header, fractional times and quoted labels") {
    const std::string csv =
        "src_ip,dst_ip,start_time,end_time,label\n"
        "10.0.0.1,10.0.0.2,100.5,200,DoS Hulk\n"
        "192.168.0.1,192.168.0.2,0,1,\"Web Attack, SQL\"\n";
    const auto records = parse_attack_csv(csv);
    REQUIRE(records.size() == 2);
    CHECK(records[0].start_time == doctest::Approx(100.5));
    CHECK(records[0].label == "DoS Hulk");
    CHECK(records[1].label == "Web Attack, SQL");

    CHECK_THROWS_AS(parse_attack_csv("src_ip,dst_ip,start_time,end_time,label\nbad line\n"),
                    Error);
    CHECK_THROWS_AS(parse_attack_csv("src_ip,dst_ip,start_time,end_time,label\n"
                                     "10.0.0.1,10.0.0.2,5,1,Backwards\n"),
                    Error);
}

TEST_CASE("flow container round-trips everything") {
    std::vector<RawPacket> packets{
        make_tcp_packet(1.5, "10.0.0.1", 1111, "10.0.0.2", 80, 0x18, 2048, 10),
        make_tcp_packet(1.6, "10.0.0.2", 80, "10.0.0.1", 1111, 0x10, 1024, 0),
        make_packet(5.0, "10.0.0.3", 53, "10.0.0.4", 9999, Protocol::UDP, 2),
    };
    auto flows = assemble_flows(packets, 64.0);
    flows[0].label = "DoS Hulk";

    const std::string bytes = serialize_flows(flows);
    const auto back = deserialize_flows(bytes);
    REQUIRE(back.size() == flows.size());
    for (std::size_t i = 0; i < flows.size(); ++i) {
        CHECK(back[i].key == flows[i].key);
        CHECK(back[i].label == flows[i].label);
        CHECK(back[i].start_time == flows[i].start_time);
        REQUIRE(back[i].packets.size() == flows[i].packets.size());
        for (std::size_t j = 0; j < flows[i].packets.size(); ++j) {
            CHECK(back[i].packets[j].payload == flows[i].packets[j].payload);
            CHECK(back[i].packets[j].tcp_flags == flows[i].packets[j].tcp_flags);
            CHECK(back[i].packets[j].timestamp == flows[i].packets[j].timestamp);
        }
    }

    CHECK(serialize_flows(back) == bytes); // byte-stable

    CHECK_THROWS_AS(deserialize_flows("not a flowset\n"), BadMagic);
    CHECK_THROWS_AS(deserialize_flows(bytes.substr(0, bytes.size() - 4)), Error);
}
