#include <doctest.h>

#include "osids/error.hpp"
#include "osids/features.hpp"
#include "osids/flowset.hpp"
#include "osids/synth.hpp"

using namespace osids;

TEST_CASE("identical seeds produce byte-identical flow files") {
    auto specs = std::vector<SyntheticClassSpec>{
        SyntheticClassSpec::from_seed("BENIGN", 1),
        SyntheticClassSpec::from_seed("ATTACK_A", 2),
    };
    const auto a = generate_flows(specs, {20, 20}, 77);
    const auto b = generate_flows(specs, {20, 20}, 77);
    CHECK(serialize_flows(a) == serialize_flows(b));
    const auto c = generate_flows(specs, {20, 20}, 78);
    CHECK(serialize_flows(a) != serialize_flows(c));
}

TEST_CASE("zero noise and degenerate ranges give identical payload matrices per class") {
    SyntheticClassSpec spec = SyntheticClassSpec::from_seed("X", 5);
    spec.noise = 0.0;
    spec.min_packets = spec.max_packets = 4;
    spec.min_payload = spec.max_payload = kPayloadBytes;
    const auto flows = generate_flows({spec}, {10}, 9);
    const PayloadMatrix first = extract_payload_matrix(flows[0]);
    for (const auto& f : flows) {
        const PayloadMatrix m = extract_payload_matrix(f);
        CHECK(m.values == first.values);
    }
}

TEST_CASE("difficulty 1 collapses every class onto the shared template") {
    SyntheticClassSpec a = SyntheticClassSpec::from_seed("A", 10);
    SyntheticClassSpec b = SyntheticClassSpec::from_seed("B", 11);
    for (SyntheticClassSpec* s : {&a, &b}) {
        s->noise = 0.0;
        s->min_packets = s->max_packets = 2;
        s->min_payload = s->max_payload = kPayloadBytes;
    }
    const auto flows = generate_flows({a, b}, {3, 3}, 4, /*difficulty=*/1.0);
    const PayloadMatrix first = extract_payload_matrix(flows[0]);
    for (const auto& f : flows)
        CHECK(extract_payload_matrix(f).values == first.values);

    // and difficulty 0 keeps the classes apart
    const auto apart = generate_flows({a, b}, {1, 1}, 4, 0.0);
    CHECK(extract_payload_matrix(apart[0]).values != extract_payload_matrix(apart[1]).values);
}

TEST_CASE("generated flows satisfy the flow invariants") {
    auto specs = std::vector<SyntheticClassSpec>{
        SyntheticClassSpec::from_seed("BENIGN", 1),
        SyntheticClassSpec::from_seed("ATTACK_A", 2),
    };
    const auto flows = generate_flows(specs, {30, 30}, 123);
    REQUIRE(flows.size() == 60);
    for (const auto& f : flows) {
        REQUIRE_FALSE(f.packets.empty());
        CHECK(f.start_time == f.packets.front().timestamp);
        CHECK(f.end_time == f.packets.back().timestamp);
        for (std::size_t i = 0; i < f.packets.size(); ++i) {
            CHECK(FlowKey::of(f.packets[i]) == f.key);
            if (i > 0) CHECK(f.packets[i].timestamp >= f.packets[i - 1].timestamp);
        }
        CHECK((f.label == "BENIGN" || f.label == "ATTACK_A"));
        CHECK(Endpoint{f.packets[0].src_ip, f.packets[0].src_port} == f.initiator);
    }
}

TEST_CASE("spec JSON parses with defaults and validates") {
    const std::string good = R"({
        "seed": 5, "difficulty": 0.25,
        "classes": [
            {"name": "BENIGN", "count": 40},
            {"name": "DOS", "count": 10, "noise": 2.5, "flags": ["SYN", "ACK"],
             "min_packets": 3, "max_packets": 9, "server_port": 80}
        ]
    })";
    const SynthSpec spec = parse_synth_spec(good);
    CHECK(spec.seed == 5);
    CHECK(spec.difficulty == 0.25);
    REQUIRE(spec.classes.size() == 2);
    CHECK(spec.counts == std::vector<int>{40, 10});
    CHECK(spec.classes[0].name == "BENIGN");
    CHECK(spec.classes[1].noise == 2.5);
    CHECK(spec.classes[1].flag_pattern == 0x12);
    CHECK(spec.classes[1].server_port == 80);

    CHECK_THROWS_AS(parse_synth_spec("{"), Error);
    CHECK_THROWS_AS(parse_synth_spec(R"({"classes": []})"), Error);
    CHECK_THROWS_AS(parse_synth_spec(R"({"classes": [{"count": 3}]})"), Error);
    CHECK_THROWS_AS(
        parse_synth_spec(R"({"classes": [{"name": "A", "flags": ["WAT"]}]})"), Error);
    CHECK_THROWS_AS(
        parse_synth_spec(R"({"classes": [{"name": "A", "max_packets": 100}]})"), Error);
}

TEST_CASE("generation rejects bad arguments") {
    auto spec = SyntheticClassSpec::from_seed("A", 1);
    CHECK_THROWS_AS(generate_flows({spec}, {1, 2}, 1), Error);
    CHECK_THROWS_AS(generate_flows({spec}, {0}, 1), Error);
    CHECK_THROWS_AS(generate_flows({spec}, {1}, 1, 2.0), Error);
}
