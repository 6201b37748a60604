#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "osids/features.hpp"
#include "osids/net.hpp"

namespace osids {

// Recipe for one synthetic traffic class. Payloads are drawn around a fixed
// byte template with per-position noise; auxiliaries come from the ranges
// below. Classes separate (or blur together, see difficulty) by template.
struct SyntheticClassSpec {
    std::string name;
    std::array<std::uint8_t, kPayloadBytes> template_bytes{};
    double noise = 6.0; // byte noise standard deviation
    int min_packets = 2, max_packets = 16;
    int min_payload = 32, max_payload = kPayloadBytes;
    int min_window = 4096, max_window = 65535;
    double itvt_scale = 0.01;         // mean inter-arrival gap, seconds
    std::uint8_t flag_pattern = 0x18; // PSH|ACK
    double fwd_bias = 0.6;            // P(packet sent by initiator) after the first
    std::uint16_t server_port = 443;

    static SyntheticClassSpec from_seed(std::string name, std::uint64_t template_seed);
};

// Deterministic labeled flows; counts[i] flows for specs[i]. difficulty in
// [0, 1] interpolates every class template toward one shared template, so 0
// keeps full separation and 1 collapses the payload signal entirely.
std::vector<Flow> generate_flows(const std::vector<SyntheticClassSpec>& specs,
                                 const std::vector<int>& counts, std::uint64_t seed,
                                 double difficulty = 0.0);

struct SynthSpec {
    std::vector<SyntheticClassSpec> classes;
    std::vector<int> counts;
    std::uint64_t seed = 1;
    double difficulty = 0.0;
};

// JSON spec file, schema documented in docs/formats.md.
SynthSpec parse_synth_spec(const std::string& json_text);

} // namespace osids
