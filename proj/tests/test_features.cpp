#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "osids/error.hpp"
#include "osids/features.hpp"
#include "osids/rng.hpp"

using namespace osids;
using testutil::make_packet;
using testutil::make_tcp_packet;

namespace {

Flow two_packet_flow() {
    Flow f;
    auto p0 = make_tcp_packet(10.0, "10.0.0.1", 1111, "10.0.0.2", 80, 0x18, 2048, 3);
    auto p1 = make_tcp_packet(10.5, "10.0.0.2", 80, "10.0.0.1", 1111, 0x10, 512, 40);
    f.key = FlowKey::of(p0);
    f.initiator = {p0.src_ip, p0.src_port};
    f.start_time = p0.timestamp;
    f.end_time = p1.timestamp;
    f.packets = {p0, p1};
    return f;
}

} // namespace

TEST_CASE("payload bytes scale by 255 with padding and truncation") {
    Flow f = two_packet_flow();
    f.packets[0].payload = {255, 0, 128};
    const PayloadMatrix m = extract_payload_matrix(f);
    CHECK(m.at(0, 0) == doctest::Approx(1.0));
    CHECK(m.at(0, 1) == doctest::Approx(0.0));
    CHECK(m.at(0, 2) == doctest::Approx(128.0 / 255.0));
    CHECK(m.at(0, 3) == 0.0f); // zero padded

    // rows 2..15 are all-zero for a 2-packet flow
    for (int r = 2; r < kMaxPackets; ++r)
        for (int c = 0; c < kPayloadBytes; ++c) CHECK(m.at(r, c) == 0.0f);

    // a 200-byte payload uses only its first 128 bytes
    Flow big = two_packet_flow();
    big.packets[0].payload.assign(200, 7);
    big.packets[0].payload[127] = 9;
    big.packets[0].payload[128] = 250;
    const PayloadMatrix mb = extract_payload_matrix(big);
    CHECK(mb.at(0, 127) == doctest::Approx(9.0 / 255.0));
    CHECK(mb.at(1, 0) == doctest::Approx(big.packets[1].payload[0] / 255.0));

    CHECK_THROWS_AS(extract_payload_matrix(Flow{}), EmptyFlow);
}

TEST_CASE("payload matrix entries stay in [0, 1] for arbitrary bytes") {
    Rng rng(7);
    Flow f = two_packet_flow();
    for (auto& p : f.packets) {
        p.payload.resize(128);
        for (auto& b : p.payload) b = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    }
    const PayloadMatrix m = extract_payload_matrix(f);
    for (float v : m.values) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
}

TEST_CASE("auxiliary columns follow the fixed layout") {
    const Flow f = two_packet_flow();
    const AuxiliaryMatrix m = extract_auxiliary(f);
    CHECK(m.packet_rows == 2);

    // first packet: sent by the initiator, no previous packet
    CHECK(m.at(0, kAuxDirc) == 1.0f);
    CHECK(m.at(0, kAuxPldl) == 3.0f);
    CHECK(m.at(0, kAuxTcpw) == 2048.0f);
    CHECK(m.at(0, kAuxItvt) == 0.0f);
    // PSH|ACK = flags columns [FIN SYN RST PSH ACK URG ECE CWR]
    CHECK(m.at(0, kAuxFlagsStart + 3) == 1.0f);
    CHECK(m.at(0, kAuxFlagsStart + 4) == 1.0f);
    CHECK(m.at(0, kAuxFlagsStart + 0) == 0.0f);

    // second packet: responder, 0.5 s later
    CHECK(m.at(1, kAuxDirc) == -1.0f);
    CHECK(m.at(1, kAuxPldl) == 40.0f);
    CHECK(m.at(1, kAuxTcpw) == 512.0f);
    CHECK(m.at(1, kAuxItvt) == doctest::Approx(0.5));

    // padding rows all-zero
    for (int r = 2; r < kMaxPackets; ++r)
        for (int c = 0; c < kAuxColumns; ++c) CHECK(m.at(r, c) == 0.0f);

    CHECK_THROWS_AS(extract_auxiliary(Flow{}), EmptyFlow);
}

TEST_CASE("UDP packets zero the TCP-only columns") {
    Flow f;
    auto p = make_packet(1.0, "10.0.0.1", 1111, "10.0.0.2", 53, Protocol::UDP, 40);
    f.key = FlowKey::of(p);
    f.initiator = {p.src_ip, p.src_port};
    f.packets = {p};
    const AuxiliaryMatrix m = extract_auxiliary(f);
    CHECK(m.at(0, kAuxPldl) == 40.0f);
    CHECK(m.at(0, kAuxTcpw) == 0.0f);
    for (int b = 0; b < 8; ++b) CHECK(m.at(0, kAuxFlagsStart + b) == 0.0f);
}

TEST_CASE("normalization uses population statistics over real rows") {
    // two matrices with a single real row each: PLDL values {0, 10}
    AuxiliaryMatrix a, b;
    a.packet_rows = b.packet_rows = 1;
    a.at(0, kAuxPldl) = 0.0f;
    b.at(0, kAuxPldl) = 10.0f;
    const auto stats = fit_normalization({a, b});
    CHECK(stats.mean[kAuxPldl] == doctest::Approx(5.0));
    CHECK(stats.stddev[kAuxPldl] == doctest::Approx(5.0)); // population convention

    SUBCASE("constant column floors the deviation") {
        AuxiliaryMatrix c = a, d = a;
        c.at(0, kAuxPldl) = d.at(0, kAuxPldl) = 7.0f;
        const auto s = fit_normalization({c, d});
        CHECK(s.mean[kAuxPldl] == doctest::Approx(7.0));
        CHECK(s.stddev[kAuxPldl] == NormalizationStats::kStdFloor);
    }
    SUBCASE("empty training set is an error") {
        CHECK_THROWS_AS(fit_normalization({}), EmptyTrainingSet);
    }
}

TEST_CASE("apply_normalization standardizes real rows and passes padding through") {
    AuxiliaryMatrix m;
    m.packet_rows = 2;
    m.at(0, kAuxPldl) = 5.0f;  // = mean
    m.at(1, kAuxPldl) = 10.0f; // = mean + std
    m.at(0, kAuxFlagsStart + 1) = 1.0f;
    NormalizationStats stats;
    stats.mean = {0.0, 5.0, 0.0, 0.0};
    stats.stddev = {1.0, 5.0, 1.0, 1.0};

    const AuxiliaryMatrix out = apply_normalization(m, stats);
    CHECK(out.at(0, kAuxPldl) == doctest::Approx(0.0));
    CHECK(out.at(1, kAuxPldl) == doctest::Approx(1.0));
    CHECK(out.at(0, kAuxFlagsStart + 1) == 1.0f); // flags untouched
    for (int r = 2; r < kMaxPackets; ++r)
        for (int c = 0; c < kAuxColumns; ++c) CHECK(out.at(r, c) == 0.0f);
}

TEST_CASE("standardized training columns have mean 0 and variance 1") {
    Rng rng(123);
    std::vector<AuxiliaryMatrix> matrices;
    for (int i = 0; i < 60; ++i) {
        AuxiliaryMatrix m;
        m.packet_rows = rng.uniform_int(1, kMaxPackets);
        for (int r = 0; r < m.packet_rows; ++r) {
            m.at(r, kAuxDirc) = rng.uniform() < 0.5 ? 1.0f : -1.0f;
            m.at(r, kAuxPldl) = static_cast<float>(rng.uniform_int(0, 1460));
            m.at(r, kAuxTcpw) = static_cast<float>(rng.uniform_int(0, 65535));
            m.at(r, kAuxItvt) = static_cast<float>(rng.uniform(0.0, 2.0));
        }
        matrices.push_back(m);
    }
    const auto stats = fit_normalization(matrices);
    for (int col = 0; col < 4; ++col) {
        double sum = 0.0, sum_sq = 0.0;
        long n = 0;
        for (const auto& m : matrices) {
            const auto norm = apply_normalization(m, stats);
            for (int r = 0; r < norm.packet_rows; ++r) {
                sum += norm.at(r, col);
                sum_sq += static_cast<double>(norm.at(r, col)) * norm.at(r, col);
                ++n;
            }
        }
        const double mean = sum / n;
        const double var = sum_sq / n - mean * mean;
        CHECK(std::abs(mean) < 1e-6);
        CHECK(std::abs(var - 1.0) < 1e-6);
    }
}
