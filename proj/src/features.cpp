#include "osids/features.hpp"

#include <algorithm>
#include <cmath>

#include "osids/error.hpp"

namespace osids {

PayloadMatrix extract_payload_matrix(const Flow& flow) {
    if (flow.packets.empty()) throw EmptyFlow("flow has no packets");
    PayloadMatrix m;
    const int rows = std::min<int>(kMaxPackets, static_cast<int>(flow.packets.size()));
    for (int i = 0; i < rows; ++i) {
        const auto& payload = flow.packets[i].payload;
        const int n = std::min<int>(kPayloadBytes, static_cast<int>(payload.size()));
        for (int j = 0; j < n; ++j)
            m.at(i, j) = static_cast<float>(payload[j]) / 255.0f;
    }
    return m;
}

AuxiliaryMatrix extract_auxiliary(const Flow& flow) {
    if (flow.packets.empty()) throw EmptyFlow("flow has no packets");
    AuxiliaryMatrix m;
    const int rows = std::min<int>(kMaxPackets, static_cast<int>(flow.packets.size()));
    m.packet_rows = rows;
    for (int i = 0; i < rows; ++i) {
        const RawPacket& p = flow.packets[i];
        const bool from_initiator =
            Endpoint{p.src_ip, p.src_port} == flow.initiator;
        m.at(i, kAuxDirc) = from_initiator ? 1.0f : -1.0f;
        m.at(i, kAuxPldl) = static_cast<float>(p.payload.size());
        m.at(i, kAuxTcpw) = p.protocol == Protocol::TCP ? static_cast<float>(p.tcp_window) : 0.0f;
        m.at(i, kAuxItvt) = i == 0 ? 0.0f
                                   : static_cast<float>(p.timestamp - flow.packets[i - 1].timestamp);
        if (p.protocol == Protocol::TCP) {
            const TcpFlags& f = p.tcp_flags;
            const bool bits[8] = {f.fin, f.syn, f.rst, f.psh, f.ack, f.urg, f.ece, f.cwr};
            for (int b = 0; b < 8; ++b)
                m.at(i, kAuxFlagsStart + b) = bits[b] ? 1.0f : 0.0f;
        }
    }
    return m;
}

NormalizationStats fit_normalization(const std::vector<AuxiliaryMatrix>& training_aux) {
    if (training_aux.empty()) throw EmptyTrainingSet("no auxiliary matrices to fit on");

    NormalizationStats stats;
    for (int col = 0; col < 4; ++col) {
        double sum = 0.0, sum_sq = 0.0;
        std::uint64_t n = 0;
        for (const auto& m : training_aux) {
            for (int row = 0; row < m.packet_rows; ++row) {
                const double x = m.at(row, col);
                sum += x;
                sum_sq += x * x;
                ++n;
            }
        }
        if (n == 0) throw EmptyTrainingSet("auxiliary matrices contain no packet rows");
        const double mean = sum / static_cast<double>(n);
        const double var = std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
        stats.mean[col] = mean;
        stats.stddev[col] = std::max(std::sqrt(var), NormalizationStats::kStdFloor);
    }
    return stats;
}

AuxiliaryMatrix apply_normalization(AuxiliaryMatrix aux, const NormalizationStats& stats) {
    for (int row = 0; row < aux.packet_rows; ++row)
        for (int col = 0; col < 4; ++col)
            aux.at(row, col) =
                static_cast<float>((aux.at(row, col) - stats.mean[col]) / stats.stddev[col]);
    return aux;
}

} // namespace osids
