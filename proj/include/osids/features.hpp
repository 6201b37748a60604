#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "osids/net.hpp"

namespace osids {

inline constexpr int kMaxPackets = 16;    // packets per flow fed to the model
inline constexpr int kPayloadBytes = 128; // leading payload bytes per packet
inline constexpr int kAuxColumns = 12;    // DIRC, PLDL, TCPW, ITVT + 8 flags
inline constexpr int kFeatureColumns = 21;
inline constexpr int kEnhancedColumns = kFeatureColumns + kAuxColumns; // 33
inline constexpr int kFlatFeatureDim = kMaxPackets * kEnhancedColumns; // 528

// Auxiliary column indices (fixed layout).
enum AuxCol : int {
    kAuxDirc = 0,
    kAuxPldl = 1,
    kAuxTcpw = 2,
    kAuxItvt = 3,
    kAuxFlagsStart = 4, // FIN, SYN, RST, PSH, ACK, URG, ECE, CWR
};

// 16x128 matrix of scaled payload bytes, entries in [0, 1], unused rows zero.
struct PayloadMatrix {
    std::array<float, kMaxPackets * kPayloadBytes> values{};

    float at(int row, int col) const { return values[row * kPayloadBytes + col]; }
    float& at(int row, int col) { return values[row * kPayloadBytes + col]; }
};

// 16x12 per-packet auxiliary matrix. packet_rows counts the real (non
// padding) rows so statistics and normalization can skip the zero padding.
struct AuxiliaryMatrix {
    std::array<float, kMaxPackets * kAuxColumns> values{};
    int packet_rows = 0;

    float at(int row, int col) const { return values[row * kAuxColumns + col]; }
    float& at(int row, int col) { return values[row * kAuxColumns + col]; }
};

// Per-column standardization for the 4 continuous auxiliary columns.
struct NormalizationStats {
    std::array<double, 4> mean{};
    std::array<double, 4> stddev{}; // population convention, floored at kStdFloor

    static constexpr double kStdFloor = 1e-6;
};

// Row i = first 128 payload bytes of packet i divided by 255, zero padded.
// Throws EmptyFlow.
PayloadMatrix extract_payload_matrix(const Flow& flow);

// Raw (pre-standardization) auxiliaries: DIRC is +1 for initiator-sent
// packets and -1 otherwise, PLDL the payload byte count, TCPW the TCP window
// (0 for UDP), ITVT the gap to the previous packet (0 for the first), and
// the 8 TCP flag bits (0 for UDP). Throws EmptyFlow.
AuxiliaryMatrix extract_auxiliary(const Flow& flow);

// Fits per-column mean/stddev over real packet rows only. Throws
// EmptyTrainingSet.
NormalizationStats fit_normalization(const std::vector<AuxiliaryMatrix>& training_aux);

// Standardizes the continuous columns of non-padding rows in place; flag
// columns and padding rows pass through.
AuxiliaryMatrix apply_normalization(AuxiliaryMatrix aux, const NormalizationStats& stats);

} // namespace osids
