#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "osids/features.hpp"
#include "osids/nn/graph.hpp"
#include "osids/nn/optim.hpp"
#include "osids/rng.hpp"

namespace osids {

// Payload feature encoder: two conv blocks with fixed configs
// (in 1, out 1, kernel 4, stride 2) and (in 1, out 1, kernel 3, stride 3),
// each followed by batch norm and leaky ReLU. 128 -> 63 -> 21 per row.
struct EncoderParams {
    nn::Parameter conv1_w, conv1_b;
    nn::BatchNormState bn1;
    nn::Parameter conv2_w, conv2_b;
    nn::BatchNormState bn2;
    double leaky_slope = 0.01;

    static EncoderParams init(Rng& rng);
    std::vector<nn::Parameter*> trainable();
};

// 16x21 encoder output for one flow.
struct FeatureMatrix {
    std::array<float, kMaxPackets * kFeatureColumns> values{};

    float at(int row, int col) const { return values[row * kFeatureColumns + col]; }
    float& at(int row, int col) { return values[row * kFeatureColumns + col]; }
};

// 16x33 matrix (21 payload-feature columns followed by 12 auxiliary
// columns), stored row-major so the flattened view is the 528-vector fed to
// the classifier and the VAEs.
struct EnhancedPayloadFeature {
    std::array<float, kFlatFeatureDim> values{};

    float at(int row, int col) const { return values[row * kEnhancedColumns + col]; }
    float& at(int row, int col) { return values[row * kEnhancedColumns + col]; }
    const std::array<float, kFlatFeatureDim>& flat() const { return values; }
};

struct ClassifierParams {
    nn::Parameter weight; // [n_classes, 528]
    nn::Parameter bias;   // [n_classes]
    std::vector<std::string> class_names;

    int n_classes() const { return static_cast<int>(class_names.size()); }
    static ClassifierParams init(std::vector<std::string> names, Rng& rng);
};

// Pre-softmax logits of the linear layer, one entry per known class.
using ActivationVector = std::vector<double>;

struct ClassifyResult {
    ActivationVector logits;
    std::vector<double> scores; // softmax of logits
};

// Per-row conv -> batch norm -> leaky ReLU, twice. Training mode runs the
// recording graph and updates running stats; inference mode is a pure
// forward over the frozen state.
FeatureMatrix encode(const PayloadMatrix& payload, EncoderParams& encoder, bool training);
FeatureMatrix encode_frozen(const PayloadMatrix& payload, const EncoderParams& encoder);
EnhancedPayloadFeature enhance(const FeatureMatrix& features, const AuxiliaryMatrix& aux);
ClassifyResult classify(const EnhancedPayloadFeature& epf, const ClassifierParams& cls);

// Batched inference helper (pure, no running-stat updates).
std::vector<EnhancedPayloadFeature> compute_epf_batch(std::span<const PayloadMatrix> payloads,
                                                      std::span<const AuxiliaryMatrix> aux,
                                                      const EncoderParams& encoder);
std::vector<ActivationVector> classify_batch(const std::vector<EnhancedPayloadFeature>& epfs,
                                             const ClassifierParams& cls);

// Graph builder shared between training and inference: payload_rows is
// [rows, 1, 128], result is [rows, 21].
nn::Graph::Id encode_rows(nn::Graph& g, nn::Graph::Id payload_rows, EncoderParams& encoder,
                          bool training);

struct Stage1Config {
    int epochs = 20;
    int batch_size = 64;
    nn::OptimizerConfig optimizer;
    std::uint64_t seed = 1;
};

struct Stage1Result {
    EncoderParams encoder;
    ClassifierParams classifier;
    NormalizationStats norm;
    std::vector<double> epoch_losses; // mean cross-entropy per epoch
};

// Unique labels of a training set: BENIGN first when present, attacks in
// lexicographic order. Throws SingleClass for fewer than two classes and
// Error for UNLABELED flows.
std::vector<std::string> collect_class_names(const std::vector<Flow>& flows);

// Joint end-to-end training of encoder + classifier with cross entropy.
// Also fits the auxiliary normalization on the same training set.
Stage1Result train_stage1(const std::vector<Flow>& flows, const Stage1Config& config);

} // namespace osids
