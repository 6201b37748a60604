#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "osids/encoder.hpp"
#include "osids/nn/optim.hpp"
#include "osids/rng.hpp"

namespace osids {

inline constexpr int kLatentDim = 33;
inline constexpr int kLatentEncOut = 2 * kLatentDim; // 66: means then log-variances

// Per-class variational autoencoder over flattened 528-dim enhanced payload
// features. Encoder 528 -> 264 -> 132 -> 66 and decoder 33 -> 66 -> 132 ->
// 264 -> 528, sigmoid between layers, raw final outputs.
struct VaeParams {
    nn::Parameter enc1_w, enc1_b, enc2_w, enc2_b, enc3_w, enc3_b;
    nn::Parameter dec1_w, dec1_b, dec2_w, dec2_b, dec3_w, dec3_b, dec4_w, dec4_b;
    int class_index = 0;

    static VaeParams init(int class_index, Rng& rng);
    std::vector<nn::Parameter*> trainable();
    std::vector<const nn::Parameter*> parameters() const;
};

struct LatentParams {
    std::array<double, kLatentDim> mean{};
    std::array<double, kLatentDim> variance{}; // strictly positive (exp of raw outputs)
};

struct ReconstructionThreshold {
    double threshold = 0.0;
    double quantile_position = 0.96; // position parameter in (0, 1]
    int class_index = 0;
};

// Encoder forward; mean = first 33 outputs, variance = exp(last 33).
LatentParams vae_encode(std::span<const float, kFlatFeatureDim> epf, const VaeParams& params);

// z = mean + eps * sqrt(variance)
std::array<double, kLatentDim> reparameterize(const LatentParams& latent,
                                              const std::array<double, kLatentDim>& eps);

std::array<double, kFlatFeatureDim> vae_decode(const std::array<double, kLatentDim>& z,
                                               const VaeParams& params);

// Mean squared componentwise difference over the 528 entries.
double reconstruction_loss(std::span<const float, kFlatFeatureDim> epf,
                           std::span<const double, kFlatFeatureDim> reconstruction);

// KL(N(mean, variance) || N(0, I)) summed over the 33 latents.
double latent_kl(const LatentParams& latent);

struct VaeTrainConfig {
    int epochs = 20;
    int batch_size = 64;
    double kl_weight = 1.0; // 0 reduces the objective to plain reconstruction MSE
    nn::OptimizerConfig optimizer;
    std::uint64_t seed = 1;
};

// Trains one class's VAE on its enhanced payload features (reconstruction
// MSE plus kl_weight * KL). Throws EmptyClass.
VaeParams train_vae(std::span<const EnhancedPayloadFeature> features,
                    const VaeTrainConfig& config, int class_index);

// Deterministic per-sample reconstruction losses (z = posterior mean).
std::vector<double> reconstruction_losses(std::span<const EnhancedPayloadFeature> features,
                                          const VaeParams& params);

// Sorts ascending and picks the ceil(quantile_position * N)-th smallest loss
// (1-based). Throws EmptyLossList.
ReconstructionThreshold select_threshold(std::vector<double> losses, double quantile_position,
                                         int class_index);

struct UnknownCheck {
    bool unknown = false;
    double loss = 0.0;
};

// Flags a flow whose reconstruction loss strictly exceeds the class
// threshold. eps defaults to the zero vector (z = posterior mean) so
// verdicts are deterministic.
UnknownCheck is_unknown(const EnhancedPayloadFeature& epf, const VaeParams& vae,
                        const ReconstructionThreshold& threshold,
                        const std::array<double, kLatentDim>* eps = nullptr);

} // namespace osids
