#include "osids/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "osids/error.hpp"

namespace osids {

namespace {

constexpr int kEncWidths[4] = {kFlatFeatureDim, 264, 132, kLatentEncOut};
constexpr int kDecWidths[5] = {kLatentDim, 66, 132, 264, kFlatFeatureDim};

nn::Parameter init_layer_w(const std::string& name, int out, int in, Rng& rng) {
    nn::Parameter p(name, nn::Tensor({out, in}));
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int i = 0; i < p.value.size(); ++i)
        p.value[i] = static_cast<float>(rng.uniform(-bound, bound));
    return p;
}

nn::Parameter init_layer_b(const std::string& name, int out, int in, Rng& rng) {
    nn::Parameter p(name, nn::Tensor({out}));
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int i = 0; i < p.value.size(); ++i)
        p.value[i] = static_cast<float>(rng.uniform(-bound, bound));
    return p;
}

// y = W x + b in double precision over float weights
void affine(const nn::Parameter& w, const nn::Parameter& b, std::span<const double> in,
            std::span<double> out) {
    const int o_dim = w.value.dim(0), i_dim = w.value.dim(1);
    for (int o = 0; o < o_dim; ++o) {
        const float* wr = w.value.data() + static_cast<std::size_t>(o) * i_dim;
        double acc = b.value[o];
        for (int i = 0; i < i_dim; ++i) acc += wr[i] * in[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = acc;
    }
}

void sigmoid_inplace(std::span<double> v) {
    for (double& x : v) {
        if (x >= 0.0) {
            x = 1.0 / (1.0 + std::exp(-x));
        } else {
            const double e = std::exp(x);
            x = e / (1.0 + e);
        }
    }
}

} // namespace

VaeParams VaeParams::init(int class_index, Rng& rng) {
    VaeParams p;
    p.class_index = class_index;
    const std::string prefix = "vae." + std::to_string(class_index) + ".";
    p.enc1_w = init_layer_w(prefix + "enc1.weight", kEncWidths[1], kEncWidths[0], rng);
    p.enc1_b = init_layer_b(prefix + "enc1.bias", kEncWidths[1], kEncWidths[0], rng);
    p.enc2_w = init_layer_w(prefix + "enc2.weight", kEncWidths[2], kEncWidths[1], rng);
    p.enc2_b = init_layer_b(prefix + "enc2.bias", kEncWidths[2], kEncWidths[1], rng);
    p.enc3_w = init_layer_w(prefix + "enc3.weight", kEncWidths[3], kEncWidths[2], rng);
    p.enc3_b = init_layer_b(prefix + "enc3.bias", kEncWidths[3], kEncWidths[2], rng);
    p.dec1_w = init_layer_w(prefix + "dec1.weight", kDecWidths[1], kDecWidths[0], rng);
    p.dec1_b = init_layer_b(prefix + "dec1.bias", kDecWidths[1], kDecWidths[0], rng);
    p.dec2_w = init_layer_w(prefix + "dec2.weight", kDecWidths[2], kDecWidths[1], rng);
    p.dec2_b = init_layer_b(prefix + "dec2.bias", kDecWidths[2], kDecWidths[1], rng);
    p.dec3_w = init_layer_w(prefix + "dec3.weight", kDecWidths[3], kDecWidths[2], rng);
    p.dec3_b = init_layer_b(prefix + "dec3.bias", kDecWidths[3], kDecWidths[2], rng);
    p.dec4_w = init_layer_w(prefix + "dec4.weight", kDecWidths[4], kDecWidths[3], rng);
    p.dec4_b = init_layer_b(prefix + "dec4.bias", kDecWidths[4], kDecWidths[3], rng);
    return p;
}

std::vector<nn::Parameter*> VaeParams::trainable() {
    return {&enc1_w, &enc1_b, &enc2_w, &enc2_b, &enc3_w, &enc3_b,
            &dec1_w, &dec1_b, &dec2_w, &dec2_b, &dec3_w, &dec3_b, &dec4_w, &dec4_b};
}

std::vector<const nn::Parameter*> VaeParams::parameters() const {
    return {&enc1_w, &enc1_b, &enc2_w, &enc2_b, &enc3_w, &enc3_b,
            &dec1_w, &dec1_b, &dec2_w, &dec2_b, &dec3_w, &dec3_b, &dec4_w, &dec4_b};
}

LatentParams vae_encode(std::span<const float, kFlatFeatureDim> epf, const VaeParams& params) {
    std::vector<double> h0(epf.begin(), epf.end());
    std::vector<double> h1(kEncWidths[1]), h2(kEncWidths[2]), h3(kEncWidths[3]);
    affine(params.enc1_w, params.enc1_b, h0, h1);
    sigmoid_inplace(h1);
    affine(params.enc2_w, params.enc2_b, h1, h2);
    sigmoid_inplace(h2);
    affine(params.enc3_w, params.enc3_b, h2, h3);

    LatentParams latent;
    for (int i = 0; i < kLatentDim; ++i) {
        latent.mean[static_cast<std::size_t>(i)] = h3[static_cast<std::size_t>(i)];
        latent.variance[static_cast<std::size_t>(i)] =
            std::exp(h3[static_cast<std::size_t>(i + kLatentDim)]);
    }
    return latent;
}

std::array<double, kLatentDim> reparameterize(const LatentParams& latent,
                                              const std::array<double, kLatentDim>& eps) {
    std::array<double, kLatentDim> z{};
    for (int i = 0; i < kLatentDim; ++i) {
        const auto u = static_cast<std::size_t>(i);
        z[u] = latent.mean[u] + eps[u] * std::sqrt(latent.variance[u]);
    }
    return z;
}

std::array<double, kFlatFeatureDim> vae_decode(const std::array<double, kLatentDim>& z,
                                               const VaeParams& params) {
    std::vector<double> h0(z.begin(), z.end());
    std::vector<double> h1(kDecWidths[1]), h2(kDecWidths[2]), h3(kDecWidths[3]);
    std::array<double, kFlatFeatureDim> out{};
    affine(params.dec1_w, params.dec1_b, h0, h1);
    sigmoid_inplace(h1);
    affine(params.dec2_w, params.dec2_b, h1, h2);
    sigmoid_inplace(h2);
    affine(params.dec3_w, params.dec3_b, h2, h3);
    sigmoid_inplace(h3);
    affine(params.dec4_w, params.dec4_b, h3, out);
    return out;
}

double reconstruction_loss(std::span<const float, kFlatFeatureDim> epf,
                           std::span<const double, kFlatFeatureDim> reconstruction) {
    double acc = 0.0;
    for (int i = 0; i < kFlatFeatureDim; ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double d = static_cast<double>(epf[u]) - reconstruction[u];
        acc += d * d;
    }
    return acc / kFlatFeatureDim;
}

double latent_kl(const LatentParams& latent) {
    double acc = 0.0;
    for (int i = 0; i < kLatentDim; ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double m = latent.mean[u], v = latent.variance[u];
        acc += 0.5 * (m * m + v - std::log(v) - 1.0);
    }
    return acc;
}

VaeParams train_vae(std::span<const EnhancedPayloadFeature> features,
                    const VaeTrainConfig& config, int class_index) {
    if (features.empty())
        throw EmptyClass("no training features for class index " + std::to_string(class_index));

    Rng rng(config.seed);
    VaeParams params = VaeParams::init(class_index, rng);
    nn::Optimizer opt(params.trainable(), config.optimizer);

    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t base = 0; base < order.size(); base += config.batch_size) {
            const std::size_t bsz =
                std::min<std::size_t>(config.batch_size, order.size() - base);
            nn::Tensor x({static_cast<int>(bsz), kFlatFeatureDim});
            for (std::size_t i = 0; i < bsz; ++i)
                std::copy(features[order[base + i]].values.begin(),
                          features[order[base + i]].values.end(),
                          x.data() + i * kFlatFeatureDim);
            nn::Tensor eps({static_cast<int>(bsz), kLatentDim});
            for (int i = 0; i < eps.size(); ++i)
                eps[i] = static_cast<float>(rng.normal());

            nn::Graph g;
            auto xin = g.leaf(std::move(x));
            auto h = g.linear(xin, g.param(params.enc1_w), g.param(params.enc1_b));
            h = g.sigmoid(h);
            h = g.linear(h, g.param(params.enc2_w), g.param(params.enc2_b));
            h = g.sigmoid(h);
            h = g.linear(h, g.param(params.enc3_w), g.param(params.enc3_b));
            auto mu = g.slice_cols(h, 0, kLatentDim);
            auto logvar = g.slice_cols(h, kLatentDim, kLatentDim);
            auto z = g.reparameterize(mu, logvar, g.leaf(std::move(eps)));
            auto d = g.linear(z, g.param(params.dec1_w), g.param(params.dec1_b));
            d = g.sigmoid(d);
            d = g.linear(d, g.param(params.dec2_w), g.param(params.dec2_b));
            d = g.sigmoid(d);
            d = g.linear(d, g.param(params.dec3_w), g.param(params.dec3_b));
            d = g.sigmoid(d);
            d = g.linear(d, g.param(params.dec4_w), g.param(params.dec4_b));
            auto recon = g.mse(d, xin);
            auto loss = g.add_scaled(recon, g.gaussian_kl(mu, logvar), config.kl_weight);
            opt.zero_grad();
            g.backward(loss);
            opt.step();
        }
    }
    return params;
}

std::vector<double> reconstruction_losses(std::span<const EnhancedPayloadFeature> features,
                                          const VaeParams& params) {
    std::vector<double> losses;
    losses.reserve(features.size());
    for (const auto& epf : features) {
        const LatentParams latent = vae_encode(epf.values, params);
        const auto recon = vae_decode(latent.mean, params); // eps = 0 -> z = mean
        losses.push_back(reconstruction_loss(epf.values, recon));
    }
    return losses;
}

ReconstructionThreshold select_threshold(std::vector<double> losses, double quantile_position,
                                         int class_index) {
    if (losses.empty()) throw EmptyLossList("no losses to select a threshold from");
    if (quantile_position <= 0.0 || quantile_position > 1.0)
        throw Error("threshold position parameter must be in (0, 1]");
    std::sort(losses.begin(), losses.end());
    const double n = static_cast<double>(losses.size());
    // 1-based ceiling; tiny nudge counters FP noise in the product
    auto index = static_cast<std::size_t>(std::ceil(quantile_position * n - 1e-9));
    index = std::clamp<std::size_t>(index, 1, losses.size());
    ReconstructionThreshold thr;
    thr.threshold = losses[index - 1];
    thr.quantile_position = quantile_position;
    thr.class_index = class_index;
    return thr;
}

UnknownCheck is_unknown(const EnhancedPayloadFeature& epf, const VaeParams& vae,
                        const ReconstructionThreshold& threshold,
                        const std::array<double, kLatentDim>* eps) {
    const LatentParams latent = vae_encode(epf.values, vae);
    const auto z = eps ? reparameterize(latent, *eps) : latent.mean;
    const auto recon = vae_decode(z, vae);
    UnknownCheck check;
    check.loss = reconstruction_loss(epf.values, recon);
    check.unknown = check.loss > threshold.threshold;
    return check;
}

} // namespace osids
