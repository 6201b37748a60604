#include "osids/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "osids/error.hpp"

namespace osids {

namespace {

nn::Parameter init_uniform(const std::string& name, std::vector<int> shape, int fan_in,
                           Rng& rng) {
    nn::Parameter p(name, nn::Tensor(std::move(shape)));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int i = 0; i < p.value.size(); ++i)
        p.value[i] = static_cast<float>(rng.uniform(-bound, bound));
    return p;
}

// [count * 16, 1, 128] stack of payload rows
nn::Tensor stack_payload_rows(std::span<const PayloadMatrix> payloads) {
    nn::Tensor t({static_cast<int>(payloads.size()) * kMaxPackets, 1, kPayloadBytes});
    float* dst = t.data();
    for (const auto& m : payloads) {
        std::copy(m.values.begin(), m.values.end(), dst);
        dst += m.values.size();
    }
    return t;
}

// [count * 16, 12] stack of auxiliary rows
nn::Tensor stack_aux_rows(std::span<const AuxiliaryMatrix> aux) {
    nn::Tensor t({static_cast<int>(aux.size()) * kMaxPackets, kAuxColumns});
    float* dst = t.data();
    for (const auto& m : aux) {
        std::copy(m.values.begin(), m.values.end(), dst);
        dst += m.values.size();
    }
    return t;
}

} // namespace

EncoderParams EncoderParams::init(Rng& rng) {
    EncoderParams enc;
    enc.conv1_w = init_uniform("encoder.conv1.weight", {1, 1, 4}, 4, rng);
    enc.conv1_b = init_uniform("encoder.conv1.bias", {1}, 4, rng);
    enc.bn1 = nn::BatchNormState::init("encoder.bn1", 1);
    enc.conv2_w = init_uniform("encoder.conv2.weight", {1, 1, 3}, 3, rng);
    enc.conv2_b = init_uniform("encoder.conv2.bias", {1}, 3, rng);
    enc.bn2 = nn::BatchNormState::init("encoder.bn2", 1);
    return enc;
}

std::vector<nn::Parameter*> EncoderParams::trainable() {
    return {&conv1_w, &conv1_b, &bn1.gamma, &bn1.beta,
            &conv2_w, &conv2_b, &bn2.gamma, &bn2.beta};
}

ClassifierParams ClassifierParams::init(std::vector<std::string> names, Rng& rng) {
    ClassifierParams cls;
    const int n = static_cast<int>(names.size());
    cls.weight = init_uniform("classifier.weight", {n, kFlatFeatureDim}, kFlatFeatureDim, rng);
    cls.bias = init_uniform("classifier.bias", {n}, kFlatFeatureDim, rng);
    cls.class_names = std::move(names);
    return cls;
}

nn::Graph::Id encode_rows(nn::Graph& g, nn::Graph::Id payload_rows, EncoderParams& enc,
                          bool training) {
    const int rows = g.value(payload_rows).dim(0);
    auto h = g.conv1d(payload_rows, g.param(enc.conv1_w), g.param(enc.conv1_b), 2);
    h = g.batch_norm(h, enc.bn1, training);
    h = g.leaky_relu(h, enc.leaky_slope);
    h = g.conv1d(h, g.param(enc.conv2_w), g.param(enc.conv2_b), 3);
    h = g.batch_norm(h, enc.bn2, training);
    h = g.leaky_relu(h, enc.leaky_slope);
    return g.reshape(h, {rows, kFeatureColumns});
}

namespace {

constexpr int kConv1Out = (kPayloadBytes - 4) / 2 + 1; // 63
static_assert(kConv1Out == 63);
static_assert((kConv1Out - 3) / 3 + 1 == kFeatureColumns);

void check_encoder_shapes(const EncoderParams& enc) {
    if (enc.conv1_w.value.shape() != std::vector<int>{1, 1, 4} ||
        enc.conv2_w.value.shape() != std::vector<int>{1, 1, 3})
        throw ShapeMismatch("encoder conv configs must be (1,1,4,2) and (1,1,3,3)");
}

// Frozen per-row forward: conv, batch-norm affine over running stats, leaky
// ReLU, twice. Double intermediates, float output.
void encode_row_frozen(const EncoderParams& enc, const float* row, float* out) {
    double h1[kConv1Out];
    {
        const float* w = enc.conv1_w.value.data();
        const double b = enc.conv1_b.value[0];
        for (int t = 0; t < kConv1Out; ++t) {
            double acc = b;
            for (int i = 0; i < 4; ++i) acc += static_cast<double>(row[t * 2 + i]) * w[i];
            h1[t] = acc;
        }
        const double gamma = enc.bn1.gamma.value[0], beta = enc.bn1.beta.value[0];
        const double mean = enc.bn1.running_mean[0];
        const double inv =
            1.0 / std::sqrt(static_cast<double>(enc.bn1.running_var[0]) + enc.bn1.epsilon);
        for (double& v : h1) {
            v = gamma * (v - mean) * inv + beta;
            if (v < 0.0) v *= enc.leaky_slope;
        }
    }
    {
        const float* w = enc.conv2_w.value.data();
        const double b = enc.conv2_b.value[0];
        const double gamma = enc.bn2.gamma.value[0], beta = enc.bn2.beta.value[0];
        const double mean = enc.bn2.running_mean[0];
        const double inv =
            1.0 / std::sqrt(static_cast<double>(enc.bn2.running_var[0]) + enc.bn2.epsilon);
        for (int t = 0; t < kFeatureColumns; ++t) {
            double acc = b;
            for (int i = 0; i < 3; ++i) acc += h1[t * 3 + i] * w[i];
            acc = gamma * (acc - mean) * inv + beta;
            if (acc < 0.0) acc *= enc.leaky_slope;
            out[t] = static_cast<float>(acc);
        }
    }
}

} // namespace

FeatureMatrix encode_frozen(const PayloadMatrix& payload, const EncoderParams& encoder) {
    check_encoder_shapes(encoder);
    FeatureMatrix m;
    for (int r = 0; r < kMaxPackets; ++r)
        encode_row_frozen(encoder, payload.values.data() + r * kPayloadBytes,
                          m.values.data() + r * kFeatureColumns);
    return m;
}

FeatureMatrix encode(const PayloadMatrix& payload, EncoderParams& encoder, bool training) {
    if (!training) return encode_frozen(payload, encoder);
    nn::Graph g;
    auto x = g.leaf(stack_payload_rows({&payload, 1}));
    auto out = encode_rows(g, x, encoder, true);
    FeatureMatrix m;
    const nn::Tensor& v = g.value(out);
    std::copy(v.data(), v.data() + v.size(), m.values.begin());
    return m;
}

EnhancedPayloadFeature enhance(const FeatureMatrix& features, const AuxiliaryMatrix& aux) {
    EnhancedPayloadFeature epf;
    for (int r = 0; r < kMaxPackets; ++r) {
        for (int c = 0; c < kFeatureColumns; ++c) epf.at(r, c) = features.at(r, c);
        for (int c = 0; c < kAuxColumns; ++c) epf.at(r, kFeatureColumns + c) = aux.at(r, c);
    }
    return epf;
}

ClassifyResult classify(const EnhancedPayloadFeature& epf, const ClassifierParams& cls) {
    const int n = cls.n_classes();
    ClassifyResult res;
    res.logits.resize(n);
    for (int o = 0; o < n; ++o) {
        double acc = cls.bias.value[o];
        const float* wr = cls.weight.value.data() + static_cast<std::size_t>(o) * kFlatFeatureDim;
        for (int i = 0; i < kFlatFeatureDim; ++i)
            acc += static_cast<double>(epf.values[static_cast<std::size_t>(i)]) * wr[i];
        res.logits[o] = acc;
    }
    const double m = *std::max_element(res.logits.begin(), res.logits.end());
    double z = 0.0;
    res.scores.resize(n);
    for (int i = 0; i < n; ++i) {
        res.scores[i] = std::exp(res.logits[i] - m);
        z += res.scores[i];
    }
    for (double& s : res.scores) s /= z;
    return res;
}

std::vector<EnhancedPayloadFeature> compute_epf_batch(std::span<const PayloadMatrix> payloads,
                                                      std::span<const AuxiliaryMatrix> aux,
                                                      const EncoderParams& encoder) {
    if (payloads.size() != aux.size())
        throw ShapeMismatch("compute_epf_batch: payload/aux count mismatch");
    std::vector<EnhancedPayloadFeature> out;
    out.reserve(payloads.size());
    for (std::size_t i = 0; i < payloads.size(); ++i)
        out.push_back(enhance(encode_frozen(payloads[i], encoder), aux[i]));
    return out;
}

std::vector<ActivationVector> classify_batch(const std::vector<EnhancedPayloadFeature>& epfs,
                                             const ClassifierParams& cls) {
    std::vector<ActivationVector> out;
    out.reserve(epfs.size());
    for (const auto& epf : epfs) out.push_back(classify(epf, cls).logits);
    return out;
}

std::vector<std::string> collect_class_names(const std::vector<Flow>& flows) {
    std::set<std::string> labels;
    for (const auto& f : flows) {
        if (f.label == kUnlabeled)
            throw Error("training set contains UNLABELED flows; label them first");
        labels.insert(f.label);
    }
    std::vector<std::string> names;
    if (labels.count(kBenignLabel)) {
        names.push_back(kBenignLabel);
        labels.erase(kBenignLabel);
    }
    names.insert(names.end(), labels.begin(), labels.end()); // std::set is already sorted
    if (names.size() < 2)
        throw SingleClass("training requires at least 2 classes, got " +
                          std::to_string(names.size()));
    return names;
}

Stage1Result train_stage1(const std::vector<Flow>& flows, const Stage1Config& config) {
    if (flows.empty()) throw EmptyTrainingSet("no training flows");
    auto class_names = collect_class_names(flows);

    std::vector<PayloadMatrix> payloads;
    std::vector<AuxiliaryMatrix> raw_aux;
    std::vector<int> targets;
    payloads.reserve(flows.size());
    raw_aux.reserve(flows.size());
    targets.reserve(flows.size());
    for (const auto& f : flows) {
        payloads.push_back(extract_payload_matrix(f));
        raw_aux.push_back(extract_auxiliary(f));
        const auto it = std::find(class_names.begin(), class_names.end(), f.label);
        targets.push_back(static_cast<int>(it - class_names.begin()));
    }

    Stage1Result res;
    res.norm = fit_normalization(raw_aux);
    std::vector<AuxiliaryMatrix> aux;
    aux.reserve(raw_aux.size());
    for (const auto& m : raw_aux) aux.push_back(apply_normalization(m, res.norm));

    Rng rng(config.seed);
    res.encoder = EncoderParams::init(rng);
    res.classifier = ClassifierParams::init(class_names, rng);

    auto params = res.encoder.trainable();
    params.push_back(&res.classifier.weight);
    params.push_back(&res.classifier.bias);
    nn::Optimizer opt(params, config.optimizer);

    std::vector<std::size_t> order(flows.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t base = 0; base < order.size(); base += config.batch_size) {
            const std::size_t bsz =
                std::min<std::size_t>(config.batch_size, order.size() - base);
            std::vector<PayloadMatrix> bp(bsz);
            std::vector<AuxiliaryMatrix> ba(bsz);
            std::vector<int> bt(bsz);
            for (std::size_t i = 0; i < bsz; ++i) {
                bp[i] = payloads[order[base + i]];
                ba[i] = aux[order[base + i]];
                bt[i] = targets[order[base + i]];
            }
            nn::Graph g;
            auto x = g.leaf(stack_payload_rows(bp));
            auto feats = encode_rows(g, x, res.encoder, true);
            auto epf = g.concat_cols(feats, g.leaf(stack_aux_rows(ba)));
            auto flat = g.reshape(epf, {static_cast<int>(bsz), kFlatFeatureDim});
            auto logits = g.linear(flat, g.param(res.classifier.weight),
                                   g.param(res.classifier.bias));
            auto loss = g.cross_entropy(logits, bt);
            opt.zero_grad();
            g.backward(loss);
            opt.step();
            epoch_loss += g.scalar(loss) * static_cast<double>(bsz);
        }
        res.epoch_losses.push_back(epoch_loss / static_cast<double>(order.size()));
    }
    return res;
}

} // namespace osids
