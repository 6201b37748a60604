#include "osids/pipeline.hpp"

#include <algorithm>
#include <map>

#include "osids/error.hpp"

namespace osids {

const char* stage_name(DetectionStage stage) {
    switch (stage) {
        case DetectionStage::OpenmaxReject: return "OPENMAX_REJECT";
        case DetectionStage::VaeReject: return "VAE_REJECT";
        case DetectionStage::Accepted: return "ACCEPTED";
    }
    return "ACCEPTED";
}

DetectionStage stage_from_name(const std::string& name) {
    if (name == "OPENMAX_REJECT") return DetectionStage::OpenmaxReject;
    if (name == "VAE_REJECT") return DetectionStage::VaeReject;
    if (name == "ACCEPTED") return DetectionStage::Accepted;
    throw Error("unknown detection stage: '" + name + "'");
}

void ModelBundle::validate() const {
    const int n = n_classes();
    auto fail = [](const std::string& msg) { throw BundleClassMismatch(msg); };
    if (static_cast<int>(calibrations.size()) != n)
        fail("bundle has " + std::to_string(calibrations.size()) + " calibrations for " +
             std::to_string(n) + " classes");
    if (static_cast<int>(vaes.size()) != n)
        fail("bundle has " + std::to_string(vaes.size()) + " VAEs for " + std::to_string(n) +
             " classes");
    if (static_cast<int>(thresholds.size()) != n)
        fail("bundle has " + std::to_string(thresholds.size()) + " thresholds for " +
             std::to_string(n) + " classes");
    for (int c = 0; c < n; ++c) {
        if (calibrations[c].class_index != c)
            fail("calibration " + std::to_string(c) + " carries class index " +
                 std::to_string(calibrations[c].class_index));
        if (static_cast<int>(calibrations[c].mav.size()) != n)
            fail("calibration " + std::to_string(c) + " MAV length mismatch");
        if (vaes[c].class_index != c)
            fail("VAE " + std::to_string(c) + " carries class index " +
                 std::to_string(vaes[c].class_index));
        if (thresholds[c].class_index != c)
            fail("threshold " + std::to_string(c) + " carries class index " +
                 std::to_string(thresholds[c].class_index));
    }
    if (classifier.weight.value.ndim() != 2 ||
        classifier.weight.value.dim(0) != n ||
        classifier.weight.value.dim(1) != kFlatFeatureDim)
        fail("classifier weight shape does not match the class list");
}

namespace {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
    std::uint64_t x = master ^ (0x9e3779b97f4a7c15ull * (salt + 1));
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdull;
    x ^= x >> 33;
    return x;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

ModelBundle train_full(const std::vector<Flow>& flows, const TrainConfig& config) {
    if (flows.empty()) throw EmptyTrainingSet("no training flows");
    config.openmax.validate();
    if (config.quantile_position <= 0.0 || config.quantile_position > 1.0)
        throw Error("threshold position parameter must be in (0, 1]");

    const auto class_names = collect_class_names(flows);
    std::map<std::string, std::size_t> class_counts;
    for (const auto& f : flows) ++class_counts[f.label];
    for (const auto& [name, count] : class_counts)
        if (count < 2)
            throw ClassTooSmall("class '" + name + "' has " + std::to_string(count) +
                                " training flow(s); the Weibull fit needs at least 2");

    // stage 1: encoder + classifier
    Stage1Config s1 = config.stage1;
    s1.seed = config.seed;
    Stage1Result stage1 = train_stage1(flows, s1);

    ModelBundle bundle;
    bundle.encoder = std::move(stage1.encoder);
    bundle.classifier = std::move(stage1.classifier);
    bundle.norm = stage1.norm;
    bundle.openmax_config = config.openmax;

    // inference-mode features for calibration and the VAEs
    const int n = bundle.n_classes();
    std::vector<PayloadMatrix> payloads;
    std::vector<AuxiliaryMatrix> aux;
    std::vector<int> targets;
    payloads.reserve(flows.size());
    aux.reserve(flows.size());
    targets.reserve(flows.size());
    for (const auto& f : flows) {
        payloads.push_back(extract_payload_matrix(f));
        aux.push_back(apply_normalization(extract_auxiliary(f), bundle.norm));
        const auto it = std::find(class_names.begin(), class_names.end(), f.label);
        targets.push_back(static_cast<int>(it - class_names.begin()));
    }
    const auto epfs = compute_epf_batch(payloads, aux, bundle.encoder);
    const auto logits = classify_batch(epfs, bundle.classifier);

    std::vector<std::vector<ActivationVector>> av_correct(n), av_all(n);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const int c = targets[i];
        av_all[c].push_back(logits[i]);
        const int pred = static_cast<int>(
            std::max_element(logits[i].begin(), logits[i].end()) - logits[i].begin());
        if (pred == c) av_correct[c].push_back(logits[i]);
    }
    std::vector<std::vector<ActivationVector>> av_by_class(n);
    for (int c = 0; c < n; ++c) {
        // a class the young classifier never gets right still needs a
        // calibration; fall back to all of its vectors
        if (config.calibrate_on_correct_only && av_correct[c].size() >= 2)
            av_by_class[c] = std::move(av_correct[c]);
        else
            av_by_class[c] = std::move(av_all[c]);
    }
    bundle.calibrations = fit_per_class(av_by_class, config.openmax);

    // stage 2: per-class VAEs over the frozen encoder's features
    for (int c = 0; c < n; ++c) {
        std::vector<EnhancedPayloadFeature> class_epfs;
        for (std::size_t i = 0; i < epfs.size(); ++i)
            if (targets[i] == c) class_epfs.push_back(epfs[i]);
        VaeTrainConfig vc = config.vae;
        vc.seed = derive_seed(config.seed, static_cast<std::uint64_t>(c));
        bundle.vaes.push_back(train_vae(class_epfs, vc, c));
        const auto losses = reconstruction_losses(class_epfs, bundle.vaes.back());
        bundle.thresholds.push_back(select_threshold(losses, config.quantile_position, c));
    }

    bundle.train_echo = {
        {"seed", std::to_string(config.seed)},
        {"stage1_epochs", std::to_string(config.stage1.epochs)},
        {"stage1_batch_size", std::to_string(config.stage1.batch_size)},
        {"learning_rate", fmt_double(config.stage1.optimizer.learning_rate)},
        {"optimizer", config.stage1.optimizer.method == nn::OptMethod::Adam ? "adam" : "sgd"},
        {"vae_epochs", std::to_string(config.vae.epochs)},
        {"vae_batch_size", std::to_string(config.vae.batch_size)},
        {"kl_weight", fmt_double(config.vae.kl_weight)},
        {"quantile_position", fmt_double(config.quantile_position)},
        {"calibrate_on_correct_only", config.calibrate_on_correct_only ? "1" : "0"},
    };
    bundle.validate();
    return bundle;
}

DetectionVerdict detect(const Flow& flow, const ModelBundle& bundle) {
    const PayloadMatrix payload = extract_payload_matrix(flow);
    const AuxiliaryMatrix aux = apply_normalization(extract_auxiliary(flow), bundle.norm);
    const auto epfs = compute_epf_batch({&payload, 1}, {&aux, 1}, bundle.encoder);
    const EnhancedPayloadFeature& epf = epfs.front();

    const ClassifyResult cls = classify(epf, bundle.classifier);
    const Recalibrated rec = recalibrate(cls.logits, bundle.calibrations, bundle.openmax_config);

    DetectionVerdict verdict;
    verdict.key = flow.key;
    verdict.start_time = flow.start_time;
    verdict.scores = rec.scores;

    if (rec.predicted == 0) {
        verdict.final_label = kUnknownLabel;
        verdict.stage = DetectionStage::OpenmaxReject;
        return verdict;
    }
    const int c = rec.predicted - 1;
    verdict.assigned_class = c;
    if (c >= static_cast<int>(bundle.vaes.size()) ||
        c >= static_cast<int>(bundle.thresholds.size()) ||
        bundle.vaes[c].class_index != c || bundle.thresholds[c].class_index != c)
        throw BundleClassMismatch("no VAE/threshold for assigned class index " +
                                  std::to_string(c));
    const UnknownCheck check = is_unknown(epf, bundle.vaes[c], bundle.thresholds[c]);
    verdict.recon_loss = check.loss;
    if (check.unknown) {
        verdict.final_label = kUnknownLabel;
        verdict.stage = DetectionStage::VaeReject;
    } else {
        verdict.final_label = bundle.classifier.class_names[c];
        verdict.stage = DetectionStage::Accepted;
    }
    return verdict;
}

} // namespace osids
