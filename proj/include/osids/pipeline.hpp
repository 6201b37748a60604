#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "osids/encoder.hpp"
#include "osids/openmax.hpp"
#include "osids/vae.hpp"

namespace osids {

inline constexpr std::uint32_t kBundleVersion = 1;

struct TrainConfig {
    Stage1Config stage1;
    VaeTrainConfig vae;
    OpenMaxConfig openmax;
    double quantile_position = 0.96; // VAE threshold position parameter
    bool calibrate_on_correct_only = true;
    std::uint64_t seed = 1; // master seed; stage-1 and per-class VAE seeds derive from it
};

// Complete trained model state: encoder + classifier, auxiliary
// normalization, per-class Weibull calibrations, and per-class VAEs with
// their reconstruction-loss thresholds.
struct ModelBundle {
    std::uint32_t version = kBundleVersion;
    EncoderParams encoder;
    ClassifierParams classifier;
    NormalizationStats norm;
    OpenMaxConfig openmax_config;
    std::vector<ClassCalibration> calibrations;       // indexed by class
    std::vector<VaeParams> vaes;                      // indexed by class
    std::vector<ReconstructionThreshold> thresholds;  // indexed by class
    std::vector<std::pair<std::string, std::string>> train_echo;

    int n_classes() const { return classifier.n_classes(); }

    // Cross-section consistency; throws BundleClassMismatch.
    void validate() const;
};

enum class DetectionStage { OpenmaxReject, VaeReject, Accepted };

const char* stage_name(DetectionStage stage);
DetectionStage stage_from_name(const std::string& name);

struct DetectionVerdict {
    FlowKey key;
    double start_time = 0.0;
    std::string final_label; // a known class name or UNKNOWN_ATTACK
    DetectionStage stage = DetectionStage::Accepted;
    std::vector<double> scores;         // recalibrated, length n_classes + 1
    std::optional<int> assigned_class;  // class picked by stage 1 when not rejected there
    std::optional<double> recon_loss;   // present when stage 2 ran
};

// Two-stage training: (1) encoder + classifier with cross entropy, then
// Weibull calibration over inference-mode activation vectors; (2) with the
// encoder frozen, one VAE and one loss threshold per class.
ModelBundle train_full(const std::vector<Flow>& flows, const TrainConfig& config);

// Feature extraction, OpenMax recalibration, then the assigned class's VAE
// check. Pure over the bundle; safe to call concurrently.
DetectionVerdict detect(const Flow& flow, const ModelBundle& bundle);

std::string serialize_bundle(const ModelBundle& bundle);
ModelBundle deserialize_bundle(const std::string& bytes);
void save_bundle_file(const std::string& path, const ModelBundle& bundle);
ModelBundle load_bundle_file(const std::string& path);

} // namespace osids
