#pragma once

#include <string>
#include <vector>

#include "osids/evaluation.hpp"
#include "osids/pipeline.hpp"

namespace osids {

// Verdict CSV: a `# classes` comment carrying the bundle's class list, a
// header, then one row per flow:
//   flow_key,start_time,final_label,stage,assigned_class,recon_loss,vhat_0,...,vhat_N
std::string verdicts_to_csv(const std::vector<DetectionVerdict>& verdicts,
                            const std::vector<std::string>& class_names);

struct VerdictRow {
    std::string flow_key;
    double start_time = 0.0;
    std::string final_label;
    DetectionStage stage = DetectionStage::Accepted;
    std::string assigned_class; // empty when stage 1 rejected
    std::optional<double> recon_loss;
    std::vector<double> scores;
};

struct VerdictFile {
    std::vector<std::string> class_names;
    std::vector<VerdictRow> rows;
};

VerdictFile parse_verdict_csv(const std::string& text);

struct EvalReport {
    ConfusionMatrix matrix;
    BinaryMetrics binary;
    MultiMetrics multi;
};

EvalReport evaluate(const std::vector<std::string>& predicted,
                    const std::vector<std::string>& truth,
                    const std::vector<std::string>& known_classes);

// Key/value metrics plus raw and normalized confusion matrices.
std::string render_report_text(const EvalReport& report);
std::string render_report_csv(const EvalReport& report);

} // namespace osids
