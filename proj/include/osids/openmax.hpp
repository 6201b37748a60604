#pragma once

#include <span>
#include <vector>

#include "osids/encoder.hpp"

namespace osids {

// Two-parameter Weibull with a data shift. CDF(x) = 1 - exp(-((x - shift)/scale)^shape)
// for x > shift, 0 otherwise.
struct WeibullModel {
    double shift = 0.0; // tau
    double shape = 1.0; // kappa, > 0
    double scale = 1.0; // lambda, > 0

    // shape cap applied to zero-variance tails (near-step CDF)
    static constexpr double kShapeCap = 1e4;
};

struct ClassCalibration {
    int class_index = 0;          // 0-based position in the classifier's class list
    std::vector<double> mav;      // mean activation vector, length = n_classes
    WeibullModel rho;
};

struct OpenMaxConfig {
    double attenuation = 0.5;    // theta in [0, 1]; 0 disables recalibration
    double tail_fraction = 0.05; // fraction of per-class samples in the fitted tail
    int tail_floor = 10;         // minimum tail length

    void validate() const;
};

// Maximum-likelihood fit of (shape, scale) to (samples - shift). The shape
// is solved by safeguarded Newton iteration (tolerance 1e-8, at most 200
// steps); scale = (mean of (x - shift)^shape)^(1/shape). An all-equal tail
// degenerates to the capped shape with scale at the observed value.
// Throws TooFewSamples for fewer than 2 samples.
WeibullModel fit_weibull_tail(std::span<const double> tail, double shift);

double weibull_cdf(double distance, const WeibullModel& model);

// Per class: mean activation vector, Euclidean distances to it, and a
// Weibull fit over the eta largest distances where
// eta = min(N_j, max(ceil(tail_fraction * N_j), tail_floor)).
std::vector<ClassCalibration> fit_per_class(
    const std::vector<std::vector<ActivationVector>>& vectors_by_class,
    const OpenMaxConfig& config);

struct Recalibrated {
    std::vector<double> scores; // length n_classes + 1; scores[0] is the unknown score
    int predicted = 0;          // argmax index in [0, n_classes]; 0 means rejected
};

// Score recalibration with rejection. Classes are revised in descending
// logit order with damping factor (N - j - 1)/N at 1-based rank j, scaled by
// the Weibull CDF of the distance to the class mean and the attenuation
// rate. The unknown score is the total mass removed. Ties at the argmax go
// to the smaller index, so an exact tie with the unknown score rejects.
Recalibrated recalibrate(const ActivationVector& v,
                         const std::vector<ClassCalibration>& calibrations,
                         const OpenMaxConfig& config);

} // namespace osids
