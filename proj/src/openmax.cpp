#include "osids/openmax.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "osids/error.hpp"

namespace osids {

void OpenMaxConfig::validate() const {
    if (attenuation < 0.0 || attenuation > 1.0)
        throw Error("attenuation rate must be in [0, 1]");
    if (tail_fraction < 0.0 || tail_fraction > 1.0)
        throw Error("tail fraction must be in [0, 1]");
    if (tail_floor < 1) throw Error("tail floor must be >= 1");
}

WeibullModel fit_weibull_tail(std::span<const double> tail, double shift) {
    if (tail.size() < 2)
        throw TooFewSamples("Weibull fit needs at least 2 samples, got " +
                            std::to_string(tail.size()));

    std::vector<double> x(tail.size());
    for (std::size_t i = 0; i < tail.size(); ++i)
        x[i] = std::max(tail[i] - shift, 1e-12);

    const double x_max = *std::max_element(x.begin(), x.end());
    const double x_min = *std::min_element(x.begin(), x.end());

    WeibullModel model;
    model.shift = shift;

    if (x_max - x_min <= 1e-12 * x_max) {
        // zero-variance tail: near-step CDF at the observed distance
        model.shape = WeibullModel::kShapeCap;
        model.scale = std::max(x_max, 1e-30);
        return model;
    }

    // work on u = x / x_max in (0, 1] so u^shape cannot overflow
    const std::size_t n = x.size();
    std::vector<double> log_u(n);
    double mean_log = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        log_u[i] = std::log(x[i] / x_max);
        mean_log += log_u[i];
    }
    mean_log /= static_cast<double>(n);

    double var_log = 0.0;
    for (double lu : log_u) var_log += (lu - mean_log) * (lu - mean_log);
    var_log /= static_cast<double>(n);

    // moment-based start: Var(log X) = pi^2 / (6 shape^2)
    double shape = M_PI / std::sqrt(6.0 * var_log);
    shape = std::clamp(shape, 1e-3, WeibullModel::kShapeCap);

    for (int iter = 0; iter < 200; ++iter) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double uk = std::exp(shape * log_u[i]);
            s0 += uk;
            s1 += uk * log_u[i];
            s2 += uk * log_u[i] * log_u[i];
        }
        const double f = s1 / s0 - 1.0 / shape - mean_log;
        const double fp = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (shape * shape);
        double next = shape - f / fp;
        if (!(next > 0.0)) next = shape * 0.5; // safeguard; f is increasing in shape
        next = std::min(next, WeibullModel::kShapeCap);
        const double delta = std::abs(next - shape);
        shape = next;
        if (delta <= 1e-8 * std::max(1.0, shape)) break;
    }

    double s0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) s0 += std::exp(shape * log_u[i]);
    model.shape = shape;
    model.scale = x_max * std::pow(s0 / static_cast<double>(n), 1.0 / shape);
    return model;
}

double weibull_cdf(double distance, const WeibullModel& model) {
    const double z = distance - model.shift;
    if (z <= 0.0) return 0.0;
    return -std::expm1(-std::pow(z / model.scale, model.shape));
}

namespace {

double euclidean(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

} // namespace

std::vector<ClassCalibration> fit_per_class(
    const std::vector<std::vector<ActivationVector>>& vectors_by_class,
    const OpenMaxConfig& config) {
    config.validate();
    const int n_classes = static_cast<int>(vectors_by_class.size());
    std::vector<ClassCalibration> out;
    out.reserve(vectors_by_class.size());

    for (int j = 0; j < n_classes; ++j) {
        const auto& vectors = vectors_by_class[static_cast<std::size_t>(j)];
        if (vectors.size() < 2)
            throw TooFewSamples("class index " + std::to_string(j) + " has " +
                                std::to_string(vectors.size()) +
                                " activation vectors; at least 2 required");
        ClassCalibration cal;
        cal.class_index = j;
        cal.mav.assign(static_cast<std::size_t>(n_classes), 0.0);
        for (const auto& av : vectors) {
            if (static_cast<int>(av.size()) != n_classes)
                throw ShapeMismatch("activation vector length != class count");
            for (int i = 0; i < n_classes; ++i) cal.mav[static_cast<std::size_t>(i)] += av[i];
        }
        for (double& m : cal.mav) m /= static_cast<double>(vectors.size());

        std::vector<double> distances;
        distances.reserve(vectors.size());
        for (const auto& av : vectors) distances.push_back(euclidean(av, cal.mav));
        std::sort(distances.begin(), distances.end(), std::greater<double>());

        const auto n_j = static_cast<double>(vectors.size());
        // tiny nudge keeps e.g. 0.05 * 1000 from ceiling to 51
        const int by_fraction = static_cast<int>(std::ceil(config.tail_fraction * n_j - 1e-9));
        const int eta = std::min(static_cast<int>(vectors.size()),
                                 std::max(by_fraction, config.tail_floor));
        cal.rho = fit_weibull_tail({distances.data(), static_cast<std::size_t>(eta)}, 0.0);
        out.push_back(std::move(cal));
    }
    return out;
}

Recalibrated recalibrate(const ActivationVector& v,
                         const std::vector<ClassCalibration>& calibrations,
                         const OpenMaxConfig& config) {
    config.validate();
    const int n = static_cast<int>(v.size());
    if (static_cast<int>(calibrations.size()) != n)
        throw CalibrationMissing("have " + std::to_string(calibrations.size()) +
                                 " calibrations for " + std::to_string(n) + " classes");
    for (int c = 0; c < n; ++c) {
        const auto& cal = calibrations[static_cast<std::size_t>(c)];
        if (cal.class_index != c)
            throw CalibrationMissing("calibration for class index " + std::to_string(c) +
                                     " missing or out of order");
        if (static_cast<int>(cal.mav.size()) != n)
            throw CalibrationMissing("calibration MAV length mismatch for class " +
                                     std::to_string(c));
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&v](int a, int b) { return v[a] > v[b]; });

    Recalibrated res;
    res.scores.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (int rank = 1; rank <= n; ++rank) {
        const int c = order[static_cast<std::size_t>(rank - 1)];
        const auto& cal = calibrations[static_cast<std::size_t>(c)];
        const double dist = euclidean(v, cal.mav);
        const double omega = weibull_cdf(dist, cal.rho);
        // damping factor (N - j - 1)/N at 1-based rank j: zero at rank N-1,
        // negative at rank N (the lowest logit is amplified)
        const double factor = static_cast<double>(n - rank - 1) / static_cast<double>(n);
        res.scores[static_cast<std::size_t>(c) + 1] =
            v[c] * (1.0 - omega * factor * config.attenuation);
    }
    double removed = 0.0;
    for (int c = 0; c < n; ++c)
        removed += v[c] - res.scores[static_cast<std::size_t>(c) + 1];
    res.scores[0] = removed;

    res.predicted = 0;
    for (int i = 1; i <= n; ++i)
        if (res.scores[static_cast<std::size_t>(i)] > res.scores[static_cast<std::size_t>(res.predicted)])
            res.predicted = i;
    return res;
}

} // namespace osids
