#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "aquaplan/errors.hpp"

namespace aquaplan::acquisition {

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Expected improvement below threshold c for a Gaussian belief N(mean, std^2):
/// E[max(c - Y, 0)] = (c - mean) Phi(z) + std phi(z), z = (c - mean) / std.
inline double ei(double mean, double stddev, double c)
{
    if (!std::isfinite(mean) || !std::isfinite(stddev) || !std::isfinite(c))
        throw DomainError("ei: inputs must be finite");
    if (stddev < 0.0)
        throw DomainError("ei: posterior std must be >= 0");
    const double gap = c - mean;
    if (stddev == 0.0)
        return std::max(gap, 0.0);
    const double z = gap / stddev;
    return std::max(gap * normal_cdf(z) + stddev * normal_pdf(z), 0.0);
}

struct Recalibration {
    double predicted = 0.0;
    double actual = 0.0;
    double discrepancy = 0.0; ///< delta_t
    bool applied = false;     ///< delta_t exceeded the gate
};

/// Adaptive threshold c_t = c + phi_t. `baseline` is c, the incumbent best
/// the optimizer reports; `drift` is phi_t, accumulated by recalibration.
struct AcquisitionState {
    double baseline = 0.0;
    double drift = 0.0;
    double omega = 0.1;
    double delta_gate = 0.0;
    std::vector<Recalibration> history;

    double threshold() const { return baseline + drift; }

    /// Defaults: omega 0.1, gate 5% of |c0|.
    static AcquisitionState initial(double c0, double omega = 0.1, double gate_ratio = 0.05)
    {
        if (!std::isfinite(c0))
            throw DomainError("acquisition: initial threshold must be finite");
        if (!(omega >= 0.0))
            throw DomainError("acquisition: omega must be >= 0");
        AcquisitionState s;
        s.baseline = c0;
        s.omega = omega;
        s.delta_gate = gate_ratio * std::abs(c0);
        return s;
    }
};

/// EI evaluated against the adaptive threshold.
inline double aei(double mean, double stddev, const AcquisitionState& state)
{
    return ei(mean, stddev, state.threshold());
}

/// delta_t = |predicted - actual|; if it exceeds the gate the threshold moves
/// by omega * delta_t. The observation is always appended to the history.
inline AcquisitionState recalibrate(AcquisitionState state, double predicted, double actual)
{
    if (!std::isfinite(predicted) || !std::isfinite(actual))
        throw DomainError("recalibrate: values must be finite");
    Recalibration r{predicted, actual, std::abs(predicted - actual), false};
    if (r.discrepancy > state.delta_gate) {
        state.drift += state.omega * r.discrepancy;
        r.applied = true;
    }
    state.history.push_back(r);
    return state;
}

} // namespace aquaplan::acquisition
