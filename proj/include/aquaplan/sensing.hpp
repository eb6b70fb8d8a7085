#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "aquaplan/channel.hpp"
#include "aquaplan/errors.hpp"
#include "aquaplan/parallel.hpp"

namespace aquaplan::sensing {

inline constexpr double kDefaultEfficiency = 0.9;

/// Per-sensor geometry relative to the point of interest. Sensor k (1-based)
/// is the k-th entry of each list.
struct SensorLayout {
    std::vector<double> distances_m;
    std::vector<double> boundary_m;
    std::vector<double> efficiencies;

    std::size_t size() const { return distances_m.size(); }

    void validate() const
    {
        detail::require(!distances_m.empty(), "layout: at least one sensor is required");
        detail::require(boundary_m.size() == distances_m.size() && efficiencies.size() == distances_m.size(),
                        "layout: distances, boundaries and efficiencies must have equal length");
        for (std::size_t i = 0; i < size(); ++i) {
            // Zero distance is allowed: a sensor sitting on the point of interest.
            detail::require(distances_m[i] >= 0.0 && std::isfinite(distances_m[i]), "layout: distances must be >= 0");
            detail::require(boundary_m[i] > 0.0, "layout: boundary radii must be > 0");
            detail::require(efficiencies[i] > 0.0 && efficiencies[i] <= 1.0,
                            "layout: efficiencies must lie in (0, 1]");
        }
    }

    static SensorLayout from_distances(std::vector<double> distances, double boundary,
                                       double efficiency = kDefaultEfficiency)
    {
        SensorLayout l;
        l.boundary_m.assign(distances.size(), boundary);
        l.efficiencies.assign(distances.size(), efficiency);
        l.distances_m = std::move(distances);
        return l;
    }

    /// `count` sensors equally spaced over [d_min, d_max]; one sensor sits at d_min.
    static SensorLayout uniform(std::size_t count, double d_min, double d_max, double boundary,
                                double efficiency = kDefaultEfficiency)
    {
        detail::require(count >= 1, "layout: count must be >= 1");
        detail::require(d_min <= d_max, "layout: d_min must not exceed d_max");
        std::vector<double> d(count);
        for (std::size_t i = 0; i < count; ++i)
            d[i] = count == 1 ? d_min : d_min + (d_max - d_min) * static_cast<double>(i) / static_cast<double>(count - 1);
        return from_distances(std::move(d), boundary, efficiency);
    }

    /// A line of `count` sensors with constant spacing, the k-th at k * spacing.
    static SensorLayout stepped(std::size_t count, double spacing, double boundary,
                                double efficiency = kDefaultEfficiency)
    {
        detail::require(spacing >= 0.0, "layout: spacing must be >= 0");
        return uniform(count, spacing, spacing * static_cast<double>(count), boundary, efficiency);
    }
};

struct WakeupParams {
    double gamma_wake = 0.9; ///< probability a sensor is awake in a cycle
    double gamma_cap = 1.0;  ///< ceiling on gamma_wake
    double decay = 0.6;      ///< delta in the detection kernel

    void validate() const
    {
        detail::require(gamma_wake >= 0.0 && gamma_wake <= 1.0, "wakeup: gamma_wake must lie in [0, 1]");
        detail::require(gamma_cap >= 0.0 && gamma_cap <= 1.0, "wakeup: gamma_cap must lie in [0, 1]");
        detail::require(decay > 0.0 && std::isfinite(decay), "wakeup: decay must be > 0");
    }

    void check_constraint() const
    {
        if (gamma_wake > gamma_cap)
            throw ConstraintError("P1 constraint violated: gamma_wake (" + std::to_string(gamma_wake) +
                                  ") exceeds gamma_cap (" + std::to_string(gamma_cap) + ")");
    }
};

/// Channel plus the scale on which its loss feeds the detection kernel.
struct ChannelContext {
    channel::ChannelParams params{};
    channel::AttenuationScale scale = channel::AttenuationScale::db;
};

/// Poisson probability mass at k for the given rate, evaluated in log space.
inline double poisson_pmf(unsigned k, double rate)
{
    detail::require(rate >= 0.0 && std::isfinite(rate), "poisson_pmf: rate must be finite and >= 0");
    if (rate == 0.0)
        return k == 0 ? 1.0 : 0.0;
    const double kd = static_cast<double>(k);
    return std::exp(kd * std::log(rate) - rate - std::lgamma(kd + 1.0));
}

/// Pr(X = k): 1 inside the boundary radius, otherwise the Poisson mass at k
/// with rate 1 / (decay * A_b(f, d_k)).
inline double detection_probability(unsigned k, double distance_m, double boundary_m, double decay,
                                    const ChannelContext& ch)
{
    if (k == 0)
        throw DomainError("detection_probability: k must be >= 1");
    detail::require(distance_m >= 0.0, "detection_probability: distance must be >= 0");
    detail::require(decay > 0.0, "detection_probability: decay must be > 0");
    if (distance_m < boundary_m)
        return 1.0;
    const double loss = channel::attenuation(ch.params, distance_m, ch.scale);
    if (!(loss > 0.0))
        throw DomainError("detection_probability: attenuation must be > 0 outside the boundary");
    return poisson_pmf(k, 1.0 / (decay * loss));
}

/// E(X): sum over sensors k = 1..K of (1 - (1 - gamma_wake eps_k)^k) Pr(X = k),
/// with Pr(X = k) evaluated at the sensor's own distance.
inline double wakeup_expectation(const SensorLayout& layout, const WakeupParams& params, const ChannelContext& ch)
{
    layout.validate();
    params.validate();
    double total = 0.0;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const unsigned k = static_cast<unsigned>(i + 1);
        const double wake = 1.0 - std::pow(1.0 - params.gamma_wake * layout.efficiencies[i], static_cast<double>(k));
        total += wake * detection_probability(k, layout.distances_m[i], layout.boundary_m[i], params.decay, ch);
    }
    return total;
}

struct UniformSpacing {
    double d_min = 1.0;
    double d_max = 10.0;
};

/// User-supplied distances; a candidate K uses the first K entries.
struct ExplicitSpacing {
    std::vector<double> distances_m;
};

using SpacingStrategy = std::variant<UniformSpacing, ExplicitSpacing>;

struct P1Result {
    std::size_t count = 0;
    SensorLayout layout;
    double expectation = 0.0;
};

struct P1Options {
    std::size_t k_min = 1;
    std::size_t k_max = 1;
    double boundary_m = 5.0;
    double efficiency = kDefaultEfficiency;
    unsigned threads = 1;
};

inline SensorLayout layout_for(std::size_t count, const SpacingStrategy& spacing, double boundary, double efficiency)
{
    if (const auto* u = std::get_if<UniformSpacing>(&spacing))
        return SensorLayout::uniform(count, u->d_min, u->d_max, boundary, efficiency);
    const auto& e = std::get<ExplicitSpacing>(spacing);
    detail::require(e.distances_m.size() >= count, "explicit spacing: fewer distances than candidate count");
    return SensorLayout::from_distances({e.distances_m.begin(), e.distances_m.begin() + static_cast<std::ptrdiff_t>(count)},
                                        boundary, efficiency);
}

/// P1: the active-sensor count (and its layout) maximising E(X) subject to
/// gamma_wake <= gamma_cap. Ties go to the smaller count, then to the
/// lexicographically smaller distance list.
inline P1Result solve_p1(const P1Options& opts, const SpacingStrategy& spacing, const WakeupParams& params,
                         const ChannelContext& ch)
{
    params.validate();
    params.check_constraint();
    if (opts.k_min < 1 || opts.k_max < opts.k_min)
        throw DomainError("solve_p1: empty candidate range");

    const std::size_t n = opts.k_max - opts.k_min + 1;
    auto results = parallel_map(n, opts.threads, [&](std::size_t i) {
        const std::size_t count = opts.k_min + i;
        P1Result r;
        r.count = count;
        r.layout = layout_for(count, spacing, opts.boundary_m, opts.efficiency);
        r.expectation = wakeup_expectation(r.layout, params, ch);
        return r;
    });

    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        const auto& a = results[i];
        const auto& b = results[best];
        if (a.expectation > b.expectation ||
            (a.expectation == b.expectation &&
             (a.count < b.count || (a.count == b.count && a.layout.distances_m < b.layout.distances_m))))
            best = i;
    }
    return std::move(results[best]);
}

} // namespace aquaplan::sensing
