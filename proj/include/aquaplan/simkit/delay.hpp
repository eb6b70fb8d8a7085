#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "aquaplan/aoi.hpp"
#include "aquaplan/errors.hpp"
#include "aquaplan/optimizer.hpp"
#include "aquaplan/random.hpp"
#include "aquaplan/sensing.hpp"
#include "aquaplan/simkit/mm1.hpp"

namespace aquaplan::simkit {

struct ScenarioConfig {
    std::size_t subnets = 3;
    std::size_t nodes_per_subnet = 50;
    double sound_speed_mps = 1500.0;
    double sim_horizon = 2000.0;
    std::uint64_t seed = 1;

    void validate() const
    {
        detail::require(subnets >= 1, "scenario: subnets must be >= 1");
        detail::require(nodes_per_subnet >= 1, "scenario: nodes_per_subnet must be >= 1");
        detail::require(sound_speed_mps > 0.0, "scenario: sound speed must be > 0");
        detail::require(sim_horizon > 0.0, "scenario: horizon must be > 0");
    }
};

/// One underwater subnet reporting to its gateway through its own queue.
struct Subnet {
    std::size_t index = 0;
    std::size_t node_count = 0;
    std::uint64_t queue_seed = 0;
};

/// S subnets of k_s nodes each, with independent queue streams.
inline std::vector<Subnet> generate_scenario(const ScenarioConfig& cfg)
{
    cfg.validate();
    std::vector<Subnet> out;
    auto rng = make_rng(cfg.seed, 0x5ce7);
    for (std::size_t s = 0; s < cfg.subnets; ++s)
        out.push_back({s, cfg.nodes_per_subnet, rng()});
    return out;
}

enum class Strategy { optimized, random, fixed };

inline std::string_view to_string(Strategy s)
{
    switch (s) {
    case Strategy::optimized: return "optimized";
    case Strategy::random: return "random";
    case Strategy::fixed: return "fixed";
    }
    return "?";
}

inline Strategy parse_strategy(std::string_view s)
{
    if (s == "optimized")
        return Strategy::optimized;
    if (s == "random")
        return Strategy::random;
    if (s == "fixed")
        return Strategy::fixed;
    throw DomainError("unknown strategy '" + std::string(s) + "'");
}

struct DelaySample {
    std::size_t subnet = 0;
    std::size_t update = 0;
    double time = 0.0; ///< delivery time at the gateway queue
    double propagation = 0.0;
    double wake_wait = 0.0; ///< whole duty cycles spent with every sensor asleep
    double queueing = 0.0;
    double delay() const { return wake_wait + propagation + queueing; }
};

struct DelayTrace {
    std::vector<DelaySample> samples;

    double mean_delay() const
    {
        if (samples.empty())
            return 0.0;
        double s = 0.0;
        for (const auto& d : samples)
            s += d.delay();
        return s / static_cast<double>(samples.size());
    }
};

/// Per-update end-to-end delay for one layout: the nearest awake sensor
/// reports, paying distance / sound speed, then the update's queue system
/// time. Sensors wake independently with probability gamma_wake per duty
/// cycle; a cycle with every sensor asleep costs one wake period.
inline DelayTrace delays_for_layout(const sensing::SensorLayout& layout, const std::vector<Update>& updates,
                                    double gamma_wake, double sound_speed_mps, double wake_period, Rng& wake_rng,
                                    std::size_t subnet = 0)
{
    layout.validate();
    detail::require(gamma_wake > 0.0 && gamma_wake <= 1.0, "delay: gamma_wake must lie in (0, 1]");
    detail::require(sound_speed_mps > 0.0, "delay: sound speed must be > 0");
    detail::require(wake_period >= 0.0, "delay: wake period must be >= 0");
    std::vector<double> order = layout.distances_m;
    std::sort(order.begin(), order.end());
    std::bernoulli_distribution awake(gamma_wake);
    DelayTrace out;
    out.samples.reserve(updates.size());
    for (std::size_t u = 0; u < updates.size(); ++u) {
        std::optional<double> reporter;
        double wait = 0.0;
        while (!reporter) {
            for (double d : order) {
                if (awake(wake_rng)) {
                    reporter = d;
                    break;
                }
            }
            if (!reporter)
                wait += wake_period;
        }
        out.samples.push_back(
            {subnet, u, updates[u].departure, *reporter / sound_speed_mps, wait, updates[u].system_time()});
    }
    return out;
}

struct DelayOptions {
    aoi::QueueParams queue{};
    optimizer::PlacementField field{};
    optimizer::BoConfig bo{};
    std::size_t fixed_count = 2;
    double fixed_spacing_m = 5.0;
    double wake_period = 1.0; ///< duty-cycle length, same time unit as the queue
};

struct StrategyResult {
    Strategy strategy = Strategy::optimized;
    bool ok = true;
    std::string diagnostic;
    std::vector<sensing::SensorLayout> layouts; ///< one per subnet
    DelayTrace trace;
};

/// Delay series per strategy. All strategies see the same queue sample paths
/// (common random numbers), so they differ only through their layouts.
inline std::vector<StrategyResult> simulate_delay_comparison(const ScenarioConfig& scenario,
                                                             const std::vector<Strategy>& strategies,
                                                             const DelayOptions& opts)
{
    detail::require(!strategies.empty(), "simulate_delay_comparison: at least one strategy is required");
    const auto subnets = generate_scenario(scenario);
    opts.queue.validate();

    std::vector<std::vector<Update>> paths;
    for (const auto& sn : subnets)
        paths.push_back(simulate_mm1(opts.queue.lambda, opts.queue.mu, scenario.sim_horizon, sn.queue_seed));

    optimizer::PlacementField field = opts.field;
    field.k_max = std::min(field.k_max, scenario.nodes_per_subnet);
    field.k_min = std::min(field.k_min, field.k_max);

    std::vector<StrategyResult> out;
    for (Strategy strategy : strategies) {
        StrategyResult res;
        res.strategy = strategy;
        try {
            if (strategy == Strategy::optimized) {
                optimizer::BoConfig bo = opts.bo;
                bo.seed = scenario.seed;
                const auto trace = optimizer::optimize_placement(field, bo);
                if (trace.aborted)
                    throw Error("placement optimisation aborted: " + trace.error);
                const auto layout = field.layout(static_cast<std::size_t>(trace.best_input[0]), trace.best_input[1]);
                res.layouts.assign(subnets.size(), layout);
            } else if (strategy == Strategy::random) {
                field.validate();
                auto rng = make_rng(scenario.seed, 0x7a4d);
                for (std::size_t s = 0; s < subnets.size(); ++s) {
                    std::uniform_int_distribution<std::size_t> count(field.k_min, field.k_max);
                    const std::size_t k = count(rng);
                    res.layouts.push_back(field.layout(k, uniform(rng, field.spacing_min, field.spacing_max)));
                }
            } else {
                res.layouts.assign(subnets.size(), field.layout(opts.fixed_count, opts.fixed_spacing_m));
            }
        } catch (const Error& e) {
            res.ok = false;
            res.diagnostic = std::string(to_string(strategy)) + " placement failed: " + e.what();
            out.push_back(std::move(res));
            continue;
        }
        for (std::size_t s = 0; s < subnets.size(); ++s) {
            auto wake_rng = make_rng(subnets[s].queue_seed, 0xa11e);
            auto part = delays_for_layout(res.layouts[s], paths[s], field.wakeup.gamma_wake, scenario.sound_speed_mps,
                                          opts.wake_period, wake_rng, s);
            res.trace.samples.insert(res.trace.samples.end(), part.samples.begin(), part.samples.end());
        }
        out.push_back(std::move(res));
    }
    return out;
}

} // namespace aquaplan::simkit
