#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <vector>

#include "aquaplan/aoi.hpp"
#include "aquaplan/errors.hpp"
#include "aquaplan/random.hpp"
#include "aquaplan/simkit/event_queue.hpp"

namespace aquaplan::simkit {

/// A status update: generated (arrived) at `arrival`, delivered at `departure`.
struct Update {
    double arrival = 0.0;
    double departure = 0.0;

    double system_time() const { return departure - arrival; }
};

enum class QueueEvent { arrival, departure };

/// FCFS M/M/1 driven by an event list. Arrivals stop at the horizon and only
/// departures up to the horizon are returned, in departure order. Interarrival
/// and service draws use separate streams of `seed`.
inline std::vector<Update> simulate_mm1(double lambda, double mu, double horizon, std::uint64_t seed)
{
    aoi::QueueParams{lambda, mu, 0.0}.validate();
    detail::require(horizon > 0.0 && std::isfinite(horizon), "simulate_mm1: horizon must be > 0");

    auto arrivals_rng = make_rng(seed, 11);
    auto service_rng = make_rng(seed, 12);
    std::exponential_distribution<double> interarrival(lambda);
    std::exponential_distribution<double> service(mu);

    std::vector<Update> done;
    done.reserve(static_cast<std::size_t>(lambda * horizon * 1.05) + 16);
    std::deque<double> waiting; // arrival times, front is in service
    EventQueue<QueueEvent> events;
    events.schedule(interarrival(arrivals_rng), QueueEvent::arrival);

    while (!events.empty() && events.peek().time <= horizon) {
        const auto ev = events.pop();
        if (ev.kind == QueueEvent::arrival) {
            waiting.push_back(ev.time);
            if (waiting.size() == 1)
                events.schedule(ev.time + service(service_rng), QueueEvent::departure);
            events.schedule(ev.time + interarrival(arrivals_rng), QueueEvent::arrival);
        } else {
            done.push_back({waiting.front(), ev.time});
            waiting.pop_front();
            if (!waiting.empty())
                events.schedule(ev.time + service(service_rng), QueueEvent::departure);
        }
    }
    return done;
}

struct AgePoint {
    double time = 0.0;
    double age = 0.0;
};

struct AoiOptions {
    double horizon = 1.25e6;
    std::uint64_t seed = 1;
    double warmup_fraction = 0.1;
    std::size_t batches = 50;        ///< time batches for the batch-means interval
    std::size_t max_path_points = 0; ///< sawtooth vertices to keep (0 keeps none)
};

struct AoiSample {
    std::vector<AgePoint> path;   ///< sawtooth vertices, two per delivery (before, after reset)
    std::vector<double> peak_ages; ///< age just before each delivery in the window
    double violation_fraction = 0.0;
    double mean_age = 0.0;
    double ci_halfwidth = 0.0; ///< 95% batch-means half width of violation_fraction
    std::size_t departures = 0;
    double mean_system_time = 0.0;
    double window_start = 0.0;
    double window_end = 0.0;
};

/// Time-average fraction of [warm-up, horizon] during which the receiver's age
/// exceeds M, for an FCFS M/M/1 queue of status updates.
inline AoiSample simulate_mm1_aoi(const aoi::QueueParams& queue, const AoiOptions& opts)
{
    queue.validate();
    detail::require(opts.warmup_fraction >= 0.0 && opts.warmup_fraction < 1.0,
                    "simulate_mm1_aoi: warm-up fraction must lie in [0, 1)");
    detail::require(opts.batches >= 2, "simulate_mm1_aoi: at least two batches are required");
    const auto updates = simulate_mm1(queue.lambda, queue.mu, opts.horizon, opts.seed);

    AoiSample s;
    s.window_start = opts.warmup_fraction * opts.horizon;
    s.window_end = opts.horizon;
    const double width = s.window_end - s.window_start;
    const double batch_len = width / static_cast<double>(opts.batches);
    std::vector<double> batch_over(opts.batches, 0.0);
    double over = 0.0;
    double age_area = 0.0;
    const double M = queue.threshold_m;

    // Age on [from, to) is t - generated; clip to the window and to batches.
    auto accumulate = [&](double from, double to, double generated) {
        from = std::max(from, s.window_start);
        to = std::min(to, s.window_end);
        if (!(to > from))
            return;
        age_area += 0.5 * ((to - generated) * (to - generated) - (from - generated) * (from - generated));
        const double cross = std::max(from, generated + M);
        if (!(to > cross))
            return;
        over += to - cross;
        auto b = static_cast<std::size_t>((cross - s.window_start) / batch_len);
        double t = cross;
        while (t < to && b < opts.batches) {
            const double edge = std::min(to, s.window_start + batch_len * static_cast<double>(b + 1));
            if (edge > t)
                batch_over[b] += edge - t;
            t = edge;
            ++b;
        }
    };

    double system_sum = 0.0;
    std::size_t system_n = 0;
    for (std::size_t j = 0; j < updates.size(); ++j) {
        const auto& u = updates[j];
        const double next = j + 1 < updates.size() ? updates[j + 1].departure : opts.horizon;
        accumulate(u.departure, next, u.arrival);
        if (u.departure >= s.window_start) {
            ++s.departures;
            if (j > 0)
                s.peak_ages.push_back(u.departure - updates[j - 1].arrival);
            if (s.path.size() + 2 <= opts.max_path_points) {
                s.path.push_back({u.departure, j > 0 ? u.departure - updates[j - 1].arrival : 0.0});
                s.path.push_back({u.departure, u.system_time()});
            }
        }
        if (u.arrival >= s.window_start) {
            system_sum += u.system_time();
            ++system_n;
        }
    }
    // Before the first delivery in the window the age is undefined; warm-up covers it in practice.
    s.violation_fraction = over / width;
    s.mean_age = age_area / width;
    s.mean_system_time = system_n ? system_sum / static_cast<double>(system_n) : 0.0;

    double mean_b = 0.0;
    for (double& v : batch_over) {
        v /= batch_len;
        mean_b += v / static_cast<double>(opts.batches);
    }
    double var_b = 0.0;
    for (double v : batch_over)
        var_b += (v - mean_b) * (v - mean_b) / static_cast<double>(opts.batches - 1);
    s.ci_halfwidth = 1.96 * std::sqrt(var_b / static_cast<double>(opts.batches));
    return s;
}

/// Horizon for roughly `departures` deliveries after warm-up.
inline double horizon_for_departures(double lambda, double departures, double warmup_fraction = 0.1)
{
    return departures / (lambda * (1.0 - warmup_fraction));
}

} // namespace aquaplan::simkit
