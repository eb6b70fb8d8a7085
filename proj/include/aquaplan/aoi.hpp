#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "aquaplan/errors.hpp"
#include "aquaplan/sensing.hpp"

namespace aquaplan::aoi {

inline constexpr double kSingularityGuard = 1e-9;
inline constexpr double kClampTolerance = 1e-12;

struct QueueParams {
    double lambda = 0.8;      ///< arrival rate of status updates
    double mu = 1.0;          ///< service rate
    double threshold_m = 5.0; ///< AoI threshold M

    void validate() const
    {
        detail::require(lambda > 0.0 && std::isfinite(lambda), "queue: lambda must be > 0");
        detail::require(mu > 0.0 && std::isfinite(mu), "queue: mu must be > 0");
        detail::require(threshold_m >= 0.0, "queue: threshold M must be >= 0");
        if (lambda >= mu)
            throw InstabilityError("queue: unstable parameters, lambda (" + std::to_string(lambda) +
                                   ") must be < mu (" + std::to_string(mu) + ")");
        if (std::abs(lambda - mu) <= kSingularityGuard)
            throw SingularityError("queue: lambda is within 1e-9 of mu");
    }
};

namespace internal {

inline double clamp_probability(double p, const char* what)
{
    if (p >= 0.0 && p <= 1.0)
        return p;
    if (p < 0.0 && p >= -kClampTolerance)
        return 0.0;
    if (p > 1.0 && p <= 1.0 + kClampTolerance)
        return 1.0;
    throw InternalError(std::string(what) + ": value " + std::to_string(p) + " escaped [0, 1]");
}

} // namespace internal

/// Stationary Pr{age > M} for an FCFS M/M/1 queue.
inline double aoi_violation(const QueueParams& q)
{
    q.validate();
    const double l = q.lambda;
    const double m = q.mu;
    const double M = q.threshold_m;
    const double ratio = m / (l - m);
    const double p = std::exp(-(m - l) * M) + (ratio - l * M) * std::exp(-m * M) - ratio * std::exp(-l * M);
    return internal::clamp_probability(p, "aoi_violation");
}

/// pi_s = lambda A exp(-lambda A).
inline double status_probability(double lambda, double violation)
{
    detail::require(lambda > 0.0, "status_probability: lambda must be > 0");
    detail::require(violation >= 0.0 && violation <= 1.0, "status_probability: A_i must lie in [0, 1]");
    const double x = lambda * violation;
    return x * std::exp(-x);
}

/// One evaluation of the semantic objective; the CSV evaluation log is a list of these.
struct Evaluation {
    std::string configuration;
    double lambda = 0.0;
    double mu = 0.0;
    double threshold_m = 0.0;
    double violation = 0.0; ///< A_i
    double status = 0.0;    ///< pi_s
    double pr_detect = 0.0; ///< Pr(X = k)
    double r = 0.0;
    std::size_t sequence = 0; ///< logical timestamp, the order of recording
};

/// H = (A, r, X): the sensing configurations X, the violation values A observed
/// for them, and the map r evaluated on (configuration, lambda). Recording is
/// serialised by an internal mutex, so concurrent evaluators may share one space.
class ChuSpace {
public:
    ChuSpace() = default;
    ChuSpace(const ChuSpace&) = delete;
    ChuSpace& operator=(const ChuSpace&) = delete;

    /// Registers a configuration and returns its index in X.
    std::size_t add_configuration(const std::string& label)
    {
        std::lock_guard lock(mutex_);
        return add_configuration_locked(label);
    }

    void record(Evaluation e)
    {
        if (!(e.r >= 0.0 && e.r <= 1.0) || !(e.violation >= 0.0 && e.violation <= 1.0))
            throw InternalError("ChuSpace: r and A_i must lie in [0, 1]");
        std::lock_guard lock(mutex_);
        const std::size_t id = add_configuration_locked(e.configuration);
        e.sequence = log_.size();
        violations_.push_back(e.violation);
        mapping_[{id, e.lambda}] = e.r;
        log_.push_back(std::move(e));
    }

    std::vector<std::string> configurations() const
    {
        std::lock_guard lock(mutex_);
        return configurations_;
    }
    std::vector<double> violations() const
    {
        std::lock_guard lock(mutex_);
        return violations_;
    }
    std::vector<Evaluation> log() const
    {
        std::lock_guard lock(mutex_);
        return log_;
    }
    /// r(configuration, lambda) if it was evaluated.
    std::optional<double> lookup(const std::string& configuration, double lambda) const
    {
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < configurations_.size(); ++i) {
            if (configurations_[i] != configuration)
                continue;
            auto it = mapping_.find({i, lambda});
            if (it != mapping_.end())
                return it->second;
        }
        return std::nullopt;
    }
    std::size_t size() const
    {
        std::lock_guard lock(mutex_);
        return log_.size();
    }

private:
    std::size_t add_configuration_locked(const std::string& label)
    {
        for (std::size_t i = 0; i < configurations_.size(); ++i)
            if (configurations_[i] == label)
                return i;
        configurations_.push_back(label);
        return configurations_.size() - 1;
    }

    mutable std::mutex mutex_;
    std::vector<std::string> configurations_;
    std::vector<double> violations_;
    std::map<std::pair<std::size_t, double>, double> mapping_;
    std::vector<Evaluation> log_;
};

/// The sensing side of r: which sensor index k reports and where it sits.
struct DetectionContext {
    unsigned k = 1;
    double distance_m = 1000.0;
    double boundary_m = 5.0;
    double decay = 0.6;
    sensing::ChannelContext channel{};

    std::string label() const
    {
        return "k=" + std::to_string(k) + ";d=" + std::to_string(distance_m);
    }
    double probability() const
    {
        return sensing::detection_probability(k, distance_m, boundary_m, decay, channel);
    }
};

/// r(lambda) = pi_s(lambda, A_i(lambda)) * Pr(X = k). The queue's own lambda
/// is replaced by the argument; the evaluation is appended to `space` if given.
inline double semantic_objective(double lambda, const QueueParams& queue, const DetectionContext& ctx,
                                 ChuSpace* space = nullptr)
{
    QueueParams q = queue;
    q.lambda = lambda;
    const double violation = aoi_violation(q);
    const double status = status_probability(lambda, violation);
    const double pr = ctx.probability();
    const double r = status * pr;
    if (space) {
        Evaluation e;
        e.configuration = ctx.label();
        e.lambda = lambda;
        e.mu = q.mu;
        e.threshold_m = q.threshold_m;
        e.violation = violation;
        e.status = status;
        e.pr_detect = pr;
        e.r = r;
        space->record(std::move(e));
    }
    return r;
}

} // namespace aquaplan::aoi
