#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aquaplan/acquisition.hpp"
#include "aquaplan/errors.hpp"
#include "aquaplan/parallel.hpp"
#include "aquaplan/random.hpp"
#include "aquaplan/sensing.hpp"
#include "aquaplan/surrogate/gp.hpp"
#include "aquaplan/surrogate/mlp.hpp"

namespace aquaplan::optimizer {

using surrogate::Point;
using surrogate::Prediction;

enum class SurrogateKind { gp, mlp };
enum class AcquisitionKind { ei, aei };
enum class Sense { minimize, maximize };

inline SurrogateKind parse_surrogate(std::string_view s)
{
    if (s == "gp")
        return SurrogateKind::gp;
    if (s == "mlp")
        return SurrogateKind::mlp;
    throw DomainError("surrogate must be 'gp' or 'mlp', got '" + std::string(s) + "'");
}

inline AcquisitionKind parse_acquisition(std::string_view s)
{
    if (s == "ei")
        return AcquisitionKind::ei;
    if (s == "aei")
        return AcquisitionKind::aei;
    throw DomainError("acquisition must be 'ei' or 'aei', got '" + std::string(s) + "'");
}

inline std::string_view to_string(SurrogateKind k) { return k == SurrogateKind::gp ? "gp" : "mlp"; }
inline std::string_view to_string(AcquisitionKind k) { return k == AcquisitionKind::ei ? "ei" : "aei"; }

/// One search dimension. Integer dimensions are sampled through a continuous
/// latent in (lower - 0.5, upper + 0.5], rounded with ties going down, so every
/// integer in range is equally likely.
struct Dimension {
    double lower = 0.0;
    double upper = 1.0;
    bool integer = false;

    double sample(Rng& rng) const
    {
        if (!integer)
            return uniform(rng, lower, upper);
        const double latent = uniform(rng, lower - 0.5, upper + 0.5);
        return std::clamp(std::ceil(latent - 0.5), lower, upper);
    }

    double normalize(double v) const { return upper > lower ? (v - lower) / (upper - lower) : 0.0; }
};

struct BoConfig {
    std::size_t n_init = 10;
    std::size_t batch = 100;
    std::size_t iters = 40;
    std::vector<Dimension> bounds;
    std::uint64_t seed = 1;
    SurrogateKind surrogate = SurrogateKind::gp;
    AcquisitionKind acquisition = AcquisitionKind::aei;
    double omega = 0.1;
    double gate_ratio = 0.05;
    double noise_ratio = 1e-6; ///< GP noise variance relative to the target variance
    std::size_t mlp_epochs = 200;
    bool drift = false;
    std::size_t drift_period = 5;
    double drift_tolerance = 0.05;

    void validate() const
    {
        detail::require(n_init >= 1, "bo: n_init must be >= 1");
        detail::require(batch >= 1, "bo: batch must be >= 1");
        detail::require(iters >= 1, "bo: iters must be >= 1");
        detail::require(!bounds.empty(), "bo: bounds must be nonempty");
        for (const auto& d : bounds)
            detail::require(std::isfinite(d.lower) && std::isfinite(d.upper) && d.lower <= d.upper,
                            "bo: every dimension needs finite lower <= upper");
        detail::require(omega >= 0.0, "bo: omega must be >= 0");
        detail::require(gate_ratio >= 0.0, "bo: gate ratio must be >= 0");
        detail::require(noise_ratio > 0.0, "bo: noise ratio must be > 0");
        detail::require(!drift || drift_period >= 1, "bo: drift period must be >= 1");
        if (surrogate == SurrogateKind::mlp)
            detail::require(n_init >= surrogate::kMlpMinPoints, "bo: the mlp surrogate needs n_init >= 8");
    }
};

struct TraceRecord {
    std::size_t iteration = 0; ///< 0 for the initial design
    Point input;
    double observed = 0.0;
    double best = 0.0;                                          ///< best-so-far after this evaluation
    double threshold = std::numeric_limits<double>::quiet_NaN(); ///< c or c_t used to pick this point
    double predicted = std::numeric_limits<double>::quiet_NaN(); ///< surrogate mean at the point
    bool reevaluation = false;                                   ///< drift-mode incumbent check
};

/// Threshold trajectory entry (t, c_t, delta_t).
struct ThresholdPoint {
    std::size_t iteration = 0;
    double threshold = 0.0;
    double discrepancy = 0.0;
    bool recalibrated = false;
};

struct BoTrace {
    Sense sense = Sense::minimize;
    std::vector<TraceRecord> records;
    std::vector<ThresholdPoint> thresholds;
    Point best_input;
    double best_value = std::numeric_limits<double>::quiet_NaN();
    double next_threshold = std::numeric_limits<double>::quiet_NaN(); ///< c or c_t a further iteration would use
    bool aborted = false;
    std::string error;

    std::size_t evaluations() const { return records.size(); }
};

using Objective = std::function<double(const Point&)>;
using Predictor = std::function<Prediction(std::span<const double>)>;
/// Fits a surrogate on normalised inputs and minimisation-form targets.
using Fitter = std::function<Predictor(const std::vector<Point>&, const std::vector<double>&, std::size_t iteration)>;

inline Fitter make_fitter(const BoConfig& cfg)
{
    if (cfg.surrogate == SurrogateKind::gp) {
        const double ratio = cfg.noise_ratio;
        return [ratio](const std::vector<Point>& x, const std::vector<double>& y, std::size_t) -> Predictor {
            double mean = 0.0;
            for (double v : y)
                mean += v / static_cast<double>(y.size());
            double var = 0.0;
            for (double v : y)
                var += (v - mean) * (v - mean);
            var = y.size() > 1 ? var / static_cast<double>(y.size() - 1) : 0.0;
            auto model = std::make_shared<const surrogate::GpModel>(
                surrogate::gp_fit(x, y, {}, ratio * (var > 0.0 ? var : 1.0)));
            return [model](std::span<const double> q) { return model->predict(q); };
        };
    }
    surrogate::MlpConfig mc;
    mc.epochs = cfg.mlp_epochs;
    const std::uint64_t seed = cfg.seed;
    return [mc, seed](const std::vector<Point>& x, const std::vector<double>& y, std::size_t iteration) -> Predictor {
        surrogate::MlpConfig c = mc;
        c.seed = seed * 1000003ull + iteration;
        auto model = std::make_shared<const surrogate::MlpSurrogate>(surrogate::MlpSurrogate::fit(x, y, c));
        return [model](std::span<const double> q) { return model->predict(q); };
    };
}

inline Point normalize(const std::vector<Dimension>& bounds, const Point& x)
{
    Point out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = bounds[i].normalize(x[i]);
    return out;
}

/// Sequential Bayesian optimisation: seeded uniform initial design, then per
/// iteration fit the surrogate, score `batch` fresh uniform candidates with
/// EI or AEI, evaluate the best-scoring one (ties: lowest index) and feed the
/// (predicted, actual) pair back into the adaptive threshold.
inline BoTrace bayes_optimize(const Objective& objective, const BoConfig& cfg, Sense sense, const Fitter& fitter)
{
    cfg.validate();
    const double sign = sense == Sense::minimize ? 1.0 : -1.0;
    auto rng = make_rng(cfg.seed, 1);

    BoTrace trace;
    trace.sense = sense;
    std::vector<Point> xs_norm;
    std::vector<double> ys; // minimisation form
    double best = std::numeric_limits<double>::infinity();
    double incumbent = best;
    Point incumbent_x;

    auto sample = [&] {
        Point x(cfg.bounds.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] = cfg.bounds[i].sample(rng);
        return x;
    };
    // Returns false when the objective threw; the partial trace is kept.
    auto evaluate = [&](const Point& x, double& out) {
        try {
            out = objective(x);
            if (!std::isfinite(out))
                throw DomainError("objective returned a non-finite value");
        } catch (const std::exception& e) {
            trace.aborted = true;
            trace.error = e.what();
            return false;
        }
        return true;
    };
    auto observe = [&](TraceRecord rec) {
        const double yi = sign * rec.observed;
        xs_norm.push_back(normalize(cfg.bounds, rec.input));
        ys.push_back(yi);
        if (yi < best) {
            best = yi;
            trace.best_input = rec.input;
            trace.best_value = rec.observed;
        }
        if (yi < incumbent) {
            incumbent = yi;
            incumbent_x = rec.input;
        }
        rec.best = sign * best;
        trace.records.push_back(std::move(rec));
    };

    for (std::size_t i = 0; i < cfg.n_init; ++i) {
        TraceRecord rec;
        rec.input = sample();
        if (!evaluate(rec.input, rec.observed))
            return trace;
        observe(std::move(rec));
    }

    const double omega = cfg.acquisition == AcquisitionKind::aei ? cfg.omega : 0.0;
    auto state = acquisition::AcquisitionState::initial(incumbent, omega, cfg.gate_ratio);

    for (std::size_t t = 1; t <= cfg.iters; ++t) {
        Predictor predict;
        try {
            predict = fitter(xs_norm, ys, t);
        } catch (const std::exception& e) {
            trace.aborted = true;
            trace.error = std::string("surrogate fit failed: ") + e.what();
            return trace;
        }
        state.baseline = incumbent;
        const double c = cfg.acquisition == AcquisitionKind::ei ? incumbent : state.threshold();

        Point chosen;
        double chosen_score = -1.0;
        double chosen_mean = 0.0;
        for (std::size_t j = 0; j < cfg.batch; ++j) {
            Point cand = sample();
            const Prediction p = predict(normalize(cfg.bounds, cand));
            const double score = acquisition::ei(p.mean, p.stddev(), c);
            if (score > chosen_score) {
                chosen_score = score;
                chosen = std::move(cand);
                chosen_mean = p.mean;
            }
        }

        TraceRecord rec;
        rec.iteration = t;
        rec.input = chosen;
        rec.threshold = sign * c;
        rec.predicted = sign * chosen_mean;
        if (!evaluate(chosen, rec.observed))
            return trace;
        const double actual = sign * rec.observed;
        state = acquisition::recalibrate(std::move(state), chosen_mean, actual);
        trace.thresholds.push_back({t, sign * c, state.history.back().discrepancy, state.history.back().applied});
        observe(std::move(rec));

        if (cfg.drift && t % cfg.drift_period == 0) {
            TraceRecord re;
            re.iteration = t;
            re.input = incumbent_x;
            re.reevaluation = true;
            if (!evaluate(re.input, re.observed))
                return trace;
            const double fresh = sign * re.observed;
            const double previous = incumbent;
            observe(std::move(re));
            if (std::abs(fresh - previous) > cfg.drift_tolerance * std::abs(previous)) {
                incumbent = fresh;
                state.drift = 0.0;
            }
        }
    }
    state.baseline = incumbent;
    trace.next_threshold = sign * (cfg.acquisition == AcquisitionKind::ei ? incumbent : state.threshold());
    return trace;
}

inline BoTrace bayes_optimize(const Objective& objective, const BoConfig& cfg, Sense sense)
{
    return bayes_optimize(objective, cfg, sense, make_fitter(cfg));
}

/// lambda* = argmin r(lambda) over a box inside (0, mu - 0.01 mu).
inline BoTrace optimize_rate(const std::function<double(double)>& rate_objective, double mu, BoConfig cfg)
{
    detail::require(mu > 0.0, "optimize_rate: mu must be > 0");
    detail::require(cfg.bounds.size() == 1, "optimize_rate: exactly one bound (lambda) is required");
    const double guard = 0.01 * mu;
    const auto& b = cfg.bounds.front();
    detail::require(b.lower > 0.0 && b.upper < mu - guard,
                    "optimize_rate: lambda bounds must lie inside (0, mu - 0.01 mu)");
    cfg.bounds.front().integer = false;
    return bayes_optimize([&](const Point& x) { return rate_objective(x.front()); }, cfg, Sense::minimize);
}

/// Sensor field searched by the placement loop: a line of K sensors at
/// spacing d (sensor k at k * d from the point of interest).
struct PlacementField {
    sensing::WakeupParams wakeup{};
    sensing::ChannelContext channel{};
    double boundary_m = 5.0;
    double efficiency = sensing::kDefaultEfficiency;
    std::size_t k_min = 1;
    std::size_t k_max = 50;
    double spacing_min = 1.0;
    double spacing_max = 10.0;

    sensing::SensorLayout layout(std::size_t count, double spacing) const
    {
        return sensing::SensorLayout::stepped(count, spacing, boundary_m, efficiency);
    }

    double expectation(std::size_t count, double spacing) const
    {
        return sensing::wakeup_expectation(layout(count, spacing), wakeup, channel);
    }

    std::vector<Dimension> bounds() const
    {
        return {{static_cast<double>(k_min), static_cast<double>(k_max), true}, {spacing_min, spacing_max, false}};
    }

    void validate() const
    {
        wakeup.validate();
        wakeup.check_constraint();
        detail::require(k_min >= 1 && k_min <= k_max, "placement: need 1 <= k_min <= k_max");
        detail::require(spacing_min > 0.0 && spacing_min <= spacing_max, "placement: need 0 < spacing_min <= spacing_max");
    }
};

/// X* = argmax E(X) over (K, d). The config's bounds are replaced by the field's.
inline BoTrace optimize_placement(const PlacementField& field, BoConfig cfg)
{
    field.validate();
    cfg.bounds = field.bounds();
    return bayes_optimize(
        [&](const Point& x) { return field.expectation(static_cast<std::size_t>(x[0]), x[1]); }, cfg,
        Sense::maximize);
}

/// First iteration whose best-so-far lies within `rel` of the trace's final best.
inline std::size_t iterations_to_within(const BoTrace& trace, double rel = 0.01)
{
    if (trace.records.empty())
        throw DomainError("iterations_to_within: empty trace");
    const double final_best = trace.records.back().best;
    const double tol = rel * std::abs(final_best);
    for (const auto& r : trace.records) {
        const double gap = trace.sense == Sense::minimize ? r.best - final_best : final_best - r.best;
        if (gap <= tol)
            return r.iteration;
    }
    return trace.records.back().iteration;
}

struct ComparisonRow {
    std::uint64_t seed = 0;
    std::string method;
    std::size_t iterations_to_threshold = 0;
    double final_best = 0.0;
    Point best_input;
    std::size_t evaluations = 0;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    /// traces[seed index][method index], methods in `methods` order.
    std::vector<std::vector<BoTrace>> traces;
    std::vector<std::string> methods;
};

/// EI vs AEI vs AEI with the MLP surrogate, one independent run per seed.
inline Comparison compare_acquisitions(const std::function<double(double)>& rate_objective, double mu,
                                       const BoConfig& base, const std::vector<std::uint64_t>& seeds,
                                       unsigned threads = 1)
{
    detail::require(seeds.size() >= 5, "compare_acquisitions: at least 5 seeds are required");
    struct Method {
        std::string name;
        AcquisitionKind acq;
        SurrogateKind sur;
    };
    const std::vector<Method> methods{{"ei", AcquisitionKind::ei, SurrogateKind::gp},
                                      {"aei", AcquisitionKind::aei, SurrogateKind::gp},
                                      {"aei_mlp", AcquisitionKind::aei, SurrogateKind::mlp}};
    Comparison out;
    for (const auto& m : methods)
        out.methods.push_back(m.name);

    out.traces = parallel_map(seeds.size(), threads, [&](std::size_t i) {
        std::vector<BoTrace> per;
        for (const auto& m : methods) {
            BoConfig cfg = base;
            cfg.seed = seeds[i];
            cfg.acquisition = m.acq;
            cfg.surrogate = m.sur;
            per.push_back(optimize_rate(rate_objective, mu, cfg));
        }
        return per;
    });
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        for (std::size_t k = 0; k < methods.size(); ++k) {
            const auto& tr = out.traces[i][k];
            if (tr.aborted)
                throw Error("compare_acquisitions: run aborted: " + tr.error);
            out.rows.push_back({seeds[i], methods[k].name, iterations_to_within(tr), tr.records.back().best,
                                tr.best_input, tr.evaluations()});
        }
    }
    return out;
}

} // namespace aquaplan::optimizer
