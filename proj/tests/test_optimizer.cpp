#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "aquaplan/aoi.hpp"
#include "aquaplan/optimizer.hpp"

using namespace aquaplan;
using namespace aquaplan::optimizer;

namespace {

BoConfig rate_config(std::uint64_t seed)
{
    BoConfig c;
    c.bounds = {{0.05, 0.95, false}};
    c.seed = seed;
    return c;
}

double bowl(double l) { return (l - 0.4) * (l - 0.4); }

bool same_records(const BoTrace& a, const BoTrace& b)
{
    if (a.records.size() != b.records.size())
        return false;
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        const auto& x = a.records[i];
        const auto& y = b.records[i];
        if (x.input != y.input || x.observed != y.observed || x.best != y.best || x.iteration != y.iteration)
            return false;
        if (!(std::isnan(x.threshold) && std::isnan(y.threshold)) && x.threshold != y.threshold)
            return false;
        if (!(std::isnan(x.predicted) && std::isnan(y.predicted)) && x.predicted != y.predicted)
            return false;
    }
    return true;
}

} // namespace

TEST(Bo, BowlMinimum)
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto tr = optimize_rate(bowl, 1.0, rate_config(seed));
        ASSERT_FALSE(tr.aborted) << tr.error;
        EXPECT_NEAR(tr.best_input[0], 0.4, 0.05);
        EXPECT_EQ(tr.evaluations(), 50u);
    }
}

TEST(Bo, LoopAccounting)
{
    auto c = rate_config(3);
    c.iters = 1;
    c.n_init = 1;
    EXPECT_EQ(optimize_rate(bowl, 1.0, c).evaluations(), 2u);
}

TEST(Bo, Deterministic)
{
    const auto a = optimize_rate(bowl, 1.0, rate_config(9));
    const auto b = optimize_rate(bowl, 1.0, rate_config(9));
    EXPECT_TRUE(same_records(a, b));
    const auto c = optimize_rate(bowl, 1.0, rate_config(10));
    EXPECT_FALSE(same_records(a, c));
}

TEST(Bo, AeiWithZeroOmegaIsEi)
{
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto e = rate_config(seed);
        e.acquisition = AcquisitionKind::ei;
        auto a = rate_config(seed);
        a.acquisition = AcquisitionKind::aei;
        a.omega = 0.0;
        EXPECT_TRUE(same_records(optimize_rate(bowl, 1.0, e), optimize_rate(bowl, 1.0, a)));
    }
}

TEST(Bo, BestSoFarMonotoneAndInputsInBounds)
{
    PlacementField field;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        BoConfig c;
        c.seed = seed;
        c.iters = 15;
        const auto place = optimize_placement(field, c);
        for (std::size_t i = 1; i < place.records.size(); ++i)
            EXPECT_GE(place.records[i].best, place.records[i - 1].best);
        for (const auto& r : place.records) {
            EXPECT_GE(r.input[0], 1.0);
            EXPECT_LE(r.input[0], 50.0);
            EXPECT_EQ(r.input[0], std::round(r.input[0]));
            EXPECT_GE(r.input[1], 1.0);
            EXPECT_LE(r.input[1], 10.0);
        }
        const auto rate = optimize_rate(bowl, 1.0, rate_config(seed));
        for (std::size_t i = 1; i < rate.records.size(); ++i)
            EXPECT_LE(rate.records[i].best, rate.records[i - 1].best);
    }
}

TEST(Bo, IntegerDimensionIsUniform)
{
    const Dimension d{1.0, 4.0, true};
    auto rng = make_rng(5, 0);
    std::array<int, 4> hist{};
    for (int i = 0; i < 40000; ++i)
        ++hist[static_cast<std::size_t>(d.sample(rng)) - 1];
    for (int h : hist)
        EXPECT_NEAR(h / 40000.0, 0.25, 0.01);
}

TEST(Bo, DegenerateBoundsReturnThePoint)
{
    BoConfig c;
    c.bounds = {{3.0, 3.0, true}, {2.5, 2.5, false}};
    c.iters = 3;
    const auto tr = bayes_optimize([](const Point& x) { return x[0] + x[1]; }, c, Sense::maximize);
    ASSERT_FALSE(tr.aborted) << tr.error;
    EXPECT_EQ(tr.best_input, (Point{3.0, 2.5}));
    EXPECT_EQ(tr.best_value, 5.5);
}

TEST(Bo, ObjectiveErrorKeepsPartialTrace)
{
    int calls = 0;
    auto c = rate_config(2);
    const auto tr = optimize_rate(
        [&](double l) {
            if (++calls == 13)
                throw std::runtime_error("sensor offline");
            return bowl(l);
        },
        1.0, c);
    EXPECT_TRUE(tr.aborted);
    EXPECT_EQ(tr.evaluations(), 12u);
    EXPECT_NE(tr.error.find("sensor offline"), std::string::npos);
}

TEST(Bo, ConfigErrors)
{
    auto c = rate_config(1);
    c.bounds = {{0.0, 0.95, false}};
    EXPECT_THROW(optimize_rate(bowl, 1.0, c), DomainError);
    c.bounds = {{0.1, 0.995, false}};
    EXPECT_THROW(optimize_rate(bowl, 1.0, c), DomainError);
    c = rate_config(1);
    c.batch = 0;
    EXPECT_THROW(optimize_rate(bowl, 1.0, c), DomainError);
    c = rate_config(1);
    c.bounds = {{0.6, 0.5, false}};
    EXPECT_THROW(optimize_rate(bowl, 1.0, c), DomainError);
    c = rate_config(1);
    c.surrogate = SurrogateKind::mlp;
    c.n_init = 5;
    EXPECT_THROW(optimize_rate(bowl, 1.0, c), DomainError);
    EXPECT_THROW(parse_surrogate("svm"), DomainError);
    EXPECT_THROW(parse_acquisition("ucb"), DomainError);
}

TEST(Bo, OracleSurrogateOnlyRegressesWhenBatchHasNothingBetter)
{
    // Surrogate == true objective with zero spread; record every scored batch.
    auto f = [](const Point& x) { return std::sin(7.0 * x[0]) + x[0]; };
    std::vector<std::vector<double>> batches;
    Fitter oracle = [&](const std::vector<Point>&, const std::vector<double>&, std::size_t) -> Predictor {
        batches.emplace_back();
        return [&](std::span<const double> q) {
            const double v = f(Point{q[0]});
            batches.back().push_back(v);
            return Prediction{v, 0.0};
        };
    };
    BoConfig c;
    c.bounds = {{0.0, 1.0, false}};
    c.acquisition = AcquisitionKind::ei;
    c.seed = 4;
    c.batch = 20;
    const auto tr = bayes_optimize(f, c, Sense::minimize, oracle);
    ASSERT_EQ(batches.size(), c.iters);
    for (std::size_t t = 0; t < c.iters; ++t) {
        const auto& rec = tr.records[c.n_init + t];
        const double before = tr.records[c.n_init + t - 1].best;
        if (rec.observed > before) {
            for (double v : batches[t])
                EXPECT_GE(v, before);
        } else {
            EXPECT_EQ(rec.observed, *std::min_element(batches[t].begin(), batches[t].end()));
        }
    }
}

TEST(Bo, MlpSurrogateRuns)
{
    auto c = rate_config(1);
    c.surrogate = SurrogateKind::mlp;
    c.iters = 5;
    c.mlp_epochs = 50;
    const auto tr = optimize_rate(bowl, 1.0, c);
    ASSERT_FALSE(tr.aborted) << tr.error;
    EXPECT_EQ(tr.evaluations(), 15u);
}

TEST(Bo, DriftModeReevaluatesIncumbent)
{
    auto c = rate_config(1);
    c.drift = true;
    c.iters = 10;
    int calls = 0;
    // The objective shifts after 14 evaluations, so the period-10 check sees a changed incumbent.
    const auto tr = optimize_rate(
        [&](double l) {
            ++calls;
            return bowl(l) + (calls > 14 ? 0.5 : 0.0);
        },
        1.0, c);
    std::size_t re = 0;
    for (const auto& r : tr.records)
        re += r.reevaluation;
    EXPECT_EQ(re, 2u);
    EXPECT_EQ(tr.evaluations(), 22u);
}

TEST(Placement, StaysNearGridOptimum)
{
    PlacementField field;
    double grid_best = 0.0;
    for (std::size_t k = 1; k <= 50; ++k)
        for (int j = 0; j < 50; ++j)
            grid_best = std::max(grid_best, field.expectation(k, 1.0 + 9.0 * j / 49.0));
    BoConfig c;
    c.seed = 1;
    const auto tr = optimize_placement(field, c);
    ASSERT_FALSE(tr.aborted);
    EXPECT_GE(tr.best_value, 0.9 * grid_best);
    EXPECT_NEAR(field.expectation(static_cast<std::size_t>(tr.best_input[0]), tr.best_input[1]), tr.best_value,
                1e-12);
}

TEST(Placement, ConstraintViolationRejected)
{
    PlacementField field;
    field.wakeup.gamma_wake = 0.95;
    field.wakeup.gamma_cap = 0.9;
    EXPECT_THROW(optimize_placement(field, BoConfig{}), ConstraintError);
}

TEST(Compare, SeedsAreIndependent)
{
    auto base = rate_config(0);
    base.iters = 5;
    base.mlp_epochs = 30;
    const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    const std::vector<std::uint64_t> perm{5, 3, 1, 4, 2};
    const auto a = compare_acquisitions(bowl, 1.0, base, seeds, 1);
    const auto b = compare_acquisitions(bowl, 1.0, base, perm, 2);
    ASSERT_EQ(a.rows.size(), 15u);
    for (const auto& ra : a.rows) {
        const auto it = std::find_if(b.rows.begin(), b.rows.end(),
                                     [&](const ComparisonRow& rb) { return rb.seed == ra.seed && rb.method == ra.method; });
        ASSERT_NE(it, b.rows.end());
        EXPECT_EQ(it->final_best, ra.final_best);
        EXPECT_EQ(it->iterations_to_threshold, ra.iterations_to_threshold);
        EXPECT_EQ(it->best_input, ra.best_input);
    }
    EXPECT_THROW(compare_acquisitions(bowl, 1.0, base, {1, 2, 3, 4}), DomainError);
}

TEST(Compare, IterationsToWithin)
{
    BoTrace t;
    t.sense = Sense::minimize;
    for (std::size_t i = 0; i < 5; ++i) {
        TraceRecord r;
        r.iteration = i;
        r.best = 10.0 - static_cast<double>(i);
        t.records.push_back(r);
    }
    t.records.back().best = 6.0;
    EXPECT_EQ(iterations_to_within(t, 0.01), 4u);
    EXPECT_EQ(iterations_to_within(t, 0.2), 3u);
}
