#include <cmath>
#include <random>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "aquaplan/aoi.hpp"

using namespace aquaplan;
using namespace aquaplan::aoi;

TEST(AoiViolation, ZeroThresholdIsCertain)
{
    EXPECT_NEAR(aoi_violation({0.8, 1.0, 0.0}), 1.0, 1e-12);
    EXPECT_NEAR(aoi_violation({0.3, 0.5, 0.0}), 1.0, 1e-12);
}

TEST(AoiViolation, LargeThresholdVanishes)
{
    EXPECT_LT(aoi_violation({0.8, 1.0, 50.0}), 1e-3);
    EXPECT_NEAR(aoi_violation({0.8, 1.0, 500.0}), 0.0, 1e-12);
}

TEST(AoiViolation, ClosedFormValues)
{
    // 30-digit evaluations of the closed form; the Monte Carlo cross-check
    // lives in the simkit and acceptance suites.
    EXPECT_NEAR(aoi_violation({0.8, 1.0, 5.0}), 0.398816112623344, 1e-13);
    EXPECT_NEAR(aoi_violation({0.8, 1.0, 2.0}), 0.786589766647273, 1e-13);
    EXPECT_NEAR(aoi_violation({0.5, 1.0, 5.0}), 0.215934234375812, 1e-13);
    EXPECT_NEAR(aoi_violation({0.3, 0.5, 10.0}), 0.222744245661302, 1e-13);
}

TEST(AoiViolation, StabilityAndSingularity)
{
    EXPECT_THROW(aoi_violation({1.2, 1.0, 5.0}), InstabilityError);
    EXPECT_THROW(aoi_violation({1.0, 1.0, 5.0}), InstabilityError);
    EXPECT_THROW(aoi_violation({0.0, 1.0, 5.0}), DomainError);
    EXPECT_THROW(aoi_violation({0.5, 1.0, -1.0}), DomainError);
    // lambda < mu but inside the guard band
    EXPECT_THROW(aoi_violation({1.0 - 5e-10, 1.0, 5.0}), SingularityError);
}

TEST(AoiViolation, MonotoneInThreshold)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> mu_d(0.1, 5.0), frac(0.01, 0.98);
    for (int pair = 0; pair < 50; ++pair) {
        const double mu = mu_d(rng);
        const double lambda = frac(rng) * mu;
        double prev = 1.0 + 1e-12;
        for (int i = 0; i < 100; ++i) {
            const double M = 0.5 * i / mu;
            const double a = aoi_violation({lambda, mu, M});
            EXPECT_LE(a, prev + 1e-12) << lambda << " " << mu << " " << M;
            prev = a;
        }
    }
}

TEST(StatusProbability, Values)
{
    EXPECT_EQ(status_probability(0.8, 0.0), 0.0);
    EXPECT_NEAR(status_probability(0.8, 0.398816112623344), 0.231899479237551, 1e-13);
    EXPECT_NEAR(status_probability(2.0, 0.5), std::exp(-1.0), 1e-15);
    EXPECT_THROW(status_probability(0.8, 1.5), DomainError);
    EXPECT_THROW(status_probability(0.0, 0.5), DomainError);
}

TEST(StatusProbability, BoundedByInverseE)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> l(1e-3, 20.0), a(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const double p = status_probability(l(rng), a(rng));
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, std::exp(-1.0) + 1e-16);
    }
}

namespace {

DetectionContext reference_context()
{
    DetectionContext c;
    c.k = 1;
    c.distance_m = 1000.0;
    c.boundary_m = 5.0;
    c.decay = 0.6;
    c.channel.params = {0.0, 1.5, 10.0};
    return c;
}

} // namespace

TEST(SemanticObjective, EndToEnd)
{
    ChuSpace space;
    const double r = semantic_objective(0.8, {0.8, 1.0, 5.0}, reference_context(), &space);
    EXPECT_NEAR(r, 0.00807154920267329, 1e-15);
    ASSERT_EQ(space.size(), 1u);
    const auto e = space.log().front();
    EXPECT_NEAR(e.violation, 0.398816112623344, 1e-13);
    EXPECT_NEAR(e.pr_detect, 0.0348062411748887, 1e-13);
    EXPECT_EQ(space.lookup(reference_context().label(), 0.8), r);
    EXPECT_FALSE(space.lookup(reference_context().label(), 0.7).has_value());
}

TEST(SemanticObjective, Identities)
{
    DetectionContext inside = reference_context();
    inside.distance_m = 2.0;
    const QueueParams q{0.5, 1.0, 5.0};
    EXPECT_EQ(semantic_objective(0.5, q, inside), status_probability(0.5, aoi_violation(q)));

    const QueueParams q0{0.5, 1.0, 0.0};
    const double pr = reference_context().probability();
    EXPECT_NEAR(semantic_objective(0.5, q0, reference_context()), 0.5 * std::exp(-0.5) * pr, 1e-15);
}

TEST(SemanticObjective, RangeProperty)
{
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> frac(0.01, 0.98), M(0.0, 20.0), d(1.0, 3000.0);
    for (int i = 0; i < 2000; ++i) {
        DetectionContext c = reference_context();
        c.distance_m = d(rng);
        const double r = semantic_objective(frac(rng), {0.5, 1.0, M(rng)}, c);
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, std::exp(-1.0));
    }
}

TEST(ChuSpace, ConcurrentRecordingIsComplete)
{
    ChuSpace space;
    std::vector<std::jthread> workers;
    for (int w = 0; w < 4; ++w)
        workers.emplace_back([&space, w] {
            for (int i = 0; i < 250; ++i)
                semantic_objective(0.01 + 0.0009 * (w * 250 + i), {0.5, 1.0, 5.0}, reference_context(), &space);
        });
    workers.clear();
    EXPECT_EQ(space.size(), 1000u);
    EXPECT_EQ(space.configurations().size(), 1u);
    const auto log = space.log();
    for (std::size_t i = 0; i < log.size(); ++i)
        EXPECT_EQ(log[i].sequence, i);
}

TEST(ChuSpace, RejectsOutOfRange)
{
    ChuSpace space;
    Evaluation e;
    e.r = 1.5;
    EXPECT_THROW(space.record(e), InternalError);
}
