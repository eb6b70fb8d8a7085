#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "aquaplan/acquisition.hpp"

using namespace aquaplan;
using namespace aquaplan::acquisition;

TEST(Ei, DegenerateStd)
{
    EXPECT_EQ(ei(1.0, 0.0, 1.0), 0.0);
    EXPECT_EQ(ei(1.5, 0.0, 1.0), 0.0);
    EXPECT_NEAR(ei(0.7, 0.0, 1.0), 0.3, 1e-15);
}

TEST(Ei, AtThreshold)
{
    EXPECT_NEAR(ei(2.0, 1.0, 2.0), 0.398942280401433, 1e-14);
}

TEST(Ei, Errors)
{
    EXPECT_THROW(ei(NAN, 1.0, 0.0), DomainError);
    EXPECT_THROW(ei(0.0, INFINITY, 0.0), DomainError);
    EXPECT_THROW(ei(0.0, -1.0, 0.0), DomainError);
}

TEST(Ei, MatchesMonteCarlo)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> mean(-2.0, 2.0), sd(0.05, 2.0), c(-2.0, 2.0);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 20; ++trial) {
        const double m = mean(rng), s = sd(rng), t = c(rng);
        double acc = 0.0;
        constexpr int n = 1'000'000;
        for (int i = 0; i < n; ++i)
            acc += std::max(t - (m + s * z(rng)), 0.0);
        EXPECT_NEAR(ei(m, s, t), acc / n, 3e-3) << m << " " << s << " " << t;
    }
}

TEST(Ei, Monotone)
{
    for (double m = -1.0; m <= 1.0; m += 0.25) {
        double prev_c = -1.0;
        for (double c = -2.0; c <= 2.0; c += 0.05) {
            const double v = ei(m, 0.3, c);
            EXPECT_GE(v, 0.0);
            EXPECT_GE(v, prev_c);
            prev_c = v;
        }
        if (m <= 0.5) {
            double prev_s = -1.0;
            for (double s = 0.0; s <= 3.0; s += 0.05) {
                const double v = ei(m, s, 0.5);
                EXPECT_GE(v, prev_s);
                prev_s = v;
            }
        }
    }
}

TEST(Aei, ReducesToEi)
{
    const auto st = AcquisitionState::initial(0.4);
    for (double m : {-0.2, 0.1, 0.4, 0.9})
        for (double s : {0.0, 0.1, 1.0})
            EXPECT_EQ(aei(m, s, st), ei(m, s, 0.4));
    EXPECT_NEAR(aei(0.4, 1.0, st), 0.398942280401433, 1e-14);
}

TEST(Aei, RaisedThresholdDominates)
{
    auto st = AcquisitionState::initial(0.4, 0.5, 0.0);
    const auto raised = recalibrate(st, 0.1, 0.6);
    ASSERT_GT(raised.threshold(), st.threshold());
    for (double m = -1.0; m <= 1.0; m += 0.1)
        for (double s : {0.0, 0.05, 0.5})
            EXPECT_GE(aei(m, s, raised), ei(m, s, st.threshold()));
}

TEST(Recalibrate, Substitution)
{
    auto st = AcquisitionState::initial(0.5, 0.1, 0.0);
    st = recalibrate(st, 0.3, 0.5);
    EXPECT_NEAR(st.threshold(), 0.52, 1e-15);
    ASSERT_EQ(st.history.size(), 1u);
    EXPECT_NEAR(st.history[0].discrepancy, 0.2, 1e-15);
    EXPECT_TRUE(st.history[0].applied);
}

TEST(Recalibrate, ZeroOmega)
{
    auto st = AcquisitionState::initial(0.5, 0.0, 0.0);
    for (int i = 0; i < 10; ++i)
        st = recalibrate(st, 0.1 * i, -0.3 * i);
    EXPECT_EQ(st.threshold(), 0.5);
    EXPECT_EQ(st.history.size(), 10u);
}

TEST(Recalibrate, GateHoldsThreshold)
{
    auto st = AcquisitionState::initial(1.0, 0.1); // gate 0.05
    st = recalibrate(st, 1.0, 1.04);
    EXPECT_EQ(st.threshold(), 1.0);
    EXPECT_EQ(st.history.size(), 1u);
    EXPECT_FALSE(st.history[0].applied);
    EXPECT_THROW(recalibrate(st, NAN, 0.0), DomainError);
}

TEST(Recalibrate, ThresholdSequenceNondecreasing)
{
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n;
    auto st = AcquisitionState::initial(0.2, 0.3, 0.01);
    double prev = st.threshold();
    for (int i = 0; i < 500; ++i) {
        st = recalibrate(st, n(rng), n(rng));
        EXPECT_GE(st.threshold(), prev);
        prev = st.threshold();
    }
}
