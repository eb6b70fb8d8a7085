#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "aquaplan/errors.hpp"
#include "aquaplan/random.hpp"

namespace aquaplan::surrogate {

using Point = std::vector<double>;

/// Posterior summary at one query.
struct Prediction {
    double mean = 0.0;
    double variance = 0.0;

    double stddev() const { return std::sqrt(std::max(variance, 0.0)); }
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded shuffle of [0, n) cut into train/test index sets.
inline Split train_test_split(std::size_t n, double test_fraction, std::uint64_t seed)
{
    detail::require(test_fraction >= 0.0 && test_fraction < 1.0, "split: test fraction must lie in [0, 1)");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = make_rng(seed, 0x5e11);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    Split s;
    s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    return s;
}

inline void check_training_data(const std::vector<Point>& x, const std::vector<double>& y, const char* who)
{
    if (x.size() != y.size())
        throw DomainError(std::string(who) + ": inputs and values differ in length");
    if (x.empty())
        throw DomainError(std::string(who) + ": at least one training point is required");
    const std::size_t dim = x.front().size();
    if (dim == 0)
        throw DomainError(std::string(who) + ": inputs must have at least one component");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i].size() != dim)
            throw DomainError(std::string(who) + ": inputs have inconsistent dimension");
        for (double v : x[i])
            if (!std::isfinite(v))
                throw DomainError(std::string(who) + ": inputs must be finite");
        if (!std::isfinite(y[i]))
            throw DomainError(std::string(who) + ": values must be finite");
    }
}

} // namespace aquaplan::surrogate
