#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "aquaplan/errors.hpp"
#include "aquaplan/surrogate/common.hpp"

namespace aquaplan::surrogate {

/// k(a, b) = s^2 exp(-|a - b|^2 / (2 l^2))
struct SquaredExponential {
    double length_scale = 1.0;
    double signal_variance = 1.0;

    double operator()(std::span<const double> a, std::span<const double> b) const
    {
        double d2 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            d2 += d * d;
        }
        return signal_variance * std::exp(-0.5 * d2 / (length_scale * length_scale));
    }
};

/// Unset fields are chosen from the data: the signal variance is the sample
/// variance of the targets, the length scale maximises the log marginal
/// likelihood over `length_scale_grid()`.
struct KernelConfig {
    std::optional<double> length_scale;
    std::optional<double> signal_variance;
};

/// 20 log-spaced length scales in [0.01, 10].
inline std::vector<double> length_scale_grid()
{
    std::vector<double> g(20);
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = std::pow(10.0, -2.0 + 3.0 * static_cast<double>(i) / 19.0);
    return g;
}

inline constexpr double kInitialJitter = 1e-8;
inline constexpr double kMaxJitter = 1e-4;

/// Exact GP regression with a constant mean equal to the target average.
/// Immutable once fitted; predictions may be taken concurrently.
class GpModel {
public:
    GpModel() = default;

    static GpModel fit(std::vector<Point> x, std::vector<double> y, const KernelConfig& config, double noise_var)
    {
        check_training_data(x, y, "gp_fit");
        if (!(noise_var >= 0.0) || !std::isfinite(noise_var))
            throw DomainError("gp_fit: noise variance must be >= 0");

        // Canonical (sorted) order makes the fit independent of input order, bit for bit.
        std::vector<std::size_t> order(x.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
        });
        GpModel m;
        m.noise_var_ = noise_var;
        for (std::size_t i : order) {
            m.train_x_.push_back(std::move(x[i]));
            m.train_y_.push_back(y[i]);
        }
        if (noise_var == 0.0)
            for (std::size_t i = 1; i < m.train_x_.size(); ++i)
                if (m.train_x_[i] == m.train_x_[i - 1])
                    throw FitError("gp_fit: duplicate inputs require a positive noise variance");

        const auto n = static_cast<double>(m.train_y_.size());
        m.mean_ = std::accumulate(m.train_y_.begin(), m.train_y_.end(), 0.0) / n;

        double signal = 1.0;
        if (config.signal_variance) {
            signal = *config.signal_variance;
            if (!(signal > 0.0))
                throw DomainError("gp_fit: signal variance must be > 0");
        } else if (m.train_y_.size() > 1) {
            double ss = 0.0;
            for (double v : m.train_y_)
                ss += (v - m.mean_) * (v - m.mean_);
            const double var = ss / (n - 1.0);
            if (var > 0.0)
                signal = var;
        }

        std::vector<double> candidates =
            config.length_scale ? std::vector<double>{*config.length_scale} : length_scale_grid();
        for (double l : candidates)
            if (!(l > 0.0))
                throw DomainError("gp_fit: length scale must be > 0");

        bool any = false;
        GpModel best;
        for (double l : candidates) {
            GpModel trial = m;
            trial.kernel_ = {l, signal};
            if (!trial.factorize())
                continue;
            // A length scale that needs no jitter beats any that does.
            const bool cleaner = any && trial.jitter_ == 0.0 && best.jitter_ > 0.0;
            const bool dirtier = any && trial.jitter_ > 0.0 && best.jitter_ == 0.0;
            if (!any || cleaner || (!dirtier && trial.lml_ > best.lml_)) {
                best = std::move(trial);
                any = true;
            }
        }
        if (!any)
            throw FitError("gp_fit: kernel matrix is not positive definite even with jitter 1e-4");
        return best;
    }

    bool fitted() const { return fitted_; }

    Prediction predict(std::span<const double> query) const
    {
        if (!fitted_)
            throw StateError("gp_predict: model has not been fitted");
        if (query.size() != train_x_.front().size())
            throw DomainError("gp_predict: query dimension does not match the training inputs");
        const Eigen::Index n = static_cast<Eigen::Index>(train_x_.size());
        Eigen::VectorXd ks(n);
        for (Eigen::Index i = 0; i < n; ++i)
            ks(i) = kernel_(train_x_[static_cast<std::size_t>(i)], query);
        const double mean = mean_ + ks.dot(alpha_);
        const Eigen::VectorXd v = llt_.matrixL().solve(ks);
        const double latent = kernel_.signal_variance - v.squaredNorm();
        return {mean, std::max(latent, 0.0) + noise_var_};
    }

    const SquaredExponential& kernel() const { return kernel_; }
    double noise_var() const { return noise_var_; }
    double jitter() const { return jitter_; }
    double log_marginal_likelihood() const { return lml_; }
    double mean_offset() const { return mean_; }
    const std::vector<Point>& train_x() const { return train_x_; }
    const std::vector<double>& train_y() const { return train_y_; }

    nlohmann::json to_json() const
    {
        if (!fitted_)
            throw StateError("gp: cannot serialise an unfitted model");
        return {{"format", "aquaplan.gp"},
                {"version", 1},
                {"kernel", {{"type", "squared_exponential"},
                            {"length_scale", kernel_.length_scale},
                            {"signal_variance", kernel_.signal_variance}}},
                {"noise_var", noise_var_},
                {"train_x", train_x_},
                {"train_y", train_y_}};
    }

    static GpModel from_json(const nlohmann::json& j)
    {
        if (j.value("format", "") != "aquaplan.gp" || j.value("version", 0) != 1)
            throw DomainError("gp: unsupported snapshot format");
        KernelConfig kc{j.at("kernel").at("length_scale").get<double>(),
                        j.at("kernel").at("signal_variance").get<double>()};
        return fit(j.at("train_x").get<std::vector<Point>>(), j.at("train_y").get<std::vector<double>>(), kc,
                   j.at("noise_var").get<double>());
    }

private:
    bool factorize()
    {
        const Eigen::Index n = static_cast<Eigen::Index>(train_x_.size());
        Eigen::MatrixXd k(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j <= i; ++j)
                k(i, j) = k(j, i) = kernel_(train_x_[static_cast<std::size_t>(i)], train_x_[static_cast<std::size_t>(j)]);
        k.diagonal().array() += noise_var_;

        jitter_ = 0.0;
        llt_.compute(k);
        // Jitter is relative to the signal variance.
        for (double j = kInitialJitter; llt_.info() != Eigen::Success && j <= kMaxJitter * 1.0000001; j *= 10.0) {
            jitter_ = j;
            Eigen::MatrixXd kj = k;
            kj.diagonal().array() += j * kernel_.signal_variance;
            llt_.compute(kj);
        }
        if (llt_.info() != Eigen::Success)
            return false;

        Eigen::VectorXd resid(n);
        for (Eigen::Index i = 0; i < n; ++i)
            resid(i) = train_y_[static_cast<std::size_t>(i)] - mean_;
        alpha_ = llt_.solve(resid);
        // Refine against the matrix without jitter so training targets are reproduced.
        const double tol = 1e-10 * std::max(1.0, resid.cwiseAbs().maxCoeff());
        double last = (resid - k * alpha_).cwiseAbs().maxCoeff();
        for (int it = 0; it < 100 && last > tol; ++it) {
            const Eigen::VectorXd step = alpha_ + llt_.solve(resid - k * alpha_);
            const double now = (resid - k * step).cwiseAbs().maxCoeff();
            if (!(now < last))
                break;
            alpha_ = step;
            last = now;
        }
        const Eigen::VectorXd diag = llt_.matrixLLT().diagonal();
        lml_ = -0.5 * resid.dot(alpha_) - diag.array().log().sum() -
               0.5 * static_cast<double>(n) * std::log(2.0 * 3.14159265358979323846);
        fitted_ = std::isfinite(lml_) && alpha_.allFinite();
        return fitted_;
    }

    SquaredExponential kernel_{};
    double noise_var_ = 0.0;
    double jitter_ = 0.0;
    double mean_ = 0.0;
    double lml_ = 0.0;
    bool fitted_ = false;
    std::vector<Point> train_x_;
    std::vector<double> train_y_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::VectorXd alpha_;
};

inline GpModel gp_fit(std::vector<Point> x, std::vector<double> y, const KernelConfig& config = {},
                      double noise_var = 0.0)
{
    return GpModel::fit(std::move(x), std::move(y), config, noise_var);
}

inline Prediction gp_predict(const GpModel& model, std::span<const double> query)
{
    return model.predict(query);
}

} // namespace aquaplan::surrogate
