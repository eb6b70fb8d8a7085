#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "aquaplan/errors.hpp"
#include "aquaplan/random.hpp"
#include "aquaplan/surrogate/common.hpp"

namespace aquaplan::surrogate {

inline constexpr std::size_t kMlpMinPoints = 8;

struct MlpConfig {
    std::size_t hidden = 64;
    double dropout = 0.5;
    double learning_rate = 0.01;
    std::size_t epochs = 300;
    std::size_t mc_samples = 32;
    std::uint64_t seed = 0;
};

/// input -> hidden -> hidden -> 1 regression network with ReLU and inverted
/// dropout, trained full-batch by Adam on mean squared error. Inputs and
/// targets are standardised internally.
class MlpSurrogate {
public:
    MlpSurrogate() = default;

    static MlpSurrogate fit(const std::vector<Point>& x, const std::vector<double>& y, const MlpConfig& cfg)
    {
        check_training_data(x, y, "mlp_fit");
        if (x.size() < kMlpMinPoints)
            throw DomainError("mlp_fit: at least 8 training points are required");
        detail::require(cfg.hidden >= 1 && cfg.mc_samples >= 2, "mlp_fit: invalid layer width or MC sample count");
        detail::require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "mlp_fit: dropout must lie in [0, 1)");
        detail::require(cfg.learning_rate > 0.0, "mlp_fit: learning rate must be > 0");

        MlpSurrogate m;
        m.cfg_ = cfg;
        const auto n = static_cast<Eigen::Index>(x.size());
        const auto dim = static_cast<Eigen::Index>(x.front().size());
        m.standardize(x, y);

        Eigen::MatrixXd inputs(dim, n);
        Eigen::RowVectorXd targets(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            for (Eigen::Index i = 0; i < dim; ++i)
                inputs(i, j) = (x[sj][static_cast<std::size_t>(i)] - m.x_mean_[i]) / m.x_scale_[i];
            targets(j) = (y[sj] - m.y_mean_) / m.y_scale_;
        }

        auto rng = make_rng(cfg.seed, 0x1417);
        const auto h = static_cast<Eigen::Index>(cfg.hidden);
        m.w1_ = he_init(h, dim, rng);
        m.w2_ = he_init(h, h, rng);
        m.w3_ = he_init(1, h, rng);
        m.b1_ = Eigen::VectorXd::Zero(h);
        m.b2_ = Eigen::VectorXd::Zero(h);
        m.b3_ = 0.0;

        m.initial_mse_ = m.training_mse(inputs, targets);
        m.train(inputs, targets, rng);
        m.final_mse_ = m.training_mse(inputs, targets);
        m.fitted_ = true;
        return m;
    }

    bool fitted() const { return fitted_; }

    /// Dropout-free forward pass in target units.
    double forward(std::span<const double> query) const
    {
        require_fitted(query);
        const Eigen::VectorXd in = normalize(query);
        return y_mean_ + y_scale_ * pass(in, nullptr);
    }

    /// Mean from the dropout-free network; variance from `mc_samples`
    /// stochastic dropout passes. The dropout stream is derived from the
    /// model seed and the query bits, so equal queries give equal answers.
    Prediction predict(std::span<const double> query) const
    {
        require_fitted(query);
        const Eigen::VectorXd in = normalize(query);
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (double q : query)
            h = (h ^ std::bit_cast<std::uint64_t>(q)) * 0x100000001b3ull;
        auto rng = make_rng(cfg_.seed, h);
        const double mean = y_mean_ + y_scale_ * pass(in, nullptr);
        double s = 0.0;
        double ss = 0.0;
        for (std::size_t t = 0; t < cfg_.mc_samples; ++t) {
            const double v = y_mean_ + y_scale_ * pass(in, &rng);
            s += v;
            ss += v * v;
        }
        const auto T = static_cast<double>(cfg_.mc_samples);
        const double var = (ss - s * s / T) / (T - 1.0);
        return {mean, std::max(var, 0.0)};
    }

    double initial_mse() const { return initial_mse_; }
    double final_mse() const { return final_mse_; }
    const std::vector<double>& loss_history() const { return loss_history_; }
    const MlpConfig& config() const { return cfg_; }

    nlohmann::json to_json() const
    {
        if (!fitted_)
            throw StateError("mlp: cannot serialise an unfitted model");
        auto flat = [](const auto& m) { return std::vector<double>(m.data(), m.data() + m.size()); };
        return {{"format", "aquaplan.mlp"},
                {"version", 1},
                {"layers", {w1_.cols(), w1_.rows(), w2_.rows(), 1}},
                {"activation", "relu"},
                {"dropout", cfg_.dropout},
                {"learning_rate", cfg_.learning_rate},
                {"epochs", cfg_.epochs},
                {"mc_samples", cfg_.mc_samples},
                {"seed", cfg_.seed},
                {"x_mean", flat(x_mean_)},
                {"x_scale", flat(x_scale_)},
                {"y_mean", y_mean_},
                {"y_scale", y_scale_},
                {"w1", flat(w1_)}, {"b1", flat(b1_)},
                {"w2", flat(w2_)}, {"b2", flat(b2_)},
                {"w3", flat(w3_)}, {"b3", b3_}};
    }

    static MlpSurrogate from_json(const nlohmann::json& j)
    {
        if (j.value("format", "") != "aquaplan.mlp" || j.value("version", 0) != 1)
            throw DomainError("mlp: unsupported snapshot format");
        const auto layers = j.at("layers").get<std::vector<Eigen::Index>>();
        detail::require(layers.size() == 4 && layers[1] == layers[2] && layers[3] == 1, "mlp: unexpected layer layout");
        MlpSurrogate m;
        m.cfg_.hidden = static_cast<std::size_t>(layers[1]);
        m.cfg_.dropout = j.at("dropout").get<double>();
        m.cfg_.learning_rate = j.at("learning_rate").get<double>();
        m.cfg_.epochs = j.at("epochs").get<std::size_t>();
        m.cfg_.mc_samples = j.at("mc_samples").get<std::size_t>();
        m.cfg_.seed = j.at("seed").get<std::uint64_t>();
        const Eigen::Index d = layers[0];
        const Eigen::Index h = layers[1];
        auto load = [&](const char* key, Eigen::Index rows, Eigen::Index cols) {
            const auto v = j.at(key).get<std::vector<double>>();
            detail::require(static_cast<Eigen::Index>(v.size()) == rows * cols, std::string("mlp: bad size for ") + key);
            return Eigen::MatrixXd(Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols));
        };
        m.x_mean_ = load("x_mean", d, 1);
        m.x_scale_ = load("x_scale", d, 1);
        m.w1_ = load("w1", h, d);
        m.b1_ = load("b1", h, 1);
        m.w2_ = load("w2", h, h);
        m.b2_ = load("b2", h, 1);
        m.w3_ = load("w3", 1, h);
        m.b3_ = j.at("b3").get<double>();
        m.y_mean_ = j.at("y_mean").get<double>();
        m.y_scale_ = j.at("y_scale").get<double>();
        m.fitted_ = true;
        return m;
    }

private:
    static Eigen::MatrixXd he_init(Eigen::Index rows, Eigen::Index cols, Rng& rng)
    {
        const double bound = std::sqrt(6.0 / static_cast<double>(cols));
        std::uniform_real_distribution<double> u(-bound, bound);
        Eigen::MatrixXd w(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                w(i, j) = u(rng);
        return w;
    }

    void standardize(const std::vector<Point>& x, const std::vector<double>& y)
    {
        const auto dim = static_cast<Eigen::Index>(x.front().size());
        const auto n = static_cast<double>(x.size());
        x_mean_ = Eigen::VectorXd::Zero(dim);
        x_scale_ = Eigen::VectorXd::Zero(dim);
        for (const auto& p : x)
            for (Eigen::Index i = 0; i < dim; ++i)
                x_mean_[i] += p[static_cast<std::size_t>(i)] / n;
        for (const auto& p : x)
            for (Eigen::Index i = 0; i < dim; ++i)
                x_scale_[i] += std::pow(p[static_cast<std::size_t>(i)] - x_mean_[i], 2) / n;
        for (Eigen::Index i = 0; i < dim; ++i)
            x_scale_[i] = x_scale_[i] > 0.0 ? std::sqrt(x_scale_[i]) : 1.0;

        y_mean_ = 0.0;
        for (double v : y)
            y_mean_ += v / n;
        double var = 0.0;
        for (double v : y)
            var += (v - y_mean_) * (v - y_mean_) / n;
        y_scale_ = var > 0.0 ? std::sqrt(var) : 1.0;
    }

    void require_fitted(std::span<const double> query) const
    {
        if (!fitted_)
            throw StateError("mlp_predict: model has not been fitted");
        if (static_cast<Eigen::Index>(query.size()) != x_mean_.size())
            throw DomainError("mlp_predict: query dimension does not match the training inputs");
    }

    Eigen::VectorXd normalize(std::span<const double> query) const
    {
        Eigen::VectorXd in(x_mean_.size());
        for (Eigen::Index i = 0; i < in.size(); ++i)
            in[i] = (query[static_cast<std::size_t>(i)] - x_mean_[i]) / x_scale_[i];
        return in;
    }

    // One forward pass on standardised input; dropout is applied when rng is given.
    double pass(const Eigen::VectorXd& in, Rng* rng) const
    {
        Eigen::VectorXd h1 = (w1_ * in + b1_).cwiseMax(0.0);
        if (rng)
            apply_dropout(h1, *rng);
        Eigen::VectorXd h2 = (w2_ * h1 + b2_).cwiseMax(0.0);
        if (rng)
            apply_dropout(h2, *rng);
        return (w3_ * h2)(0) + b3_;
    }

    void apply_dropout(Eigen::VectorXd& h, Rng& rng) const
    {
        std::bernoulli_distribution keep(1.0 - cfg_.dropout);
        const double scale = 1.0 / (1.0 - cfg_.dropout);
        for (Eigen::Index i = 0; i < h.size(); ++i)
            h[i] = keep(rng) ? h[i] * scale : 0.0;
    }

    Eigen::MatrixXd dropout_mask(Eigen::Index rows, Eigen::Index cols, Rng& rng) const
    {
        std::bernoulli_distribution keep(1.0 - cfg_.dropout);
        const double scale = 1.0 / (1.0 - cfg_.dropout);
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i)
                m(i, j) = keep(rng) ? scale : 0.0;
        return m;
    }

    // MSE in target units with dropout disabled.
    double training_mse(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets) const
    {
        const Eigen::MatrixXd h1 = ((w1_ * inputs).colwise() + b1_).cwiseMax(0.0);
        const Eigen::MatrixXd h2 = ((w2_ * h1).colwise() + b2_).cwiseMax(0.0);
        const Eigen::RowVectorXd out = (w3_ * h2).array() + b3_;
        return (out - targets).squaredNorm() / static_cast<double>(targets.size()) * y_scale_ * y_scale_;
    }

    struct AdamSlot {
        Eigen::MatrixXd m, v;
        explicit AdamSlot(const Eigen::MatrixXd& shape)
            : m(Eigen::MatrixXd::Zero(shape.rows(), shape.cols())), v(Eigen::MatrixXd::Zero(shape.rows(), shape.cols()))
        {
        }
    };

    void train(const Eigen::MatrixXd& inputs, const Eigen::RowVectorXd& targets, Rng& rng)
    {
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double eps = 1e-8;
        const auto n = static_cast<double>(targets.size());
        const Eigen::Index h = w1_.rows();
        const bool use_dropout = cfg_.dropout > 0.0;

        Eigen::MatrixXd b1m = b1_, b2m = b2_;
        Eigen::MatrixXd b3m(1, 1);
        b3m(0, 0) = b3_;
        AdamSlot s_w1(w1_), s_b1(b1m), s_w2(w2_), s_b2(b2m), s_w3(w3_), s_b3(b3m);

        auto step = [&](Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, AdamSlot& s, double c1, double c2) {
            s.m = beta1 * s.m + (1.0 - beta1) * grad;
            s.v = beta2 * s.v + (1.0 - beta2) * grad.cwiseProduct(grad);
            param.array() -= cfg_.learning_rate * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + eps);
        };

        loss_history_.clear();
        loss_history_.reserve(cfg_.epochs);
        for (std::size_t epoch = 1; epoch <= cfg_.epochs; ++epoch) {
            const Eigen::MatrixXd z1 = (w1_ * inputs).colwise() + b1m.col(0);
            Eigen::MatrixXd gate1 = (z1.array() > 0.0).cast<double>();
            if (use_dropout)
                gate1 = gate1.cwiseProduct(dropout_mask(h, inputs.cols(), rng));
            const Eigen::MatrixXd a1 = z1.cwiseProduct(gate1);
            const Eigen::MatrixXd z2 = (w2_ * a1).colwise() + b2m.col(0);
            Eigen::MatrixXd gate2 = (z2.array() > 0.0).cast<double>();
            if (use_dropout)
                gate2 = gate2.cwiseProduct(dropout_mask(h, inputs.cols(), rng));
            const Eigen::MatrixXd a2 = z2.cwiseProduct(gate2);
            const Eigen::RowVectorXd out = (w3_ * a2).array() + b3m(0, 0);
            const Eigen::RowVectorXd err = out - targets;
            const double loss = err.squaredNorm() / n;
            if (!std::isfinite(loss))
                throw TrainingError("mlp_fit: training diverged (non-finite loss)");
            loss_history_.push_back(loss * y_scale_ * y_scale_);

            const Eigen::RowVectorXd d_out = 2.0 * err / n;
            const Eigen::MatrixXd g_w3 = d_out * a2.transpose();
            Eigen::MatrixXd g_b3(1, 1);
            g_b3(0, 0) = d_out.sum();
            const Eigen::MatrixXd d_z2 = (w3_.transpose() * d_out).cwiseProduct(gate2);
            const Eigen::MatrixXd g_w2 = d_z2 * a1.transpose();
            const Eigen::MatrixXd g_b2 = d_z2.rowwise().sum();
            const Eigen::MatrixXd d_z1 = (w2_.transpose() * d_z2).cwiseProduct(gate1);
            const Eigen::MatrixXd g_w1 = d_z1 * inputs.transpose();
            const Eigen::MatrixXd g_b1 = d_z1.rowwise().sum();

            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(epoch));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(epoch));
            step(w1_, g_w1, s_w1, c1, c2);
            step(b1m, g_b1, s_b1, c1, c2);
            step(w2_, g_w2, s_w2, c1, c2);
            step(b2m, g_b2, s_b2, c1, c2);
            step(w3_, g_w3, s_w3, c1, c2);
            step(b3m, g_b3, s_b3, c1, c2);
        }
        b1_ = b1m.col(0);
        b2_ = b2m.col(0);
        b3_ = b3m(0, 0);
        if (!w1_.allFinite() || !w2_.allFinite() || !w3_.allFinite() || !std::isfinite(b3_))
            throw TrainingError("mlp_fit: training diverged (non-finite weights)");
    }

    MlpConfig cfg_{};
    bool fitted_ = false;
    Eigen::VectorXd x_mean_, x_scale_;
    double y_mean_ = 0.0;
    double y_scale_ = 1.0;
    Eigen::MatrixXd w1_, w2_, w3_;
    Eigen::VectorXd b1_, b2_;
    double b3_ = 0.0;
    double initial_mse_ = 0.0;
    double final_mse_ = 0.0;
    std::vector<double> loss_history_;
};

inline MlpSurrogate mlp_fit(const std::vector<Point>& x, const std::vector<double>& y, std::size_t epochs,
                            std::uint64_t seed)
{
    MlpConfig cfg;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return MlpSurrogate::fit(x, y, cfg);
}

inline Prediction mlp_predict(const MlpSurrogate& model, std::span<const double> query)
{
    return model.predict(query);
}

} // namespace aquaplan::surrogate
