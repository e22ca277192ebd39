#pragma once

// Gibbs samplers for y = X theta + eps, eps ~ N(0, sigma2 I), under the l1
// gap-shrinkage prior and the Bayesian lasso and GDP comparators.

#include <gapshrink/gap.hpp>
#include <gapshrink/linalg.hpp>
#include <gapshrink/priors.hpp>
#include <gapshrink/samples.hpp>
#include <gapshrink/variates.hpp>

#include <cmath>
#include <string>
#include <vector>

namespace gapshrink {

namespace block {
enum : std::uint32_t {
    init = 0,
    cauchy_scales = 1,
    laplace_scales = 2,
    theta = 3,
    dual = 4,
    lambda = 5,
    sigma2 = 6,
    latent = 7,
    dual_extra = 8,
    weight = 9,
    intercept = 10,
    mixing = 11,
};
}

/// Precomputed sufficient statistics of a linear regression.
struct RegressionData {
    MatrixXd X;
    VectorXd y;
    MatrixXd XtX;
    VectorXd Xty;

    RegressionData(MatrixXd x, VectorXd yy) : X(std::move(x)), y(std::move(yy)) {
        if (X.rows() != y.size() || X.rows() < 1 || X.cols() < 1)
            throw DimensionError("RegressionData: X must be n x p with n = len(y) >= 1");
        XtX = X.transpose() * X;
        Xty = X.transpose() * y;
    }
    Index n() const { return X.rows(); }
    Index p() const { return X.cols(); }
    double rss(const VectorXd &theta) const { return (y - X * theta).squaredNorm(); }
    double response_variance() const {
        double m = y.mean();
        double v = (y.array() - m).square().sum() / std::max<Index>(n() - 1, 1);
        return std::max(v, 1e-8);
    }
};

namespace detail {

/// theta ~ N(P^{-1} b, P^{-1}); falls back to 50-coordinate blocks.
inline void draw_regression_theta(const MatrixXd &P, const VectorXd &b, VectorXd &theta, Rng &rng) {
    if (auto x = draw_gaussian_canonical(P, b, rng)) {
        theta = *x;
        return;
    }
    draw_gaussian_blocked(P, b, theta, 50, rng);
}

inline double laplace_precision(double rate, double abs_theta, Rng &rng) {
    if (!(rate > 0.0))
        return 0.0;
    const double mu = abs_theta > 0.0 ? rate / abs_theta : std::numeric_limits<double>::infinity();
    return sample_inverse_gaussian(std::min(mu, 1e300), rate * rate, rng);
}

} // namespace detail

struct GapRegressionState {
    VectorXd theta;
    VectorXd u;
    VectorXd w;     ///< Cauchy-kernel mixing variances
    VectorXd inv_s; ///< Laplace-mixture precisions
    double lambda = 1.0;
    double sigma2 = 1.0;
};

/// Gap-shrinkage prior with l1 gap and Cauchy kernel on beta = theta + u.
class GapRegressionSampler {
  public:
    GapRegressionSampler(const RegressionData &data, SamplerConfig cfg)
        : data_(data), cfg_(std::move(cfg)) {
        cfg_.validate();
    }

    void initialize() {
        const Index p = data_.p();
        Rng rng(cfg_.seed, cfg_.chain, 0, block::init);
        st_.theta.resize(p);
        for (Index j = 0; j < p; ++j)
            st_.theta[j] = 0.1 * std::tan(M_PI * (rng.uniform() - 0.5));
        st_.u = VectorXd::Zero(p);
        st_.w = VectorXd::Ones(p);
        st_.inv_s = VectorXd::Ones(p);
        st_.lambda = 1.0;
        st_.sigma2 = data_.response_variance();
    }

    void sweep(std::uint32_t it) {
        Rng r1(cfg_.seed, cfg_.chain, it, block::cauchy_scales);
        update_cauchy_scales(r1);
        Rng r2(cfg_.seed, cfg_.chain, it, block::laplace_scales);
        update_laplace_scales(r2);
        Rng r3(cfg_.seed, cfg_.chain, it, block::theta);
        update_theta(r3);
        Rng r4(cfg_.seed, cfg_.chain, it, block::dual);
        update_duals(r4);
        Rng r5(cfg_.seed, cfg_.chain, it, block::lambda);
        update_lambda(r5);
        Rng r6(cfg_.seed, cfg_.chain, it, block::sigma2);
        update_sigma2(r6);
    }

    void update_cauchy_scales(Rng &rng) {
        for (Index j = 0; j < st_.theta.size(); ++j) {
            double b = st_.theta[j] + st_.u[j];
            st_.w[j] = sample_inverse_gamma(1.0, 0.5 * (1.0 + b * b), rng);
        }
    }

    void update_laplace_scales(Rng &rng) {
        for (Index j = 0; j < st_.theta.size(); ++j)
            st_.inv_s[j] = detail::laplace_precision(laplace_rate(j), std::abs(st_.theta[j]), rng);
    }

    /// Rate of the Laplace factor in theta_j given (u_j, w_j, lambda).
    double laplace_rate(Index j) const {
        const double t = std::abs(st_.u[j]);
        return cfg_.alpha * std::max(st_.lambda - t, 0.0) + t / st_.w[j];
    }

    void update_theta(Rng &rng) {
        MatrixXd P = data_.XtX / st_.sigma2;
        P.diagonal().array() += st_.inv_s.array() + st_.w.array().inverse();
        VectorXd b = data_.Xty / st_.sigma2;
        // The sign of u follows theta; keep |u| and re-sign after the draw.
        VectorXd t = st_.u.cwiseAbs();
        detail::draw_regression_theta(P, b, st_.theta, rng);
        for (Index j = 0; j < t.size(); ++j)
            st_.u[j] = st_.theta[j] < 0.0 ? -t[j] : t[j];
    }

    /// u_j | theta_j, w_j, lambda: one truncated normal on the side of theta_j.
    void update_dual(Index j, Rng &rng) {
        const double th = st_.theta[j], w = st_.w[j], lam = st_.lambda;
        const double sd = std::sqrt(w);
        if (th == 0.0) {
            st_.u[j] = sample_truncated_normal(0.0, sd, -lam, lam, rng);
            return;
        }
        const double a = std::abs(th);
        const double t = sample_truncated_normal(w * cfg_.alpha * a - a, sd, 0.0, lam, rng);
        st_.u[j] = th < 0.0 ? -t : t;
    }

    void update_duals(Rng &rng) {
        for (Index j = 0; j < st_.u.size(); ++j)
            update_dual(j, rng);
    }

    void update_lambda(Rng &rng) {
        const double l1 = st_.theta.lpNorm<1>();
        const double umax = st_.u.cwiseAbs().maxCoeff();
        auto logf = [&](double lam) {
            if (lam < umax)
                return kNegInf;
            return log_inverse_gamma_density(lam, cfg_.lambda_shape, cfg_.lambda_scale) -
                   cfg_.alpha * lam * l1;
        };
        st_.lambda = slice_sample_log_scale(logf, st_.lambda, 1.0, 0.0, kInf, rng);
    }

    void update_sigma2(Rng &rng) {
        st_.sigma2 = sample_inverse_gamma(cfg_.sigma2_shape + 0.5 * static_cast<double>(data_.n()),
                                          cfg_.sigma2_scale + 0.5 * data_.rss(st_.theta), rng);
    }

    /// Unnormalized log joint of (theta, u, w, lambda, sigma2) with the
    /// Laplace mixture integrated out.
    double log_joint() const {
        ExtendedReal gap = l1_gap(st_.lambda, st_.theta, st_.u);
        if (gap.is_infinite())
            return kNegInf;
        const double n = static_cast<double>(data_.n());
        double lp = -0.5 * n * std::log(st_.sigma2) - 0.5 * data_.rss(st_.theta) / st_.sigma2;
        lp -= cfg_.alpha * gap.value();
        for (Index j = 0; j < st_.theta.size(); ++j) {
            const double b = st_.theta[j] + st_.u[j], w = st_.w[j];
            lp += -0.5 * std::log(w) - 0.5 * b * b / w + log_inverse_gamma_density(w, 0.5, 0.5);
        }
        lp += log_inverse_gamma_density(st_.lambda, cfg_.lambda_shape, cfg_.lambda_scale);
        lp += log_inverse_gamma_density(st_.sigma2, cfg_.sigma2_shape, cfg_.sigma2_scale);
        return lp;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        const Index p = data_.p();
        for (Index j = 0; j < p; ++j)
            out.push_back(indexed_name("theta", j));
        for (Index j = 0; j < p; ++j)
            out.push_back(indexed_name("u", j));
        out.insert(out.end(), {"lambda", "sigma2", "gap"});
        return out;
    }

    template <class Row> void record(Row &&row) {
        const Index p = data_.p();
        row.segment(0, p) = st_.theta.transpose();
        row.segment(p, p) = st_.u.transpose();
        ExtendedReal gap = l1_gap(st_.lambda, st_.theta, st_.u);
        max_violation_ = std::max(max_violation_, st_.u.cwiseAbs().maxCoeff() - st_.lambda);
        if (gap.is_infinite())
            ++infeasible_;
        row[2 * p] = st_.lambda;
        row[2 * p + 1] = st_.sigma2;
        row[2 * p + 2] = gap.to_double();
    }

    void finalize(PosteriorSamples &out) const {
        out.meta.stats["max_dual_violation"] = max_violation_;
        out.meta.stats["infeasible_draws"] = static_cast<double>(infeasible_);
    }

    const GapRegressionState &state() const { return st_; }
    GapRegressionState &mutable_state() { return st_; }
    const SamplerConfig &config() const { return cfg_; }

  private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    const RegressionData &data_;
    SamplerConfig cfg_;
    GapRegressionState st_;
    double max_violation_ = -kInf;
    long infeasible_ = 0;
};

struct LassoState {
    VectorXd theta;
    VectorXd tau2;
    double lambda2 = 1.0;
    double sigma2 = 1.0;
};

/// Park-Casella Bayesian lasso: theta | sigma2, tau2 ~ N(0, sigma2 diag(tau2)),
/// tau2_j ~ Exp(lambda2 / 2), lambda2 ~ Gamma(r, delta).
class BayesianLassoSampler {
  public:
    BayesianLassoSampler(const RegressionData &data, SamplerConfig cfg)
        : data_(data), cfg_(std::move(cfg)) {
        cfg_.validate();
    }

    void initialize() {
        Rng rng(cfg_.seed, cfg_.chain, 0, block::init);
        st_.theta.resize(data_.p());
        for (Index j = 0; j < data_.p(); ++j)
            st_.theta[j] = 0.1 * rng.normal();
        st_.tau2 = VectorXd::Ones(data_.p());
        st_.lambda2 = 1.0;
        st_.sigma2 = data_.response_variance();
    }

    void sweep(std::uint32_t it) {
        Rng r1(cfg_.seed, cfg_.chain, it, block::laplace_scales);
        const double lam = std::sqrt(st_.lambda2);
        for (Index j = 0; j < data_.p(); ++j) {
            const double a = std::abs(st_.theta[j]);
            const double mu = a > 0.0 ? lam * std::sqrt(st_.sigma2) / a : 1e300;
            st_.tau2[j] = 1.0 / sample_inverse_gaussian(std::min(mu, 1e300), st_.lambda2, r1);
        }
        Rng r2(cfg_.seed, cfg_.chain, it, block::theta);
        MatrixXd P = data_.XtX;
        P.diagonal().array() += st_.tau2.array().inverse();
        P /= st_.sigma2;
        detail::draw_regression_theta(P, data_.Xty / st_.sigma2, st_.theta, r2);
        Rng r3(cfg_.seed, cfg_.chain, it, block::lambda);
        const double p = static_cast<double>(data_.p());
        st_.lambda2 = sample_gamma(p + cfg_.lasso_r, 0.5 * st_.tau2.sum() + cfg_.lasso_delta, r3);
        Rng r4(cfg_.seed, cfg_.chain, it, block::sigma2);
        const double quad = (st_.theta.array().square() / st_.tau2.array()).sum();
        st_.sigma2 = sample_inverse_gamma(
            cfg_.sigma2_shape + 0.5 * (static_cast<double>(data_.n()) + p),
            cfg_.sigma2_scale + 0.5 * (data_.rss(st_.theta) + quad), r4);
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (Index j = 0; j < data_.p(); ++j)
            out.push_back(indexed_name("theta", j));
        out.insert(out.end(), {"lambda2", "sigma2"});
        return out;
    }

    template <class Row> void record(Row &&row) {
        const Index p = data_.p();
        row.segment(0, p) = st_.theta.transpose();
        row[p] = st_.lambda2;
        row[p + 1] = st_.sigma2;
    }

    void finalize(PosteriorSamples &) const {}
    const LassoState &state() const { return st_; }

  private:
    const RegressionData &data_;
    SamplerConfig cfg_;
    LassoState st_;
};

struct GdpState {
    VectorXd theta;
    VectorXd tau;
    VectorXd rate;
    double sigma2 = 1.0;
};

/// Generalized double Pareto in hierarchical Laplace form:
/// theta_j ~ N(0, sigma2 tau_j), tau_j ~ Exp(rate_j^2 / 2), rate_j ~ Gamma(shape, rate).
class GdpSampler {
  public:
    GdpSampler(const RegressionData &data, SamplerConfig cfg) : data_(data), cfg_(std::move(cfg)) {
        cfg_.validate();
    }

    void initialize() {
        Rng rng(cfg_.seed, cfg_.chain, 0, block::init);
        st_.theta.resize(data_.p());
        for (Index j = 0; j < data_.p(); ++j)
            st_.theta[j] = 0.1 * rng.normal();
        st_.tau = VectorXd::Ones(data_.p());
        st_.rate = VectorXd::Ones(data_.p());
        st_.sigma2 = data_.response_variance();
    }

    void sweep(std::uint32_t it) {
        const double sigma = std::sqrt(st_.sigma2);
        Rng r1(cfg_.seed, cfg_.chain, it, block::lambda);
        for (Index j = 0; j < data_.p(); ++j)
            st_.rate[j] = sample_gamma(cfg_.gdp_shape + 1.0,
                                       std::abs(st_.theta[j]) / sigma + cfg_.gdp_rate, r1);
        Rng r2(cfg_.seed, cfg_.chain, it, block::laplace_scales);
        for (Index j = 0; j < data_.p(); ++j) {
            const double a = std::abs(st_.theta[j]);
            const double mu = a > 0.0 ? st_.rate[j] * sigma / a : 1e300;
            st_.tau[j] = 1.0 / sample_inverse_gaussian(std::min(mu, 1e300),
                                                       st_.rate[j] * st_.rate[j], r2);
        }
        Rng r3(cfg_.seed, cfg_.chain, it, block::theta);
        MatrixXd P = data_.XtX;
        P.diagonal().array() += st_.tau.array().inverse();
        P /= st_.sigma2;
        detail::draw_regression_theta(P, data_.Xty / st_.sigma2, st_.theta, r3);
        Rng r4(cfg_.seed, cfg_.chain, it, block::sigma2);
        const double quad = (st_.theta.array().square() / st_.tau.array()).sum();
        st_.sigma2 = sample_inverse_gamma(
            cfg_.sigma2_shape + 0.5 * static_cast<double>(data_.n() + data_.p()),
            cfg_.sigma2_scale + 0.5 * (data_.rss(st_.theta) + quad), r4);
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (Index j = 0; j < data_.p(); ++j)
            out.push_back(indexed_name("theta", j));
        out.push_back("sigma2");
        return out;
    }

    template <class Row> void record(Row &&row) {
        row.segment(0, data_.p()) = st_.theta.transpose();
        row[data_.p()] = st_.sigma2;
    }

    void finalize(PosteriorSamples &) const {}
    const GdpState &state() const { return st_; }

  private:
    const RegressionData &data_;
    SamplerConfig cfg_;
    GdpState st_;
};

inline PosteriorSamples gibbs_sparse_regression(const MatrixXd &X, const VectorXd &y,
                                                const SamplerConfig &cfg) {
    RegressionData data(X, y);
    GapRegressionSampler s(data, cfg);
    return run_chain(s, cfg);
}

inline PosteriorSamples gibbs_bayesian_lasso(const MatrixXd &X, const VectorXd &y,
                                             const SamplerConfig &cfg) {
    RegressionData data(X, y);
    BayesianLassoSampler s(data, cfg);
    return run_chain(s, cfg);
}

inline PosteriorSamples gibbs_gdp(const MatrixXd &X, const VectorXd &y, const SamplerConfig &cfg) {
    RegressionData data(X, y);
    GdpSampler s(data, cfg);
    return run_chain(s, cfg);
}

} // namespace gapshrink
