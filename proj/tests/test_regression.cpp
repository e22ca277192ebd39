#include <gapshrink/experiments/generators.hpp>
#include <gapshrink/samplers/regression.hpp>

#include <gtest/gtest.h>

using namespace gapshrink;

namespace {

struct SmallProblem {
    MatrixXd X;
    VectorXd y;
    VectorXd ols;
};

SmallProblem strong_signal(double noise_sd) {
    Rng rng(41, 0, 0, 0);
    SmallProblem s;
    s.X.resize(50, 5);
    for (Index i = 0; i < s.X.size(); ++i)
        s.X.data()[i] = rng.normal();
    VectorXd theta(5);
    theta << 1.0, -2.0, 0.5, 3.0, -1.5;
    s.y = s.X * theta;
    for (Index i = 0; i < s.y.size(); ++i)
        s.y[i] += noise_sd * rng.normal();
    s.ols = (s.X.transpose() * s.X).ldlt().solve(s.X.transpose() * s.y);
    return s;
}

SamplerConfig short_config(long warmup, long retain) {
    SamplerConfig c;
    c.warmup = warmup;
    c.retain = retain;
    return c;
}

VectorXd theta_mean(const PosteriorSamples &s, Index p) {
    VectorXd m(p);
    for (Index j = 0; j < p; ++j)
        m[j] = s.mean(indexed_name("theta", j));
    return m;
}

} // namespace

TEST(GapRegression, StrongSignalMatchesLeastSquares) {
    const auto s = strong_signal(0.01);
    const auto post = gibbs_sparse_regression(s.X, s.y, short_config(500, 1000));
    EXPECT_LE((theta_mean(post, 5) - s.ols).cwiseAbs().maxCoeff(), 0.05);
}

TEST(GapRegression, NullSignalShrinksToZero) {
    const auto s = strong_signal(0.01);
    const auto post = gibbs_sparse_regression(s.X, VectorXd::Zero(50), short_config(500, 1000));
    EXPECT_LT(theta_mean(post, 5).cwiseAbs().maxCoeff(), 0.1);
}

TEST(GapRegression, RecoversSparseSignalAtFullDimension) {
    const auto d = gen_sparse_regression(7);
    const auto post = gibbs_sparse_regression(d.X, d.y, short_config(400, 400));
    const VectorXd m = theta_mean(post, 500);
    long zeros = 0, zeros_ok = 0;
    for (Index j = 0; j < 500; ++j) {
        if (d.theta0[j] != 0.0) {
            EXPECT_NEAR(m[j], d.theta0[j], 0.5) << "coordinate " << j;
        } else {
            ++zeros;
            zeros_ok += std::abs(m[j]) < 0.1;
        }
    }
    EXPECT_GE(static_cast<double>(zeros_ok) / static_cast<double>(zeros), 0.95);
}

TEST(GapRegression, IdenticalConfigsGiveIdenticalDraws) {
    const auto s = strong_signal(0.5);
    const auto cfg = short_config(50, 100);
    const auto a = gibbs_sparse_regression(s.X, s.y, cfg);
    const auto b = gibbs_sparse_regression(s.X, s.y, cfg);
    EXPECT_EQ(a.names(), b.names());
    EXPECT_TRUE(a.draws().cwiseEqual(b.draws()).all());
    EXPECT_EQ(a.meta.config_digest, b.meta.config_digest);
    auto other = cfg;
    other.seed = 2;
    EXPECT_FALSE(gibbs_sparse_regression(s.X, s.y, other).draws().cwiseEqual(a.draws()).all());
}

TEST(GapRegression, EveryDrawIsDualFeasible) {
    const auto d = gen_sparse_regression(8, 100, 60, 5);
    const auto post = gibbs_sparse_regression(d.X, d.y, short_config(100, 300));
    const Index lam = post.column("lambda"), gap = post.column("gap"), u0 = post.column("u[0]");
    for (Index t = 0; t < post.rows(); ++t) {
        const auto r = post.draws().row(t);
        ASSERT_LE(r.segment(u0, 60).cwiseAbs().maxCoeff(), r[lam] * (1.0 + 1e-12));
        ASSERT_TRUE(std::isfinite(r[gap]));
        ASSERT_GE(r[gap], -1e-10);
    }
    EXPECT_EQ(post.meta.stats.at("infeasible_draws"), 0.0);
}

TEST(GapRegression, LargeAlphaConcentratesGap) {
    const auto d = gen_sparse_regression(9);
    auto hi = short_config(300, 300);
    hi.alpha = 1000.0;
    auto lo = hi;
    lo.alpha = 1.0;
    const double g_hi = gibbs_sparse_regression(d.X, d.y, hi).mean("gap");
    const double g_lo = gibbs_sparse_regression(d.X, d.y, lo).mean("gap");
    EXPECT_LT(g_hi, 0.05 * g_lo) << "alpha=1000: " << g_hi << ", alpha=1: " << g_lo;
}

TEST(GapRegression, Sigma2ConditionalMatchesInverseGamma) {
    const auto s = strong_signal(0.5);
    RegressionData data(s.X, s.y);
    SamplerConfig cfg;
    GapRegressionSampler sampler(data, cfg);
    sampler.initialize();
    sampler.mutable_state().theta = s.ols;
    const double shape = cfg.sigma2_shape + 25.0, scale = cfg.sigma2_scale + 0.5 * data.rss(s.ols);
    const double mean = scale / (shape - 1.0);
    const double var = mean * mean / (shape - 2.0);
    const int n = 100000;
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        Rng r(cfg.seed, 0, static_cast<std::uint32_t>(i + 1), block::sigma2);
        sampler.update_sigma2(r);
        const double x = sampler.state().sigma2;
        m1 += x;
        m2 += x * x;
    }
    m1 /= n;
    m2 = m2 / n - m1 * m1;
    EXPECT_NEAR(m1, mean, 0.02 * mean);
    EXPECT_NEAR(m2, var, 0.02 * var);
}

TEST(GapRegression, ColumnLayout) {
    const auto s = strong_signal(0.5);
    const auto post = gibbs_sparse_regression(s.X, s.y, short_config(5, 10));
    EXPECT_EQ(post.rows(), 10);
    EXPECT_EQ(post.cols(), 5 + 5 + 3);
    EXPECT_EQ(post.names().front(), "theta[0]");
    EXPECT_TRUE(post.has("lambda") && post.has("sigma2") && post.has("gap"));
}

TEST(GapRegression, ThinningKeepsEveryKthSweep) {
    const auto s = strong_signal(0.5);
    auto cfg = short_config(10, 20);
    cfg.thinning = 3;
    EXPECT_EQ(gibbs_sparse_regression(s.X, s.y, cfg).rows(), cfg.retained_rows());
}

TEST(GapRegression, RejectsMismatchedData) {
    EXPECT_THROW(RegressionData(MatrixXd::Ones(4, 2), VectorXd::Ones(3)), DimensionError);
}

TEST(BayesianLasso, NullSignalNearZero) {
    const auto s = strong_signal(0.01);
    const auto post = gibbs_bayesian_lasso(s.X, VectorXd::Zero(50), short_config(500, 1000));
    EXPECT_LT(theta_mean(post, 5).cwiseAbs().maxCoeff(), 0.1);
}

TEST(BayesianLasso, StrongSignalNearLeastSquares) {
    const auto s = strong_signal(0.01);
    const auto post = gibbs_bayesian_lasso(s.X, s.y, short_config(500, 1000));
    EXPECT_LE((theta_mean(post, 5) - s.ols).cwiseAbs().maxCoeff(), 0.05);
}

TEST(BayesianLasso, ShrinksLargeCoefficientsTowardZero) {
    const auto d = gen_sparse_regression(10);
    const auto post = gibbs_bayesian_lasso(d.X, d.y, short_config(400, 400));
    const VectorXd m = theta_mean(post, 500);
    int shrunk = 0, total = 0;
    for (Index j = 0; j < 500; ++j)
        if (d.theta0[j] != 0.0) {
            ++total;
            shrunk += std::abs(m[j]) < std::abs(d.theta0[j]);
        }
    EXPECT_GE(shrunk, total - 1);
}

TEST(Gdp, NullSignalNearZero) {
    const auto s = strong_signal(0.01);
    const auto post = gibbs_gdp(s.X, VectorXd::Zero(50), short_config(500, 1000));
    EXPECT_LT(theta_mean(post, 5).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Gdp, StrongSignalNearLeastSquares) {
    const auto s = strong_signal(0.01);
    const auto post = gibbs_gdp(s.X, s.y, short_config(500, 1000));
    EXPECT_LE((theta_mean(post, 5) - s.ols).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Gdp, SupportRecoveryComparableToGapPrior) {
    const auto d = gen_sparse_regression(11);
    const auto cfg = short_config(400, 400);
    const VectorXd g = theta_mean(gibbs_gdp(d.X, d.y, cfg), 500);
    const VectorXd s = theta_mean(gibbs_sparse_regression(d.X, d.y, cfg), 500);
    for (Index j = 0; j < 500; ++j)
        if (d.theta0[j] != 0.0) {
            EXPECT_GE(std::abs(g[j]), 0.5 * std::abs(d.theta0[j]));
            EXPECT_GE(std::abs(s[j]), 0.5 * std::abs(d.theta0[j]));
        }
    auto selected = [](const VectorXd &m) { return (m.array().abs() >= 0.1).count(); };
    EXPECT_LE(std::abs(selected(g) - selected(s)), 25);
}
