#include <gapshrink/diagnostics.hpp>
#include <gapshrink/experiments/generators.hpp>
#include <gapshrink/samplers/matrix.hpp>

#include <gtest/gtest.h>

using namespace gapshrink;

namespace {

struct TinyProblem {
    MatrixXd truth;
    std::vector<MatrixXd> Y;
};

TinyProblem tiny_rank_one(Index S, double sd) {
    VectorXd a(6), b(5);
    a << 1.0, 2.0, 0.0, 0.0, -1.0, 0.0;
    b << 2.0, 0.0, 1.0, 0.0, 0.0;
    TinyProblem t;
    t.truth = a * b.transpose();
    Rng rng(51, 0, 0, 0);
    for (Index s = 0; s < S; ++s) {
        MatrixXd y = t.truth;
        for (Index i = 0; i < y.size(); ++i)
            y.data()[i] += sd * rng.normal();
        t.Y.push_back(std::move(y));
    }
    return t;
}

SamplerConfig tiny_config(long warmup, long retain) {
    SamplerConfig c;
    c.warmup = warmup;
    c.retain = retain;
    c.rank = 2;
    return c;
}

} // namespace

TEST(MatrixSmoothing, TinyRankOneRecovered) {
    const auto t = tiny_rank_one(1000, 0.01);
    const auto post = gibbs_matrix_smoothing(t.Y, tiny_config(1000, 1000));
    const MatrixXd &mean = post.summaries.at("theta_mean");
    MatrixXd ybar = MatrixXd::Zero(6, 5);
    for (const auto &y : t.Y)
        ybar += y;
    ybar /= static_cast<double>(t.Y.size());
    EXPECT_LE((mean - t.truth).norm(), 0.05);
    EXPECT_LE((ybar - t.truth).norm(), 0.05);
}

TEST(MatrixSmoothing, TinyRankOneSingularValues) {
    const auto t = tiny_rank_one(1000, 0.01);
    const auto post = gibbs_matrix_smoothing(t.Y, tiny_config(1000, 1000));
    const double s1 = Eigen::JacobiSVD<MatrixXd>(t.truth).singularValues()[0];
    EXPECT_NEAR(post.mean("sv[0]"), s1, 0.05 * s1);
    EXPECT_LT(post.mean("sv[1]"), 0.1);
    EXPECT_EQ(post.mean("sv[5]"), 0.0);
}

TEST(MatrixSmoothing, IdenticalConfigsGiveIdenticalDraws) {
    const auto t = tiny_rank_one(50, 0.1);
    const auto cfg = tiny_config(20, 30);
    const auto a = gibbs_matrix_smoothing(t.Y, cfg);
    const auto b = gibbs_matrix_smoothing(t.Y, cfg);
    EXPECT_TRUE(a.draws().cwiseEqual(b.draws()).all());
    EXPECT_TRUE(a.summaries.at("theta_mean").cwiseEqual(b.summaries.at("theta_mean")).all());
}

TEST(MatrixSmoothing, EveryDrawIsFeasible) {
    const auto t = tiny_rank_one(50, 0.3);
    const auto post = gibbs_matrix_smoothing(t.Y, tiny_config(50, 200));
    const Index lam2 = post.column("lambda2"), gap = post.column("gap"), v2 = post.column("V2[0,0]");
    for (Index s = 0; s < post.rows(); ++s) {
        const auto r = post.draws().row(s);
        ASSERT_LE(r.segment(v2, 30).cwiseAbs().maxCoeff(), r[lam2] * (1.0 + 1e-12));
        ASSERT_TRUE(std::isfinite(r[gap]));
        ASSERT_GE(r[gap], -1e-10);
    }
    EXPECT_EQ(post.meta.stats.at("infeasible_draws"), 0.0);
}

TEST(MatrixSmoothing, Lambda1TracksDualNorm) {
    const auto t = tiny_rank_one(50, 0.3);
    const auto post = gibbs_matrix_smoothing(t.Y, tiny_config(10, 20));
    const Index v1 = post.column("V1[0,0]"), l1 = post.column("lambda1");
    for (Index s = 0; s < post.rows(); ++s)
        EXPECT_NEAR(post.draws().row(s).segment(v1, 30).norm(), post.draws()(s, l1), 1e-10);
}

TEST(MatrixSmoothing, DualsOmittedWhenNotStored) {
    const auto t = tiny_rank_one(20, 0.3);
    auto cfg = tiny_config(5, 5);
    cfg.store_duals = false;
    const auto post = gibbs_matrix_smoothing(t.Y, cfg);
    EXPECT_FALSE(post.has("V1[0,0]"));
    EXPECT_FALSE(post.has("V2[0,0]"));
    EXPECT_TRUE(post.has("sv[5]") && post.has("sigma2"));
    EXPECT_EQ(post.cols(), 2 * 6 + 2 * 5 + 4 + 6);
}

TEST(MatrixSmoothing, SingularValueColumnsMatchFactors) {
    const auto t = tiny_rank_one(20, 0.3);
    const auto post = gibbs_matrix_smoothing(t.Y, tiny_config(5, 10));
    for (Index s = 0; s < post.rows(); ++s) {
        MatrixXd A(6, 2), B(5, 2);
        for (Index k = 0; k < 2; ++k) {
            for (Index i = 0; i < 6; ++i)
                A(i, k) = post.draws()(s, post.column(indexed_name("A", i, k)));
            for (Index j = 0; j < 5; ++j)
                B(j, k) = post.draws()(s, post.column(indexed_name("B", j, k)));
        }
        const VectorXd sv = Eigen::JacobiSVD<MatrixXd>(A * B.transpose()).singularValues();
        for (Index k = 0; k < 2; ++k)
            EXPECT_NEAR(post.draws()(s, post.column(indexed_name("sv", k))), sv[k], 1e-9 * (1.0 + sv[0]));
    }
}

TEST(MatrixSmoothing, Sigma2ConditionalMatchesInverseGamma) {
    const auto t = tiny_rank_one(40, 0.3);
    MatrixSmoothingData data(t.Y);
    const auto cfg = tiny_config(1, 1);
    MatrixSmoothingSampler sampler(data, cfg);
    sampler.initialize();
    const double shape = cfg.sigma2_shape + 0.5 * data.count();
    const double scale = cfg.sigma2_scale + 0.5 * sampler.residual_ss();
    const double mean = scale / (shape - 1.0), var = mean * mean / (shape - 2.0);
    const int n = 100000;
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
        Rng r(7, 0, static_cast<std::uint32_t>(i + 1), block::sigma2);
        sampler.update_sigma2(r);
        m1 += sampler.state().sigma2;
        m2 += sampler.state().sigma2 * sampler.state().sigma2;
    }
    m1 /= n;
    m2 = m2 / n - m1 * m1;
    EXPECT_NEAR(m1, mean, 0.02 * mean);
    EXPECT_NEAR(m2, var, 0.02 * var);
}

TEST(MatrixSmoothing, RejectsRankAboveDimension) {
    const auto t = tiny_rank_one(5, 0.3);
    MatrixSmoothingData data(t.Y);
    auto cfg = tiny_config(1, 1);
    cfg.rank = 6;
    EXPECT_THROW(MatrixSmoothingSampler(data, cfg), ContractError);
}

TEST(MatrixSmoothing, RejectsRaggedObservations) {
    std::vector<MatrixXd> Y{MatrixXd::Zero(3, 2), MatrixXd::Zero(2, 3)};
    EXPECT_THROW(MatrixSmoothingData{Y}, DimensionError);
}
