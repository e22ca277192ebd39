#include <gapshrink/experiments/runner.hpp>

#include <gtest/gtest.h>

using namespace gapshrink;

namespace {

SamplerConfig probit_config(long warmup, long retain) {
    SamplerConfig c;
    c.warmup = warmup;
    c.retain = retain;
    return c;
}

PosteriorSamples fit(const FusedProbitData &d, const SamplerConfig &cfg) {
    FusedProbitInput in{d.Y, d.X, d.department, {}};
    return gibbs_fused_probit(in, cfg);
}

} // namespace

TEST(FusedProbit, DepartmentConstantTruthFusesWithinDepartments) {
    const auto d = gen_fused_probit(61, FusedProbitOptions{});
    const auto post = fit(d, probit_config(500, 500));
    const auto m = probit_metrics(post, d, {}, Thresholds{});
    EXPECT_LT(m.within_max_diff, 0.1);
}

TEST(FusedProbit, DeviantCategoryStandsOut) {
    FusedProbitOptions opt;
    opt.deviant = {2};
    const auto d = gen_fused_probit(62, opt);
    const auto post = fit(d, probit_config(500, 500));
    const auto m = probit_metrics(post, d, opt.deviant, Thresholds{});
    EXPECT_GE(m.deviant_ratio, 3.0) << "deviant " << m.deviant_min_diff << " others " << m.within_max_diff;
}

TEST(FusedProbit, CrossDepartmentWeightDrivenLow) {
    const auto d = gen_fused_probit(63, FusedProbitOptions{});
    const auto post = fit(d, probit_config(500, 500));
    EXPECT_LT(post.mean("omega_cross"), 0.05);
    // Prior mean under the default Beta(1, 1) is 1/2.
    EXPECT_LT(post.mean("omega_cross"), 0.5);
}

TEST(FusedProbit, IdenticalConfigsGiveIdenticalDraws) {
    FusedProbitOptions opt;
    opt.n = 200;
    const auto d = gen_fused_probit(64, opt);
    const auto cfg = probit_config(20, 30);
    EXPECT_TRUE(fit(d, cfg).draws().cwiseEqual(fit(d, cfg).draws()).all());
}

TEST(FusedProbit, EveryDrawIsFeasible) {
    FusedProbitOptions opt;
    opt.n = 300;
    const auto d = gen_fused_probit(65, opt);
    const auto post = fit(d, probit_config(50, 200));
    const Index rho = post.column("rho"), gap = post.column("gap"), v0 = post.column("v[0,0]");
    const Index nv = 28 * 2;
    for (Index s = 0; s < post.rows(); ++s) {
        const auto r = post.draws().row(s);
        ASSERT_LE(r.segment(v0, nv).cwiseAbs().maxCoeff(), r[rho] * (1.0 + 1e-12));
        ASSERT_TRUE(std::isfinite(r[gap]));
        ASSERT_GE(r[gap], -1e-10);
        ASSERT_GT(r[post.column("omega_cross")], 0.0);
        ASSERT_LT(r[post.column("omega_cross")], 1.0);
    }
}

TEST(FusedProbit, RandomInterceptAddsColumns) {
    FusedProbitOptions opt;
    opt.n = 200;
    const auto d = gen_fused_probit(66, opt);
    std::vector<int> group(200);
    for (std::size_t i = 0; i < group.size(); ++i)
        group[i] = static_cast<int>(i % 4);
    auto cfg = probit_config(20, 40);
    cfg.random_intercept = true;
    FusedProbitInput in{d.Y, d.X, d.department, group};
    const auto post = gibbs_fused_probit(in, cfg);
    EXPECT_TRUE(post.has("gamma[3]") && post.has("tau2"));
    EXPECT_GT(post.col("tau2").minCoeff(), 0.0);
}

TEST(FusedProbit, ColumnOrderIsCategoryFastest) {
    FusedProbitOptions opt;
    opt.n = 50;
    const auto d = gen_fused_probit(67, opt);
    const auto post = fit(d, probit_config(1, 2));
    EXPECT_EQ(post.names()[0], "theta[0,0]");
    EXPECT_EQ(post.names()[1], "theta[1,0]");
    EXPECT_EQ(post.names()[8], "theta[0,1]");
}

TEST(FusedProbit, RejectsInvalidInput) {
    FusedProbitOptions opt;
    opt.n = 20;
    const auto d = gen_fused_probit(68, opt);
    const auto cfg = probit_config(1, 1);
    MatrixXd Y = d.Y;
    Y(0, 0) = 0.5;
    FusedProbitInput bad_y{Y, d.X, d.department, {}};
    EXPECT_THROW(FusedProbitSampler(bad_y, cfg), ContractError);
    FusedProbitInput bad_dept{d.Y, d.X, {0, 0, 0, 0, 2, 2, 2, 2}, {}};
    EXPECT_THROW(FusedProbitSampler(bad_dept, cfg), ContractError);
    FusedProbitInput short_dept{d.Y, d.X, {0, 1}, {}};
    EXPECT_THROW(FusedProbitSampler(short_dept, cfg), DimensionError);
}
