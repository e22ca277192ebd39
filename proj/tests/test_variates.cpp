#include <gapshrink/linalg.hpp>
#include <gapshrink/variates.hpp>

#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <numbers>

using namespace gapshrink;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Moments {
    double mean = 0.0, var = 0.0;
};

template <class F> Moments moments(int n, F &&draw) {
    double s = 0.0, ss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = draw(i);
        s += x;
        ss += x * x;
    }
    Moments m;
    m.mean = s / n;
    m.var = ss / n - m.mean * m.mean;
    return m;
}

} // namespace

TEST(Rng, SameKeySameStream) {
    Rng a(9, 2, 3, 4), b(9, 2, 3, 4);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(a(), b());
}

TEST(Rng, DistinctKeysDiffer) {
    Rng base(9, 2, 3, 4);
    const auto x = base();
    EXPECT_NE(x, Rng(10, 2, 3, 4)());
    EXPECT_NE(x, Rng(9, 3, 3, 4)());
    EXPECT_NE(x, Rng(9, 2, 4, 4)());
    EXPECT_NE(x, Rng(9, 2, 3, 5)());
}

TEST(Rng, UniformInOpenUnitInterval) {
    Rng r(1, 0, 0, 0);
    const auto m = moments(100000, [&](int) {
        const double u = r.uniform();
        EXPECT_GT(u, 0.0);
        EXPECT_LT(u, 1.0);
        return u;
    });
    EXPECT_NEAR(m.mean, 0.5, 0.005);
    EXPECT_NEAR(m.var, 1.0 / 12.0, 0.002);
}

TEST(TruncatedNormal, HalfNormalMean) {
    Rng r(2, 0, 0, 0);
    const auto m = moments(100000, [&](int) { return sample_truncated_normal(0.0, 1.0, 0.0, kInf, r); });
    EXPECT_NEAR(m.mean, std::sqrt(2.0 / std::numbers::pi), 0.01);
}

TEST(TruncatedNormal, UnboundedIsNormal) {
    Rng r(3, 0, 0, 0);
    const auto m = moments(100000, [&](int) { return sample_truncated_normal(0.0, 1.0, -kInf, kInf, r); });
    EXPECT_NEAR(m.mean, 0.0, 0.01);
    EXPECT_NEAR(m.var, 1.0, 0.02);
}

TEST(TruncatedNormal, FarTailStaysInSupport) {
    Rng r(4, 0, 0, 0);
    for (int i = 0; i < 20000; ++i) {
        const double x = sample_truncated_normal(0.0, 1.0, 8.0, 9.0, r);
        ASSERT_GT(x, 8.0);
        ASSERT_LT(x, 9.0);
    }
}

TEST(TruncatedNormal, TwoSidedMomentsMatchQuadrature) {
    // N(1, 2^2) on [-1, 4].
    const double mu = 1.0, sd = 2.0, lo = -1.0, hi = 4.0;
    auto dens = [&](double x) { return std::exp(-0.5 * (x - mu) * (x - mu) / (sd * sd)); };
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double z = GK::integrate(dens, lo, hi);
    const double m1 = GK::integrate([&](double x) { return x * dens(x); }, lo, hi) / z;
    const double m2 = GK::integrate([&](double x) { return x * x * dens(x); }, lo, hi) / z;
    Rng r(5, 0, 0, 0);
    const auto m = moments(100000, [&](int) { return sample_truncated_normal(mu, sd, lo, hi, r); });
    EXPECT_NEAR(m.mean, m1, 0.02);
    EXPECT_NEAR(m.var, m2 - m1 * m1, 0.04);
}

TEST(TruncatedNormal, RejectsEmptyInterval) {
    Rng r(6, 0, 0, 0);
    EXPECT_THROW(sample_truncated_normal(0.0, 1.0, 2.0, 1.0, r), ContractError);
}

TEST(InverseGaussian, UnitMean) {
    Rng r(7, 0, 0, 0);
    const auto m = moments(100000, [&](int) {
        const double x = sample_inverse_gaussian(1.0, 1.0, r);
        EXPECT_GT(x, 0.0);
        return x;
    });
    EXPECT_NEAR(m.mean, 1.0, 0.02);
}

TEST(InverseGaussian, VarianceIsMuCubedOverLambda) {
    Rng r(8, 0, 0, 0);
    const auto m = moments(100000, [&](int) { return sample_inverse_gaussian(2.0, 1.0, r); });
    EXPECT_NEAR(m.var, 8.0, 0.4);
}

TEST(Gamma, InverseGammaMoments) {
    Rng r(9, 0, 0, 0);
    // IG(5, 2): mean 2/4, variance 4/(16*3).
    const auto m = moments(100000, [&](int) { return sample_inverse_gamma(5.0, 2.0, r); });
    EXPECT_NEAR(m.mean, 0.5, 0.005);
    EXPECT_NEAR(m.var, 4.0 / 48.0, 0.005);
}

TEST(Gamma, InverseGammaDensityNormalized) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto f = [](double x) { return std::exp(log_inverse_gamma_density(x, 3.0, 2.0)); };
    EXPECT_NEAR(GK::integrate(f, 0.0, kInf, 15, 1e-12), 1.0, 1e-8);
}

TEST(SliceSample, StandardNormalMoments) {
    auto logf = [](double x) { return -0.5 * x * x; };
    double x = 0.3;
    std::uint32_t it = 0;
    const auto m = moments(100000, [&](int) {
        Rng r(10, 0, ++it, 0);
        x = slice_sample_1d(logf, x, 2.0, -kInf, kInf, r);
        return x;
    });
    EXPECT_NEAR(m.mean, 0.0, 0.02);
    EXPECT_NEAR(m.var, 1.0, 0.05);
}

TEST(SliceSample, NeverLeavesBounds) {
    auto logf = [](double x) { return -0.5 * x * x; };
    double x = 0.5;
    for (std::uint32_t it = 1; it <= 20000; ++it) {
        Rng r(11, 0, it, 0);
        x = slice_sample_1d(logf, x, 1.0, 0.0, kInf, r);
        ASSERT_GT(x, 0.0);
    }
}

TEST(SliceSample, InverseGammaMean) {
    auto logf = [](double x) { return log_inverse_gamma_density(x, 2.0, 1.0); };
    double x = 1.0;
    std::uint32_t it = 0;
    // IG(2, 1) has infinite variance; the median is a steadier companion check.
    std::vector<double> draws;
    const auto m = moments(100000, [&](int) {
        Rng r(12, 0, ++it, 0);
        x = slice_sample_log_scale(logf, x, 1.0, 0.0, kInf, r);
        draws.push_back(x);
        return x;
    });
    EXPECT_NEAR(m.mean, 1.0, 0.05);
    std::nth_element(draws.begin(), draws.begin() + 50000, draws.end());
    // Median of IG(2, 1) is 1 / (median of Gamma(2, 1)) = 1 / 1.678347.
    EXPECT_NEAR(draws[50000], 1.0 / 1.6783469900166612, 0.02);
}

TEST(SliceSample, RejectsStartOutsideBounds) {
    Rng r(13, 0, 0, 0);
    EXPECT_THROW(slice_sample_1d([](double) { return 0.0; }, 2.0, 1.0, 0.0, 1.0, r), ContractError);
}

TEST(GaussianCanonical, MomentsMatchPrecisionForm) {
    Eigen::MatrixXd P(2, 2);
    P << 2.0, 0.6, 0.6, 1.0;
    Eigen::VectorXd b(2);
    b << 1.0, -2.0;
    const Eigen::VectorXd mean = P.ldlt().solve(b);
    const Eigen::MatrixXd cov = P.inverse();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(2);
    Eigen::MatrixXd ss = Eigen::MatrixXd::Zero(2, 2);
    const int n = 100000;
    Rng r(14, 0, 0, 0);
    for (int i = 0; i < n; ++i) {
        auto x = draw_gaussian_canonical(P, b, r);
        ASSERT_TRUE(x.has_value());
        s += *x;
        ss += *x * x->transpose();
    }
    const Eigen::VectorXd m = s / n;
    const Eigen::MatrixXd c = ss / n - m * m.transpose();
    EXPECT_LE((m - mean).cwiseAbs().maxCoeff(), 0.01);
    EXPECT_LE((c - cov).cwiseAbs().maxCoeff(), 0.01);
}

TEST(GaussianCanonical, IndefinitePrecisionReportsFailure) {
    Eigen::MatrixXd P(2, 2);
    P << 1.0, 2.0, 2.0, 1.0;
    Rng r(15, 0, 0, 0);
    EXPECT_FALSE(draw_gaussian_canonical(P, Eigen::VectorXd::Zero(2), r).has_value());
}
