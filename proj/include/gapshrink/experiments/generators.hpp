#pragma once

// Synthetic data for the three simulation studies.

#include <gapshrink/errors.hpp>
#include <gapshrink/random.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace gapshrink {

struct SparseRegressionData {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    Eigen::VectorXd theta0;
};

/// n = 200, p = 500, five nonzeros drawn from {-4, -2, 2, 4}, unit noise.
inline SparseRegressionData gen_sparse_regression(std::uint64_t seed, Eigen::Index n = 200,
                                                  Eigen::Index p = 500, Eigen::Index nonzeros = 5) {
    if (nonzeros > p)
        throw ContractError("gen_sparse_regression: more nonzeros than coefficients");
    Rng rng(seed, 0, 0, 100);
    SparseRegressionData d;
    d.X.resize(n, p);
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            d.X(i, j) = rng.normal();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(p));
    std::iota(idx.begin(), idx.end(), 0);
    for (Eigen::Index k = 0; k < nonzeros; ++k) {
        auto pick = static_cast<std::size_t>(k) + rng.below(static_cast<std::uint64_t>(p - k));
        std::swap(idx[static_cast<std::size_t>(k)], idx[pick]);
    }
    static constexpr double values[] = {-4.0, -2.0, 2.0, 4.0};
    d.theta0 = Eigen::VectorXd::Zero(p);
    for (Eigen::Index k = 0; k < nonzeros; ++k)
        d.theta0[idx[static_cast<std::size_t>(k)]] = values[rng.below(4)];
    d.y = d.X * d.theta0;
    for (Eigen::Index i = 0; i < n; ++i)
        d.y[i] += rng.normal();
    return d;
}

struct LowRankData {
    std::vector<Eigen::MatrixXd> Y;
    Eigen::MatrixXd theta0;
};

/// 50 x 40 truth with rank-one 5 x 5 blocks of singular values 10, 7, 4 on
/// rows and columns {0-4}, {10-14}, {20-24}; S noisy copies.
inline LowRankData gen_lowrank_sparse(std::uint64_t seed, int S = 100, double sigma = 0.3) {
    if (S < 1)
        throw ContractError("gen_lowrank_sparse: need at least one copy");
    Rng rng(seed, 0, 0, 200);
    LowRankData d;
    d.theta0 = Eigen::MatrixXd::Zero(50, 40);
    static constexpr double amplitude[] = {10.0, 7.0, 4.0};
    static constexpr int offset[] = {0, 10, 20};
    for (int b = 0; b < 3; ++b) {
        Eigen::VectorXd a(5), c(5);
        for (int i = 0; i < 5; ++i) {
            a[i] = rng.normal();
            c[i] = rng.normal();
        }
        a.normalize();
        c.normalize();
        d.theta0.block(offset[b], offset[b], 5, 5) = amplitude[b] * a * c.transpose();
    }
    d.Y.reserve(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
        Eigen::MatrixXd ys = d.theta0;
        for (Eigen::Index j = 0; j < ys.cols(); ++j)
            for (Eigen::Index i = 0; i < ys.rows(); ++i)
                ys(i, j) += sigma * rng.normal();
        d.Y.push_back(std::move(ys));
    }
    return d;
}

struct FusedProbitData {
    Eigen::MatrixXd Y; ///< n x m, entries 0 or 1
    Eigen::MatrixXd X; ///< n x p
    std::vector<int> department;
    Eigen::MatrixXd theta0; ///< m x p
};

struct FusedProbitOptions {
    Eigen::Index n = 2000;
    Eigen::Index p = 2;
    std::vector<int> department{0, 0, 0, 0, 1, 1, 1, 1};
    std::vector<int> deviant;  ///< categories shifted away from their department
    double deviant_shift = 1.5;
    double department_scale = 1.0;
};

/// Department-constant coefficients (N(0, scale^2) per department and
/// covariate), optional deviant categories shifted on every covariate, and
/// probit responses.
inline FusedProbitData gen_fused_probit(std::uint64_t seed, const FusedProbitOptions &opt) {
    const Eigen::Index m = static_cast<Eigen::Index>(opt.department.size());
    if (m < 2 || opt.p < 1 || opt.n < 1)
        throw ContractError("gen_fused_probit: need m >= 2, p >= 1, n >= 1");
    const int ndep = *std::max_element(opt.department.begin(), opt.department.end()) + 1;
    if (*std::min_element(opt.department.begin(), opt.department.end()) < 0)
        throw ContractError("gen_fused_probit: department labels must be >= 0");
    for (int g = 0; g < ndep; ++g)
        if (std::find(opt.department.begin(), opt.department.end(), g) == opt.department.end())
            throw ContractError("gen_fused_probit: department labels must be 0..D-1 with none empty");
    Rng rng(seed, 0, 0, 300);
    FusedProbitData d;
    d.department = opt.department;
    Eigen::MatrixXd dep(ndep, opt.p);
    for (int g = 0; g < ndep; ++g)
        for (Eigen::Index k = 0; k < opt.p; ++k)
            dep(g, k) = opt.department_scale * rng.normal();
    d.theta0.resize(m, opt.p);
    for (Eigen::Index j = 0; j < m; ++j)
        d.theta0.row(j) = dep.row(opt.department[static_cast<std::size_t>(j)]);
    for (int j : opt.deviant) {
        if (j < 0 || j >= m)
            throw ContractError("gen_fused_probit: deviant index out of range");
        d.theta0.row(j).array() += opt.deviant_shift;
    }
    d.X.resize(opt.n, opt.p);
    for (Eigen::Index i = 0; i < opt.n; ++i)
        for (Eigen::Index k = 0; k < opt.p; ++k)
            d.X(i, k) = rng.normal();
    Eigen::MatrixXd mu = d.X * d.theta0.transpose();
    d.Y.resize(opt.n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < opt.n; ++i)
            d.Y(i, j) = mu(i, j) + rng.normal() > 0.0 ? 1.0 : 0.0;
    return d;
}

} // namespace gapshrink
