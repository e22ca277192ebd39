#pragma once

// Exact or high-accuracy reference solvers for projections and proximal
// mappings. These certify the gap bounds; the samplers never call them.

#include <gapshrink/gap.hpp>
#include <gapshrink/penalty.hpp>

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace gapshrink {

struct OracleResult {
    VectorXd solution;
    VectorXd dual; ///< recovered dual certificate (solver specific)
    double objective = 0.0;
    long iterations = 0;
    double residual = 0.0;
};

/// sign(beta) (|beta| - lambda)_+, the l1 proximal mapping.
inline VectorXd soft_threshold(const VectorXd &beta, double lambda) {
    if (!(lambda >= 0.0))
        throw ContractError("soft_threshold: lambda must be nonnegative");
    return beta.unaryExpr([lambda](double b) {
        double m = std::abs(b) - lambda;
        return m > 0.0 ? std::copysign(m, b) : 0.0;
    });
}

/// Euclidean projection onto {z : ||z||_1 <= r} by sort and threshold.
inline VectorXd project_l1_ball(const VectorXd &beta, double r) {
    if (!(r > 0.0))
        throw ContractError("project_l1_ball: radius must be positive");
    if (beta.lpNorm<1>() <= r)
        return beta;
    const Index p = beta.size();
    std::vector<double> mags(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i)
        mags[static_cast<std::size_t>(i)] = std::abs(beta[i]);
    std::vector<std::size_t> order(mags.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mags[a] > mags[b]; });
    double cumsum = 0.0, tau = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        cumsum += mags[order[k]];
        double t = (cumsum - r) / static_cast<double>(k + 1);
        if (mags[order[k]] - t > 0.0)
            tau = t;
        else
            break;
    }
    return soft_threshold(beta, tau);
}

namespace detail {

inline double fused_primal(const VectorXd &z, const VectorXd &beta, const MatrixXd &D,
                           double lambda) {
    return 0.5 * (z - beta).squaredNorm() + lambda * (D * z).lpNorm<1>();
}

/// f(z;beta) - d(u;beta) for the split Dz = w with multiplier u.
inline double fused_duality_gap(const VectorXd &z, const VectorXd &u, const VectorXd &beta,
                                const MatrixXd &D, double lambda) {
    VectorXd Dtu = D.transpose() * u;
    double dual = -0.5 * Dtu.squaredNorm() + beta.dot(Dtu);
    return fused_primal(z, beta, D, lambda) - dual;
}

} // namespace detail

/// argmin_z 1/2 ||z - beta||^2 + lambda ||Dz||_1 by ADMM on the split Dz = w,
/// with residual balancing of the penalty parameter. Stops once both
/// residuals are below tol and the duality gap is below 10 tol.
inline OracleResult prox_fused(const VectorXd &beta, const MatrixXd &D, double lambda, double tol,
                               long max_iter = 100000) {
    if (D.cols() != beta.size())
        throw DimensionError("prox_fused: D columns must match beta");
    if (!(tol > 0.0))
        throw ContractError("prox_fused: tol must be positive");
    if (!(lambda >= 0.0))
        throw ContractError("prox_fused: lambda must be nonnegative");
    const Index p = beta.size(), d = D.rows();
    if (lambda == 0.0)
        return {beta, VectorXd::Zero(d), 0.0, 0, 0.0};

    double rho = 1.0;
    const MatrixXd DtD = D.transpose() * D;
    auto factor = [&](double r) {
        return Eigen::LLT<MatrixXd>(MatrixXd::Identity(p, p) + r * DtD);
    };
    Eigen::LLT<MatrixXd> llt = factor(rho);

    VectorXd z = beta, w = D * beta, y = VectorXd::Zero(d);
    double residual = std::numeric_limits<double>::infinity();
    for (long it = 1; it <= max_iter; ++it) {
        z = llt.solve(beta + rho * D.transpose() * (w - y));
        VectorXd Dz = D * z;
        VectorXd w_old = w;
        w = soft_threshold(Dz + y, lambda / rho);
        y += Dz - w;

        const double r_primal = (Dz - w).norm();
        const double r_dual = rho * (D.transpose() * (w - w_old)).norm();
        residual = std::max(r_primal, r_dual);
        VectorXd u = (rho * y).cwiseMax(-lambda).cwiseMin(lambda);
        if (residual <= tol) {
            double gap = detail::fused_duality_gap(z, u, beta, D, lambda);
            if (gap <= 10.0 * tol)
                return {z, u, detail::fused_primal(z, beta, D, lambda), it, residual};
        }
        if (r_primal > 10.0 * r_dual) {
            rho *= 2.0;
            y /= 2.0;
            llt = factor(rho);
        } else if (r_dual > 10.0 * r_primal) {
            rho /= 2.0;
            y *= 2.0;
            llt = factor(rho);
        }
    }
    throw ConvergenceError("prox_fused: iteration cap reached", residual);
}

/// Singular-value soft-thresholding, the nuclear-norm proximal mapping.
inline MatrixXd svt(const MatrixXd &beta, double lambda) {
    if (!(lambda >= 0.0))
        throw ContractError("svt: lambda must be nonnegative");
    if (!beta.allFinite())
        throw NumericError("svt: non-finite input");
    Eigen::JacobiSVD<MatrixXd> svd(beta, Eigen::ComputeThinU | Eigen::ComputeThinV);
    VectorXd s = (svd.singularValues().array() - lambda).cwiseMax(0.0);
    MatrixXd out = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
    if (!out.allFinite())
        throw NumericError("svt: SVD produced non-finite values");
    return out;
}

struct KlProjection {
    SimplexPoint point;
    double multiplier; ///< nu >= 0 with point_j proportional to beta_j exp(-nu a_j)
    int iterations;
    double residual;   ///< nu * |b - a'point|
};

/// KL projection of beta onto {z in simplex : a'z <= b} by bisection on the
/// scalar multiplier.
inline KlProjection kl_project(const SimplexPoint &beta, const VectorXd &a, double b, double tol) {
    const Index p = beta.size();
    if (a.size() != p)
        throw DimensionError("kl_project: a and beta differ in size");
    if (!(tol > 0.0))
        throw ContractError("kl_project: tol must be positive");
    if ((beta.values().array() <= 0.0).any())
        throw DomainError("kl_project: beta must be strictly positive");

    const VectorXd logb = beta.values().array().log();
    auto tilt = [&](double nu) {
        VectorXd t = logb - nu * a;
        double m = t.maxCoeff();
        VectorXd e = (t.array() - m).exp();
        return VectorXd(e / e.sum());
    };
    if (a.dot(beta.values()) <= b)
        return {beta, 0.0, 0, 0.0};
    if (b <= a.minCoeff() + 1e-12 * std::max(1.0, std::abs(b)))
        throw InfeasibleError("kl_project: constraint leaves no interior point on the simplex");

    double lo = 0.0, hi = 1.0;
    int it = 0;
    while (a.dot(tilt(hi)) > b) {
        lo = hi;
        hi *= 2.0;
        if (++it > 2000 || !std::isfinite(hi))
            throw InfeasibleError("kl_project: failed to bracket the multiplier");
    }
    VectorXd z = tilt(hi);
    for (; it < 5000; ++it) {
        double gap = b - a.dot(z);
        if (gap >= 0.0 && hi * gap <= tol)
            break;
        if (hi - lo <= 1e-16 * hi)
            break;
        double mid = 0.5 * (lo + hi);
        VectorXd zm = tilt(mid);
        if (a.dot(zm) > b) {
            lo = mid;
        } else {
            hi = mid;
            z = std::move(zm);
        }
    }
    double residual = hi * std::abs(b - a.dot(z));
    return {SimplexPoint(z), hi, it, residual};
}

/// Max over coordinates of |central difference - reported gradient|.
inline double finite_diff_check(const std::function<double(const VectorXd &)> &f,
                                const VectorXd &x, const VectorXd &g, double h) {
    if (g.size() != x.size())
        throw DimensionError("finite_diff_check: gradient size mismatch");
    double worst = 0.0;
    VectorXd xp = x, xm = x;
    for (Index i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        double cd = (f(xp) - f(xm)) / (2.0 * h);
        worst = std::max(worst, std::abs(cd - g[i]));
        xp[i] = xm[i] = x[i];
    }
    return worst;
}

/// Grid argmin of 1/2 ||beta - z||^2 + g(z) in dimension <= 3, followed by
/// successively finer local grids around the incumbent. The coarse grid spans
/// [-2||beta||_inf, 2||beta||_inf] per axis.
inline VectorXd brute_force_prox(const VectorXd &beta, const PenaltySpec &spec, int grid = 1000) {
    const Index d = beta.size();
    if (d < 1 || d > 3)
        throw UnsupportedError("brute_force_prox: dimension must be 1, 2 or 3");
    if (grid < 1000)
        throw ContractError("brute_force_prox: need at least 1000 grid points per axis");
    detail::check_dim(spec, d, "brute_force_prox");

    auto objective = [&](const VectorXd &z) {
        return 0.5 * (beta - z).squaredNorm() + penalty_value(spec, z).to_double();
    };
    const double half = beta.size() ? std::max(2.0 * beta.lpNorm<Eigen::Infinity>(), 1.0) : 1.0;

    VectorXd best = VectorXd::Zero(d);
    double best_val = objective(best);
    auto scan = [&](const VectorXd &center, double halfwidth, int points) {
        const double step = 2.0 * halfwidth / (points - 1);
        VectorXd z(d);
        std::vector<int> idx(static_cast<std::size_t>(d), 0);
        VectorXd local_best = best;
        double local_val = best_val;
        while (true) {
            for (Index k = 0; k < d; ++k)
                z[k] = center[k] - halfwidth + step * idx[static_cast<std::size_t>(k)];
            double v = objective(z);
            if (v < local_val) {
                local_val = v;
                local_best = z;
            }
            Index k = 0;
            while (k < d && ++idx[static_cast<std::size_t>(k)] == points)
                idx[static_cast<std::size_t>(k++)] = 0;
            if (k == d)
                break;
        }
        best = local_best;
        best_val = local_val;
        return step;
    };

    const int coarse = d == 3 ? 201 : grid + 1;
    double step = scan(VectorXd::Zero(d), half, coarse);
    const double target = 2.0 * half / grid;
    while (step > 1e-11 * half) {
        step = scan(best, 3.0 * step, 41);
        if (step < target * 1e-3)
            break;
    }
    return best;
}

} // namespace gapshrink
