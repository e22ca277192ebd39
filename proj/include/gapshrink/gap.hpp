#pragma once

#include <gapshrink/penalty.hpp>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace gapshrink {

/// A point of the probability simplex.
class SimplexPoint {
  public:
    explicit SimplexPoint(VectorXd z) : z_(std::move(z)) {
        if (z_.size() < 1)
            throw DimensionError("SimplexPoint: empty vector");
        if ((z_.array() < 0.0).any())
            throw ContractError("SimplexPoint: negative entry");
        if (std::abs(z_.sum() - 1.0) > 1e-12)
            throw ContractError("SimplexPoint: entries must sum to one");
    }
    const VectorXd &values() const { return z_; }
    Index size() const { return z_.size(); }
    double operator[](Index i) const { return z_[i]; }

  private:
    VectorXd z_;
};

/// Primal point, dual point and anchor with the gap they score.
struct GapTriple {
    VectorXd theta;
    VectorXd u;
    VectorXd beta;
    ExtendedReal gap;
};

/// g*(u) + g(theta) - u'theta, the proximal duality gap under beta = theta + u.
inline ExtendedReal fenchel_young_gap(const PenaltySpec &spec, const VectorXd &theta,
                                      const VectorXd &u) {
    if (theta.size() != u.size())
        throw DimensionError("fenchel_young_gap: theta and u differ in size");
    ExtendedReal conj = conjugate_value(spec, u);
    if (conj.is_infinite())
        return conj;
    ExtendedReal g = penalty_value(spec, theta);
    if (g.is_infinite())
        return g;
    return conj.value() + g.value() - u.dot(theta);
}

inline GapTriple make_proximal_triple(const PenaltySpec &spec, VectorXd theta, VectorXd u) {
    ExtendedReal gap = fenchel_young_gap(spec, theta, u);
    VectorXd beta = theta + u;
    return {std::move(theta), std::move(u), std::move(beta), gap};
}

/// Separable l1 gap sum_j (lambda - |u_j|)|theta_j|. Requires ||u||_inf <= lambda
/// and u_j theta_j >= 0; a zero theta_j admits any u_j in [-lambda, lambda].
inline ExtendedReal l1_gap(double lambda, const VectorXd &theta, const VectorXd &u) {
    if (theta.size() != u.size())
        throw DimensionError("l1_gap: theta and u differ in size");
    double total = 0.0;
    for (Index j = 0; j < theta.size(); ++j) {
        double a = std::abs(u[j]);
        if (!within_bound(a, lambda) || u[j] * theta[j] < 0.0)
            return ExtendedReal::infinity();
        total += std::max(lambda - a, 0.0) * std::abs(theta[j]);
    }
    return total;
}

/// Generalized l1 gap sum_j (lambda - |u_j|)|(D theta)_j| with dual u in R^d,
/// under beta = theta + D'u and the sign convention u_j (D theta)_j >= 0.
inline ExtendedReal generalized_l1_gap(const MatrixXd &D, double lambda, const VectorXd &theta,
                                       const VectorXd &u) {
    if (D.cols() != theta.size() || D.rows() != u.size())
        throw DimensionError("generalized_l1_gap: D, theta and u shapes disagree");
    return l1_gap(lambda, D * theta, u);
}

/// Same primal-dual pair without the sign convention:
/// lambda ||D theta||_1 - u'D theta, finite whenever ||u||_inf <= lambda.
inline ExtendedReal generalized_l1_duality_gap(const MatrixXd &D, double lambda,
                                               const VectorXd &theta, const VectorXd &u) {
    if (D.cols() != theta.size() || D.rows() != u.size())
        throw DimensionError("generalized_l1_duality_gap: shapes disagree");
    if (u.size() && !within_bound(u.lpNorm<Eigen::Infinity>(), lambda))
        return ExtendedReal::infinity();
    VectorXd d = D * theta;
    return lambda * d.lpNorm<1>() - u.dot(d);
}

inline double kl_divergence(const VectorXd &z, const VectorXd &beta) {
    double total = 0.0;
    for (Index j = 0; j < z.size(); ++j)
        if (z[j] > 0.0)
            total += z[j] * std::log(z[j] / beta[j]);
    return total;
}

/// Bregman (KL) projection gap onto C0 intersected with the simplex:
/// KL(z||beta) + log sum_j beta_j e^{-u_j} + sigma_C0(u). An empty c0 means
/// C0 is the whole space.
inline ExtendedReal kl_gap(const SimplexPoint &beta, const SimplexPoint &z, const VectorXd &u,
                           const std::optional<PenaltySpec> &c0) {
    const Index p = beta.size();
    if (z.size() != p || u.size() != p)
        throw DimensionError("kl_gap: beta, z and u differ in size");
    if ((beta.values().array() <= 0.0).any())
        throw DomainError("kl_gap: beta must be strictly positive");
    ExtendedReal sigma = 0.0;
    if (c0) {
        if (penalty_value(*c0, z.values()).is_infinite())
            return ExtendedReal::infinity();
        sigma = support_function(*c0, u);
    } else if ((u.array() != 0.0).any()) {
        sigma = ExtendedReal::infinity();
    }
    if (sigma.is_infinite())
        return sigma;
    VectorXd t = beta.values().array().log() - u.array();
    double m = t.maxCoeff();
    double lse = m + std::log((t.array() - m).exp().sum());
    return kl_divergence(z.values(), beta.values()) + lse + sigma.value();
}

/// Infimal-convolution upper bound on the gap of g = sum_j g_j:
/// sum_j g_j*(v_j) + g(z) - (sum_j v_j)'z, with z = beta - sum_j v_j.
inline ExtendedReal variational_additive_gap(std::span<const PenaltySpec> parts,
                                             const VectorXd &z, std::span<const VectorXd> v,
                                             const VectorXd &beta) {
    if (parts.size() != v.size() || parts.empty())
        throw DimensionError("variational_additive_gap: one dual block per part required");
    if (beta.size() != z.size())
        throw DimensionError("variational_additive_gap: beta and z differ in size");
    VectorXd vsum = VectorXd::Zero(z.size());
    for (const auto &vj : v) {
        if (vj.size() != z.size())
            throw DimensionError("variational_additive_gap: dual block size mismatch");
        vsum += vj;
    }
    if (((beta - vsum) - z).cwiseAbs().maxCoeff() > 1e-10)
        throw ContractError("variational_additive_gap: z != beta - sum_j v_j");
    ExtendedReal total = 0.0;
    for (std::size_t j = 0; j < parts.size(); ++j) {
        total += penalty_value(parts[j], z);
        if (total.is_infinite())
            return total;
    }
    for (std::size_t j = 0; j < parts.size(); ++j) {
        total += conjugate_value(parts[j], v[j]);
        if (total.is_infinite())
            return total;
    }
    return total.value() - vsum.dot(z);
}

/// Factorized nuclear + elementwise-l1 gap for theta = A B' with dual pieces
/// V1 (operator-norm ball of radius lambda1) and V2 (box of half-width lambda2):
/// lambda1/2 (|A|_F^2 + |B|_F^2) + lambda2 |AB'|_1 - <V1 + V2, AB'>.
inline ExtendedReal variational_nuclear_gap(const MatrixXd &A, const MatrixXd &B,
                                            const MatrixXd &U, double lambda1, double lambda2) {
    if (A.cols() != B.cols())
        throw DimensionError("variational_nuclear_gap: A and B ranks differ");
    if (U.rows() != A.rows() || U.cols() != B.rows())
        throw DimensionError("variational_nuclear_gap: dual shape differs from AB'");
    MatrixXd theta = A * B.transpose();
    return 0.5 * lambda1 * (A.squaredNorm() + B.squaredNorm()) +
           lambda2 * theta.cwiseAbs().sum() - (U.array() * theta.array()).sum();
}

/// As above with V1, V2 given separately; infeasible duals give +inf.
/// V1 feasibility accepts ||V1||_F <= lambda1 outright and otherwise falls
/// back to a power-iteration operator norm.
inline ExtendedReal variational_nuclear_gap(const MatrixXd &A, const MatrixXd &B,
                                            const MatrixXd &V1, const MatrixXd &V2,
                                            double lambda1, double lambda2) {
    if (V1.rows() != V2.rows() || V1.cols() != V2.cols())
        throw DimensionError("variational_nuclear_gap: V1 and V2 shapes differ");
    if (V2.size() && !within_bound(V2.cwiseAbs().maxCoeff(), lambda2))
        return ExtendedReal::infinity();
    if (!within_bound(V1.norm(), lambda1) && operator_norm_power(V1) > lambda1 + 1e-8)
        return ExtendedReal::infinity();
    return variational_nuclear_gap(A, B, MatrixXd(V1 + V2), lambda1, lambda2);
}

/// sqrt(2 gap / mu): the distance bound between a primal point and the exact
/// minimizer of a mu-strongly convex primal.
inline double strong_convexity_radius(double gap, double mu) {
    if (!(mu > 0.0))
        throw ContractError("strong_convexity_radius: mu must be positive");
    if (gap < -1e-12)
        throw ContractError("strong_convexity_radius: negative gap");
    return std::sqrt(2.0 * std::max(gap, 0.0) / mu);
}

inline double strong_convexity_radius(const ExtendedReal &gap, double mu) {
    if (gap.is_infinite())
        return std::numeric_limits<double>::infinity();
    return strong_convexity_radius(gap.value(), mu);
}

struct HessianBlock {
    MatrixXd block;
    double min_eigenvalue;
};

/// alpha * [[grad^2 g(theta), -I], [-I, grad^2 g*(u)]] for smooth g.
inline HessianBlock hessian_block(const PenaltySpec &spec, const VectorXd &theta,
                                  const VectorXd &u, double alpha) {
    const auto *q = spec.get_if<QuadraticPenalty>();
    if (!q)
        throw UnsupportedError("hessian_block: " + spec.name() + " is not twice differentiable");
    if (!(alpha > 0.0))
        throw ContractError("hessian_block: alpha must be positive");
    const Index p = q->Q.rows();
    if (theta.size() != p || u.size() != p)
        throw DimensionError("hessian_block: point dimension mismatch");
    MatrixXd H(2 * p, 2 * p);
    H.topLeftCorner(p, p) = q->Q;
    H.topRightCorner(p, p) = -MatrixXd::Identity(p, p);
    H.bottomLeftCorner(p, p) = -MatrixXd::Identity(p, p);
    H.bottomRightCorner(p, p) = q->Q.inverse();
    H *= alpha;
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(H, Eigen::EigenvaluesOnly);
    return {std::move(H), eig.eigenvalues().minCoeff()};
}

} // namespace gapshrink
