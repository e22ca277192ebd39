#pragma once

// Randomized certification of the gap bounds against the exact oracles.

#include <gapshrink/gap.hpp>
#include <gapshrink/oracles.hpp>
#include <gapshrink/random.hpp>

#include <chrono>
#include <string>

namespace gapshrink {

struct CertResult {
    std::string name;
    long cases = 0;
    double worst = 0.0;  ///< largest violation (positive means the bound failed)
    double seconds = 0.0;
    bool passed = false;
};

namespace detail {

inline VectorXd normal_vector(Index n, Rng &rng, double scale = 1.0) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i)
        v[i] = scale * rng.normal();
    return v;
}

inline VectorXd dirichlet_ones(Index n, Rng &rng) {
    VectorXd v(n);
    for (Index i = 0; i < n; ++i)
        v[i] = rng.exponential();
    return v / v.sum();
}

/// Scale x so that norm(x) <= r, shrinking by a random factor.
inline VectorXd into_ball(VectorXd x, NormKind k, double r, Rng &rng) {
    double n = vector_norm(x, k);
    if (n > 0.0)
        x *= r * rng.uniform() / n;
    return x;
}

inline MatrixXd difference_matrix(Index p) {
    MatrixXd D = MatrixXd::Zero(p - 1, p);
    for (Index i = 0; i + 1 < p; ++i) {
        D(i, i) = 1.0;
        D(i, i + 1) = -1.0;
    }
    return D;
}

template <class F> CertResult timed(const std::string &name, F &&body) {
    const auto t0 = std::chrono::steady_clock::now();
    CertResult r = body();
    r.name = name;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

} // namespace detail

/// Gap >= -tol over random dual-feasible (spec, theta, u) for every penalty kind.
inline CertResult certify_gap_nonnegativity(long cases, std::uint64_t seed, double tol = 1e-10) {
    return detail::timed("gap_nonnegativity", [&] {
        CertResult r;
        double worst = -std::numeric_limits<double>::infinity();
        auto note = [&](const ExtendedReal &g) {
            if (g.is_finite())
                worst = std::max(worst, -g.value());
        };
        for (long c = 0; c < cases; ++c) {
            Rng rng(seed, 0, static_cast<std::uint32_t>(c), 1);
            const Index p = 2 + static_cast<Index>(rng.below(7));
            const double lam = 0.1 + 3.0 * rng.uniform();
            VectorXd theta = detail::normal_vector(p, rng, 2.0);
            switch (c % 10) {
            case 0: { // l1, Fenchel-Young and separable forms
                VectorXd u = lam * (2.0 * VectorXd::NullaryExpr(p, [&] { return rng.uniform(); }).array() - 1.0).matrix();
                note(fenchel_young_gap(PenaltySpec::l1(lam), theta, u));
                VectorXd us = u.cwiseAbs().cwiseProduct(theta.unaryExpr([](double t) { return t < 0 ? -1.0 : 1.0; }));
                note(l1_gap(lam, theta, us));
                break;
            }
            case 1: { // generalized l1
                const Index d = 1 + static_cast<Index>(rng.below(5));
                MatrixXd D(d, p);
                for (Index i = 0; i < D.size(); ++i)
                    D.data()[i] = rng.normal();
                VectorXd u = lam * (2.0 * VectorXd::NullaryExpr(d, [&] { return rng.uniform(); }).array() - 1.0).matrix();
                note(generalized_l1_duality_gap(D, lam, theta, u));
                VectorXd Dt = D * theta;
                VectorXd us = u.cwiseAbs().cwiseProduct(Dt.unaryExpr([](double t) { return t < 0 ? -1.0 : 1.0; }));
                note(generalized_l1_gap(D, lam, theta, us));
                break;
            }
            case 2:
            case 3: { // norm balls
                const NormKind k = static_cast<NormKind>(rng.below(3));
                PenaltySpec s = PenaltySpec::norm_ball(k, lam);
                note(fenchel_young_gap(s, detail::into_ball(theta, k, lam, rng), detail::normal_vector(p, rng, 3.0)));
                break;
            }
            case 4: { // disjoint group l2
                std::vector<std::vector<Index>> groups(2);
                for (Index i = 0; i < p; ++i)
                    groups[static_cast<std::size_t>(i % 2)].push_back(i);
                std::vector<double> radii{lam, 0.5 * lam + 0.1};
                PenaltySpec s = PenaltySpec::group_l2(groups, radii, p);
                VectorXd z = theta;
                for (std::size_t g = 0; g < 2; ++g) {
                    double n = 0.0;
                    for (Index i : groups[g])
                        n += z[i] * z[i];
                    n = std::sqrt(n);
                    double f = n > 0 ? radii[g] * rng.uniform() / n : 0.0;
                    for (Index i : groups[g])
                        z[i] *= f;
                }
                note(fenchel_young_gap(s, z, detail::normal_vector(p, rng, 3.0)));
                break;
            }
            case 5: { // nuclear
                const Index rows = 2 + static_cast<Index>(rng.below(3)), cols = 2 + static_cast<Index>(rng.below(3));
                PenaltySpec s = PenaltySpec::nuclear(lam, rows, cols);
                VectorXd t = detail::normal_vector(rows * cols, rng, 2.0);
                MatrixXd U = detail::normal_vector(rows * cols, rng).reshaped(rows, cols);
                Eigen::JacobiSVD<MatrixXd> svd(U);
                U *= lam * rng.uniform() / svd.singularValues()[0];
                note(fenchel_young_gap(s, t, U.reshaped()));
                MatrixXd A = detail::normal_vector(rows * 2, rng).reshaped(rows, 2);
                MatrixXd B = detail::normal_vector(cols * 2, rng).reshaped(cols, 2);
                MatrixXd V2 = (lam * (2.0 * MatrixXd::NullaryExpr(rows, cols, [&] { return rng.uniform(); }).array() - 1.0)).matrix();
                note(variational_nuclear_gap(A, B, U, V2, std::max(U.norm(), 1e-300), lam));
                break;
            }
            case 6: { // quadratic
                MatrixXd M = detail::normal_vector(p * p, rng).reshaped(p, p);
                MatrixXd Q = M * M.transpose() + 0.1 * MatrixXd::Identity(p, p);
                note(fenchel_young_gap(PenaltySpec::quadratic(Q), theta, detail::normal_vector(p, rng, 2.0)));
                break;
            }
            case 7: { // halfspace
                VectorXd a = detail::normal_vector(p, rng);
                double b = a.dot(theta) + rng.uniform();
                note(fenchel_young_gap(PenaltySpec::halfspace(a, b), theta, rng.uniform() * 3.0 * a));
                break;
            }
            case 8: { // sum via infimal convolution
                std::vector<PenaltySpec> parts{PenaltySpec::norm_ball(NormKind::L1, lam),
                                               PenaltySpec::norm_ball(NormKind::LInf, 0.5 * lam)};
                VectorXd z = detail::into_ball(theta, NormKind::LInf, 0.5 * lam, rng);
                z = detail::into_ball(z, NormKind::L1, lam, rng);
                std::vector<VectorXd> v{detail::normal_vector(p, rng), detail::normal_vector(p, rng)};
                VectorXd beta = z + v[0] + v[1];
                note(variational_additive_gap(parts, z, v, beta));
                break;
            }
            default: { // KL gap on the simplex with a halfspace constraint
                VectorXd beta = detail::dirichlet_ones(p, rng);
                VectorXd a = detail::normal_vector(p, rng);
                VectorXd z = detail::dirichlet_ones(p, rng);
                double b = a.dot(z) + 0.1 * rng.uniform();
                VectorXd u = rng.uniform() * 2.0 * a;
                note(kl_gap(SimplexPoint(beta), SimplexPoint(z), u, PenaltySpec::halfspace(a, b)));
                note(kl_gap(SimplexPoint(beta), SimplexPoint(z), VectorXd::Zero(p), std::nullopt));
                break;
            }
            }
        }
        r.cases = cases;
        r.worst = worst;
        r.passed = worst <= tol;
        return r;
    });
}

/// ||z - prox(beta)|| <= sqrt(2 (f(z) - d(u))) + slack for random feasible
/// perturbations (z, u) of the oracle pair; l1 and generalized l1 kinds.
inline CertResult certify_strong_convexity(long cases_per_kind, std::uint64_t seed,
                                           double slack = 1e-6) {
    return detail::timed("strong_convexity_radius", [&] {
        CertResult r;
        double worst = -std::numeric_limits<double>::infinity();
        for (int kind = 0; kind < 2; ++kind)
            for (long c = 0; c < cases_per_kind; ++c) {
                Rng rng(seed, static_cast<std::uint32_t>(kind), static_cast<std::uint32_t>(c), 2);
                const Index p = 2 + static_cast<Index>(rng.below(8));
                const double lam = 0.1 + 2.0 * rng.uniform();
                VectorXd beta = detail::normal_vector(p, rng, 2.0);
                MatrixXd D = kind == 0 ? MatrixXd(MatrixXd::Identity(p, p)) : detail::difference_matrix(p);
                VectorXd zhat, uhat;
                if (kind == 0) {
                    zhat = soft_threshold(beta, lam);
                    uhat = beta - zhat;
                } else {
                    OracleResult o = prox_fused(beta, D, lam, 1e-10);
                    zhat = o.solution;
                    uhat = o.dual;
                }
                const double scale = std::pow(10.0, -3.0 * rng.uniform());
                VectorXd z = zhat + detail::normal_vector(p, rng, scale);
                VectorXd u = (uhat + detail::normal_vector(uhat.size(), rng, scale)).cwiseMax(-lam).cwiseMin(lam);
                const double gap = detail::fused_duality_gap(z, u, beta, D, lam);
                const double radius = strong_convexity_radius(std::max(gap, 0.0), 1.0);
                worst = std::max(worst, (z - zhat).norm() - radius - slack);
                ++r.cases;
            }
        r.worst = worst;
        r.passed = worst <= 0.0;
        return r;
    });
}

/// KL(z || kl_project(beta)) <= kl_gap(beta, z, u) + slack on random simplex
/// instances with a halfspace constraint.
inline CertResult certify_bregman(long cases, std::uint64_t seed, double slack = 1e-6) {
    return detail::timed("bregman_kl", [&] {
        CertResult r;
        double worst = -std::numeric_limits<double>::infinity();
        for (long c = 0; c < cases; ++c) {
            Rng rng(seed, 0, static_cast<std::uint32_t>(c), 3);
            const Index p = 2 + static_cast<Index>(rng.below(8));
            VectorXd beta = detail::dirichlet_ones(p, rng).cwiseMax(1e-6);
            beta /= beta.sum();
            VectorXd a = detail::normal_vector(p, rng);
            // b between min(a) and a'beta keeps the constraint active with an interior point.
            const double lo = a.minCoeff(), hi = std::max(a.dot(beta), lo + 1e-3);
            const double b = lo + (0.2 + 0.8 * rng.uniform()) * (hi - lo);
            KlProjection proj = kl_project(SimplexPoint(beta), a, b, 1e-13);
            VectorXd z;
            for (int attempt = 0; attempt < 1000; ++attempt) {
                VectorXd cand = detail::dirichlet_ones(p, rng);
                const double mix = rng.uniform();
                cand = mix * cand + (1.0 - mix) * proj.point.values();
                cand /= cand.sum();
                if (a.dot(cand) <= b) {
                    z = cand;
                    break;
                }
            }
            if (z.size() == 0)
                z = proj.point.values();
            const double nu = proj.multiplier * std::exp(rng.normal());
            VectorXd u = nu * a;
            ExtendedReal gap = kl_gap(SimplexPoint(beta), SimplexPoint(z), u, PenaltySpec::halfspace(a, b));
            const double lhs = kl_divergence(z, proj.point.values());
            worst = std::max(worst, lhs - gap.to_double() - slack);
            ++r.cases;
        }
        r.worst = worst;
        r.passed = worst <= 0.0;
        return r;
    });
}

/// Gap at oracle optima: closed forms (l1, l1 ball, nuclear) must give
/// <= closed_tol, the ADMM fused prox <= 10 admm_tol.
inline CertResult certify_zero_gap(long cases, std::uint64_t seed, double closed_tol = 1e-8,
                                   double admm_tol = 1e-9) {
    return detail::timed("zero_gap_at_optimum", [&] {
        CertResult r;
        double worst = -std::numeric_limits<double>::infinity();
        for (long c = 0; c < cases; ++c) {
            Rng rng(seed, 0, static_cast<std::uint32_t>(c), 4);
            const Index p = 2 + static_cast<Index>(rng.below(8));
            const double lam = 0.1 + 2.0 * rng.uniform();
            VectorXd beta = detail::normal_vector(p, rng, 2.0);
            switch (c % 4) {
            case 0: {
                VectorXd z = soft_threshold(beta, lam);
                worst = std::max(worst, fenchel_young_gap(PenaltySpec::l1(lam), z, beta - z).to_double() - closed_tol);
                break;
            }
            case 1: {
                VectorXd z = project_l1_ball(beta, lam);
                PenaltySpec s = PenaltySpec::norm_ball(NormKind::L1, lam);
                worst = std::max(worst, fenchel_young_gap(s, z, beta - z).to_double() - closed_tol);
                break;
            }
            case 2: {
                const Index rows = 2 + static_cast<Index>(rng.below(3)), cols = 2 + static_cast<Index>(rng.below(3));
                MatrixXd Bm = detail::normal_vector(rows * cols, rng, 2.0).reshaped(rows, cols);
                MatrixXd Z = svt(Bm, lam);
                PenaltySpec s = PenaltySpec::nuclear(lam, rows, cols);
                worst = std::max(worst, fenchel_young_gap(s, Z.reshaped(), (Bm - Z).reshaped()).to_double() - closed_tol);
                break;
            }
            default: {
                MatrixXd D = detail::difference_matrix(p);
                OracleResult o = prox_fused(beta, D, lam, admm_tol);
                const double gap = detail::fused_duality_gap(o.solution, o.dual, beta, D, lam);
                worst = std::max(worst, gap - 10.0 * admm_tol);
                break;
            }
            }
            ++r.cases;
        }
        r.worst = worst;
        r.passed = worst <= 0.0;
        return r;
    });
}

} // namespace gapshrink
