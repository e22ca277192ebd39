#pragma once

#include <gapshrink/errors.hpp>
#include <gapshrink/random.hpp>

#include <Eigen/Dense>

#include <optional>
#include <sstream>

namespace gapshrink {

/// Draw from N(P^{-1} b, P^{-1}) via a Cholesky factor of the precision P.
/// Empty when P is not numerically positive definite.
inline std::optional<Eigen::VectorXd> draw_gaussian_canonical(const Eigen::MatrixXd &P,
                                                              const Eigen::VectorXd &b, Rng &rng) {
    Eigen::LLT<Eigen::MatrixXd> llt(P);
    if (llt.info() != Eigen::Success)
        return std::nullopt;
    Eigen::VectorXd mean = llt.solve(b);
    Eigen::VectorXd z(b.size());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z[i] = rng.normal();
    Eigen::VectorXd x = mean + llt.matrixU().solve(z);
    if (!x.allFinite())
        return std::nullopt;
    return x;
}

/// Gibbs pass over consecutive coordinate blocks of N(P^{-1} b, P^{-1}),
/// starting from x. Used when the joint factorization fails.
inline void draw_gaussian_blocked(const Eigen::MatrixXd &P, const Eigen::VectorXd &b,
                                  Eigen::VectorXd &x, Eigen::Index block, Rng &rng) {
    const Eigen::Index p = x.size();
    for (Eigen::Index start = 0; start < p; start += block) {
        const Eigen::Index len = std::min(block, p - start);
        Eigen::VectorXd rhs = b.segment(start, len) - P.middleRows(start, len) * x +
                              P.block(start, start, len, len) * x.segment(start, len);
        auto draw = draw_gaussian_canonical(P.block(start, start, len, len), rhs, rng);
        if (!draw) {
            std::ostringstream msg;
            msg << "Gaussian block [" << start << ", " << start + len
                << ") is not positive definite; min diagonal "
                << P.diagonal().segment(start, len).minCoeff();
            throw NumericError(msg.str());
        }
        x.segment(start, len) = *draw;
    }
}

} // namespace gapshrink
