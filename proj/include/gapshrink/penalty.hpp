#pragma once

#include <gapshrink/errors.hpp>
#include <gapshrink/extended_real.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace gapshrink {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class NormKind { L1, L2, LInf };

constexpr NormKind dual_norm(NormKind k) {
    switch (k) {
    case NormKind::L1: return NormKind::LInf;
    case NormKind::LInf: return NormKind::L1;
    default: return NormKind::L2;
    }
}

inline double vector_norm(const VectorXd &v, NormKind k) {
    switch (k) {
    case NormKind::L1: return v.lpNorm<1>();
    case NormKind::LInf: return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
    default: return v.norm();
    }
}

/// Membership slack used for set indicators and dual-feasibility checks.
inline bool within_bound(double x, double bound) {
    return x <= bound + 1e-12 * std::max(1.0, std::abs(bound));
}

class PenaltySpec;

struct L1Penalty {
    double lambda;
};
struct GeneralizedL1Penalty {
    MatrixXd D;
    double lambda;
};
struct NormBallSet {
    NormKind norm;
    double radius;
};
/// Intersection of group balls {z : ||z_G||_2 <= r}. Groups may overlap.
struct GroupL2Set {
    std::vector<std::vector<Index>> groups;
    std::vector<double> radii;
    Index dim;
    bool disjoint;
};
/// lambda * nuclear norm on p1 x p2 matrices, stored column-major as vectors.
struct NuclearPenalty {
    double lambda;
    Index rows, cols;
};
struct QuadraticPenalty {
    MatrixXd Q;
};
/// Indicator of {z : a'z <= b}.
struct HalfspaceSet {
    VectorXd a;
    double b;
};
struct SumPenalty {
    std::vector<PenaltySpec> parts;
};

/// Algebraic description of a convex penalty or constraint g.
class PenaltySpec {
  public:
    using Kind = std::variant<L1Penalty, GeneralizedL1Penalty, NormBallSet, GroupL2Set,
                              NuclearPenalty, QuadraticPenalty, HalfspaceSet, SumPenalty>;

    static PenaltySpec l1(double lambda) {
        require_nonneg(lambda, "L1 lambda");
        return PenaltySpec(L1Penalty{lambda});
    }
    static PenaltySpec generalized_l1(MatrixXd D, double lambda) {
        require_nonneg(lambda, "GeneralizedL1 lambda");
        if (D.rows() < 1 || D.cols() < 1)
            throw DimensionError("GeneralizedL1: D needs at least one row and column");
        return PenaltySpec(GeneralizedL1Penalty{std::move(D), lambda});
    }
    static PenaltySpec norm_ball(NormKind norm, double radius) {
        require_nonneg(radius, "NormBall radius");
        return PenaltySpec(NormBallSet{norm, radius});
    }
    static PenaltySpec group_l2(std::vector<std::vector<Index>> groups, std::vector<double> radii,
                                Index dim) {
        if (groups.size() != radii.size())
            throw DimensionError("GroupL2: one radius per group required");
        std::vector<int> seen(static_cast<std::size_t>(dim), 0);
        bool disjoint = true;
        for (std::size_t g = 0; g < groups.size(); ++g) {
            require_nonneg(radii[g], "GroupL2 radius");
            for (Index i : groups[g]) {
                if (i < 0 || i >= dim)
                    throw DimensionError("GroupL2: index out of range");
                if (seen[static_cast<std::size_t>(i)]++)
                    disjoint = false;
            }
        }
        return PenaltySpec(GroupL2Set{std::move(groups), std::move(radii), dim, disjoint});
    }
    static PenaltySpec nuclear(double lambda, Index rows, Index cols) {
        require_nonneg(lambda, "Nuclear lambda");
        if (rows < 1 || cols < 1)
            throw DimensionError("Nuclear: empty shape");
        return PenaltySpec(NuclearPenalty{lambda, rows, cols});
    }
    static PenaltySpec quadratic(MatrixXd Q) {
        if (Q.rows() != Q.cols() || Q.rows() < 1)
            throw DimensionError("Quadratic: Q must be square");
        if (!Q.isApprox(Q.transpose(), 1e-12))
            throw ContractError("Quadratic: Q must be symmetric");
        Eigen::LLT<MatrixXd> llt(Q);
        if (llt.info() != Eigen::Success)
            throw ContractError("Quadratic: Q must be positive definite");
        return PenaltySpec(QuadraticPenalty{std::move(Q)});
    }
    static PenaltySpec halfspace(VectorXd a, double b) {
        if (a.size() < 1 || a.squaredNorm() == 0.0)
            throw ContractError("Halfspace: normal vector must be nonzero");
        return PenaltySpec(HalfspaceSet{std::move(a), b});
    }
    static PenaltySpec sum(std::vector<PenaltySpec> parts) {
        if (parts.empty())
            throw ContractError("Sum: needs at least one part");
        std::optional<Index> dim;
        for (const auto &p : parts) {
            auto d = p.domain_dim();
            if (d && dim && *d != *dim)
                throw DimensionError("Sum: parts disagree on domain dimension");
            if (d)
                dim = d;
        }
        return PenaltySpec(SumPenalty{std::move(parts)});
    }

    const Kind &kind() const { return kind_; }

    template <class T> const T *get_if() const { return std::get_if<T>(&kind_); }

    /// Domain dimension when the penalty fixes one (L1 and norm balls act on
    /// any dimension).
    std::optional<Index> domain_dim() const {
        return std::visit(
            [](const auto &k) -> std::optional<Index> {
                using T = std::decay_t<decltype(k)>;
                if constexpr (std::is_same_v<T, GeneralizedL1Penalty>)
                    return k.D.cols();
                else if constexpr (std::is_same_v<T, GroupL2Set>)
                    return k.dim;
                else if constexpr (std::is_same_v<T, NuclearPenalty>)
                    return k.rows * k.cols;
                else if constexpr (std::is_same_v<T, QuadraticPenalty>)
                    return k.Q.rows();
                else if constexpr (std::is_same_v<T, HalfspaceSet>)
                    return k.a.size();
                else if constexpr (std::is_same_v<T, SumPenalty>) {
                    for (const auto &p : k.parts)
                        if (auto d = p.domain_dim())
                            return d;
                    return std::nullopt;
                } else
                    return std::nullopt;
            },
            kind_);
    }

    /// True for the set-indicator kinds (g in {0, +inf}).
    bool is_set_indicator() const {
        return std::holds_alternative<NormBallSet>(kind_) ||
               std::holds_alternative<GroupL2Set>(kind_) ||
               std::holds_alternative<HalfspaceSet>(kind_);
    }

    std::string name() const {
        static const char *names[] = {"L1",        "GeneralizedL1", "NormBall",  "GroupL2",
                                      "Nuclear",   "Quadratic",     "Halfspace", "Sum"};
        return names[kind_.index()];
    }

  private:
    explicit PenaltySpec(Kind k) : kind_(std::move(k)) {}

    static void require_nonneg(double x, const char *what) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw ContractError(std::string(what) + " must be finite and nonnegative");
    }

    Kind kind_;
};

namespace detail {

inline void check_dim(const PenaltySpec &spec, Index n, const char *what) {
    if (auto d = spec.domain_dim(); d && *d != n)
        throw DimensionError(std::string(what) + ": point has dimension " + std::to_string(n) +
                             ", penalty " + spec.name() + " expects " + std::to_string(*d));
}

inline Eigen::Map<const MatrixXd> as_matrix(const VectorXd &v, Index rows, Index cols) {
    return {v.data(), rows, cols};
}

} // namespace detail

/// Largest singular value by power iteration on M'M.
inline double operator_norm_power(const MatrixXd &M, int max_iter = 100, double rtol = 1e-8) {
    if (M.size() == 0)
        return 0.0;
    VectorXd x = VectorXd::Ones(M.cols()) / std::sqrt(static_cast<double>(M.cols()));
    // Nudge away from a start orthogonal to the top singular vector.
    for (Index i = 0; i < x.size(); ++i)
        x[i] += 1e-3 * static_cast<double>((i * 7919) % 13) / 13.0;
    x.normalize();
    double sigma = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        VectorXd y = M.transpose() * (M * x);
        double ny = y.norm();
        if (ny == 0.0)
            return 0.0;
        double next = std::sqrt(ny);
        x = y / ny;
        if (std::abs(next - sigma) <= rtol * next) {
            sigma = next;
            break;
        }
        sigma = next;
    }
    return sigma;
}

inline double nuclear_norm(const MatrixXd &M) {
    Eigen::JacobiSVD<MatrixXd> svd(M);
    return svd.singularValues().sum();
}

/// Support function of a partition of group balls; +inf when u is nonzero on
/// coordinates no group constrains.
inline ExtendedReal group_support(const GroupL2Set &g, const VectorXd &u) {
    if (!g.disjoint)
        throw UnsupportedError("GroupL2 support function needs disjoint groups; use "
                               "variational_additive_gap for overlapping covers");
    std::vector<char> covered(static_cast<std::size_t>(g.dim), 0);
    double total = 0.0;
    for (std::size_t j = 0; j < g.groups.size(); ++j) {
        double sq = 0.0;
        for (Index i : g.groups[j]) {
            sq += u[i] * u[i];
            covered[static_cast<std::size_t>(i)] = 1;
        }
        total += g.radii[j] * std::sqrt(sq);
    }
    for (Index i = 0; i < g.dim; ++i)
        if (!covered[static_cast<std::size_t>(i)] && u[i] != 0.0)
            return ExtendedReal::infinity();
    return total;
}

/// sigma_C(u) = sup_{w in C} u'w for the set-indicator kinds.
inline ExtendedReal support_function(const PenaltySpec &ball, const VectorXd &u) {
    detail::check_dim(ball, u.size(), "support_function");
    if (auto b = ball.get_if<NormBallSet>())
        return b->radius * vector_norm(u, dual_norm(b->norm));
    if (auto g = ball.get_if<GroupL2Set>())
        return group_support(*g, u);
    if (auto h = ball.get_if<HalfspaceSet>()) {
        // Finite only on the ray {nu * a : nu >= 0}.
        double nu = h->a.dot(u) / h->a.squaredNorm();
        double off = (u - nu * h->a).lpNorm<Eigen::Infinity>();
        double scale = std::max(1.0, u.lpNorm<Eigen::Infinity>());
        if (nu < -1e-12 * scale || off > 1e-10 * scale)
            return ExtendedReal::infinity();
        return std::max(nu, 0.0) * h->b;
    }
    throw UnsupportedError("support_function: " + ball.name() + " is not a set indicator");
}

/// g(z). Indicator kinds return +inf off their set.
inline ExtendedReal penalty_value(const PenaltySpec &spec, const VectorXd &z) {
    detail::check_dim(spec, z.size(), "penalty_value");
    return std::visit(
        [&](const auto &k) -> ExtendedReal {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, L1Penalty>) {
                return k.lambda * z.lpNorm<1>();
            } else if constexpr (std::is_same_v<T, GeneralizedL1Penalty>) {
                return k.lambda * (k.D * z).template lpNorm<1>();
            } else if constexpr (std::is_same_v<T, NormBallSet>) {
                return within_bound(vector_norm(z, k.norm), k.radius) ? ExtendedReal(0.0)
                                                                      : ExtendedReal::infinity();
            } else if constexpr (std::is_same_v<T, GroupL2Set>) {
                for (std::size_t j = 0; j < k.groups.size(); ++j) {
                    double sq = 0.0;
                    for (Index i : k.groups[j])
                        sq += z[i] * z[i];
                    if (!within_bound(std::sqrt(sq), k.radii[j]))
                        return ExtendedReal::infinity();
                }
                return 0.0;
            } else if constexpr (std::is_same_v<T, NuclearPenalty>) {
                return k.lambda * nuclear_norm(detail::as_matrix(z, k.rows, k.cols));
            } else if constexpr (std::is_same_v<T, QuadraticPenalty>) {
                return 0.5 * z.dot(k.Q * z);
            } else if constexpr (std::is_same_v<T, HalfspaceSet>) {
                return within_bound(k.a.dot(z), k.b) ? ExtendedReal(0.0) : ExtendedReal::infinity();
            } else {
                ExtendedReal total = 0.0;
                for (const auto &p : k.parts) {
                    total += penalty_value(p, z);
                    if (total.is_infinite())
                        break;
                }
                return total;
            }
        },
        spec.kind());
}

/// Fenchel conjugate g*(u) = sup_w {u'w - g(w)}.
inline ExtendedReal conjugate_value(const PenaltySpec &spec, const VectorXd &u) {
    detail::check_dim(spec, u.size(), "conjugate_value");
    return std::visit(
        [&](const auto &k) -> ExtendedReal {
            using T = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<T, L1Penalty>) {
                double m = u.size() ? u.template lpNorm<Eigen::Infinity>() : 0.0;
                return within_bound(m, k.lambda) ? ExtendedReal(0.0) : ExtendedReal::infinity();
            } else if constexpr (std::is_same_v<T, NuclearPenalty>) {
                double op = operator_norm_power(detail::as_matrix(u, k.rows, k.cols));
                return op <= k.lambda + 1e-8 ? ExtendedReal(0.0) : ExtendedReal::infinity();
            } else if constexpr (std::is_same_v<T, QuadraticPenalty>) {
                return 0.5 * u.dot(k.Q.ldlt().solve(u));
            } else if constexpr (std::is_same_v<T, NormBallSet> || std::is_same_v<T, GroupL2Set> ||
                                 std::is_same_v<T, HalfspaceSet>) {
                return support_function(spec, u);
            } else if constexpr (std::is_same_v<T, GeneralizedL1Penalty>) {
                throw UnsupportedError("conjugate_value: GeneralizedL1 has no closed-form "
                                       "conjugate in the primal space; use generalized_l1_gap");
            } else {
                throw UnsupportedError("conjugate_value: Sum requires an infimal convolution; "
                                       "use variational_additive_gap");
            }
        },
        spec.kind());
}

} // namespace gapshrink
