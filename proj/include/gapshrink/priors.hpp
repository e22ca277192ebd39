#pragma once

// Unnormalized log-densities of the gap-shrinkage priors, plus the marginal
// tail tools and the fused order-statistics identity.

#include <gapshrink/gap.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gapshrink {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Base density on the anchor beta.
struct BaseKernel {
    enum class Kind { Cauchy, Gaussian };
    Kind kind = Kind::Cauchy;
    double scale = 1.0;

    static BaseKernel cauchy() { return {Kind::Cauchy, 1.0}; }
    static BaseKernel gaussian(double s) {
        if (!(s > 0.0))
            throw ContractError("Gaussian kernel scale must be positive");
        return {Kind::Gaussian, s};
    }

    /// Unnormalized: -sum log(1 + x^2) or -|x|^2 / (2 s^2).
    double log_density(double x) const {
        return kind == Kind::Cauchy ? -std::log1p(x * x) : -0.5 * x * x / (scale * scale);
    }
    template <class Derived> double log_density(const Eigen::DenseBase<Derived> &x) const {
        if (kind == Kind::Cauchy)
            return -x.derived().array().square().log1p().sum();
        return -0.5 * x.derived().array().square().sum() / (scale * scale);
    }
};

struct GapPriorSpec {
    double alpha = 1.0;
    BaseKernel kernel = BaseKernel::cauchy();
    std::map<std::string, double> hyper;

    double at(const std::string &name) const {
        auto it = hyper.find(name);
        if (it == hyper.end())
            throw ContractError("GapPriorSpec: missing hyperparameter '" + name + "'");
        return it->second;
    }

    void validate() const {
        if (!(alpha > 0.0))
            throw ContractError("GapPriorSpec: alpha must be positive");
        for (const auto &[k, v] : hyper)
            if (!(v >= 0.0))
                throw ContractError("GapPriorSpec: hyperparameter '" + k + "' must be >= 0");
        if (auto it = hyper.find("omega_cross"); it != hyper.end())
            if (!(it->second > 0.0 && it->second < 1.0))
                throw ContractError("GapPriorSpec: omega_cross must lie in (0, 1)");
    }
};

/// log Pi0(theta, u | lambda) for the l1 proximal gap with kernel on beta = theta + u.
inline double log_gap_prior_l1(const VectorXd &theta, const VectorXd &u, const GapPriorSpec &spec) {
    spec.validate();
    ExtendedReal gap = l1_gap(spec.at("lambda"), theta, u);
    if (gap.is_infinite())
        return kNegInf;
    return -spec.alpha * gap.value() + spec.kernel.log_density(theta + u);
}

struct Edge {
    Index from;
    Index to;
    double weight;
};

struct WeightedGraph {
    Index nodes = 0;
    std::vector<Edge> edges;

    void validate() const {
        for (const auto &e : edges)
            if (e.from < 0 || e.to < 0 || e.from >= nodes || e.to >= nodes || e.from == e.to)
                throw DimensionError("WeightedGraph: edge references an invalid node");
    }
};

/// Complete graph on categories with weight 1 inside a department and
/// omega_cross across departments. Edges are ordered (j, j') with j < j'.
inline WeightedGraph complete_taxonomy_graph(std::span<const int> department, double omega_cross) {
    WeightedGraph g;
    g.nodes = static_cast<Index>(department.size());
    for (Index j = 0; j < g.nodes; ++j)
        for (Index k = j + 1; k < g.nodes; ++k)
            g.edges.push_back({j, k, department[static_cast<std::size_t>(j)] ==
                                             department[static_cast<std::size_t>(k)]
                                         ? 1.0
                                         : omega_cross});
    return g;
}

/// Edge differences (B theta)_{e,k} = theta_{from,k} - theta_{to,k}.
inline MatrixXd edge_differences(const WeightedGraph &g, const MatrixXd &theta) {
    MatrixXd d(static_cast<Index>(g.edges.size()), theta.cols());
    for (std::size_t e = 0; e < g.edges.size(); ++e)
        d.row(static_cast<Index>(e)) = theta.row(g.edges[e].from) - theta.row(g.edges[e].to);
    return d;
}

/// B' Lambda v, an m x p matrix.
inline MatrixXd weighted_incidence_transpose(const WeightedGraph &g, const MatrixXd &v) {
    MatrixXd out = MatrixXd::Zero(g.nodes, v.cols());
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        const auto &ed = g.edges[e];
        out.row(ed.from) += ed.weight * v.row(static_cast<Index>(e));
        out.row(ed.to) -= ed.weight * v.row(static_cast<Index>(e));
    }
    return out;
}

/// log Pi0(theta, v | rho) for weighted graph fusion:
/// -alpha {rho ||Lambda B theta||_{1,1} - <theta, B' Lambda v>} + log kernel(beta)
/// with beta = theta + B' Lambda v and |v| <= rho.
inline double log_gap_prior_fused(const MatrixXd &theta, const MatrixXd &v, const WeightedGraph &graph,
                                  const GapPriorSpec &spec) {
    spec.validate();
    graph.validate();
    if (theta.rows() != graph.nodes || v.rows() != static_cast<Index>(graph.edges.size()) ||
        v.cols() != theta.cols())
        throw DimensionError("log_gap_prior_fused: theta, v and graph shapes disagree");
    const double rho = spec.at("rho");
    if (v.size() && !within_bound(v.cwiseAbs().maxCoeff(), rho))
        return kNegInf;
    MatrixXd d = edge_differences(graph, theta);
    double gap = 0.0;
    for (std::size_t e = 0; e < graph.edges.size(); ++e) {
        const Index ei = static_cast<Index>(e);
        gap += graph.edges[e].weight *
               (rho * d.row(ei).cwiseAbs().sum() - d.row(ei).dot(v.row(ei)));
    }
    MatrixXd beta = theta + weighted_incidence_transpose(graph, v);
    return -spec.alpha * gap + spec.kernel.log_density(beta);
}

/// log Pi0(theta = AB', V1, V2) under the factorized nuclear + l1 gap with
/// lambda1 tied to ||V1||_F and lambda2 from spec.
inline double log_gap_prior_nuclear_sparse(const MatrixXd &A, const MatrixXd &B, const MatrixXd &V1,
                                           const MatrixXd &V2, const GapPriorSpec &spec) {
    spec.validate();
    if (A.rows() != V1.rows() || B.rows() != V1.cols())
        throw DimensionError("log_gap_prior_nuclear_sparse: shape mismatch");
    ExtendedReal gap = variational_nuclear_gap(A, B, V1, V2, V1.norm(), spec.at("lambda2"));
    if (gap.is_infinite())
        return kNegInf;
    MatrixXd beta = A * B.transpose() + V1 + V2;
    return -spec.alpha * gap.value() + spec.kernel.log_density(beta);
}

/// Closed-form lower bound on the l1 marginal that gives its polynomial tail:
/// 2 (1 - exp(-alpha lambda |theta|)) / (alpha |theta| (1 + (|theta| + lambda)^2)).
inline double marginal_l1_lower_bound(double theta, double lambda, double alpha) {
    const double t = std::abs(theta);
    const double denom = 1.0 + (t + lambda) * (t + lambda);
    if (t == 0.0)
        return 2.0 * lambda / denom;
    return 2.0 * (-std::expm1(-alpha * lambda * t)) / (alpha * t * denom);
}

/// Unnormalized marginal of theta_j under the l1 gap prior with Cauchy
/// kernel: integral over u in [-lambda, lambda] of
/// exp{-alpha (lambda - |u|)|theta|} / (1 + (theta + u)^2), by adaptive
/// Gauss-Kronrod with breakpoints at u = 0 and the kernel peak.
inline double marginal_l1_prior(double theta, double lambda, double alpha) {
    if (!(lambda > 0.0) || !(alpha > 0.0))
        throw ContractError("marginal_l1_prior: lambda and alpha must be positive");
    const double t = std::abs(theta);
    auto integrand = [&](double u) {
        return std::exp(-alpha * (lambda - std::abs(u)) * t) / (1.0 + (theta + u) * (theta + u));
    };
    std::vector<double> cuts{-lambda, 0.0, lambda};
    if (-theta > -lambda && -theta < lambda && theta != 0.0)
        cuts.push_back(-theta);
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            integrand, cuts[i], cuts[i + 1], 20, 1e-12, &err);
    }
    return total;
}

/// sum_{j<j'} rho |x_j - x_j'| by direct double sum.
inline double fused_pairwise_sum(std::span<const double> x, double rho) {
    double total = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j)
        for (std::size_t k = j + 1; k < x.size(); ++k)
            total += std::abs(x[j] - x[k]);
    return rho * total;
}

/// Sample median; midpoint of the two central order statistics when even.
inline double sample_median(std::span<const double> x) {
    if (x.empty())
        throw ContractError("sample_median: empty input");
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const std::size_t m = s.size();
    return m % 2 ? s[m / 2] : 0.5 * (s[m / 2 - 1] + s[m / 2]);
}

/// rho sum_t |2t - m - 1| |x_(t) - c| with c the sample median; equals the
/// complete-graph pairwise sum.
inline double fused_median_form(std::span<const double> x, double rho) {
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    const double c = sample_median(s);
    const double m = static_cast<double>(s.size());
    double total = 0.0;
    for (std::size_t t = 0; t < s.size(); ++t)
        total += std::abs(2.0 * static_cast<double>(t + 1) - m - 1.0) * std::abs(s[t] - c);
    return rho * total;
}

} // namespace gapshrink
