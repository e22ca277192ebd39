#pragma once

// Multivariate probit with a complete-graph fused gap prior across
// categories: y_ij ~ Bernoulli(Phi(x_i' theta_j + gamma_h(i))).

#include <gapshrink/gap.hpp>
#include <gapshrink/linalg.hpp>
#include <gapshrink/priors.hpp>
#include <gapshrink/samplers/regression.hpp>

#include <cmath>
#include <optional>

namespace gapshrink {

struct FusedProbitInput {
    MatrixXd Y; ///< n x m, entries 0 or 1
    MatrixXd X; ///< n x p
    std::vector<int> department;
    std::vector<int> group; ///< optional: group label per row for a random intercept
};

struct FusedProbitState {
    MatrixXd theta; ///< m x p
    MatrixXd v;     ///< edges x p
    MatrixXd inv_s; ///< edges x p Laplace-mixture precisions
    MatrixXd z;     ///< n x m latent utilities
    VectorXd gamma; ///< random intercepts
    double rho = 1.0;
    double omega = 0.5;
    double tau2 = 1.0;
};

class FusedProbitSampler {
  public:
    FusedProbitSampler(const FusedProbitInput &data, SamplerConfig cfg)
        : data_(data), cfg_(std::move(cfg)) {
        cfg_.validate();
        const Index n = data_.Y.rows(), m = data_.Y.cols();
        if (data_.X.rows() != n || static_cast<Index>(data_.department.size()) != m || m < 2)
            throw DimensionError("FusedProbitSampler: Y, X and department shapes disagree");
        if (((data_.Y.array() != 0.0) && (data_.Y.array() != 1.0)).any())
            throw ContractError("FusedProbitSampler: Y must be binary");
        const int ndep = *std::max_element(data_.department.begin(), data_.department.end()) + 1;
        for (int g = 0; g < ndep; ++g)
            if (std::count(data_.department.begin(), data_.department.end(), g) == 0)
                throw ContractError("FusedProbitSampler: empty department");
        if (*std::min_element(data_.department.begin(), data_.department.end()) < 0)
            throw ContractError("FusedProbitSampler: negative department label");
        base_ = complete_taxonomy_graph(data_.department, 0.5);
        for (auto &e : base_.edges)
            cross_.push_back(data_.department[static_cast<std::size_t>(e.from)] !=
                             data_.department[static_cast<std::size_t>(e.to)]);
        if (cfg_.random_intercept) {
            if (static_cast<Index>(data_.group.size()) != n)
                throw DimensionError("FusedProbitSampler: need one group label per row");
            groups_ = *std::max_element(data_.group.begin(), data_.group.end()) + 1;
        }
        XtX_ = data_.X.transpose() * data_.X;
    }

    Index categories() const { return data_.Y.cols(); }
    Index covariates() const { return data_.X.cols(); }
    Index edges() const { return static_cast<Index>(base_.edges.size()); }

    WeightedGraph graph(double omega) const {
        WeightedGraph g = base_;
        for (std::size_t e = 0; e < g.edges.size(); ++e)
            g.edges[e].weight = cross_[e] ? omega : 1.0;
        return g;
    }
    double edge_weight(std::size_t e) const { return cross_[e] ? st_.omega : 1.0; }

    void initialize() {
        Rng rng(cfg_.seed, cfg_.chain, 0, block::init);
        const Index m = categories(), p = covariates(), n = data_.Y.rows();
        st_.theta.resize(m, p);
        for (Index k = 0; k < p; ++k)
            for (Index j = 0; j < m; ++j)
                st_.theta(j, k) = 0.1 * cfg_.kernel_scale * rng.normal();
        st_.v = MatrixXd::Zero(edges(), p);
        st_.inv_s = MatrixXd::Ones(edges(), p);
        st_.z = MatrixXd::Zero(n, m);
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i < n; ++i)
                st_.z(i, j) = data_.Y(i, j) > 0.5 ? 0.5 : -0.5;
        st_.gamma = VectorXd::Zero(cfg_.random_intercept ? groups_ : 0);
        st_.rho = 1.0;
        st_.omega = 0.5;
        st_.tau2 = 1.0;
    }

    void sweep(std::uint32_t it) {
        Rng r1(cfg_.seed, cfg_.chain, it, block::latent);
        update_latents(r1);
        Rng r2(cfg_.seed, cfg_.chain, it, block::laplace_scales);
        update_laplace_scales(r2);
        Rng r3(cfg_.seed, cfg_.chain, it, block::theta);
        update_theta(r3);
        if (cfg_.random_intercept) {
            Rng r3b(cfg_.seed, cfg_.chain, it, block::intercept);
            update_intercepts(r3b);
        }
        Rng r4(cfg_.seed, cfg_.chain, it, block::dual);
        update_duals(r4);
        Rng r5(cfg_.seed, cfg_.chain, it, block::lambda);
        update_rho(r5);
        Rng r6(cfg_.seed, cfg_.chain, it, block::weight);
        update_omega(r6);
    }

    double intercept(Index i) const {
        return cfg_.random_intercept ? st_.gamma[data_.group[static_cast<std::size_t>(i)]] : 0.0;
    }

    void update_latents(Rng &rng) {
        MatrixXd mu = data_.X * st_.theta.transpose();
        constexpr double inf = std::numeric_limits<double>::infinity();
        for (Index j = 0; j < mu.cols(); ++j)
            for (Index i = 0; i < mu.rows(); ++i) {
                const double m = mu(i, j) + intercept(i);
                st_.z(i, j) = data_.Y(i, j) > 0.5 ? sample_truncated_normal(m, 1.0, 0.0, inf, rng)
                                                  : sample_truncated_normal(m, 1.0, -inf, 0.0, rng);
            }
    }

    void update_laplace_scales(Rng &rng) {
        MatrixXd d = edge_differences(base_, st_.theta);
        for (Index k = 0; k < d.cols(); ++k)
            for (Index e = 0; e < d.rows(); ++e) {
                const double rate = cfg_.alpha * st_.rho * edge_weight(static_cast<std::size_t>(e));
                st_.inv_s(e, k) = detail::laplace_precision(rate, std::abs(d(e, k)), rng);
            }
    }

    /// Joint Gaussian draw of vec(theta), index j * p + k.
    void update_theta(Rng &rng) {
        const Index m = categories(), p = covariates();
        const double k2 = cfg_.kernel_scale * cfg_.kernel_scale;
        MatrixXd P = MatrixXd::Zero(m * p, m * p);
        for (Index j = 0; j < m; ++j)
            P.block(j * p, j * p, p, p) = XtX_;
        P.diagonal().array() += 1.0 / k2;
        for (std::size_t e = 0; e < base_.edges.size(); ++e) {
            const Index a = base_.edges[e].from, b = base_.edges[e].to;
            for (Index k = 0; k < p; ++k) {
                const double s = st_.inv_s(static_cast<Index>(e), k);
                P(a * p + k, a * p + k) += s;
                P(b * p + k, b * p + k) += s;
                P(a * p + k, b * p + k) -= s;
                P(b * p + k, a * p + k) -= s;
            }
        }
        MatrixXd zc = st_.z;
        if (cfg_.random_intercept)
            for (Index i = 0; i < zc.rows(); ++i)
                zc.row(i).array() -= intercept(i);
        MatrixXd lin = zc.transpose() * data_.X; // m x p
        lin += (cfg_.alpha - 1.0 / k2) * weighted_incidence_transpose(graph(st_.omega), st_.v);
        VectorXd b(m * p);
        for (Index j = 0; j < m; ++j)
            b.segment(j * p, p) = lin.row(j).transpose();
        VectorXd x(m * p);
        for (Index j = 0; j < m; ++j)
            x.segment(j * p, p) = st_.theta.row(j).transpose();
        if (auto draw = draw_gaussian_canonical(P, b, rng))
            x = *draw;
        else
            draw_gaussian_blocked(P, b, x, p, rng);
        for (Index j = 0; j < m; ++j)
            st_.theta.row(j) = x.segment(j * p, p).transpose();
    }

    void update_intercepts(Rng &rng) {
        MatrixXd resid = st_.z - data_.X * st_.theta.transpose();
        VectorXd sum = VectorXd::Zero(groups_), cnt = VectorXd::Zero(groups_);
        for (Index i = 0; i < resid.rows(); ++i) {
            const int g = data_.group[static_cast<std::size_t>(i)];
            sum[g] += resid.row(i).sum();
            cnt[g] += static_cast<double>(resid.cols());
        }
        for (Index g = 0; g < groups_; ++g) {
            const double prec = cnt[g] + 1.0 / st_.tau2;
            st_.gamma[g] = sum[g] / prec + rng.normal() / std::sqrt(prec);
        }
        st_.tau2 = sample_inverse_gamma(cfg_.intercept_shape + 0.5 * static_cast<double>(groups_),
                                        cfg_.intercept_scale + 0.5 * st_.gamma.squaredNorm(), rng);
    }

    /// v_ek | rest: Gaussian on [-rho, rho]; uniform when the edge weight vanishes.
    void update_dual(Index e, Index k, MatrixXd &beta, Rng &rng) {
        const auto &ed = base_.edges[static_cast<std::size_t>(e)];
        const double L = edge_weight(static_cast<std::size_t>(e));
        const double old = st_.v(e, k);
        double nv;
        if (L < 1e-12) {
            nv = st_.rho * (2.0 * rng.uniform() - 1.0);
        } else {
            const double k2 = cfg_.kernel_scale * cfg_.kernel_scale;
            const double cj = beta(ed.from, k) - L * old, cjj = beta(ed.to, k) + L * old;
            const double d = st_.theta(ed.from, k) - st_.theta(ed.to, k);
            const double mean = (cfg_.alpha * k2 * d - (cj - cjj)) / (2.0 * L);
            const double sd = cfg_.kernel_scale / (L * std::sqrt(2.0));
            nv = sample_truncated_normal(mean, sd, -st_.rho, st_.rho, rng);
        }
        st_.v(e, k) = nv;
        beta(ed.from, k) += L * (nv - old);
        beta(ed.to, k) -= L * (nv - old);
    }

    void update_duals(Rng &rng) {
        MatrixXd beta = st_.theta + weighted_incidence_transpose(graph(st_.omega), st_.v);
        for (Index k = 0; k < st_.v.cols(); ++k)
            for (Index e = 0; e < st_.v.rows(); ++e)
                update_dual(e, k, beta, rng);
    }

    double weighted_l1() const {
        MatrixXd d = edge_differences(base_, st_.theta);
        double total = 0.0;
        for (Index e = 0; e < d.rows(); ++e)
            total += edge_weight(static_cast<std::size_t>(e)) * d.row(e).cwiseAbs().sum();
        return total;
    }

    void update_rho(Rng &rng) {
        const double wl1 = weighted_l1();
        const double vmax = st_.v.size() ? st_.v.cwiseAbs().maxCoeff() : 0.0;
        const double box_dims = cfg_.rho_box_volume ? static_cast<double>(st_.v.size()) : 0.0;
        auto logf = [&](double r) {
            if (r < vmax)
                return kNegInf;
            return log_inverse_gamma_density(r, cfg_.rho_shape, cfg_.rho_scale) -
                   cfg_.alpha * r * wl1 - box_dims * std::log(2.0 * r);
        };
        st_.rho = slice_sample_log_scale(logf, st_.rho, 1.0, 0.0, kInf, rng);
    }

    /// log density of omega given the rest (Beta prior, gap and kernel terms).
    double omega_log_conditional(double omega) const {
        if (!(omega > 0.0 && omega < 1.0))
            return kNegInf;
        GapPriorSpec spec{cfg_.alpha, BaseKernel::gaussian(cfg_.kernel_scale),
                          {{"rho", st_.rho}, {"omega_cross", omega}}};
        return (cfg_.omega_a - 1.0) * std::log(omega) + (cfg_.omega_b - 1.0) * std::log1p(-omega) +
               log_gap_prior_fused(st_.theta, st_.v, graph(omega), spec);
    }

    /// Slice on the logit scale, clamped away from the floating-point ends.
    void update_omega(Rng &rng) {
        auto logf = [&](double y) {
            const double w = 1.0 / (1.0 + std::exp(-y));
            return omega_log_conditional(w) + std::log(w) + std::log1p(-w);
        };
        const double y0 = std::log(st_.omega) - std::log1p(-st_.omega);
        const double y = slice_sample_1d(logf, y0, 2.0, -700.0, 36.0, rng);
        st_.omega = 1.0 / (1.0 + std::exp(-y));
    }

    /// Unnormalized log joint of (z, theta, v, rho, omega, intercepts).
    double log_joint() const {
        GapPriorSpec spec{cfg_.alpha, BaseKernel::gaussian(cfg_.kernel_scale),
                          {{"rho", st_.rho}, {"omega_cross", st_.omega}}};
        double lp = log_gap_prior_fused(st_.theta, st_.v, graph(st_.omega), spec);
        if (lp == kNegInf)
            return kNegInf;
        MatrixXd mu = data_.X * st_.theta.transpose();
        for (Index j = 0; j < mu.cols(); ++j)
            for (Index i = 0; i < mu.rows(); ++i) {
                const double z = st_.z(i, j);
                if ((data_.Y(i, j) > 0.5) != (z > 0.0))
                    return kNegInf;
                const double r = z - mu(i, j) - intercept(i);
                lp -= 0.5 * r * r;
            }
        lp += log_inverse_gamma_density(st_.rho, cfg_.rho_shape, cfg_.rho_scale);
        if (cfg_.rho_box_volume)
            lp -= static_cast<double>(st_.v.size()) * std::log(2.0 * st_.rho);
        lp += (cfg_.omega_a - 1.0) * std::log(st_.omega) +
              (cfg_.omega_b - 1.0) * std::log1p(-st_.omega);
        if (cfg_.random_intercept) {
            lp += -0.5 * static_cast<double>(groups_) * std::log(st_.tau2) -
                  0.5 * st_.gamma.squaredNorm() / st_.tau2 +
                  log_inverse_gamma_density(st_.tau2, cfg_.intercept_shape, cfg_.intercept_scale);
        }
        return lp;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (Index k = 0; k < covariates(); ++k)
            for (Index j = 0; j < categories(); ++j)
                out.push_back(indexed_name("theta", j, k));
        if (cfg_.store_duals)
            for (Index k = 0; k < covariates(); ++k)
                for (Index e = 0; e < edges(); ++e)
                    out.push_back(indexed_name("v", e, k));
        out.insert(out.end(), {"rho", "omega_cross", "gap"});
        if (cfg_.random_intercept) {
            for (Index g = 0; g < groups_; ++g)
                out.push_back(indexed_name("gamma", g));
            out.push_back("tau2");
        }
        return out;
    }

    template <class Row> void record(Row &&row) {
        Index c = 0;
        row.segment(c, st_.theta.size()) =
            Eigen::Map<const Eigen::RowVectorXd>(st_.theta.data(), st_.theta.size());
        c += st_.theta.size();
        if (cfg_.store_duals) {
            row.segment(c, st_.v.size()) =
                Eigen::Map<const Eigen::RowVectorXd>(st_.v.data(), st_.v.size());
            c += st_.v.size();
        }
        const WeightedGraph g = graph(st_.omega);
        MatrixXd d = edge_differences(g, st_.theta);
        double gap = 0.0;
        for (Index e = 0; e < d.rows(); ++e)
            gap += g.edges[static_cast<std::size_t>(e)].weight *
                   (st_.rho * d.row(e).cwiseAbs().sum() - d.row(e).dot(st_.v.row(e)));
        max_violation_ = std::max(max_violation_, st_.v.cwiseAbs().maxCoeff() - st_.rho);
        row[c++] = st_.rho;
        row[c++] = st_.omega;
        row[c++] = gap;
        if (cfg_.random_intercept) {
            row.segment(c, groups_) = st_.gamma.transpose();
            c += groups_;
            row[c++] = st_.tau2;
        }
    }

    void finalize(PosteriorSamples &out) const {
        out.meta.stats["max_dual_violation"] = max_violation_;
    }

    const FusedProbitState &state() const { return st_; }
    FusedProbitState &mutable_state() { return st_; }
    const SamplerConfig &config() const { return cfg_; }

  private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    const FusedProbitInput &data_;
    SamplerConfig cfg_;
    WeightedGraph base_;
    std::vector<bool> cross_;
    Index groups_ = 0;
    MatrixXd XtX_;
    FusedProbitState st_;
    double max_violation_ = -kInf;
};

inline PosteriorSamples gibbs_fused_probit(const FusedProbitInput &data, const SamplerConfig &cfg) {
    FusedProbitSampler s(data, cfg);
    return run_chain(s, cfg);
}

} // namespace gapshrink
