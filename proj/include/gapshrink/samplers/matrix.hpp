#pragma once

// Gibbs sampler for Y_s = theta + eps_s with theta = A B' under the
// factorized nuclear + elementwise-l1 gap prior and a Gaussian kernel.

#include <gapshrink/diagnostics.hpp>
#include <gapshrink/gap.hpp>
#include <gapshrink/linalg.hpp>
#include <gapshrink/priors.hpp>
#include <gapshrink/samplers/regression.hpp>

namespace gapshrink {

/// Sufficient statistics of S replicated p1 x p2 matrices.
struct MatrixSmoothingData {
    MatrixXd Ybar;
    double ssw = 0.0; ///< sum_s ||Y_s - Ybar||_F^2
    double total_variance = 1.0;
    Index S = 0;

    explicit MatrixSmoothingData(std::span<const MatrixXd> Y) {
        if (Y.empty())
            throw DimensionError("MatrixSmoothingData: no observations");
        S = static_cast<Index>(Y.size());
        Ybar = MatrixXd::Zero(Y[0].rows(), Y[0].cols());
        for (const auto &y : Y) {
            if (y.rows() != Ybar.rows() || y.cols() != Ybar.cols())
                throw DimensionError("MatrixSmoothingData: observations differ in shape");
            Ybar += y;
        }
        Ybar /= static_cast<double>(S);
        for (const auto &y : Y)
            ssw += (y - Ybar).squaredNorm();
        const double N = static_cast<double>(S * Ybar.size());
        const double grand = Ybar.mean();
        total_variance = (ssw + static_cast<double>(S) * (Ybar.array() - grand).square().sum()) /
                         std::max(N - 1.0, 1.0);
        total_variance = std::max(total_variance, 1e-8);
    }
    Index rows() const { return Ybar.rows(); }
    Index cols() const { return Ybar.cols(); }
    double count() const { return static_cast<double>(S * Ybar.size()); }
};

struct MatrixSmoothingState {
    MatrixXd A;
    MatrixXd B;
    MatrixXd V1;
    MatrixXd V2;
    MatrixXd inv_s; ///< Laplace-mixture precisions for the entries of theta
    MatrixXd theta; ///< cached A B'
    double lambda2 = 1.0;
    double sigma2 = 1.0;
    double lambda1() const { return V1.norm(); }
};

class MatrixSmoothingSampler {
  public:
    MatrixSmoothingSampler(const MatrixSmoothingData &data, SamplerConfig cfg)
        : data_(data), cfg_(std::move(cfg)) {
        cfg_.validate();
        if (cfg_.rank > std::min(data_.rows(), data_.cols()))
            throw ContractError("MatrixSmoothingSampler: rank exceeds min(p1, p2)");
    }

    void initialize() {
        Rng rng(cfg_.seed, cfg_.chain, 0, block::init);
        const Index r = cfg_.rank;
        const double sc = 0.1 * cfg_.kernel_scale;
        st_.A.resize(data_.rows(), r);
        st_.B.resize(data_.cols(), r);
        for (Index k = 0; k < r; ++k) {
            for (Index i = 0; i < data_.rows(); ++i)
                st_.A(i, k) = sc * rng.normal();
            for (Index j = 0; j < data_.cols(); ++j)
                st_.B(j, k) = sc * rng.normal();
        }
        st_.V1 = MatrixXd::Zero(data_.rows(), data_.cols());
        st_.V2 = st_.V1;
        st_.inv_s = MatrixXd::Ones(data_.rows(), data_.cols());
        st_.theta = st_.A * st_.B.transpose();
        st_.lambda2 = 1.0;
        st_.sigma2 = data_.total_variance;
        theta_sum_ = MatrixXd::Zero(data_.rows(), data_.cols());
        recorded_ = 0;
    }

    void sweep(std::uint32_t it) {
        Rng r1(cfg_.seed, cfg_.chain, it, block::laplace_scales);
        update_laplace_scales(r1);
        Rng r2(cfg_.seed, cfg_.chain, it, block::theta);
        update_factor(st_.A, st_.B, false, r2);
        update_factor(st_.B, st_.A, true, r2);
        Rng r3(cfg_.seed, cfg_.chain, it, block::dual);
        update_V2(r3);
        Rng r4(cfg_.seed, cfg_.chain, it, block::dual_extra);
        update_V1(r4);
        Rng r5(cfg_.seed, cfg_.chain, it, block::lambda);
        update_lambda2(r5);
        Rng r6(cfg_.seed, cfg_.chain, it, block::sigma2);
        update_sigma2(r6);
    }

    void update_laplace_scales(Rng &rng) {
        const double rate = cfg_.alpha * st_.lambda2;
        for (Index j = 0; j < st_.theta.cols(); ++j)
            for (Index i = 0; i < st_.theta.rows(); ++i)
                st_.inv_s(i, j) = detail::laplace_precision(rate, std::abs(st_.theta(i, j)), rng);
    }

    /// Rows of F given G, where theta = F G' (transposed = false) or
    /// theta' = F G' (transposed = true).
    void update_factor(MatrixXd &F, const MatrixXd &G, bool transposed, Rng &rng) {
        const double k2 = cfg_.kernel_scale * cfg_.kernel_scale;
        const double S = static_cast<double>(data_.S);
        const double lambda1 = st_.lambda1();
        const Index r = F.cols();
        for (Index i = 0; i < F.rows(); ++i) {
            MatrixXd P = cfg_.alpha * lambda1 * MatrixXd::Identity(r, r);
            VectorXd h = VectorXd::Zero(r);
            for (Index j = 0; j < G.rows(); ++j) {
                const Index a = transposed ? j : i, b = transposed ? i : j;
                const double c = S / st_.sigma2 + 1.0 / k2 + st_.inv_s(a, b);
                const double U = st_.V1(a, b) + st_.V2(a, b);
                const double lin = S * data_.Ybar(a, b) / st_.sigma2 - U / k2 + cfg_.alpha * U;
                P.selfadjointView<Eigen::Lower>().rankUpdate(G.row(j).transpose(), c);
                h += lin * G.row(j).transpose();
            }
            P.triangularView<Eigen::StrictlyUpper>() = P.transpose();
            auto draw = draw_gaussian_canonical(P, h, rng);
            if (!draw)
                throw NumericError("MatrixSmoothingSampler: row precision not positive definite");
            F.row(i) = draw->transpose();
        }
        st_.theta = st_.A * st_.B.transpose();
    }

    /// V2_ij | rest: Gaussian on the box [-lambda2, lambda2].
    void update_V2_entry(Index i, Index j, Rng &rng) {
        const double k2 = cfg_.kernel_scale * cfg_.kernel_scale;
        const double th = st_.theta(i, j);
        st_.V2(i, j) = sample_truncated_normal(k2 * cfg_.alpha * th - th - st_.V1(i, j),
                                               cfg_.kernel_scale, -st_.lambda2, st_.lambda2, rng);
    }

    void update_V2(Rng &rng) {
        for (Index j = 0; j < st_.V2.cols(); ++j)
            for (Index i = 0; i < st_.V2.rows(); ++i)
                update_V2_entry(i, j, rng);
    }

    /// log density of V1_ij = x given the rest; ss_other is ||V1||_F^2 minus
    /// the current entry and K = ||A||_F^2 + ||B||_F^2.
    double V1_log_conditional(Index i, Index j, double x, double ss_other, double K) const {
        const double k2 = cfg_.kernel_scale * cfg_.kernel_scale;
        const double th = st_.theta(i, j);
        const double beta = th + x + st_.V2(i, j);
        return -0.5 * cfg_.alpha * K * std::sqrt(std::max(ss_other + x * x, 0.0)) +
               cfg_.alpha * x * th - 0.5 * beta * beta / k2;
    }

    void update_V1_entry(Index i, Index j, double &ss, double K, Rng &rng) {
        const double old = st_.V1(i, j);
        const double other = std::max(ss - old * old, 0.0);
        auto logf = [&](double x) { return V1_log_conditional(i, j, x, other, K); };
        const double x = slice_sample_1d(logf, old, slice_width_, -kInf, kInf, rng);
        st_.V1(i, j) = x;
        ss = other + x * x;
    }

    void update_V1(Rng &rng) {
        const double K = st_.A.squaredNorm() + st_.B.squaredNorm();
        double ss = st_.V1.squaredNorm();
        for (Index j = 0; j < st_.V1.cols(); ++j)
            for (Index i = 0; i < st_.V1.rows(); ++i)
                update_V1_entry(i, j, ss, K, rng);
    }

    void update_lambda2(Rng &rng) {
        const double l1 = st_.theta.cwiseAbs().sum();
        const double vmax = st_.V2.cwiseAbs().maxCoeff();
        auto logf = [&](double lam) {
            if (lam < vmax)
                return kNegInf;
            return log_inverse_gamma_density(lam, cfg_.lambda_shape, cfg_.lambda_scale) -
                   cfg_.alpha * lam * l1;
        };
        st_.lambda2 = slice_sample_log_scale(logf, st_.lambda2, 1.0, 0.0, kInf, rng);
    }

    double residual_ss() const {
        return data_.ssw + static_cast<double>(data_.S) * (data_.Ybar - st_.theta).squaredNorm();
    }

    void update_sigma2(Rng &rng) {
        st_.sigma2 = sample_inverse_gamma(cfg_.sigma2_shape + 0.5 * data_.count(),
                                          cfg_.sigma2_scale + 0.5 * residual_ss(), rng);
    }

    /// Unnormalized log joint of (A, B, V1, V2, lambda2, sigma2), Laplace
    /// mixture integrated out.
    double log_joint() const {
        GapPriorSpec spec{cfg_.alpha, BaseKernel::gaussian(cfg_.kernel_scale),
                          {{"lambda2", st_.lambda2}}};
        const double prior = log_gap_prior_nuclear_sparse(st_.A, st_.B, st_.V1, st_.V2, spec);
        if (prior == kNegInf)
            return kNegInf;
        return -0.5 * data_.count() * std::log(st_.sigma2) - 0.5 * residual_ss() / st_.sigma2 +
               prior + log_inverse_gamma_density(st_.lambda2, cfg_.lambda_shape, cfg_.lambda_scale) +
               log_inverse_gamma_density(st_.sigma2, cfg_.sigma2_shape, cfg_.sigma2_scale);
    }

    static constexpr Index kSingularValues = 6;

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (Index k = 0; k < cfg_.rank; ++k)
            for (Index i = 0; i < data_.rows(); ++i)
                out.push_back(indexed_name("A", i, k));
        for (Index k = 0; k < cfg_.rank; ++k)
            for (Index j = 0; j < data_.cols(); ++j)
                out.push_back(indexed_name("B", j, k));
        if (cfg_.store_duals) {
            for (Index j = 0; j < data_.cols(); ++j)
                for (Index i = 0; i < data_.rows(); ++i)
                    out.push_back(indexed_name("V1", i, j));
            for (Index j = 0; j < data_.cols(); ++j)
                for (Index i = 0; i < data_.rows(); ++i)
                    out.push_back(indexed_name("V2", i, j));
        }
        out.insert(out.end(), {"sigma2", "lambda1", "lambda2", "gap"});
        for (Index k = 0; k < kSingularValues; ++k)
            out.push_back(indexed_name("sv", k));
        return out;
    }

    template <class Row> void record(Row &&row) {
        Index c = 0;
        auto put = [&](const MatrixXd &M) {
            row.segment(c, M.size()) = Eigen::Map<const Eigen::RowVectorXd>(M.data(), M.size());
            c += M.size();
        };
        put(st_.A);
        put(st_.B);
        if (cfg_.store_duals) {
            put(st_.V1);
            put(st_.V2);
        }
        ExtendedReal gap = variational_nuclear_gap(st_.A, st_.B, st_.V1, st_.V2, st_.lambda1(),
                                                   st_.lambda2);
        if (gap.is_infinite())
            ++infeasible_;
        max_violation_ = std::max(max_violation_, st_.V2.cwiseAbs().maxCoeff() - st_.lambda2);
        row[c++] = st_.sigma2;
        row[c++] = st_.lambda1();
        row[c++] = st_.lambda2;
        row[c++] = gap.to_double();
        VectorXd sv = factor_singular_values(st_.A, st_.B);
        for (Index k = 0; k < kSingularValues; ++k)
            row[c++] = k < sv.size() ? sv[k] : 0.0;
        theta_sum_ += st_.theta;
        ++recorded_;
    }

    void finalize(PosteriorSamples &out) const {
        if (recorded_ > 0)
            out.summaries["theta_mean"] = theta_sum_ / static_cast<double>(recorded_);
        out.meta.stats["max_dual_violation"] = max_violation_;
        out.meta.stats["infeasible_draws"] = static_cast<double>(infeasible_);
    }

    const MatrixSmoothingState &state() const { return st_; }
    MatrixSmoothingState &mutable_state() { return st_; }
    const SamplerConfig &config() const { return cfg_; }

  private:
    static constexpr double kInf = std::numeric_limits<double>::infinity();
    const MatrixSmoothingData &data_;
    SamplerConfig cfg_;
    MatrixSmoothingState st_;
    double slice_width_ = 1.0;
    MatrixXd theta_sum_;
    long recorded_ = 0;
    double max_violation_ = -kInf;
    long infeasible_ = 0;
};

inline PosteriorSamples gibbs_matrix_smoothing(std::span<const MatrixXd> Y, const SamplerConfig &cfg) {
    MatrixSmoothingData data(Y);
    MatrixSmoothingSampler s(data, cfg);
    return run_chain(s, cfg);
}

} // namespace gapshrink
