#pragma once

#include <gapshrink/errors.hpp>
#include <gapshrink/samples.hpp>

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <vector>

namespace gapshrink {

/// Biased sample autocorrelation up to max_lag, normalized by lag 0.
inline std::vector<double> acf(std::span<const double> x, std::size_t max_lag) {
    const std::size_t n = x.size();
    if (n <= max_lag)
        throw ContractError("acf: series must be longer than max_lag");
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= static_cast<double>(n);

    std::size_t len = 1;
    while (len < 2 * n)
        len <<= 1;
    std::vector<double> padded(len, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        padded[i] = x[i] - mean;
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, padded);
    for (auto &c : spec)
        c = std::norm(c);
    std::vector<double> acov;
    fft.inv(acov, spec);
    const double c0 = acov[0];
    if (!(c0 > 1e-300 * static_cast<double>(n)))
        throw DomainError("acf: constant series has undefined variance");
    std::vector<double> out(max_lag + 1);
    for (std::size_t k = 0; k <= max_lag; ++k)
        out[k] = acov[k] / c0;
    out[0] = 1.0;
    return out;
}

struct EssResult {
    double value;
    bool capped; ///< antithetic chain whose raw estimate exceeded 1.05 n
};

/// n / (1 + 2 sum rho_k), the sum stopping before the first pair of
/// consecutive nonpositive autocorrelations. rho must start at lag 0.
inline EssResult ess_from_acf(std::span<const double> rho, std::size_t n) {
    double sum = 0.0;
    for (std::size_t k = 1; k < rho.size(); ++k) {
        if (rho[k] <= 0.0 && k + 1 < rho.size() && rho[k + 1] <= 0.0)
            break;
        sum += rho[k];
    }
    const double nn = static_cast<double>(n);
    const double denom = 1.0 + 2.0 * sum;
    const double cap = 1.05 * nn;
    if (!(denom > 0.0) || nn / denom > cap)
        return {cap, true};
    return {nn / denom, false};
}

inline EssResult ess(std::span<const double> x) {
    if (x.size() < 100)
        throw ContractError("ess: need at least 100 draws");
    return ess_from_acf(acf(x, x.size() - 1), x.size());
}

inline double quantile(std::vector<double> v, double q) {
    if (v.empty())
        throw ContractError("quantile: empty input");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct ParameterSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double q50 = 0.0;
    double q975 = 0.0;
    double ess = 0.0;
    bool ess_capped = false;
    std::vector<double> acf;
};

struct ChainSummary {
    std::vector<ParameterSummary> parameters;
    double wall_seconds = 0.0;
    double median_ess_per_second = 0.0;
};

/// Constant columns get ess = 0 and an empty acf.
inline ParameterSummary summarize_series(const std::string &name, std::span<const double> x,
                                         std::size_t max_lag) {
    ParameterSummary s;
    s.name = name;
    std::vector<double> v(x.begin(), x.end());
    const double n = static_cast<double>(v.size());
    for (double a : v)
        s.mean += a;
    s.mean /= n;
    double ss = 0.0;
    for (double a : v)
        ss += (a - s.mean) * (a - s.mean);
    s.sd = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    s.q025 = quantile(v, 0.025);
    s.q50 = quantile(v, 0.5);
    s.q975 = quantile(v, 0.975);
    if (ss > 0.0 && v.size() >= 100) {
        auto full = acf(x, v.size() - 1);
        auto e = ess_from_acf(full, v.size());
        s.ess = e.value;
        s.ess_capped = e.capped;
        s.acf.assign(full.begin(), full.begin() + static_cast<long>(std::min(max_lag + 1, full.size())));
    }
    return s;
}

inline ChainSummary summarize_chain(const PosteriorSamples &samples, std::span<const std::string> names,
                                    std::size_t max_lag = 20) {
    ChainSummary out;
    out.wall_seconds = samples.meta.wall_seconds;
    std::vector<double> esses;
    for (const auto &name : names) {
        Eigen::VectorXd col = samples.col(name);
        out.parameters.push_back(
            summarize_series(name, std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), max_lag));
        if (out.parameters.back().ess > 0.0)
            esses.push_back(out.parameters.back().ess);
    }
    if (!esses.empty() && out.wall_seconds > 0.0)
        out.median_ess_per_second = quantile(esses, 0.5) / out.wall_seconds;
    return out;
}

/// Lag-k autocorrelations pooled over columns: per-lag median, and per-lag
/// maximum, across all nonconstant columns.
struct PooledAcf {
    std::vector<double> median;
    std::vector<double> q90;
    std::vector<double> max;
};

inline PooledAcf pooled_acf(const Eigen::MatrixXd &draws, std::size_t max_lag) {
    std::vector<std::vector<double>> per_lag(max_lag + 1);
    for (Eigen::Index c = 0; c < draws.cols(); ++c) {
        Eigen::VectorXd col = draws.col(c);
        if ((col.array() - col.mean()).abs().maxCoeff() == 0.0)
            continue;
        auto r = acf(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), max_lag);
        for (std::size_t k = 0; k <= max_lag; ++k)
            per_lag[k].push_back(r[k]);
    }
    PooledAcf out;
    for (auto &v : per_lag) {
        if (v.empty())
            throw DomainError("pooled_acf: all columns are constant");
        out.median.push_back(quantile(v, 0.5));
        out.q90.push_back(quantile(v, 0.9));
        out.max.push_back(*std::max_element(v.begin(), v.end()));
    }
    return out;
}

struct SingularValuePosterior {
    Eigen::MatrixXd values; ///< draws x k, descending per row
    Eigen::VectorXd mean;
    Eigen::VectorXd q025;
    Eigen::VectorXd q975;
};

/// Singular values of A B' through thin QR factors: sv(AB') = sv(R_A R_B').
inline Eigen::VectorXd factor_singular_values(const Eigen::MatrixXd &A, const Eigen::MatrixXd &B) {
    if (A.cols() != B.cols())
        throw DimensionError("factor_singular_values: A and B ranks differ");
    const Eigen::Index r = A.cols();
    Eigen::HouseholderQR<Eigen::MatrixXd> qa(A), qb(B);
    const Eigen::Index ka = std::min(A.rows(), r), kb = std::min(B.rows(), r);
    Eigen::MatrixXd Ra = qa.matrixQR().topRows(ka).triangularView<Eigen::Upper>();
    Eigen::MatrixXd Rb = qb.matrixQR().topRows(kb).triangularView<Eigen::Upper>();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(Ra * Rb.transpose());
    Eigen::VectorXd s = svd.singularValues();
    if (!s.allFinite())
        throw NumericError("factor_singular_values: SVD failed");
    return s;
}

/// Per-draw descending singular values of A_t B_t', padded with zeros to k.
inline SingularValuePosterior singular_value_posterior(std::span<const Eigen::MatrixXd> A,
                                                       std::span<const Eigen::MatrixXd> B,
                                                       Eigen::Index k) {
    if (A.size() != B.size() || A.empty())
        throw DimensionError("singular_value_posterior: need equal, nonempty draw lists");
    SingularValuePosterior out;
    const auto T = static_cast<Eigen::Index>(A.size());
    out.values = Eigen::MatrixXd::Zero(T, k);
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto &a = A[static_cast<std::size_t>(t)];
        const auto &b = B[static_cast<std::size_t>(t)];
        if (a.rows() != A[0].rows() || b.rows() != B[0].rows() || a.cols() != A[0].cols())
            throw DimensionError("singular_value_posterior: inconsistent shapes across draws");
        Eigen::VectorXd s = factor_singular_values(a, b);
        const Eigen::Index c = std::min(k, s.size());
        out.values.row(t).head(c) = s.head(c).transpose();
    }
    out.mean = out.values.colwise().mean();
    out.q025.resize(k);
    out.q975.resize(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        std::vector<double> v(out.values.col(j).data(), out.values.col(j).data() + T);
        out.q025[j] = quantile(v, 0.025);
        out.q975[j] = quantile(v, 0.975);
    }
    return out;
}

struct KsResult {
    double statistic;
    double p_value;
};

/// Kolmogorov distribution tail Q(x) = 2 sum (-1)^{k-1} exp(-2 k^2 x^2).
inline double kolmogorov_tail(double x) {
    if (x < 1e-3)
        return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        double term = sign * std::exp(-2.0 * k * k * x * x);
        sum += term;
        if (std::abs(term) < 1e-16)
            break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// Two-sample Kolmogorov-Smirnov test with the small-sample corrected
/// asymptotic p-value.
inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty())
        throw ContractError("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x)
            ++i;
        while (j < b.size() && b[j] <= x)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    const double en = std::sqrt(na * nb / (na + nb));
    return {d, kolmogorov_tail((en + 0.12 + 0.11 / en) * d)};
}

} // namespace gapshrink
