#pragma once

#include <gapshrink/errors.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace gapshrink {

/// Run length, seeding and hyperprior settings shared by all samplers.
struct SamplerConfig {
    long warmup = 1000;
    long retain = 1000;
    long thinning = 1;
    std::uint64_t seed = 1;
    std::uint32_t chain = 0;
    double alpha = 1000.0;

    // Inverse-gamma(shape, scale) on the global penalty level (lambda, lambda2).
    double lambda_shape = 2.0;
    double lambda_scale = 1.0;
    double sigma2_shape = 0.1;
    double sigma2_scale = 0.1;
    double rho_shape = 2.0;
    double rho_scale = 1.0;
    // Beta prior on the cross-department weight.
    double omega_a = 1.0;
    double omega_b = 1.0;
    // Bayesian lasso: lambda^2 ~ Gamma(r, delta).
    double lasso_r = 1.0;
    double lasso_delta = 1.0;
    // Generalized double Pareto: lambda_j ~ Gamma(shape, rate).
    double gdp_shape = 1.0;
    double gdp_rate = 1.0;
    /// Standard deviation of the Gaussian anchor kernel (matrix and probit models).
    double kernel_scale = 10.0;
    int rank = 5;
    bool store_duals = true;
    /// Include the (2 rho)^{-dim v} box volume in the rho conditional of the
    /// fused model; without it the edge duals that leave B' Lambda v unchanged
    /// fill the box and rho drifts upward without bound.
    bool rho_box_volume = true;
    bool random_intercept = false;
    double intercept_shape = 1.0;
    double intercept_scale = 1.0;

    void validate() const {
        if (warmup < 1 || retain < 1)
            throw ContractError("SamplerConfig: warmup and retain must be >= 1");
        if (thinning < 1)
            throw ContractError("SamplerConfig: thinning must be >= 1");
        if (!(alpha > 0.0))
            throw ContractError("SamplerConfig: alpha must be positive");
        for (double v : {lambda_shape, lambda_scale, sigma2_shape, sigma2_scale, rho_shape,
                         rho_scale, omega_a, omega_b, lasso_r, lasso_delta, gdp_shape, gdp_rate,
                         kernel_scale, intercept_shape, intercept_scale})
            if (!(v > 0.0))
                throw ContractError("SamplerConfig: hyperprior parameters must be positive");
        if (rank < 1)
            throw ContractError("SamplerConfig: rank must be >= 1");
    }

    long retained_rows() const { return retain / thinning; }

    nlohmann::ordered_json to_json() const {
        return {{"warmup", warmup},
                {"retain", retain},
                {"thinning", thinning},
                {"seed", seed},
                {"chain", chain},
                {"alpha", alpha},
                {"lambda_shape", lambda_shape},
                {"lambda_scale", lambda_scale},
                {"sigma2_shape", sigma2_shape},
                {"sigma2_scale", sigma2_scale},
                {"rho_shape", rho_shape},
                {"rho_scale", rho_scale},
                {"omega_a", omega_a},
                {"omega_b", omega_b},
                {"lasso_r", lasso_r},
                {"lasso_delta", lasso_delta},
                {"gdp_shape", gdp_shape},
                {"gdp_rate", gdp_rate},
                {"kernel_scale", kernel_scale},
                {"rank", rank},
                {"store_duals", store_duals},
                {"rho_box_volume", rho_box_volume},
                {"random_intercept", random_intercept},
                {"intercept_shape", intercept_shape},
                {"intercept_scale", intercept_scale}};
    }

    /// Fields present in j override the current values.
    void merge_json(const nlohmann::json &j) {
        auto take = [&](const char *key, auto &field) {
            if (j.contains(key))
                field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        take("warmup", warmup);
        take("retain", retain);
        take("thinning", thinning);
        take("seed", seed);
        take("chain", chain);
        take("alpha", alpha);
        take("lambda_shape", lambda_shape);
        take("lambda_scale", lambda_scale);
        take("sigma2_shape", sigma2_shape);
        take("sigma2_scale", sigma2_scale);
        take("rho_shape", rho_shape);
        take("rho_scale", rho_scale);
        take("omega_a", omega_a);
        take("omega_b", omega_b);
        take("lasso_r", lasso_r);
        take("lasso_delta", lasso_delta);
        take("gdp_shape", gdp_shape);
        take("gdp_rate", gdp_rate);
        take("kernel_scale", kernel_scale);
        take("rank", rank);
        take("store_duals", store_duals);
        take("rho_box_volume", rho_box_volume);
        take("random_intercept", random_intercept);
        take("intercept_shape", intercept_shape);
        take("intercept_scale", intercept_scale);
    }

    /// FNV-1a digest of the canonical JSON form.
    std::string digest() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : to_json().dump()) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

/// Retained draws, one row per kept iteration, with named columns.
class PosteriorSamples {
  public:
    struct Meta {
        std::uint64_t seed = 0;
        std::string config_digest;
        double wall_seconds = 0.0;
        std::map<std::string, double> stats;
    };

    PosteriorSamples() = default;
    PosteriorSamples(std::vector<std::string> names, Eigen::Index rows)
        : names_(std::move(names)), draws_(rows, static_cast<Eigen::Index>(names_.size())) {
        for (std::size_t i = 0; i < names_.size(); ++i)
            index_.emplace(names_[i], static_cast<Eigen::Index>(i));
    }

    const std::vector<std::string> &names() const { return names_; }
    const Eigen::MatrixXd &draws() const { return draws_; }
    Eigen::MatrixXd &draws() { return draws_; }
    Eigen::Index rows() const { return draws_.rows(); }
    Eigen::Index cols() const { return draws_.cols(); }

    bool has(const std::string &name) const { return index_.count(name) > 0; }
    Eigen::Index column(const std::string &name) const {
        auto it = index_.find(name);
        if (it == index_.end())
            throw ContractError("PosteriorSamples: no column named '" + name + "'");
        return it->second;
    }
    Eigen::VectorXd col(const std::string &name) const { return draws_.col(column(name)); }
    double mean(const std::string &name) const { return draws_.col(column(name)).mean(); }

    Meta meta;
    /// Run-level summaries too large to keep per draw (e.g. posterior mean matrices).
    std::map<std::string, Eigen::MatrixXd> summaries;

  private:
    std::vector<std::string> names_;
    Eigen::MatrixXd draws_;
    std::unordered_map<std::string, Eigen::Index> index_;
};

inline std::string indexed_name(const std::string &base, Eigen::Index i) {
    return base + "[" + std::to_string(i) + "]";
}
inline std::string indexed_name(const std::string &base, Eigen::Index i, Eigen::Index j) {
    return base + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}

/// Drives a sampler through warmup and retained sweeps. The sampler provides
/// initialize(), sweep(iteration), names() and record(row reference).
template <class Sampler> PosteriorSamples run_chain(Sampler &sampler, const SamplerConfig &cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    sampler.initialize();
    PosteriorSamples out(sampler.names(), cfg.retained_rows());
    const long total = cfg.warmup + cfg.retain;
    Eigen::Index row = 0;
    for (long it = 0; it < total; ++it) {
        sampler.sweep(static_cast<std::uint32_t>(it + 1));
        if (it >= cfg.warmup && (it - cfg.warmup + 1) % cfg.thinning == 0 && row < out.rows()) {
            auto r = out.draws().row(row++);
            sampler.record(r);
        }
    }
    out.meta.seed = cfg.seed;
    out.meta.config_digest = cfg.digest();
    sampler.finalize(out);
    out.meta.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

} // namespace gapshrink
