#pragma once

#include <gapshrink/errors.hpp>
#include <gapshrink/random.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace gapshrink {

namespace detail {

// Standard normal restricted to [a, b] with 0 <= a < b (b may be +inf).
inline double right_tail_normal(double a, double b, Rng &rng) {
    if (std::isfinite(b) && (b - a) * (a + b) <= 2.0) {
        // Uniform proposal; acceptance >= exp(-1) under the width condition.
        while (true) {
            double z = rng.uniform(a, b);
            if (std::log(rng.uniform()) <= 0.5 * (a * a - z * z))
                return z;
        }
    }
    // Exponential proposal with the optimal rate for the left endpoint.
    const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
    while (true) {
        double z = a + rng.exponential() / rate;
        if (z >= b)
            continue;
        if (std::log(rng.uniform()) <= -0.5 * (z - rate) * (z - rate))
            return z;
    }
}

inline double standard_truncated_normal(double a, double b, Rng &rng) {
    if (a >= 0.0)
        return right_tail_normal(a, b, rng);
    if (b <= 0.0)
        return -right_tail_normal(-b, -a, rng);
    if (b - a >= 2.5066282746310002) {
        while (true) {
            double z = rng.normal();
            if (z > a && z < b)
                return z;
        }
    }
    while (true) {
        double z = rng.uniform(a, b);
        if (std::log(rng.uniform()) <= -0.5 * z * z)
            return z;
    }
}

} // namespace detail

/// Exact draw from N(mu, sigma^2) restricted to (lo, hi). Far-tail intervals
/// use exponential rejection, narrow ones uniform rejection.
inline double sample_truncated_normal(double mu, double sigma, double lo, double hi, Rng &rng) {
    if (!(lo < hi))
        throw ContractError("sample_truncated_normal: need lo < hi");
    if (!(sigma > 0.0) || !std::isfinite(mu))
        throw ContractError("sample_truncated_normal: need finite mu and sigma > 0");
    const double a = (lo - mu) / sigma, b = (hi - mu) / sigma;
    if (a == b) // interval below floating resolution at this scale
        return std::clamp(mu + sigma * a, lo, hi);
    double x = mu + sigma * detail::standard_truncated_normal(a, b, rng);
    return std::clamp(x, lo, hi);
}

/// Inverse-Gaussian(mu, lambda) by the transformation-with-rejection method,
/// in a cancellation-free form. mu = +inf gives the Levy limit lambda / Z^2.
inline double sample_inverse_gaussian(double mu, double lambda, Rng &rng) {
    if (!(mu > 0.0) || !(lambda > 0.0))
        throw ContractError("sample_inverse_gaussian: parameters must be positive");
    const double z = rng.normal();
    const double y = z * z;
    if (mu > 1e150)
        return std::max(lambda / y, std::numeric_limits<double>::min());
    const double c = mu * y / (2.0 * lambda);
    const double x = mu / (1.0 + c + std::sqrt(c * (c + 2.0)));
    const double out = rng.uniform() <= mu / (mu + x) ? x : mu * (mu / x);
    return std::max(out, std::numeric_limits<double>::min());
}

/// Gamma with shape and rate.
inline double sample_gamma(double shape, double rate, Rng &rng) {
    if (!(shape > 0.0) || !(rate > 0.0))
        throw ContractError("sample_gamma: parameters must be positive");
    return rng.gamma(shape, rate);
}

/// Inverse-gamma with shape and scale (density proportional to x^{-shape-1} e^{-scale/x}).
inline double sample_inverse_gamma(double shape, double scale, Rng &rng) {
    if (!(shape > 0.0) || !(scale > 0.0))
        throw ContractError("sample_inverse_gamma: parameters must be positive");
    return scale / rng.gamma(shape, 1.0);
}

inline double log_inverse_gamma_density(double x, double shape, double scale) {
    if (!(x > 0.0))
        return -std::numeric_limits<double>::infinity();
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(x) - scale / x;
}

/// One stepping-out and shrinkage slice update leaving exp(logf) invariant on
/// the open interval (lo, hi).
template <class LogDensity>
double slice_sample_1d(LogDensity &&logf, double x0, double width, double lo, double hi, Rng &rng,
                       int max_steps_out = 32) {
    if (!(width > 0.0))
        throw ContractError("slice_sample_1d: width must be positive");
    if (!(x0 > lo && x0 < hi))
        throw ContractError("slice_sample_1d: start point outside bounds");
    const double f0 = logf(x0);
    if (!(f0 > -std::numeric_limits<double>::infinity()))
        throw ContractError("slice_sample_1d: log density is -inf at the start point");
    const double level = f0 - rng.exponential();

    double left = x0 - width * rng.uniform();
    double right = left + width;
    int j = static_cast<int>(std::floor(max_steps_out * rng.uniform()));
    int k = max_steps_out - 1 - j;
    while (j-- > 0 && left > lo && logf(left) > level)
        left -= width;
    while (k-- > 0 && right < hi && logf(right) > level)
        right += width;
    left = std::max(left, lo);
    right = std::min(right, hi);

    for (int it = 0; it < 500; ++it) {
        double x = rng.uniform(left, right);
        if (x <= lo || x >= hi) // open bounds
            x = x0;
        if (logf(x) > level)
            return x;
        (x < x0 ? left : right) = x;
        if (right - left <= 1e-15 * std::max(1.0, std::abs(x0)))
            break;
    }
    return x0;
}

/// Slice update of a positive scalar on the log scale. logf is the log
/// density of x itself; the Jacobian is added here.
template <class LogDensity>
double slice_sample_log_scale(LogDensity &&logf, double x0, double width, double lo, double hi,
                              Rng &rng) {
    auto on_log = [&](double y) {
        double x = std::exp(y);
        return logf(x) + y;
    };
    const double ylo = lo > 0.0 ? std::log(lo) : -std::numeric_limits<double>::infinity();
    const double yhi = std::isfinite(hi) ? std::log(hi) : std::numeric_limits<double>::infinity();
    return std::exp(slice_sample_1d(on_log, std::log(x0), width, ylo, yhi, rng));
}

} // namespace gapshrink
