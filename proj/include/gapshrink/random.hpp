#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace gapshrink {

/// Identifies an independent random stream. Samplers derive one stream per
/// (sweep, block) so a chain's draws do not depend on scheduling.
struct StreamKey {
    std::uint64_t seed = 0;
    std::uint32_t chain = 0;
    std::uint32_t sweep = 0;
    std::uint32_t block = 0;
};

/// Philox4x32-10 counter-based generator. The key is the seed; the counter
/// packs (position, sweep, block, chain).
class Philox {
  public:
    using result_type = std::uint64_t;

    explicit Philox(StreamKey key = {}) {
        key_ = {static_cast<std::uint32_t>(key.seed), static_cast<std::uint32_t>(key.seed >> 32)};
        ctr_ = {0u, key.sweep, key.block, key.chain};
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (pos_ == 2) {
            refill();
            pos_ = 0;
        }
        return out_[pos_++];
    }

  private:
    static void round(std::array<std::uint32_t, 4> &c, const std::array<std::uint32_t, 2> &k) {
        constexpr std::uint64_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
        const std::uint64_t p0 = M0 * c[0], p1 = M1 * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    void refill() {
        std::array<std::uint32_t, 4> c = ctr_;
        std::array<std::uint32_t, 2> k = key_;
        for (int r = 0; r < 10; ++r) {
            round(c, k);
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        out_[0] = (static_cast<std::uint64_t>(c[0]) << 32) | c[1];
        out_[1] = (static_cast<std::uint64_t>(c[2]) << 32) | c[3];
        ++ctr_[0];
    }

    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> ctr_{};
    std::array<std::uint64_t, 2> out_{};
    int pos_ = 2;
};

/// Convenience wrapper with the draws the samplers need.
class Rng {
  public:
    using result_type = Philox::result_type;

    explicit Rng(StreamKey key = {}) : engine_(key) {}
    Rng(std::uint64_t seed, std::uint32_t chain, std::uint32_t sweep, std::uint32_t block)
        : engine_(StreamKey{seed, chain, sweep, block}) {}

    static constexpr result_type min() { return Philox::min(); }
    static constexpr result_type max() { return Philox::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal(); }
    double exponential() { return -std::log(uniform()); }
    /// Gamma with shape and rate.
    double gamma(double shape, double rate) {
        return std::gamma_distribution<double>(shape, 1.0 / rate)(engine_);
    }
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

  private:
    Philox engine_;
    std::normal_distribution<double> normal_;
};

} // namespace gapshrink
