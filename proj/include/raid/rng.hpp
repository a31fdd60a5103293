// Deterministic splittable RNG. xoshiro256** core seeded through splitmix64;
// normal variates via the inverse cdf so every draw is reproducible from the
// seed alone, independent of platform library details.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string_view>
#include <vector>

#include "raid/math.hpp"

namespace raid::rng {

inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable per-cell seed: mixes a master seed with a textual cell key.
inline uint64_t derive_seed(uint64_t master, std::string_view key) {
    uint64_t s = master ^ fnv1a64(key);
    return splitmix64(s);
}

class Rng {
  public:
    explicit Rng(uint64_t seed = 0x9d2c5680dfca1234ULL) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0,1).
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform on the open interval (0,1); safe as a quantile argument.
    double uniform_oo() { return static_cast<double>(next() >> 11) * 0x1.0p-53 + 0x1.0p-54; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) (Lemire rejection).
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        uint64_t x = next();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        uint64_t l = static_cast<uint64_t>(m);
        if (l < n) {
            const uint64_t t = (0 - n) % n;
            while (l < t) {
                x = next();
                m = static_cast<__uint128_t>(x) * n;
                l = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() { return math::normal_quantile(uniform_oo()); }

    double normal(double mu, double sigma) { return mu + sigma * normal(); }

    // N(mu, sigma^2) conditioned on (lo, hi]. Inverse-cdf when the interval
    // carries enough mass; exponential tail rejection otherwise.
    double truncated_normal(double mu, double sigma, double lo, double hi) {
        const double a = (lo - mu) / sigma;
        const double b = (hi - mu) / sigma;
        const double Fa = math::normal_cdf(a);
        const double Fb = math::normal_cdf(b);
        if (Fb - Fa > 1e-12) {
            const double u = Fa + (Fb - Fa) * uniform_oo();
            double z = math::normal_quantile(u);
            z = std::min(std::max(z, a), b);
            return mu + sigma * z;
        }
        // Far-tail interval: sample the nearer one-sided tail and reject.
        if (a >= 0.0) {
            for (;;) {
                const double z = tail_sample(a);
                if (z <= b) return mu + sigma * z;
            }
        }
        if (b <= 0.0) {
            for (;;) {
                const double z = tail_sample(-b);
                if (-z >= a) return mu + sigma * (-z);
            }
        }
        return mu;  // unreachable for valid far-tail intervals
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Categorical draw from unnormalized log weights.
    size_t pick_log_weights(std::span<const double> logw) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double w : logw) mx = std::max(mx, w);
        double total = 0.0;
        for (double w : logw) total += std::exp(w - mx);
        double u = uniform() * total;
        for (size_t i = 0; i + 1 < logw.size(); ++i) {
            u -= std::exp(logw[i] - mx);
            if (u < 0.0) return i;
        }
        return logw.empty() ? 0 : logw.size() - 1;
    }

    Rng split() { return Rng(next() ^ 0x5851f42d4c957f2dULL); }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    // Robert's exponential rejection for standard normal conditioned on z > a, a >= 0.
    double tail_sample(double a) {
        const double alpha = 0.5 * (a + std::sqrt(a * a + 4.0));
        for (;;) {
            const double z = a - std::log(uniform_oo()) / alpha;
            const double d = z - alpha;
            if (uniform_oo() <= std::exp(-0.5 * d * d)) return z;
        }
    }

    uint64_t s_[4];
};

}  // namespace raid::rng

namespace raid {
using rng::derive_seed;
using rng::Rng;
}  // namespace raid
