// Scalar math used across the library: normal cdf/quantile, log-beta,
// regularized incomplete beta (for t-test p-values), quantiles, log-sum-exp,
// and a Gaussian kernel density evaluator.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace raid::math {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double log_2pi = 1.8378770664093454836;

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline double log_sum_exp(std::span<const double> v) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

inline double normal_logpdf(double x, double mu, double sigma) {
    const double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * log_2pi;
}

inline double normal_pdf(double x, double mu = 0.0, double sigma = 1.0) {
    return std::exp(normal_logpdf(x, mu, sigma));
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * 0.70710678118654752440);
}

// Wichura's AS241 (PPND16) inverse normal cdf, ~1e-15 absolute accuracy.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw NumericError("normal_quantile: p outside [0,1]");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                  3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

inline double lbeta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

namespace detail {

// Lentz continued fraction for the regularized incomplete beta.
inline double ibeta_cf(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

}  // namespace detail

inline double ibeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double lfront = a * std::log(x) + b * std::log1p(-x) - lbeta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return std::exp(lfront) * detail::ibeta_cf(a, b, x) / a;
    }
    return 1.0 - std::exp(lfront) * detail::ibeta_cf(b, a, 1.0 - x) / b;
}

// Two-sided p-value of a t statistic with df degrees of freedom.
inline double student_t_pvalue(double t, double df) {
    const double x = df / (df + t * t);
    return ibeta(0.5 * df, 0.5, x);
}

inline double mean(std::span<const double> v) {
    if (v.empty()) throw NumericError("mean of empty range");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation, divisor n-1.
inline double sample_sd(std::span<const double> v) {
    const size_t n = v.size();
    if (n < 2) throw NumericError("sample_sd needs n >= 2");
    const double m = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(n - 1));
}

// Type-7 linear-interpolation empirical quantile on unsorted input.
inline double quantile_type7(std::vector<double> v, double p) {
    if (v.empty()) throw NumericError("quantile of empty range");
    if (!(p >= 0.0 && p <= 1.0)) throw NumericError("quantile: p outside [0,1]");
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const size_t lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = h - std::floor(h);
    return v[lo] + frac * (v[hi] - v[lo]);
}

inline double median(std::vector<double> v) { return quantile_type7(std::move(v), 0.5); }

struct DensityGrid {
    std::vector<double> grid;
    std::vector<double> density;
};

// Gaussian KDE with Silverman bandwidth, evaluated on a caller-fixed grid.
inline std::vector<double> kde_on_grid(std::span<const double> sample, std::span<const double> grid) {
    const size_t n = sample.size();
    if (n == 0) throw NumericError("kde of empty sample");
    double h;
    if (n < 2) {
        h = 1.0;
    } else {
        std::vector<double> sorted(sample.begin(), sample.end());
        const double sd = sample_sd(sample);
        const double iqr = quantile_type7(sorted, 0.75) - quantile_type7(std::move(sorted), 0.25);
        double spread = sd;
        if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
        if (spread <= 0.0) spread = (sd > 0.0) ? sd : 1.0;
        h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
        if (h <= 0.0) h = 1.0;
    }
    std::vector<double> out(grid.size(), 0.0);
    const double norm = 1.0 / (static_cast<double>(n) * h);
    for (size_t g = 0; g < grid.size(); ++g) {
        double s = 0.0;
        for (double x : sample) {
            const double z = (grid[g] - x) / h;
            s += std::exp(-0.5 * z * z);
        }
        out[g] = s * norm / std::sqrt(2.0 * pi);
    }
    return out;
}

inline std::vector<double> make_grid(double lo, double hi, size_t points) {
    std::vector<double> g(points);
    const double step = (points > 1) ? (hi - lo) / static_cast<double>(points - 1) : 0.0;
    for (size_t i = 0; i < points; ++i) g[i] = lo + step * static_cast<double>(i);
    return g;
}

}  // namespace raid::math
