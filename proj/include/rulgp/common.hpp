#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace rulgp {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes (parse/data -> 2, numeric -> 3).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
/// Malformed input text: wrong column count, unparseable token.
struct ParseError : Error {
    using Error::Error;
};
/// Structurally inconsistent data: broken cycle sequence, label count
/// mismatch, operation applied to the wrong set kind.
struct DataError : Error {
    using Error::Error;
};
/// Invalid operation arguments: dimension mismatch, empty input.
struct InputError : Error {
    using Error::Error;
};
/// Numerical failure: training divergence, Gram matrix not positive
/// definite after jitter escalation.
struct NumericError : Error {
    using Error::Error;
};
/// Operation called out of order (e.g. posterior query on an unfitted model).
struct StateError : Error {
    using Error::Error;
};

/// Deterministic random source. std::mt19937_64 is bit-stable across
/// platforms; the distribution transforms live here because the std::
/// distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Log-uniform over [lo, hi], lo > 0.
    double log_uniform(double lo, double hi) {
        return std::exp(uniform(std::log(lo), std::log(hi)));
    }

    /// Standard normal via Box-Muller (cacheless: two uniforms per draw).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi) {
        const int span = hi - lo + 1;
        int v = lo + static_cast<int>(uniform() * span);
        return v > hi ? hi : v;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

/// Mixes a stream id into a base seed so per-entity RNGs (engines, restarts,
/// trials) are independent yet reproducible. splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Inverse standard normal CDF. Acklam's rational approximation refined with
/// one Halley step against erfc, accurate to ~1e-15 over (0, 1).
inline double gaussian_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw InputError("gaussian_quantile: p must be in (0, 1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * 3.141592653589793238) * std::exp(x * x / 2.0);
    x = x - u / (1.0 + x * u / 2.0);
    return x;
}

/// Two-sided Gaussian quantile for a central interval: 0.90 -> 1.6449,
/// 0.95 -> 1.9600.
inline double two_sided_z(double ci_level) {
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw InputError("ci_level must be in (0, 1)");
    return gaussian_quantile(0.5 + ci_level / 2.0);
}

}  // namespace rulgp
