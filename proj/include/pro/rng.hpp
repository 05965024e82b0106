#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace pro {

// Deterministic, platform-independent random substreams.
//
// Every stochastic draw in the system comes from a Substream keyed by
// (run seed, entity, day, purpose). Keying draws this way, instead of
// advancing one global engine, is what makes paired replay work: the
// same key always yields the same sequence regardless of what any other
// entity or arm did.
//
// The generator is splitmix64 over a mixed 64-bit state. We deliberately
// avoid std::uniform_real_distribution / std::normal_distribution, whose
// output sequences are implementation-defined.

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
    z += kGolden;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (b + kGolden + (a << 6) + (a >> 2)));
}

// FNV-1a over a short label; labels name the purpose of a stream.
inline std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Substream {
public:
    explicit Substream(std::uint64_t state) : state_(state) {}

    static Substream keyed(std::uint64_t seed, std::uint64_t entity,
                           std::int64_t day, std::string_view purpose) {
        std::uint64_t h = mix64(seed);
        h = hash_combine(h, entity);
        h = hash_combine(h, static_cast<std::uint64_t>(day));
        h = hash_combine(h, hash_label(purpose));
        return Substream(h);
    }

    std::uint64_t next_u64() {
        state_ += kGolden;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0,1); never returns 0 or 1 exactly.
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    bool next_bernoulli(double p) { return next_unit() < p; }

    std::uint64_t next_below(std::uint64_t n) { return n == 0 ? 0 : next_u64() % n; }

    // Box-Muller without caching so each call consumes exactly two uniforms.
    double next_normal() {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    double next_normal(double mean, double stddev) {
        return mean + stddev * next_normal();
    }

    // Poisson by CDF inversion for small means, normal quantile approximation
    // above. Both branches consume exactly one uniform and are monotone in the
    // mean for a fixed uniform, so counterfactual replay with a scaled mean
    // stays coupled to the same underlying draw.
    std::int64_t next_poisson(double mean) {
        const double u = next_unit();
        if (!(mean > 0.0)) return 0;
        if (mean < 50.0) {
            double p = std::exp(-mean);
            double cdf = p;
            std::int64_t k = 0;
            const std::int64_t k_max =
                static_cast<std::int64_t>(mean + 15.0 * std::sqrt(mean) + 25.0);
            while (u > cdf && k < k_max) {
                ++k;
                p *= mean / static_cast<double>(k);
                cdf += p;
            }
            return k;
        }
        const double approx = std::round(mean + std::sqrt(mean) * inverse_normal_cdf(u));
        return approx < 0.0 ? 0 : static_cast<std::int64_t>(approx);
    }

    // Acklam's rational approximation; relative error below 1.2e-9, which is
    // far inside the noise of the simulation it feeds.
    static double inverse_normal_cdf(double p) {
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
        if (p < p_low) {
            const double q = std::sqrt(-2.0 * std::log(p));
            return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
                   ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        }
        if (p <= 1.0 - p_low) {
            const double q = p - 0.5;
            const double r = q * q;
            return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
                   (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
        }
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

private:
    std::uint64_t state_;
};

}  // namespace pro
