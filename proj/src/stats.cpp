#include "pro/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pro {

double sample_mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2) throw std::invalid_argument("variance needs at least two observations");
    const double m = sample_mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

namespace {

// Lentz's continued fraction for the incomplete beta, as in the classical
// numerical-recipes formulation.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3.0e-16;
    constexpr double kTiny = 1.0e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw std::invalid_argument("student t: df must be > 0");
    if (t == 0.0) return 0.5;
    const double x = df / (df + t * t);
    const double tail = 0.5 * regularized_incomplete_beta(0.5 * df, 0.5, x);
    return t > 0.0 ? 1.0 - tail : tail;
}

TTestResult welch_t_test(std::span<const double> sample_a, std::span<const double> sample_b) {
    if (sample_a.size() < 2 || sample_b.size() < 2) {
        throw std::invalid_argument("welch_t_test: each sample needs >= 2 observations");
    }
    const double na = static_cast<double>(sample_a.size());
    const double nb = static_cast<double>(sample_b.size());
    const double ma = sample_mean(sample_a);
    const double mb = sample_mean(sample_b);
    const double va = sample_variance(sample_a);
    const double vb = sample_variance(sample_b);
    if (!std::isfinite(va) || !std::isfinite(vb)) {
        throw std::invalid_argument("welch_t_test: non-finite variance");
    }

    TTestResult out;
    const double se_sq = va / na + vb / nb;
    if (se_sq <= 0.0) {
        // Both samples constant. Equal means: no evidence of effect.
        if (ma == mb) {
            out.t = 0.0;
            out.p = 1.0;
            out.df = na + nb - 2.0;
            return out;
        }
        out.t = ma > mb ? std::numeric_limits<double>::infinity()
                        : -std::numeric_limits<double>::infinity();
        out.p = 0.0;
        out.df = na + nb - 2.0;
        return out;
    }

    out.t = (ma - mb) / std::sqrt(se_sq);
    out.df = se_sq * se_sq /
             ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    out.p = 2.0 * student_t_cdf(-std::fabs(out.t), out.df);
    if (out.p > 1.0) out.p = 1.0;
    return out;
}

}  // namespace pro
