#pragma once

// Scalar numeric kernels shared across the library: standard normal
// distribution functions, stable small-exponent helpers, and a
// fixed-shape pairwise sum used for deterministic reductions.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>

namespace normvol {

inline constexpr double kSqrt2Pi = 2.506628274631000502415765284811;
inline constexpr double kInvSqrt2Pi = 0.398942280401432677939946059934;
inline constexpr double kSqrt2 = 1.414213562373095048801688724210;

inline double norm_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// erfc-based CDF, accurate to a couple of ulp over the full double range.
inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x / kSqrt2);
}

// Inverse normal CDF: Acklam's rational approximation polished by one
// Halley step against the erfc-based CDF. Relative error ~1e-15.
inline double norm_inv_cdf(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("norm_inv_cdf: p must lie in (0,1)");

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
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // Halley refinement.
    const double e = norm_cdf(x) - p;
    const double u = e * kSqrt2Pi * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

// (e^x - 1)/x with a Taylor branch below |x| = 1e-6 to dodge 0/0 at the
// origin; expm1 keeps the exponential branch cancellation-free.
inline double expm1_over_x(double x) {
    if (std::abs(x) < 1e-6)
        return 1.0 + x * (0.5 + x * (1.0 / 6.0 + x / 24.0));
    return std::expm1(x) / x;
}

// (1 - e^{-x})/x, same branch structure.
inline double one_minus_exp_neg_over_x(double x) {
    return expm1_over_x(-x);
}

// Pairwise (tree) summation with a fixed recursion shape: the result is
// a pure function of the input sequence, independent of thread count.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n <= 64) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_mean(std::span<const double> v) {
    if (v.empty())
        throw std::invalid_argument("pairwise_mean: empty input");
    return pairwise_sum(v) / static_cast<double>(v.size());
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // unbiased sample variance
};

inline MeanVar sample_mean_var(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 2)
        throw std::invalid_argument("sample_mean_var: need at least 2 samples");
    const double m = pairwise_mean(v);
    double ss = 0.0;
    for (double x : v) {
        const double dx = x - m;
        ss += dx * dx;
    }
    return {m, ss / static_cast<double>(n - 1)};
}

inline bool all_finite(std::initializer_list<double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

}  // namespace normvol
