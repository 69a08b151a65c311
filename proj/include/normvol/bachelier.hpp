#pragma once

// Closed-form Bachelier (normal-model) pricing: price, sensitivities,
// the fourth-derivative kernel, implied-volatility inversion, and the
// ATM Black-Scholes <-> Bachelier conversion. Prices are undiscounted
// (risk-neutral measure with zero rates); negative spot/strike levels
// are legal in the normal model.

#include <cmath>
#include <stdexcept>

#include "normvol/math.hpp"

namespace normvol {

struct MarketSpec {
    double spot = 0.0;      // x
    double strike = 0.0;    // k
    double maturity = 0.0;  // T, years

    void validate() const {
        if (!all_finite({spot, strike, maturity}))
            throw std::domain_error("MarketSpec: non-finite field");
        if (!(maturity > 0.0))
            throw std::domain_error("MarketSpec: maturity must be > 0");
    }
};

struct BachelierQuote {
    double price = 0.0;
    double d = 0.0;      // (x-k)/(sigma sqrt(T))
    double vega = 0.0;
    double delta = 0.0;
    double gamma = 0.0;
};

inline double bachelier_d(const MarketSpec& m, double sigma) {
    return (m.spot - m.strike) / (sigma * std::sqrt(m.maturity));
}

// (x-k) N(d) + N'(d) sigma sqrt(T); sigma = 0 returns the intrinsic
// value as the continuous limit.
inline double bachelier_price(const MarketSpec& m, double sigma) {
    m.validate();
    if (!std::isfinite(sigma) || sigma < 0.0)
        throw std::domain_error("bachelier_price: sigma must be finite and >= 0");
    const double moneyness = m.spot - m.strike;
    if (sigma == 0.0)
        return moneyness > 0.0 ? moneyness : 0.0;
    const double sqrt_t = std::sqrt(m.maturity);
    const double d = moneyness / (sigma * sqrt_t);
    return moneyness * norm_cdf(d) + norm_pdf(d) * sigma * sqrt_t;
}

inline double bachelier_delta(const MarketSpec& m, double sigma) {
    m.validate();
    if (!std::isfinite(sigma) || sigma < 0.0)
        throw std::domain_error("bachelier_delta: sigma must be finite and >= 0");
    const double moneyness = m.spot - m.strike;
    if (sigma == 0.0)
        return moneyness > 0.0 ? 1.0 : (moneyness < 0.0 ? 0.0 : 0.5);
    return norm_cdf(bachelier_d(m, sigma));
}

inline double bachelier_gamma(const MarketSpec& m, double sigma) {
    m.validate();
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::domain_error("bachelier_gamma: sigma must be finite and > 0");
    const double sqrt_t = std::sqrt(m.maturity);
    return norm_pdf(bachelier_d(m, sigma)) / (sigma * sqrt_t);
}

inline double bachelier_vega(const MarketSpec& m, double sigma) {
    m.validate();
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::domain_error("bachelier_vega: sigma must be finite and > 0");
    return norm_pdf(bachelier_d(m, sigma)) * std::sqrt(m.maturity);
}

// Fourth x-derivative of the price:
//   ((x-k)^2 - T sigma^2) / (T^{5/2} sigma^5) * N'(d).
// Singular at sigma = 0.
inline double bachelier_kernel(const MarketSpec& m, double sigma) {
    m.validate();
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::domain_error("bachelier_kernel: sigma must be finite and > 0");
    const double moneyness = m.spot - m.strike;
    const double t = m.maturity;
    const double d = moneyness / (sigma * std::sqrt(t));
    const double s2 = sigma * sigma;
    return (moneyness * moneyness - t * s2) /
           (t * t * std::sqrt(t) * s2 * s2 * sigma) * norm_pdf(d);
}

inline BachelierQuote bachelier_quote(const MarketSpec& m, double sigma) {
    BachelierQuote q;
    q.price = bachelier_price(m, sigma);
    if (sigma > 0.0) {
        q.d = bachelier_d(m, sigma);
        q.vega = bachelier_vega(m, sigma);
        q.delta = bachelier_delta(m, sigma);
        q.gamma = bachelier_gamma(m, sigma);
    } else {
        q.d = 0.0;
        q.delta = bachelier_delta(m, sigma);
    }
    return q;
}

// Inverts bachelier_price in sigma. Bracket [0, hi] grown geometrically,
// then bisected to ulp width; the price is strictly increasing in sigma
// so the root is unique. price below intrinsic is an arbitrage violation;
// price equal to intrinsic returns 0.
inline double implied_vol_bachelier(const MarketSpec& m, double price) {
    m.validate();
    if (!std::isfinite(price))
        throw std::domain_error("implied_vol_bachelier: non-finite price");
    const double moneyness = m.spot - m.strike;
    const double intrinsic = moneyness > 0.0 ? moneyness : 0.0;
    if (price < intrinsic)
        throw std::domain_error("implied_vol_bachelier: price below intrinsic (arbitrage)");
    if (price == intrinsic)
        return 0.0;

    const double sqrt_t = std::sqrt(m.maturity);
    // ATM closed form seeds the bracket; exact when x == k.
    if (moneyness == 0.0)
        return price * kSqrt2Pi / sqrt_t;

    // Time value is maximized at the money, so sigma >= TV * sqrt(2 pi / T)
    // seeds the bracket from below; grow the top geometrically until it
    // over-prices.
    const double time_value = price - intrinsic;
    double hi = time_value * kSqrt2Pi / sqrt_t + std::abs(moneyness) / sqrt_t;
    if (!(hi > 0.0)) hi = 1.0;
    while (bachelier_price(m, hi) < price) {
        hi *= 2.0;
        if (!std::isfinite(hi))
            throw std::domain_error("implied_vol_bachelier: bracket growth overflow");
    }
    double lo = 0.0;

    // Newton safeguarded by the bracket: vega vanishes in the wings, so a
    // raw Newton step can stall or escape; any bad step falls back to
    // bisection, and the bracket shrinks every iteration either way.
    double x = std::max(time_value * kSqrt2Pi / sqrt_t, 0.5 * hi);
    for (int i = 0; i < 200; ++i) {
        const double f = bachelier_price(m, x) - price;
        if (f < 0.0)
            lo = x;
        else
            hi = x;
        if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;

        double next = std::numeric_limits<double>::quiet_NaN();
        if (x > 0.0) {
            const double vega = norm_pdf((m.spot - m.strike) / (x * sqrt_t)) * sqrt_t;
            if (vega > 0.0) next = x - f / vega;
        }
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == x || next <= lo || next >= hi) break;
        x = next;
    }
    return 0.5 * (lo + hi);
}

// ATM implied-vol conversion: I_bac = sqrt(2 pi / T) * x * (2 N(I_bs sqrt(T)/2) - 1).
inline double atm_bachelier_from_bs(double spot, double maturity, double iv_bs) {
    if (!all_finite({spot, maturity, iv_bs}))
        throw std::domain_error("atm_bachelier_from_bs: non-finite input");
    if (!(spot > 0.0) || !(maturity > 0.0) || iv_bs < 0.0)
        throw std::domain_error("atm_bachelier_from_bs: need x > 0, T > 0, I_bs >= 0");
    const double sqrt_t = std::sqrt(maturity);
    return kSqrt2Pi / sqrt_t * spot * (2.0 * norm_cdf(iv_bs * sqrt_t / 2.0) - 1.0);
}

}  // namespace normvol
