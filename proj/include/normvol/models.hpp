#pragma once

// Stochastic-volatility model parameter sets and their closed-form
// facts: the expected mean variance M0, the expected instantaneous
// variance curve, and the quadratic-variation density of the
// conditional mean-variance martingale M_s = (1/T) E_s int_0^T sigma^2.
//
// Heston variance:  d(sigma^2) = -kappa (sigma^2 - theta) dt + nu sigma dB
// SABR volatility:  sigma_t = sigma_0 exp(-nu^2 t / 2 + nu B_t)
//
// rho rides along with the parameters but only the path engine reads it.

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "normvol/math.hpp"

namespace normvol {

struct HestonParams {
    double sigma0 = 0.0;  // initial volatility (variance sigma0^2)
    double kappa = 0.0;
    double theta = 0.0;   // long-run variance
    double nu = 0.0;      // vol of variance
    double rho = 0.0;

    void validate() const {
        if (!all_finite({sigma0, kappa, theta, nu, rho}))
            throw std::domain_error("HestonParams: non-finite field");
        if (!(sigma0 > 0.0 && kappa > 0.0 && theta > 0.0 && nu > 0.0))
            throw std::domain_error("HestonParams: sigma0, kappa, theta, nu must be > 0");
        if (std::abs(rho) > 1.0)
            throw std::domain_error("HestonParams: |rho| must be <= 1");
    }
};

struct SabrParams {
    double sigma0 = 0.0;
    double nu = 0.0;  // vol of vol
    double rho = 0.0;

    void validate() const {
        if (!all_finite({sigma0, nu, rho}))
            throw std::domain_error("SabrParams: non-finite field");
        if (!(sigma0 > 0.0) || nu < 0.0)
            throw std::domain_error("SabrParams: need sigma0 > 0, nu >= 0");
        if (std::abs(rho) > 1.0)
            throw std::domain_error("SabrParams: |rho| must be <= 1");
    }
};

using VolModel = std::variant<HestonParams, SabrParams>;

inline void validate(const VolModel& model) {
    std::visit([](const auto& p) { p.validate(); }, model);
}

inline double model_rho(const VolModel& model) {
    return std::visit([](const auto& p) { return p.rho; }, model);
}

inline std::string model_name(const VolModel& model) {
    return std::holds_alternative<HestonParams>(model) ? "heston" : "sabr";
}

// E sigma_t^2: theta + (sigma0^2 - theta) e^{-kappa t} (Heston),
// sigma0^2 e^{nu^2 t} (SABR).
inline double expected_variance_curve(const VolModel& model, double t) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw std::domain_error("expected_variance_curve: t must be finite and >= 0");
    if (const auto* h = std::get_if<HestonParams>(&model)) {
        h->validate();
        return h->theta + (h->sigma0 * h->sigma0 - h->theta) * std::exp(-h->kappa * t);
    }
    const auto& s = std::get<SabrParams>(model);
    s.validate();
    return s.sigma0 * s.sigma0 * std::exp(s.nu * s.nu * t);
}

// M0 = (1/T) E int_0^T sigma_s^2 ds, closed form per model.
inline double m0(const VolModel& model, double maturity) {
    if (!(maturity > 0.0) || !std::isfinite(maturity))
        throw std::domain_error("m0: maturity must be finite and > 0");
    if (const auto* h = std::get_if<HestonParams>(&model)) {
        h->validate();
        const double var0 = h->sigma0 * h->sigma0;
        return h->theta + (var0 - h->theta) * one_minus_exp_neg_over_x(h->kappa * maturity);
    }
    const auto& s = std::get<SabrParams>(model);
    s.validate();
    return s.sigma0 * s.sigma0 * expm1_over_x(s.nu * s.nu * maturity);
}

// Density d<M,M>_s/ds evaluated at instantaneous variance sigma_sq_s:
//   Heston: nu^2 sigma_s^2 (1 - e^{-kappa (T-s)})^2 / (kappa T)^2
//   SABR:   4 sigma_s^4 (e^{nu^2 (T-s)} - 1)^2 / (nu T)^2
// Both follow from Ito on M_s with the models' conditional variance
// curves; written with (T-s)-scaled ratio helpers so the kappa -> 0 and
// nu -> 0 limits are exact.
inline double qv_density_of_m(const VolModel& model, double sigma_sq_s, double s,
                              double maturity) {
    if (!(maturity > 0.0) || !(s >= 0.0) || s > maturity)
        throw std::domain_error("qv_density_of_m: need 0 <= s <= T");
    if (!(sigma_sq_s >= 0.0) || !std::isfinite(sigma_sq_s))
        throw std::domain_error("qv_density_of_m: sigma_sq_s must be >= 0");
    const double tau = maturity - s;
    const double tau_over_t = tau / maturity;
    if (const auto* h = std::get_if<HestonParams>(&model)) {
        h->validate();
        const double ratio = one_minus_exp_neg_over_x(h->kappa * tau);
        return h->nu * h->nu * sigma_sq_s * tau_over_t * tau_over_t * ratio * ratio;
    }
    const auto& p = std::get<SabrParams>(model);
    p.validate();
    const double ratio = expm1_over_x(p.nu * p.nu * tau);
    return 4.0 * sigma_sq_s * sigma_sq_s * p.nu * p.nu * tau_over_t * tau_over_t *
           ratio * ratio;
}

// (1/T) E_s int_s^T sigma_u^2 du given sigma_s^2: the forward leg of
// v_s^2. Heston integrates the mean-reverting curve, SABR the
// exponential one.
inline double conditional_tail_mean_variance(const VolModel& model, double sigma_sq_s,
                                             double s, double maturity) {
    if (!(maturity > 0.0) || !(s >= 0.0) || s > maturity)
        throw std::domain_error("conditional_tail_mean_variance: need 0 <= s <= T");
    const double tau = maturity - s;
    if (const auto* h = std::get_if<HestonParams>(&model)) {
        const double ratio = one_minus_exp_neg_over_x(h->kappa * tau);
        return (h->theta * tau + (sigma_sq_s - h->theta) * tau * ratio) / maturity;
    }
    const auto& p = std::get<SabrParams>(model);
    return sigma_sq_s * tau * expm1_over_x(p.nu * p.nu * tau) / maturity;
}

}  // namespace normvol
