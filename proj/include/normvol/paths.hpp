#pragma once

// Monte Carlo path generation for the supported volatility models and
// the Bachelier asset. SABR volatility is sampled exactly from its
// lognormal law at the grid nodes; Heston variance uses full-truncation
// Euler (negative part zeroed inside drift and diffusion). Integrated
// variance is the trapezoid of the sigma^2 node values.
//
// Determinism contract: the output is a pure function of
// (model, maturity, config); worker count only affects wall time. Each
// path owns a Philox stream keyed by the seed, and antithetic partners
// share a stream with every Gaussian sign-flipped.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "normvol/models.hpp"
#include "normvol/parallel.hpp"
#include "normvol/rng.hpp"

namespace normvol {

struct SimConfig {
    std::size_t n_paths = 100000;
    unsigned steps_per_year = 252;
    std::uint64_t seed = 1;
    bool antithetic = true;

    void validate() const {
        if (steps_per_year < 1)
            throw std::invalid_argument("SimConfig: steps_per_year must be >= 1");
        if (antithetic) {
            if (n_paths < 2 || n_paths % 2 != 0)
                throw std::invalid_argument(
                    "SimConfig: antithetic sampling needs an even n_paths >= 2");
        } else if (n_paths < 1) {
            throw std::invalid_argument("SimConfig: n_paths must be >= 1");
        }
    }
};

inline std::size_t grid_steps(const SimConfig& cfg, double maturity) {
    const double raw = static_cast<double>(cfg.steps_per_year) * maturity;
    return static_cast<std::size_t>(std::ceil(raw - 1e-9));
}

struct PathBatch {
    double maturity = 0.0;
    double dt = 0.0;
    std::size_t n_steps = 0;
    bool antithetic = false;

    // (1/T) int_0^T sigma^2 ds per path.
    std::vector<double> integrated_variance;
    // X_T per path, and the rho=0 coupling X_T^0 (same sigma path, same
    // B increments, rho forced to zero).
    std::optional<std::vector<double>> terminal_x;
    std::optional<std::vector<double>> terminal_x_rho0;
    // sigma^2 at grid nodes, row-major [path][node], n_steps+1 nodes.
    std::optional<std::vector<double>> sigma_sq_nodes;

    // Heston diagnostic: Euler steps whose pre-truncation variance went
    // negative.
    std::uint64_t negative_variance_steps = 0;
    std::uint64_t total_steps = 0;

    std::size_t n_paths() const { return integrated_variance.size(); }
    std::size_t n_nodes() const { return n_steps + 1; }

    const double* grid_row(std::size_t path) const {
        return sigma_sq_nodes->data() + path * n_nodes();
    }
};

namespace detail {

struct SimRequest {
    bool with_asset = false;
    bool couple_rho0 = false;
    bool retain_grid = false;
    double x0 = 0.0;
};

// Simulates one path (and, when antithetic, its sign-flipped partner in
// the same pass so the drawn Gaussians are reused).
template <typename Model>
struct PathKernel;

template <>
struct PathKernel<SabrParams> {
    const SabrParams& p;
    double dt;

    double sig_sq(double state) const { return state * state; }
    double init_state() const { return p.sigma0; }
    double advance(double state, double z, std::uint64_t* /*neg*/) const {
        return state * std::exp((-0.5 * p.nu * p.nu) * dt + p.nu * std::sqrt(dt) * z);
    }
};

template <>
struct PathKernel<HestonParams> {
    const HestonParams& p;
    double dt;

    double sig_sq(double state) const { return state > 0.0 ? state : 0.0; }
    double init_state() const { return p.sigma0 * p.sigma0; }
    double advance(double state, double z, std::uint64_t* neg) const {
        const double pos = state > 0.0 ? state : 0.0;
        if (state < 0.0) ++*neg;
        return state - p.kappa * (pos - p.theta) * dt +
               p.nu * std::sqrt(pos) * std::sqrt(dt) * z;
    }
};

template <typename Model>
void run_batch(const Model& params, double rho, double maturity, const SimConfig& cfg,
               const SimRequest& req, unsigned workers, PathBatch& out) {
    const std::size_t n_steps = grid_steps(cfg, maturity);
    const double dt = maturity / static_cast<double>(n_steps);
    const double sqrt_dt = std::sqrt(dt);
    const double rho_perp = std::sqrt(1.0 - rho * rho);

    out.maturity = maturity;
    out.dt = dt;
    out.n_steps = n_steps;
    out.antithetic = cfg.antithetic;
    out.integrated_variance.assign(cfg.n_paths, 0.0);
    if (req.with_asset) out.terminal_x.emplace(cfg.n_paths, 0.0);
    if (req.couple_rho0) out.terminal_x_rho0.emplace(cfg.n_paths, 0.0);
    if (req.retain_grid) out.sigma_sq_nodes.emplace(cfg.n_paths * (n_steps + 1), 0.0);

    const std::size_t n_units = cfg.antithetic ? cfg.n_paths / 2 : cfg.n_paths;
    const int n_variants = cfg.antithetic ? 2 : 1;
    std::vector<std::uint64_t> neg_counts(n_units, 0);

    parallel_for(
        n_units,
        [&](std::size_t unit) {
            const PathKernel<Model> kernel{params, dt};
            std::uint64_t neg = 0;
            for (int variant = 0; variant < n_variants; ++variant) {
                const double flip = variant == 0 ? 1.0 : -1.0;
                const std::size_t path = cfg.antithetic ? 2 * unit + variant : unit;
                double state = kernel.init_state();
                double sig2 = kernel.sig_sq(state);
                double iv_acc = 0.5 * sig2;
                double x = req.x0;
                double x0c = req.x0;
                double* grid = req.retain_grid
                                   ? out.sigma_sq_nodes->data() + path * (n_steps + 1)
                                   : nullptr;
                if (grid) grid[0] = sig2;
                for (std::size_t i = 0; i < n_steps; ++i) {
                    const NormalPair z = normal_pair(cfg.seed, unit, i);
                    const double zw = flip * z.first;
                    const double zb = flip * z.second;
                    if (req.with_asset) {
                        const double sig = std::sqrt(sig2);
                        x += sig * sqrt_dt * (rho * zw + rho_perp * zb);
                        if (req.couple_rho0) x0c += sig * sqrt_dt * zb;
                    }
                    state = kernel.advance(state, zw, &neg);
                    sig2 = kernel.sig_sq(state);
                    iv_acc += i + 1 < n_steps ? sig2 : 0.5 * sig2;
                    if (grid) grid[i + 1] = sig2;
                }
                out.integrated_variance[path] = iv_acc * dt / maturity;
                if (req.with_asset) (*out.terminal_x)[path] = x;
                if (req.couple_rho0) (*out.terminal_x_rho0)[path] = x0c;
            }
            neg_counts[unit] = neg;
        },
        workers);

    std::uint64_t neg_total = 0;
    for (std::uint64_t c : neg_counts) neg_total += c;
    out.negative_variance_steps = neg_total;
    out.total_steps = static_cast<std::uint64_t>(cfg.n_paths) * n_steps;
}

inline void dispatch(const VolModel& model, double rho, double maturity,
                     const SimConfig& cfg, const SimRequest& req, unsigned workers,
                     PathBatch& out) {
    validate(model);
    cfg.validate();
    if (!(maturity > 0.0) || !std::isfinite(maturity))
        throw std::invalid_argument("simulate: maturity must be finite and > 0");
    if (const auto* h = std::get_if<HestonParams>(&model))
        run_batch(*h, rho, maturity, cfg, req, workers, out);
    else
        run_batch(std::get<SabrParams>(model), rho, maturity, cfg, req, workers, out);
}

}  // namespace detail

// Volatility paths only: integrated variance per path, optionally the
// full sigma^2 grid (needed by the decomposition pricer and the moment
// identity diagnostics).
inline PathBatch simulate_vol_paths(const VolModel& model, double maturity,
                                    const SimConfig& cfg, bool retain_grid = false,
                                    unsigned workers = 0) {
    PathBatch batch;
    detail::SimRequest req;
    req.retain_grid = retain_grid;
    detail::dispatch(model, 0.0, maturity, cfg, req, workers, batch);
    return batch;
}

// Asset terminal values under the model's rho (Euler with the left-node
// volatility). When couple_rho0 is set the batch also carries X_T^0
// built from the same sigma path and the same B increments with rho = 0,
// which maximizes its correlation with X_T.
inline PathBatch simulate_asset_terminal(const VolModel& model, double x0,
                                         double maturity, const SimConfig& cfg,
                                         bool couple_rho0 = false,
                                         unsigned workers = 0) {
    if (!std::isfinite(x0))
        throw std::invalid_argument("simulate_asset_terminal: non-finite x0");
    PathBatch batch;
    detail::SimRequest req;
    req.with_asset = true;
    req.couple_rho0 = couple_rho0;
    req.x0 = x0;
    detail::dispatch(model, model_rho(model), maturity, cfg, req, workers, batch);
    return batch;
}

}  // namespace normvol
