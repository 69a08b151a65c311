#pragma once

// Estimation and persistence of the fractional moments
// E[M_T^{1/2-n}] of the realized mean variance M_T = (1/T) int sigma^2,
// together with the variance-swap level v = sqrt(M0) (closed form, not
// MC) and the volatility swap v_hat = E[sqrt(M_T)] (moment n = 0).
//
// Powers are taken in log space: exponents reach 1/2 - n_max ~ -30, and
// direct powering of distorted variance levels under- and overflows.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "normvol/math.hpp"
#include "normvol/models.hpp"
#include "normvol/parallel.hpp"
#include "normvol/paths.hpp"

namespace normvol {

struct StaleCacheError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TableParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TableValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string g17(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string canonical_sim_id(const VolModel& model, double maturity,
                                    const SimConfig& cfg) {
    std::ostringstream os;
    if (const auto* h = std::get_if<HestonParams>(&model)) {
        os << "heston sigma0=" << g17(h->sigma0) << " kappa=" << g17(h->kappa)
           << " theta=" << g17(h->theta) << " nu=" << g17(h->nu)
           << " rho=" << g17(h->rho);
    } else {
        const auto& s = std::get<SabrParams>(model);
        os << "sabr sigma0=" << g17(s.sigma0) << " nu=" << g17(s.nu)
           << " rho=" << g17(s.rho);
    }
    os << " T=" << g17(maturity) << " n_paths=" << cfg.n_paths
       << " steps_per_year=" << cfg.steps_per_year << " seed=" << cfg.seed
       << " antithetic=" << (cfg.antithetic ? 1 : 0);
    return os.str();
}

}  // namespace detail

inline std::uint64_t sim_fingerprint(const VolModel& model, double maturity,
                                     const SimConfig& cfg) {
    return detail::fnv1a64(detail::canonical_sim_id(model, maturity, cfg));
}

struct MomentTable {
    VolModel model;
    double maturity = 0.0;
    SimConfig cfg;
    std::uint64_t fingerprint = 0;

    double m0_value = 0.0;  // closed-form M0
    double v = 0.0;         // sqrt(M0)
    double v_hat = 0.0;     // moments[0]
    std::size_t n_max = 0;
    std::vector<double> moments;     // entry n: E[M_T^{1/2-n}], n = 0..n_max
    std::vector<double> std_errors;

    double moment(std::size_t n) const {
        if (n >= moments.size())
            throw std::out_of_range("MomentTable::moment: n exceeds n_max");
        return moments[n];
    }

    // D_n = E[M_T^{1/2-n}] - M0^{1/2-n}; computed with the same log-space
    // power as the estimator so a degenerate (deterministic) batch gives
    // exact zeros.
    double moment_gap(std::size_t n) const {
        return moment(n) - m0_power(n);
    }

    double m0_power(std::size_t n) const {
        if (n == 0) return std::sqrt(m0_value);
        return std::exp((0.5 - static_cast<double>(n)) * std::log(m0_value));
    }
};

inline MomentTable estimate_moments(const PathBatch& batch, const VolModel& model,
                                    double maturity, std::size_t n_max,
                                    unsigned workers = 0) {
    if (batch.n_paths() == 0)
        throw std::invalid_argument("estimate_moments: empty batch");
    if (n_max < 1)
        throw std::invalid_argument("estimate_moments: n_max must be >= 1");
    if (batch.maturity != maturity)
        throw std::invalid_argument("estimate_moments: batch maturity mismatch");

    const double m0_closed = m0(model, maturity);
    const double floor = 1e-12 * m0_closed;
    const std::size_t n_paths = batch.n_paths();

    std::vector<double> ln_iv(n_paths);
    std::vector<std::uint8_t> floored(n_paths, 0);
    parallel_for(
        n_paths,
        [&](std::size_t i) {
            double iv = batch.integrated_variance[i];
            if (iv < floor) {
                iv = floor;
                floored[i] = 1;
            }
            ln_iv[i] = std::log(iv);
        },
        workers);

    std::size_t n_floored = 0;
    for (auto f : floored) n_floored += f;
    if (static_cast<double>(n_floored) > 1e-4 * static_cast<double>(n_paths))
        throw std::runtime_error(
            "estimate_moments: " + std::to_string(n_floored) +
            " paths hit the positivity floor (> 0.01%); discretization problem");

    MomentTable table;
    table.model = model;
    table.maturity = maturity;
    // Reconstruct the generating config where it matters for identity.
    table.cfg.n_paths = n_paths;
    table.cfg.antithetic = batch.antithetic;
    table.m0_value = m0_closed;
    table.v = std::sqrt(m0_closed);
    table.n_max = n_max;
    table.moments.resize(n_max + 1);
    table.std_errors.resize(n_max + 1);

    std::vector<double> vals(n_paths);
    for (std::size_t n = 0; n <= n_max; ++n) {
        const double expo = 0.5 - static_cast<double>(n);
        parallel_for(
            n_paths,
            [&](std::size_t i) {
                vals[i] = n == 0 ? std::sqrt(batch.integrated_variance[i] < floor
                                                 ? floor
                                                 : batch.integrated_variance[i])
                                 : std::exp(expo * ln_iv[i]);
            },
            workers);
        const MeanVar mv = sample_mean_var(vals);
        table.moments[n] = mv.mean;
        table.std_errors[n] = std::sqrt(mv.var / static_cast<double>(n_paths));
    }
    table.v_hat = table.moments[0];
    return table;
}

// Convenience: fills in the true generating config so the fingerprint is
// meaningful for caching.
inline MomentTable estimate_moments(const PathBatch& batch, const VolModel& model,
                                    double maturity, std::size_t n_max,
                                    const SimConfig& cfg, unsigned workers = 0) {
    MomentTable t = estimate_moments(batch, model, maturity, n_max, workers);
    t.cfg = cfg;
    t.fingerprint = sim_fingerprint(model, maturity, cfg);
    return t;
}

// v - v_hat >= 0 by Jensen; equals (1/8) E int v_s^{-3} d<M,M>_s.
inline double convexity_gap(const MomentTable& table) {
    return table.v - table.v_hat;
}

inline void save_table(const MomentTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("save_table: cannot open " + path);
    char fp[24];
    std::snprintf(fp, sizeof(fp), "%016llx",
                  static_cast<unsigned long long>(table.fingerprint));
    out << "normvol-moment-table v1\n";
    out << "fingerprint " << fp << "\n";
    if (const auto* h = std::get_if<HestonParams>(&table.model)) {
        out << "model heston\n";
        out << "sigma0 " << detail::g17(h->sigma0) << "\n";
        out << "kappa " << detail::g17(h->kappa) << "\n";
        out << "theta " << detail::g17(h->theta) << "\n";
        out << "nu " << detail::g17(h->nu) << "\n";
        out << "rho " << detail::g17(h->rho) << "\n";
    } else {
        const auto& s = std::get<SabrParams>(table.model);
        out << "model sabr\n";
        out << "sigma0 " << detail::g17(s.sigma0) << "\n";
        out << "nu " << detail::g17(s.nu) << "\n";
        out << "rho " << detail::g17(s.rho) << "\n";
    }
    out << "maturity " << detail::g17(table.maturity) << "\n";
    out << "n_paths " << table.cfg.n_paths << "\n";
    out << "steps_per_year " << table.cfg.steps_per_year << "\n";
    out << "seed " << table.cfg.seed << "\n";
    out << "antithetic " << (table.cfg.antithetic ? 1 : 0) << "\n";
    out << "m0 " << detail::g17(table.m0_value) << "\n";
    out << "v " << detail::g17(table.v) << "\n";
    out << "v_hat " << detail::g17(table.v_hat) << "\n";
    out << "n_max " << table.n_max << "\n";
    for (std::size_t n = 0; n <= table.n_max; ++n)
        out << n << " " << detail::g17(table.moments[n]) << " "
            << detail::g17(table.std_errors[n]) << "\n";
    if (!out)
        throw std::runtime_error("save_table: write failure on " + path);
}

namespace detail {

inline std::string expect_key(std::istream& in, const std::string& key) {
    std::string k, rest;
    if (!(in >> k) || k != key)
        throw TableParseError("moment table: expected key '" + key + "'");
    if (!(in >> rest))
        throw TableParseError("moment table: missing value for '" + key + "'");
    return rest;
}

inline double expect_num(std::istream& in, const std::string& key) {
    const std::string s = expect_key(in, key);
    try {
        std::size_t pos = 0;
        const double x = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return x;
    } catch (const std::exception&) {
        throw TableParseError("moment table: bad numeric value for '" + key + "'");
    }
}

}  // namespace detail

// Loads a table and validates it against the requested simulation
// identity; a fingerprint mismatch means the cache is stale for these
// inputs.
inline MomentTable load_table(const std::string& path, const VolModel& model,
                              double maturity, const SimConfig& cfg) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("load_table: cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line != "normvol-moment-table v1")
        throw TableParseError("moment table: bad header line '" + line + "'");

    const std::string fp_hex = detail::expect_key(in, "fingerprint");
    std::uint64_t stored_fp = 0;
    try {
        stored_fp = std::stoull(fp_hex, nullptr, 16);
    } catch (const std::exception&) {
        throw TableParseError("moment table: bad fingerprint field");
    }

    MomentTable table;
    const std::string kind = detail::expect_key(in, "model");
    if (kind == "heston") {
        HestonParams h;
        h.sigma0 = detail::expect_num(in, "sigma0");
        h.kappa = detail::expect_num(in, "kappa");
        h.theta = detail::expect_num(in, "theta");
        h.nu = detail::expect_num(in, "nu");
        h.rho = detail::expect_num(in, "rho");
        table.model = h;
    } else if (kind == "sabr") {
        SabrParams s;
        s.sigma0 = detail::expect_num(in, "sigma0");
        s.nu = detail::expect_num(in, "nu");
        s.rho = detail::expect_num(in, "rho");
        table.model = s;
    } else {
        throw TableParseError("moment table: unknown model '" + kind + "'");
    }
    table.maturity = detail::expect_num(in, "maturity");
    table.cfg.n_paths =
        static_cast<std::size_t>(detail::expect_num(in, "n_paths"));
    table.cfg.steps_per_year =
        static_cast<unsigned>(detail::expect_num(in, "steps_per_year"));
    table.cfg.seed = static_cast<std::uint64_t>(detail::expect_num(in, "seed"));
    table.cfg.antithetic = detail::expect_num(in, "antithetic") != 0.0;
    table.m0_value = detail::expect_num(in, "m0");
    table.v = detail::expect_num(in, "v");
    table.v_hat = detail::expect_num(in, "v_hat");
    const double n_max_raw = detail::expect_num(in, "n_max");
    table.n_max = static_cast<std::size_t>(n_max_raw);
    table.moments.resize(table.n_max + 1);
    table.std_errors.resize(table.n_max + 1);
    for (std::size_t n = 0; n <= table.n_max; ++n) {
        std::size_t idx;
        double moment, se;
        if (!(in >> idx >> moment >> se) || idx != n)
            throw TableParseError("moment table: bad record for n=" +
                                  std::to_string(n));
        table.moments[n] = moment;
        table.std_errors[n] = se;
    }

    // Internal consistency before the cache check.
    const std::uint64_t file_fp =
        sim_fingerprint(table.model, table.maturity, table.cfg);
    if (file_fp != stored_fp)
        throw TableParseError("moment table: fingerprint does not match fields");
    for (std::size_t n = 0; n <= table.n_max; ++n) {
        if (!(table.moments[n] > 0.0) || !std::isfinite(table.moments[n]))
            throw TableValidationError("moment table: non-positive moment at n=" +
                                       std::to_string(n));
        if (table.std_errors[n] < 0.0 || !std::isfinite(table.std_errors[n]))
            throw TableValidationError("moment table: bad std_error at n=" +
                                       std::to_string(n));
    }
    if (table.v_hat != table.moments[0])
        throw TableValidationError("moment table: v_hat disagrees with moments[0]");

    const std::uint64_t requested_fp = sim_fingerprint(model, maturity, cfg);
    if (requested_fp != stored_fp)
        throw StaleCacheError(
            "moment table: cached for a different (model, T, sim config)");
    table.fingerprint = stored_fp;
    return table;
}

}  // namespace normvol
