#pragma once

// The toy evolution d_t f + <v>^gamma <D>^{2s} f = 0, its exact dyadic block
// law, the sharpness infimum, and Gevrey-index estimation from block magnitudes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "kgl/dyadic.hpp"
#include "kgl/inequalities.hpp"
#include "kgl/numeric.hpp"
#include "kgl/spectral_core.hpp"

namespace kgl {

struct ToyParams {
    SoftPotentialParams prm{-1.0, 0.5};
    double a0 = 1.0;
    double T = 1.0;
    VelocityGrid grid{1, 4096, 32.0};
    int steps = 256;
    bool weight_monitoring = false;  // requires T <= a0/2
    double weight_power = 2.0;       // initial weight e^{a0 <v>^beta}; 2 unless the sub-exponential extension is enabled

    void validate() const {
        if (steps < 16) throw std::invalid_argument("ToyParams: at least 16 steps");
        if (!(a0 > 0.0)) throw std::invalid_argument("ToyParams: a0 must be positive");
        if (!(T >= 0.0)) throw std::invalid_argument("ToyParams: T must be nonnegative");
        if (weight_monitoring && T > a0 / 2.0) throw std::invalid_argument("ToyParams: T exceeds a0/2 with weight monitoring on");
        if (!(weight_power > 0.0 && weight_power <= 2.0)) throw std::invalid_argument("ToyParams: weight power must lie in (0, 2]");
    }
};

struct ToyTrajectory {
    std::vector<double> times;
    std::vector<SpectralField> snapshots;
};

namespace detail {

// (e^z - 1)/z and (e^z - 1 - z)/z^2 with series near zero
inline double etd_phi1(double z) {
    if (std::abs(z) < 1e-3) return 1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0 + z * z * z * z / 120.0;
    return std::expm1(z) / z;
}

inline double etd_phi2(double z) {
    if (std::abs(z) < 1e-3) return 0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0 + z * z * z * z / 720.0;
    return (std::expm1(z) - z) / (z * z);
}

/// Second-order exponential Runge-Kutta for u' = -W B u in Fourier variables,
/// with B = <D>^{2s} treated exactly and (1 - W) B u as the explicit part.
class ToyStepper {
public:
    ToyStepper(const VelocityGrid& g, double gamma, double s, double dt) : grid_(g) {
        const auto eta = g.frequency_radii();
        const auto r = g.radii();
        const std::size_t n = g.size();
        b_.resize(n);
        e_.resize(n);
        p1_.resize(n);
        p2_.resize(n);
        w_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            b_[i] = std::pow(bracket(eta[i]), 2.0 * s);
            const double z = -dt * b_[i];
            e_[i] = std::exp(z);
            p1_[i] = dt * etd_phi1(z);
            p2_[i] = dt * etd_phi2(z);
            w_[i] = 1.0 - std::pow(bracket(r[i]), gamma);
        }
        explicit_part_ = gamma != 0.0;
    }

    std::vector<cplx> step(const std::vector<cplx>& u) const {
        const std::size_t n = u.size();
        std::vector<cplx> out(n);
        if (!explicit_part_) {
            for (std::size_t i = 0; i < n; ++i) out[i] = e_[i] * u[i];
            return out;
        }
        const auto nu = nonlinear(u);
        std::vector<cplx> a(n);
        for (std::size_t i = 0; i < n; ++i) a[i] = e_[i] * u[i] + p1_[i] * nu[i];
        const auto na = nonlinear(a);
        for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + p2_[i] * (na[i] - nu[i]);
        return out;
    }

    /// -W B u, the full right-hand side.
    std::vector<cplx> rhs(const std::vector<cplx>& u) const {
        std::vector<cplx> bu(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) bu[i] = b_[i] * u[i];
        auto x = inverse_transform(grid_, bu);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] *= -(1.0 - w_[i]);
        return forward_transform(grid_, x);
    }

private:
    std::vector<cplx> nonlinear(const std::vector<cplx>& u) const {
        std::vector<cplx> bu(u.size());
        for (std::size_t i = 0; i < u.size(); ++i) bu[i] = b_[i] * u[i];
        auto x = inverse_transform(grid_, bu);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] *= w_[i];
        return forward_transform(grid_, x);
    }

    VelocityGrid grid_;
    std::vector<double> b_, e_, p1_, p2_, w_;
    bool explicit_part_ = true;
};

inline double boundary_magnitude(const SpectralField& f) {
    const auto& g = f.grid();
    double worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.unflatten(i);
        bool edge = false;
        for (int a = 0; a < g.dim(); ++a) edge = edge || idx[static_cast<std::size_t>(a)] == 0;
        if (edge) worst = std::max(worst, std::abs(f.samples()[i]));
    }
    return worst;
}

}  // namespace detail

/// Snapshots at t = 0 and after every record_every steps (and at T).
inline ToyTrajectory evolve_toy(const SpectralField& f0, const ToyParams& p, int record_every = 1) {
    p.validate();
    if (!(f0.grid() == p.grid)) throw std::invalid_argument("evolve_toy: field and parameters use different grids");
    if (detail::boundary_magnitude(f0) > 1e-14 * std::max(f0.max_abs(), 1e-300))
        throw std::invalid_argument("evolve_toy: initial datum does not decay to 1e-14 at the box boundary");
    if (record_every < 1) record_every = 1;
    const double dt = p.T / p.steps;
    const detail::ToyStepper stepper(p.grid, p.prm.gamma(), p.prm.s(), dt);

    ToyTrajectory out;
    out.times.push_back(0.0);
    out.snapshots.push_back(f0);
    std::vector<cplx> u(f0.coefficients().begin(), f0.coefficients().end());
    double norm = std::sqrt(sum_abs2(u));
    for (int n = 1; n <= p.steps; ++n) {
        u = stepper.step(u);
        const double next = std::sqrt(sum_abs2(u));
        if (next > norm * (1.0 + 1e-10)) throw std::runtime_error("evolve_toy: L2 norm grew during a step");
        norm = next;
        if (n % record_every == 0 || n == p.steps) {
            out.times.push_back(dt * n);
            out.snapshots.push_back(SpectralField::from_coefficients(p.grid, u));
        }
    }
    return out;
}

/// One step of size dt from f, for order checks.
inline SpectralField toy_step(const SpectralField& f, const SoftPotentialParams& prm, double dt) {
    const detail::ToyStepper stepper(f.grid(), prm.gamma(), prm.s(), dt);
    std::vector<cplx> u(f.coefficients().begin(), f.coefficients().end());
    return SpectralField::from_coefficients(f.grid(), stepper.step(u));
}

/// -<v>^gamma <D>^{2s} f.
inline SpectralField toy_rhs(const SpectralField& f, const SoftPotentialParams& prm) {
    const detail::ToyStepper stepper(f.grid(), prm.gamma(), prm.s(), 1.0);
    std::vector<cplx> u(f.coefficients().begin(), f.coefficients().end());
    return SpectralField::from_coefficients(f.grid(), stepper.rhs(u));
}

/// e^{-t 2^{2sj} 2^{gamma k}}.
inline double block_decay_exact(int j, int k, double t, const ToyParams& p) {
    return std::exp(-t * std::exp2(2.0 * p.prm.s() * j + p.prm.gamma() * k));
}

struct SharpnessResult {
    int k_star = 0;
    double value = 0.0;
    int kmax = 0;          // range actually searched
    bool widened = false;  // the first range had its minimum on the boundary
};

/// min over integer k in [0, kmax] of 2^{2sj} 2^{gamma k} + a0 2^{2k}; ties go to the smaller k.
inline SharpnessResult sharpness_infimum(int j, const ToyParams& p, int kmax = 64) {
    if (kmax < 64) throw std::invalid_argument("sharpness_infimum: kmax must be at least 64");
    SharpnessResult r;
    for (int range = kmax;; range *= 2) {
        r.kmax = range;
        r.k_star = 0;
        r.value = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= range; ++k) {
            const double g = std::exp2(2.0 * p.prm.s() * j + p.prm.gamma() * k) + p.a0 * std::exp2(2.0 * k);
            if (g < r.value) {
                r.value = g;
                r.k_star = k;
            }
        }
        if (r.k_star < range) return r;
        r.widened = true;
        if (range > (1 << 20)) throw std::runtime_error("sharpness_infimum: minimum escapes every search range");
    }
}

struct SharpnessRow {
    int j = 0;
    int k_star = 0;
    double inf_value = 0.0;
    double predicted_2pow = 0.0;  // 2^{(4s/(2-gamma)) j}
    double ratio = 0.0;
};

inline std::vector<SharpnessRow> sharpness_sweep(const ToyParams& p, int j_lo, int j_hi) {
    std::vector<SharpnessRow> rows;
    const double rate = 4.0 * p.prm.s() / (2.0 - p.prm.gamma());
    for (int j = j_lo; j <= j_hi; ++j) {
        const auto r = sharpness_infimum(j, p);
        SharpnessRow row{j, r.k_star, r.value, std::exp2(rate * j), 0.0};
        row.ratio = row.inf_value / row.predicted_2pow;
        rows.push_back(row);
    }
    return rows;
}

/// Block magnitudes M(j, k, t) kept as natural logarithms; -inf marks an empty or excluded block.
struct BlockLawState {
    int j_min = 0, j_max = 0, k_min = 0, k_max = 0;
    double t = 0.0;
    std::vector<double> log_m;  // row-major in j

    std::size_t index(int j, int k) const {
        if (j < j_min || j > j_max || k < k_min || k > k_max) throw std::out_of_range("BlockLawState: index outside the table");
        return static_cast<std::size_t>(j - j_min) * static_cast<std::size_t>(k_max - k_min + 1) +
               static_cast<std::size_t>(k - k_min);
    }
    double log_magnitude(int j, int k) const { return log_m[index(j, k)]; }
    double magnitude(int j, int k) const { return std::exp(log_magnitude(j, k)); }
};

/// log M(j,k,t) = -t 2^{2sj} 2^{gamma k} - a0 2^{beta k} + log g0(j,k).
template <class Envelope>
BlockLawState block_law(const ToyParams& p, double t, int j_min, int j_max, int k_min, int k_max, Envelope&& log_g0) {
    if (j_max < j_min || k_max < k_min) throw std::invalid_argument("block_law: empty index range");
    BlockLawState st{j_min, j_max, k_min, k_max, t, {}};
    st.log_m.resize(static_cast<std::size_t>(j_max - j_min + 1) * static_cast<std::size_t>(k_max - k_min + 1));
    for (int j = j_min; j <= j_max; ++j)
        for (int k = k_min; k <= k_max; ++k)
            st.log_m[st.index(j, k)] = -t * std::exp2(2.0 * p.prm.s() * j + p.prm.gamma() * k) -
                                       p.a0 * std::exp2(p.weight_power * k) + log_g0(j, k);
    return st;
}

inline BlockLawState block_law(const ToyParams& p, double t, int j_min, int j_max, int k_min = 0, int k_max = 64) {
    return block_law(p, t, j_min, j_max, k_min, k_max, [](int, int) { return 0.0; });
}

inline constexpr double block_floor = 1e-300;

/// Measured M(j,k) = ||Delta_j P_k f|| / ||Delta_j P_k g|| where g is the weighted
/// initial profile; blocks of f below the floor are excluded.
inline BlockLawState measure_block_law(const SpectralField& f, const SpectralField& profile, const BumpPair& bumps,
                                       double t) {
    const auto& g = f.grid();
    const int jmax = outer_frequency_shell(g), kmax = max_phase_shell(g);
    BlockLawState st{-1, jmax, -1, kmax, t, {}};
    st.log_m.assign(static_cast<std::size_t>(jmax + 2) * static_cast<std::size_t>(kmax + 2),
                    -std::numeric_limits<double>::infinity());
    const auto eta = g.frequency_radii();
    for (int k = -1; k <= kmax; ++k) {
        const auto fk = project_phase(f, bumps, k);
        const auto gk = project_phase(profile, bumps, k);
        for (int j = -1; j <= jmax; ++j) {
            const double num = frequency_block_norm(fk, bumps, j, eta);
            const double den = frequency_block_norm(gk, bumps, j, eta);
            if (num >= block_floor && den > 0.0) st.log_m[st.index(j, k)] = std::log(num) - std::log(den);
        }
    }
    return st;
}

struct GevreyFit {
    double r_hat = 0.0;  // estimated index, 1/slope
    double c_hat = 0.0;  // E_j ~ c_hat 2^{j/r_hat}
    double slope = 0.0;
    double residual = 0.0;
    std::vector<int> shells;
    std::vector<double> exponents;  // E_j on the shells used
    int j_lo = 0, j_hi = 0;
    bool non_monotone = false;
    double clamped_index() const { return std::max(r_hat, 1.0); }
};

/// E_j = -log sup_k M(j,k,t); fits log2 E_j = log2 c + j / r over usable shells in [j_lo, j_hi].
inline GevreyFit estimate_gevrey_index(const BlockLawState& st, int j_lo, int j_hi) {
    if (!(st.t > 0.0)) throw std::invalid_argument("estimate_gevrey_index: needs t > 0");
    j_lo = std::max(j_lo, st.j_min);
    j_hi = std::min(j_hi, st.j_max);
    GevreyFit fit;
    std::vector<double> xs, ys;
    for (int j = j_lo; j <= j_hi; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        for (int k = st.k_min; k <= st.k_max; ++k) best = std::max(best, st.log_magnitude(j, k));
        const double e = -best;
        if (!std::isfinite(e) || e <= 0.0) continue;
        fit.shells.push_back(j);
        fit.exponents.push_back(e);
        xs.push_back(j);
        ys.push_back(std::log2(e));
    }
    if (fit.shells.size() < 8) throw std::invalid_argument("estimate_gevrey_index: fewer than 8 usable shells");
    for (std::size_t i = 1; i < fit.exponents.size(); ++i)
        fit.non_monotone = fit.non_monotone || fit.exponents[i] < fit.exponents[i - 1];
    const auto line = fit_line(xs, ys);
    fit.slope = line.slope;
    fit.r_hat = 1.0 / line.slope;
    fit.c_hat = std::exp2(line.intercept);
    fit.residual = line.residual;
    fit.j_lo = fit.shells.front();
    fit.j_hi = fit.shells.back();
    return fit;
}

/// max{(2 - gamma)/(4s), 1}.
inline double predicted_index(const SoftPotentialParams& prm) { return std::max((2.0 - prm.gamma()) / (4.0 * prm.s()), 1.0); }

/// Raw toy-sharp index (2 - gamma)/(4s) before clamping.
inline double raw_index(const SoftPotentialParams& prm) { return (2.0 - prm.gamma()) / (4.0 * prm.s()); }

/// Sub-exponential weight e^{a0 <v>^beta}: (beta - gamma)/(2 beta s), clamped at 1.
inline double predicted_index(const SoftPotentialParams& prm, double beta) {
    return std::max((beta - prm.gamma()) / (2.0 * beta * prm.s()), 1.0);
}

/// gamma = (p-5)/(p-1), s = 1/(p-1) for the inverse power law 1/r^{p-1}.
inline SoftPotentialParams inverse_power_law(double p) {
    if (!(p > 2.0)) throw std::invalid_argument("inverse power law needs p > 2");
    return SoftPotentialParams::diagnostic((p - 5.0) / (p - 1.0), 1.0 / (p - 1.0));
}

struct BlockComparison {
    int j = 0, k = 0;
    double measured = 0.0;  // ||Delta_j P_k f(T)|| / ||Delta_j P_k f_in||
    double exact = 0.0;     // block_decay_exact(j, k, T)
    double ratio = 0.0;     // measured / exact
};

struct ConsistencyReport {
    std::vector<BlockComparison> blocks;  // blocks above the magnitude threshold
    std::size_t outside_envelope = 0;
    double worst_factor = 1.0;  // max over compared blocks of max(ratio, 1/ratio)
    GevreyFit pde_fit;
    double predicted_slope = 0.0;
    double slope_relative_error = 0.0;
    bool blocks_ok = false;
    bool slope_ok = false;
};

/// Initial datum e^{-a0 <v>^beta} g with g seeded white noise; returns (f_in, g).
inline std::pair<SpectralField, SpectralField> toy_initial_datum(const ToyParams& p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> g(p.grid.size()), f(p.grid.size());
    const auto r = p.grid.radii();
    for (std::size_t i = 0; i < g.size(); ++i) {
        g[i] = normal(rng);
        f[i] = std::exp(-p.a0 * std::pow(bracket(r[i]), p.weight_power)) * g[i];
    }
    return {SpectralField::from_real_samples(p.grid, f), SpectralField::from_real_samples(p.grid, g)};
}

/// Evolves the toy model and compares dyadic blocks with the exact law: factor
/// `envelope` per block above `threshold` (relative to ||f_in||), and the PDE-side
/// Gevrey slope within `slope_tolerance` of 4s/(2-gamma).
inline ConsistencyReport pde_block_consistency(const ToyParams& p, std::uint64_t seed, const BumpPair& bumps,
                                               double envelope = 4.0, double threshold = 1e-12,
                                               double slope_tolerance = 0.15) {
    const auto [f_in, profile] = toy_initial_datum(p, seed);
    const auto traj = evolve_toy(f_in, p, p.steps);
    const auto& f_T = traj.snapshots.back();
    const auto& g = p.grid;
    const int jmax = outer_frequency_shell(g), kmax = max_phase_shell(g);
    const auto eta = g.frequency_radii();
    const double scale = f_in.l2_norm();

    ConsistencyReport rep;
    for (int k = -1; k <= kmax; ++k) {
        const auto a = project_phase(f_in, bumps, k);
        const auto b = project_phase(f_T, bumps, k);
        for (int j = -1; j <= jmax; ++j) {
            const double before = frequency_block_norm(a, bumps, j, eta);
            const double after = frequency_block_norm(b, bumps, j, eta);
            if (before <= 0.0 || after < threshold * scale) continue;
            BlockComparison c{j, k, after / before, block_decay_exact(j, k, p.T, p), 0.0};
            c.ratio = c.measured / c.exact;
            const double factor = std::max(c.ratio, 1.0 / c.ratio);
            rep.worst_factor = std::max(rep.worst_factor, factor);
            rep.outside_envelope += factor > envelope ? 1 : 0;
            rep.blocks.push_back(c);
        }
    }
    rep.blocks_ok = !rep.blocks.empty() && rep.outside_envelope == 0;
    rep.pde_fit = estimate_gevrey_index(measure_block_law(f_T, profile, bumps, p.T), -1, jmax);
    rep.predicted_slope = 4.0 * p.prm.s() / (2.0 - p.prm.gamma());
    rep.slope_relative_error = std::abs(rep.pde_fit.slope - rep.predicted_slope) / rep.predicted_slope;
    rep.slope_ok = rep.slope_relative_error <= slope_tolerance;
    return rep;
}

}  // namespace kgl
