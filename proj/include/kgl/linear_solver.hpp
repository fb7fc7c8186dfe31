#pragma once

// The regularized linear problem
//   d_t g + v d_x g + eps (<v>^{2/(1-s)} - Laplacian_{x,v}) g = S
// in one velocity dimension with an optional periodic x-axis, solved by
// Strang splitting with an exponential trapezoidal source. Picard iteration
// uses the toy operator -<v>^gamma <D>^{2s} as the collision surrogate.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgl/inequalities.hpp"
#include "kgl/numeric.hpp"
#include "kgl/spectral_core.hpp"
#include "kgl/toy_model.hpp"

namespace kgl {

struct RegularizedProblem {
    double eps = 0.1;
    SoftPotentialParams prm{-1.0, 0.5};
    double a0 = 0.05;
    VelocityGrid grid{1, 256, 8.0};
    std::size_t x_points = 0;  // 0 or 1: spatially homogeneous
    double T = 0.025;
    int steps = 64;

    bool x_axis() const { return x_points > 1; }
    double dt() const { return T / steps; }
    double pointwise_exponent() const { return 2.0 / (1.0 - prm.s()); }

    void validate() const {
        if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("RegularizedProblem: eps must lie in [0, 1]");
        if (!(a0 > 0.0)) throw std::invalid_argument("RegularizedProblem: a0 must be positive");
        if (!(T > 0.0)) throw std::invalid_argument("RegularizedProblem: T must be positive");
        if (T > a0 / 2.0) throw std::invalid_argument("RegularizedProblem: T exceeds a0/2");
        if (steps < 1) throw std::invalid_argument("RegularizedProblem: at least one step");
        if (grid.dim() != 1) throw std::invalid_argument("RegularizedProblem: velocity grid must be one-dimensional");
        if (!(prm.s() < 1.0)) throw std::invalid_argument("RegularizedProblem: s must be below 1");
        if (x_points > 1 && (x_points < 8 || (x_points & (x_points - 1)) != 0))
            throw std::invalid_argument("RegularizedProblem: x points must be a power of two >= 8");
    }
};

/// g(x, v) on a periodic x-grid of M points over [-pi, pi), stored as M
/// velocity fields indexed by the unitary x-Fourier mode xi (FFT order).
class PhaseSpaceField {
public:
    PhaseSpaceField() = default;

    static PhaseSpaceField homogeneous(const SpectralField& f) {
        PhaseSpaceField p;
        p.rows_.push_back(f);
        return p;
    }

    static PhaseSpaceField zeros(const VelocityGrid& g, std::size_t m) {
        PhaseSpaceField p;
        p.rows_.assign(std::max<std::size_t>(m, 1), SpectralField::zeros(g));
        return p;
    }

    /// Samples fn(x, v).
    template <class Fn>
    static PhaseSpaceField sample(const VelocityGrid& g, std::size_t m, Fn&& fn) {
        if (m <= 1) return homogeneous(SpectralField::sample(g, [&](double v) { return fn(0.0, v); }));
        const VelocityGrid xg = x_grid(m);
        std::vector<std::vector<cplx>> phys(m, std::vector<cplx>(g.size()));
        for (std::size_t a = 0; a < m; ++a)
            for (std::size_t i = 0; i < g.size(); ++i) phys[a][i] = fn(xg.node(a), g.node(i));
        return from_physical(g, phys);
    }

    static VelocityGrid x_grid(std::size_t m) { return VelocityGrid(1, m, pi); }

    const VelocityGrid& grid() const { return rows_.front().grid(); }
    std::size_t x_points() const { return rows_.size(); }
    bool x_axis() const { return rows_.size() > 1; }
    const std::vector<SpectralField>& rows() const { return rows_; }
    std::vector<SpectralField>& rows() { return rows_; }

    /// xi of row a (0 without an x-axis).
    double wavenumber(std::size_t a) const { return x_axis() ? x_grid(rows_.size()).frequency(a) : 0.0; }

    /// x-cell width, 1 without an x-axis.
    double x_cell() const { return x_axis() ? x_grid(rows_.size()).spacing() : 1.0; }

    /// Physical samples, [x][v].
    std::vector<std::vector<cplx>> physical() const {
        const std::size_t m = rows_.size(), n = grid().size();
        std::vector<std::vector<cplx>> out(m, std::vector<cplx>(n));
        if (m == 1) {
            std::copy(rows_[0].samples().begin(), rows_[0].samples().end(), out[0].begin());
            return out;
        }
        const VelocityGrid xg = x_grid(m);
        std::vector<cplx> line(m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t a = 0; a < m; ++a) line[a] = rows_[a].samples()[i];
            const auto back = inverse_transform(xg, line);
            for (std::size_t a = 0; a < m; ++a) out[a][i] = back[a];
        }
        return out;
    }

    /// ||w g||_{L^2_{x,v}} for a velocity weight w.
    template <class Weight>
    double weighted_norm(Weight&& w) const {
        std::vector<double> sq;
        for (const auto& r : rows_) {
            const double n = apply_radial_weight(r, w).l2_norm();
            sq.push_back(n * n);
        }
        return std::sqrt(x_cell() * pairwise_sum(sq));
    }

    double l2_norm() const {
        return weighted_norm([](double) { return 1.0; });
    }

    PhaseSpaceField scaled(double c) const {
        PhaseSpaceField p = *this;
        for (auto& r : p.rows_) r = r.scaled(c);
        return p;
    }

    friend PhaseSpaceField operator+(const PhaseSpaceField& a, const PhaseSpaceField& b) { return combine(a, b, 1.0); }
    friend PhaseSpaceField operator-(const PhaseSpaceField& a, const PhaseSpaceField& b) { return combine(a, b, -1.0); }

private:
    static PhaseSpaceField from_physical(const VelocityGrid& g, const std::vector<std::vector<cplx>>& phys) {
        const std::size_t m = phys.size();
        const VelocityGrid xg = x_grid(m);
        std::vector<std::vector<cplx>> rows(m, std::vector<cplx>(g.size()));
        std::vector<cplx> line(m);
        for (std::size_t i = 0; i < g.size(); ++i) {
            for (std::size_t a = 0; a < m; ++a) line[a] = phys[a][i];
            const auto c = forward_transform(xg, line);
            for (std::size_t a = 0; a < m; ++a) rows[a][i] = c[a];
        }
        PhaseSpaceField p;
        for (auto& r : rows) p.rows_.push_back(SpectralField::from_samples(g, std::move(r)));
        return p;
    }

    static PhaseSpaceField combine(const PhaseSpaceField& a, const PhaseSpaceField& b, double sign) {
        if (a.rows_.size() != b.rows_.size()) throw std::invalid_argument("PhaseSpaceField: x-grids differ");
        PhaseSpaceField p = a;
        for (std::size_t i = 0; i < p.rows_.size(); ++i)
            p.rows_[i] = sign > 0 ? a.rows_[i] + b.rows_[i] : a.rows_[i] - b.rows_[i];
        return p;
    }

    std::vector<SpectralField> rows_;
};

namespace detail {

inline double scaled(double x, double c) { return x * c; }
inline PhaseSpaceField scaled(const PhaseSpaceField& x, double c) { return x.scaled(c); }

}  // namespace detail

/// g_{n+1} = S_h (g_n + h/2 s_n) + h/2 s_{n+1} with S_h = A_{h/2} B_h A_{h/2}.
template <class State, class HalfA, class FullB>
State strang_trapezoid_step(const State& g, const State& s_now, const State& s_next, double h, HalfA&& half_a,
                            FullB&& full_b) {
    State u = g + detail::scaled(s_now, h / 2.0);
    u = half_a(full_b(half_a(u)));
    return u + detail::scaled(s_next, h / 2.0);
}

/// A_h: e^{-eps h (<v>^p + xi^2)} e^{-i v xi h}, diagonal in (xi, v).
inline PhaseSpaceField pointwise_factor(const PhaseSpaceField& g, const RegularizedProblem& rp, double h) {
    PhaseSpaceField out = g;
    const double p = rp.pointwise_exponent();
    for (std::size_t a = 0; a < out.rows().size(); ++a) {
        const double xi = g.wavenumber(a);
        const auto& grid = g.grid();
        std::vector<cplx> s(g.rows()[a].samples().begin(), g.rows()[a].samples().end());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const double v = grid.node(i);
            const double decay = std::exp(-rp.eps * h * (std::pow(bracket(v), p) + xi * xi));
            s[i] *= decay * std::polar(1.0, -v * xi * h);
        }
        out.rows()[a] = SpectralField::from_samples(grid, std::move(s));
    }
    return out;
}

/// B_h: e^{-eps h eta^2}, diagonal in (xi, eta).
inline PhaseSpaceField fourier_factor(const PhaseSpaceField& g, const RegularizedProblem& rp, double h) {
    if (rp.eps == 0.0) return g;
    PhaseSpaceField out = g;
    for (auto& r : out.rows()) r = apply_radial_symbol(r, [&](double eta) { return std::exp(-rp.eps * h * eta * eta); });
    return out;
}

inline void check_finite(const PhaseSpaceField& g, std::size_t step, double t) {
    for (const auto& r : g.rows())
        for (auto z : r.samples())
            if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
                throw std::runtime_error("regularized solver: non-finite value at step " + std::to_string(step) +
                                         ", t = " + std::to_string(t));
}

inline PhaseSpaceField step_regularized(const PhaseSpaceField& g, const RegularizedProblem& rp,
                                        const PhaseSpaceField& s_now, const PhaseSpaceField& s_next) {
    const double h = rp.dt();
    auto half = [&](const PhaseSpaceField& u) { return pointwise_factor(u, rp, h / 2.0); };
    auto full = [&](const PhaseSpaceField& u) { return fourier_factor(u, rp, h); };
    return strang_trapezoid_step(g, s_now, s_next, h, half, full);
}

inline PhaseSpaceField step_regularized(const PhaseSpaceField& g, const RegularizedProblem& rp,
                                        const PhaseSpaceField& source) {
    return step_regularized(g, rp, source, source);
}

inline PhaseSpaceField step_regularized(const PhaseSpaceField& g, const RegularizedProblem& rp) {
    const auto z = PhaseSpaceField::zeros(g.grid(), g.x_points());
    return step_regularized(g, rp, z, z);
}

struct PhaseTrajectory {
    std::vector<double> times;
    std::vector<PhaseSpaceField> snapshots;
};

/// Integrates on [0, T] with every step recorded; source(n) is S at t_n.
template <class Source>
PhaseTrajectory solve_regularized(const PhaseSpaceField& f_in, const RegularizedProblem& rp, Source&& source) {
    rp.validate();
    PhaseTrajectory tr;
    tr.times.push_back(0.0);
    tr.snapshots.push_back(f_in);
    PhaseSpaceField s_now = source(std::size_t{0});
    for (int n = 0; n < rp.steps; ++n) {
        PhaseSpaceField s_next = source(static_cast<std::size_t>(n + 1));
        PhaseSpaceField g = step_regularized(tr.snapshots.back(), rp, s_now, s_next);
        const double t = rp.dt() * (n + 1);
        check_finite(g, static_cast<std::size_t>(n + 1), t);
        tr.times.push_back(t);
        tr.snapshots.push_back(std::move(g));
        s_now = std::move(s_next);
    }
    return tr;
}

inline PhaseTrajectory solve_regularized(const PhaseSpaceField& f_in, const RegularizedProblem& rp) {
    const auto z = PhaseSpaceField::zeros(f_in.grid(), f_in.x_points());
    return solve_regularized(f_in, rp, [&](std::size_t) { return z; });
}

/// -<v>^gamma <D>^{2s} g applied for every xi.
inline PhaseSpaceField surrogate_source(const PhaseSpaceField& g, const SoftPotentialParams& prm) {
    PhaseSpaceField out = g;
    for (auto& r : out.rows()) r = toy_rhs(r, prm);
    return out;
}

/// omega(t, v) = e^{(a0 - t) <v>^2}
inline double omega(double a0, double t, double v) { return std::exp((a0 - t) * (1.0 + v * v)); }

inline double weighted_norm(const PhaseSpaceField& g, double a0, double t) {
    return g.weighted_norm([&](double r) { return omega(a0, t, r); });
}

// ---------------------------------------------------------------------------
// energy monitor

struct EnergyReport {
    std::vector<double> times;
    std::vector<double> weighted_norm;     // ||omega g(t)||
    std::vector<double> dissipation_rate;  // ||<v> omega g||^2 + eps ||d(omega g)||^2 + eps ||<v>^{1/(1-s)} omega g||^2
    std::vector<double> dissipation;       // time integral of the rate up to t
    std::vector<double> gronwall_residual; // bound - sup_{s<=t} ||omega g(s)||
    std::vector<double> violations;        // times with negative residual
    double sup_norm = 0.0;

    bool passed() const { return violations.empty(); }
};

inline double dissipation_rate(const PhaseSpaceField& g, const RegularizedProblem& rp, double t) {
    const double q = 1.0 / (1.0 - rp.prm.s());
    std::vector<double> moment, grad, high;
    for (std::size_t a = 0; a < g.rows().size(); ++a) {
        const auto wg = apply_radial_weight(g.rows()[a], [&](double r) { return omega(rp.a0, t, r); });
        const double m = apply_radial_weight(wg, [](double r) { return bracket(r); }).l2_norm();
        moment.push_back(m * m);
        if (rp.eps > 0.0) {
            const double xi = g.wavenumber(a);
            const double dv = derivative(wg).l2_norm(), n0 = wg.l2_norm();
            grad.push_back(dv * dv + xi * xi * n0 * n0);
            const double hq = apply_radial_weight(wg, [&](double r) { return std::pow(bracket(r), q); }).l2_norm();
            high.push_back(hq * hq);
        }
    }
    const double hx = g.x_cell();
    double rate = hx * pairwise_sum(moment);
    if (rp.eps > 0.0) rate += rp.eps * hx * (pairwise_sum(grad) + pairwise_sum(high));
    return rate;
}

/// Sup-in-time weighted norm, time-integrated dissipation, and the discrete
/// Gronwall bound ||omega f_in|| + sum_m h/2 (||omega s_m|| + ||omega s_{m+1}||).
inline EnergyReport energy_monitor(const PhaseTrajectory& tr, const RegularizedProblem& rp,
                                   const std::vector<PhaseSpaceField>* sources = nullptr, double slack = 1e-12) {
    EnergyReport rep;
    rep.times = tr.times;
    double bound = 0.0, running_sup = 0.0, integral = 0.0;
    double prev_source = 0.0;
    for (std::size_t n = 0; n < tr.snapshots.size(); ++n) {
        const double t = tr.times[n];
        const double w = weighted_norm(tr.snapshots[n], rp.a0, t);
        const double rate = dissipation_rate(tr.snapshots[n], rp, t);
        const double src = sources ? weighted_norm((*sources)[n], rp.a0, t) : 0.0;
        if (n == 0) {
            bound = w;
        } else {
            const double h = t - tr.times[n - 1];
            bound += h / 2.0 * (prev_source + src);
            integral += h / 2.0 * (rep.dissipation_rate.back() + rate);
        }
        prev_source = src;
        running_sup = std::max(running_sup, w);
        rep.weighted_norm.push_back(w);
        rep.dissipation_rate.push_back(rate);
        rep.dissipation.push_back(integral);
        const double residual = bound - running_sup;
        rep.gronwall_residual.push_back(residual);
        if (residual < -slack * std::max(bound, 1.0)) rep.violations.push_back(t);
    }
    rep.sup_norm = running_sup;
    return rep;
}

// ---------------------------------------------------------------------------
// Picard iteration

struct PicardState {
    int iterations = 0;
    double T = 0.0;
    int retries = 0;
    std::vector<double> diff_norms;  // sup_t ||omega (g^n - g^{n-1})||, n = 1, 2, ...
    std::vector<double> ratios;      // diff_n / diff_{n-1}, n >= 2
    std::vector<double> energy;      // sup_t ||omega g^n||
    bool contraction = false;
    double fixed_point_residual = std::numeric_limits<double>::infinity();
    PhaseTrajectory limit;
    std::string label = "surrogate";
};

struct PicardOptions {
    double ratio_envelope = 0.6;
    int max_halvings = 4;
    double tolerance = 1e-12;  // stop once diff_n <= tolerance * ||omega f_in||
};

namespace detail {

inline double sup_weighted_difference(const PhaseTrajectory& a, const PhaseTrajectory& b, double a0) {
    double m = 0.0;
    for (std::size_t n = 0; n < a.snapshots.size(); ++n)
        m = std::max(m, weighted_norm(a.snapshots[n] - b.snapshots[n], a0, a.times[n]));
    return m;
}

inline PhaseTrajectory picard_map(const PhaseSpaceField& f_in, const RegularizedProblem& rp, const PhaseTrajectory& prev) {
    std::vector<PhaseSpaceField> src;
    src.reserve(prev.snapshots.size());
    for (const auto& g : prev.snapshots) src.push_back(surrogate_source(g, rp.prm));
    return solve_regularized(f_in, rp, [&](std::size_t n) { return src[n]; });
}

inline PhaseTrajectory zero_trajectory(const PhaseSpaceField& like, const RegularizedProblem& rp) {
    PhaseTrajectory z;
    const auto zero = PhaseSpaceField::zeros(like.grid(), like.x_points());
    for (int n = 0; n <= rp.steps; ++n) {
        z.times.push_back(rp.dt() * n);
        z.snapshots.push_back(zero);
    }
    return z;
}

}  // namespace detail

/// g^0 = 0; g^n solves the regularized problem from f_in with source -<v>^gamma <D>^{2s} g^{n-1}.
/// Contraction means every ratio is at most the envelope, so diff_n <= diff_1 envelope^{n-1}.
/// Otherwise T is halved (step count fixed) up to max_halvings times.
inline PicardState picard_iterate(const PhaseSpaceField& f_in, RegularizedProblem rp, int n_max,
                                  const PicardOptions& opt = {}) {
    if (n_max < 3) throw std::invalid_argument("picard_iterate: n_max must be at least 3");
    const double scale = weighted_norm(f_in, rp.a0, 0.0);
    if (!std::isfinite(scale)) throw std::invalid_argument("picard_iterate: weighted norm of f_in is not finite");
    PicardState st;
    for (int attempt = 0; attempt <= opt.max_halvings; ++attempt) {
        if (attempt > 0) rp.T /= 2.0;
        st = PicardState{};
        st.T = rp.T;
        st.retries = attempt;
        PhaseTrajectory prev = detail::zero_trajectory(f_in, rp);
        bool envelope_ok = true;
        for (int n = 1; n <= n_max; ++n) {
            PhaseTrajectory next = detail::picard_map(f_in, rp, prev);
            const double d = detail::sup_weighted_difference(next, prev, rp.a0);
            st.diff_norms.push_back(d);
            double e = 0.0;
            for (std::size_t m = 0; m < next.snapshots.size(); ++m)
                e = std::max(e, weighted_norm(next.snapshots[m], rp.a0, next.times[m]));
            st.energy.push_back(e);
            if (n >= 2) {
                const double r = st.diff_norms[static_cast<std::size_t>(n - 2)] > 0.0
                                     ? d / st.diff_norms[static_cast<std::size_t>(n - 2)]
                                     : 0.0;
                st.ratios.push_back(r);
                if (r > opt.ratio_envelope) envelope_ok = false;
            }
            prev = std::move(next);
            st.iterations = n;
            if (d <= opt.tolerance * std::max(scale, std::numeric_limits<double>::min())) break;
        }
        st.contraction = envelope_ok;
        st.fixed_point_residual = detail::sup_weighted_difference(detail::picard_map(f_in, rp, prev), prev, rp.a0);
        st.limit = std::move(prev);
        if (st.contraction) break;
    }
    return st;
}

// ---------------------------------------------------------------------------
// moments and positivity

struct KineticMoments {
    double mass = 0.0;     // int f
    double energy = 0.0;   // int f |v|^2
    double entropy = 0.0;  // int f log(1 + f)
};

struct MomentBounds {
    double m0 = 0.0;  // mass >= m0/2
    double M0 = 0.0;  // mass <= 2 M0
    double E0 = 0.0;  // energy <= 2 E0
    double H0 = 0.0;  // entropy <= 2 H0
};

struct MomentFlags {
    bool vacuum = false;
    bool mass_excess = false;
    bool energy_excess = false;
    bool entropy_excess = false;

    bool admissible() const { return !vacuum && !mass_excess && !energy_excess && !entropy_excess; }
};

inline KineticMoments moments(const PhaseSpaceField& f) {
    const auto phys = f.physical();
    const auto& g = f.grid();
    const double cell = g.spacing() * f.x_cell();
    std::vector<double> m, e, h;
    for (const auto& line : phys)
        for (std::size_t i = 0; i < line.size(); ++i) {
            const double val = line[i].real(), v = g.node(i);
            if (!(1.0 + val > 0.0)) throw std::domain_error("moments: f <= -1, entropy undefined");
            m.push_back(val);
            e.push_back(val * v * v);
            h.push_back(val * std::log1p(val));
        }
    return {cell * pairwise_sum(m), cell * pairwise_sum(e), cell * pairwise_sum(h)};
}

inline KineticMoments moments(const SpectralField& f) { return moments(PhaseSpaceField::homogeneous(f)); }

inline MomentFlags moment_flags(const KineticMoments& k, const MomentBounds& b) {
    return {k.mass < b.m0 / 2.0, k.mass > 2.0 * b.M0, k.energy > 2.0 * b.E0, k.entropy > 2.0 * b.H0};
}

/// Minimum real sample of each snapshot.
inline std::vector<double> positivity_check(const PhaseTrajectory& tr) {
    std::vector<double> out;
    for (const auto& s : tr.snapshots) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& line : s.physical())
            for (auto z : line) m = std::min(m, z.real());
        out.push_back(m);
    }
    return out;
}

}  // namespace kgl
