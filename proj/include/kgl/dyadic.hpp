#pragma once

// Littlewood-Paley machinery: the radial bump pair (psi, phi), phase-space
// projections P_k f = phi(2^{-k} v) f, frequency projections
// Delta_j f = phi(2^{-j} D) f (index -1 selects psi), and the block-sum
// characterization of weighted Sobolev norms.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "kgl/spectral_core.hpp"

namespace kgl {

namespace detail {

// e^{-1/x}-type bridge: 1 at x <= 0, 0 at x >= 1, C^infinity in between.
inline double bridge(double x) {
    if (x <= 0.0) return 1.0;
    if (x >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - x));
    const double b = std::exp(-1.0 / x);
    return a / (a + b);
}

inline double bridge_derivative(double x) {
    if (x <= 0.0 || x >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - x));
    const double b = std::exp(-1.0 / x);
    const double s = a + b;
    return -a * b * (1.0 / ((1.0 - x) * (1.0 - x)) + 1.0 / (x * x)) / (s * s);
}

}  // namespace detail

/// psi is 1 on |xi| <= 1, falls smoothly to 0 on [1, 4/3]; phi(xi) = psi(xi/2) - psi(xi)
/// is supported in [1, 8/3]. The telescoping definition makes
/// psi + sum_{j=0}^{J} phi(2^{-j} .) = psi(2^{-J-1} .) exactly.
class BumpPair {
public:
    static constexpr double inner_radius = 1.0;
    static constexpr double ball_radius = 4.0 / 3.0;
    static constexpr double ring_inner = 3.0 / 4.0;
    static constexpr double ring_outer = 8.0 / 3.0;

    explicit BumpPair(std::size_t mesh_resolution = 4096) {
        if (mesh_resolution < 1024) throw std::invalid_argument("BumpPair: mesh resolution must be at least 1024");
        const double width = ball_radius - inner_radius;
        step_ = width / static_cast<double>(mesh_resolution);
        values_.resize(mesh_resolution + 1);
        slopes_.resize(mesh_resolution + 1);
        for (std::size_t i = 0; i <= mesh_resolution; ++i) {
            const double x = static_cast<double>(i) / static_cast<double>(mesh_resolution);
            values_[i] = detail::bridge(x);
            slopes_[i] = detail::bridge_derivative(x) / width;
        }
        values_.front() = 1.0;
        values_.back() = 0.0;
        validate();
    }

    std::size_t mesh_resolution() const { return values_.size() - 1; }

    double psi(double r) const {
        r = std::abs(r);
        if (r <= inner_radius) return 1.0;
        if (r >= ball_radius) return 0.0;
        // cubic Hermite interpolation on the tabulated transition
        const double u = (r - inner_radius) / step_;
        std::size_t i = static_cast<std::size_t>(u);
        if (i >= values_.size() - 1) i = values_.size() - 2;
        const double t = u - static_cast<double>(i);
        const double t2 = t * t, t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        const double v = h00 * values_[i] + h10 * step_ * slopes_[i] + h01 * values_[i + 1] + h11 * step_ * slopes_[i + 1];
        return std::clamp(v, 0.0, 1.0);
    }

    double phi(double r) const { return psi(0.5 * r) - psi(r); }

    /// psi for index -1, phi(2^{-index} r) otherwise.
    double shell(int index, double r) const {
        if (index < -1) throw std::invalid_argument("dyadic index must be >= -1");
        return index == -1 ? psi(r) : phi(std::ldexp(r, -index));
    }

    /// |psi(r) + sum_{j<=J} phi(2^{-j} r) - 1| maximized over the given radii, with
    /// J chosen so that 2^{J+1} exceeds every radius.
    double partition_defect(std::span<const double> radii) const {
        double worst = 0.0;
        for (double r : radii) {
            int top = 0;
            while (std::ldexp(1.0, top + 1) < std::abs(r) * 1.5 + 1.0) ++top;
            double total = psi(r);
            for (int j = 0; j <= top; ++j) total += phi(std::ldexp(r, -j));
            worst = std::max(worst, std::abs(total - 1.0));
        }
        return worst;
    }

private:
    void validate() const {
        std::vector<double> probe;
        for (int i = 0; i <= 4000; ++i) probe.push_back(0.002 * i);
        if (partition_defect(probe) > 1e-12) throw std::invalid_argument("BumpPair: partition of unity defect above 1e-12");
    }

    double step_ = 0.0;
    std::vector<double> values_;
    std::vector<double> slopes_;
};

/// Largest frequency shell whose inner edge 2^j * 3/4 is representable.
inline int max_frequency_shell(const VelocityGrid& g) {
    int j = -1;
    while (std::ldexp(BumpPair::ring_inner, j + 1) <= g.nyquist()) ++j;
    return j;
}

/// Largest phase shell that meets the box; the shells -1..max cover it.
inline int max_phase_shell(const VelocityGrid& g) {
    const double reach = g.half_width() * std::sqrt(static_cast<double>(g.dim()));
    int k = -1;
    while (std::ldexp(BumpPair::inner_radius, k + 1) < reach) ++k;
    return k;
}

/// Largest frequency shell whose support meets the grid's frequencies.
inline int outer_frequency_shell(const VelocityGrid& g) {
    const double reach = g.nyquist() * std::sqrt(static_cast<double>(g.dim()));
    int j = -1;
    while (std::ldexp(BumpPair::inner_radius, j + 1) < reach) ++j;
    return std::min(j, max_frequency_shell(g));
}

inline SpectralField project_phase(const SpectralField& f, const BumpPair& bumps, int k) {
    return apply_radial_weight(f, [&](double r) { return bumps.shell(k, r); });
}

inline SpectralField project_frequency(const SpectralField& f, const BumpPair& bumps, int j) {
    if (j > max_frequency_shell(f.grid()))
        throw std::out_of_range("project_frequency: shell beyond the grid's Nyquist frequency");
    return apply_radial_symbol(f, [&](double eta) { return bumps.shell(j, eta); });
}

/// ||Delta_j u||_{L^2} computed on the Fourier side.
inline double frequency_block_norm(const SpectralField& u, const BumpPair& bumps, int j,
                                   std::span<const double> eta_radii) {
    const auto c = u.coefficients();
    std::vector<double> sq(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const double b = bumps.shell(j, eta_radii[i]);
        sq[i] = b * b * std::norm(c[i]);
    }
    return std::sqrt(u.grid().cell_volume() * pairwise_sum(sq));
}

struct BlockEntry {
    int j = -1;
    int k = -1;
    double block_l2 = 0.0;
    double weight_2kp = 1.0;  // 2^{2kp}
    double weight_2mj = 1.0;  // 2^{2mj}
    double contribution = 0.0;  // weight_2kp * weight_2mj * block_l2^2
};

/// Every ||Delta_j P_k f|| for j, k from -1 to the representable maxima.
inline std::vector<BlockEntry> block_table(const SpectralField& f, const BumpPair& bumps, double p = 0.0,
                                           double m = 0.0) {
    const auto& g = f.grid();
    const int jmax = max_frequency_shell(g), kmax = max_phase_shell(g);
    const auto eta = g.frequency_radii();
    std::vector<BlockEntry> out;
    out.reserve(static_cast<std::size_t>((jmax + 2) * (kmax + 2)));
    for (int k = -1; k <= kmax; ++k) {
        const SpectralField pk = project_phase(f, bumps, k);
        for (int j = -1; j <= jmax; ++j) {
            BlockEntry e;
            e.j = j;
            e.k = k;
            e.block_l2 = frequency_block_norm(pk, bumps, j, eta);
            e.weight_2kp = std::exp2(2.0 * k * p);
            e.weight_2mj = std::exp2(2.0 * j * m);
            e.contribution = e.weight_2kp * e.weight_2mj * e.block_l2 * e.block_l2;
            out.push_back(e);
        }
    }
    return out;
}

struct BlockNormReport {
    double value = 0.0;
    // share of the squared total carried by the outermost occupied phase shell
    // plus the outermost occupied frequency shell of f itself
    double tail_fraction = 0.0;
    bool tail_flagged = false;
    std::vector<BlockEntry> blocks;
};

/// (sum_{j,k} 2^{2kp} 2^{2mj} ||Delta_j P_k f||^2)^{1/2}.
inline BlockNormReport block_norm_characterization(const SpectralField& f, const BumpPair& bumps, double p, double m) {
    BlockNormReport rep;
    rep.blocks = block_table(f, bumps, p, m);
    const int jtail = outer_frequency_shell(f.grid()), ktail = max_phase_shell(f.grid());
    std::vector<double> all, tail;
    for (const auto& b : rep.blocks) {
        all.push_back(b.contribution);
        if (b.k == ktail) tail.push_back(b.contribution);
    }
    const double total = pairwise_sum(all);
    // the cutoffs P_k leak into every frequency shell, so the frequency tail is read off f
    const double fj = frequency_block_norm(f, bumps, jtail, f.grid().frequency_radii());
    tail.push_back(std::exp2(2.0 * jtail * m) * fj * fj);
    rep.value = std::sqrt(total);
    rep.tail_fraction = total > 0 ? pairwise_sum(tail) / total : 0.0;
    rep.tail_flagged = rep.tail_fraction > 1e-8;
    return rep;
}

inline void write_block_csv(std::ostream& os, const std::vector<BlockEntry>& blocks) {
    os << "j,k,block_l2,weight_2kp,weight_2mj,contribution\n";
    os.precision(17);
    for (const auto& b : blocks)
        os << b.j << ',' << b.k << ',' << b.block_l2 << ',' << b.weight_2kp << ',' << b.weight_2mj << ','
           << b.contribution << '\n';
}

}  // namespace kgl
