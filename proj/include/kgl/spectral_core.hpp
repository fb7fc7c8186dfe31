#pragma once

// Periodic velocity grids, unitary discrete Fourier transforms, Fourier
// multipliers <D_v>^r and |D_v|^{2s}, velocity weights <v>^p and
// e^{c<v>^2}, and the regularization operator (1 - theta*Delta)^{-1}.
//
// The box [-L, L)^d is sampled at v_n = -L + n*h, h = 2L/N, and the dual
// frequencies are eta_m = (pi/L) m with m in [-N/2, N/2)^d. Coefficients are
// kept in FFT-natural index order internally (m = 0, 1, ..., N/2-1, -N/2,
// ..., -1 per axis) and the transform is unitary (1/sqrt(N) per axis).

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include <fftw3.h>

#include "kgl/numeric.hpp"

namespace kgl {

using Point = std::array<double, 3>;

class VelocityGrid {
public:
    VelocityGrid() = default;

    VelocityGrid(int dim, std::size_t n, double half_width) : dim_(dim), n_(n), half_width_(half_width) {
        if (dim < 1 || dim > 3) throw std::invalid_argument("VelocityGrid: dimension must be 1, 2 or 3");
        if (n < 8 || (n & (n - 1)) != 0)
            throw std::invalid_argument("VelocityGrid: points per axis must be a power of two >= 8");
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw std::invalid_argument("VelocityGrid: half-width must be positive");
    }

    int dim() const { return dim_; }
    std::size_t points_per_axis() const { return n_; }
    double half_width() const { return half_width_; }
    double spacing() const { return 2.0 * half_width_ / static_cast<double>(n_); }
    double cell_volume() const { return std::pow(spacing(), dim_); }
    double nyquist() const { return pi / half_width_ * static_cast<double>(n_ / 2); }

    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim_; ++a) s *= n_;
        return s;
    }

    double node(std::size_t i) const { return -half_width_ + spacing() * static_cast<double>(i); }

    /// Signed integer frequency of FFT-natural index i.
    long mode(std::size_t i) const {
        const long ni = static_cast<long>(i), nn = static_cast<long>(n_);
        return ni < nn / 2 ? ni : ni - nn;
    }

    double frequency(std::size_t i) const { return pi / half_width_ * static_cast<double>(mode(i)); }

    /// Per-axis indices of a flat row-major index.
    std::array<std::size_t, 3> unflatten(std::size_t flat) const {
        std::array<std::size_t, 3> idx{0, 0, 0};
        for (int a = dim_ - 1; a >= 0; --a) {
            idx[static_cast<std::size_t>(a)] = flat % n_;
            flat /= n_;
        }
        return idx;
    }

    Point position(std::size_t flat) const {
        const auto idx = unflatten(flat);
        Point p{0, 0, 0};
        for (int a = 0; a < dim_; ++a) p[static_cast<std::size_t>(a)] = node(idx[static_cast<std::size_t>(a)]);
        return p;
    }

    Point wavevector(std::size_t flat) const {
        const auto idx = unflatten(flat);
        Point p{0, 0, 0};
        for (int a = 0; a < dim_; ++a) p[static_cast<std::size_t>(a)] = frequency(idx[static_cast<std::size_t>(a)]);
        return p;
    }

    /// Euclidean |v| at every grid point.
    std::vector<double> radii() const {
        std::vector<double> r(size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            const Point p = position(i);
            r[i] = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        }
        return r;
    }

    /// |eta| at every coefficient (FFT-natural order).
    std::vector<double> frequency_radii() const {
        std::vector<double> r(size());
        for (std::size_t i = 0; i < r.size(); ++i) {
            const Point p = wavevector(i);
            r[i] = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
        }
        return r;
    }

    /// Same box, twice the points per axis.
    VelocityGrid refined() const { return {dim_, 2 * n_, half_width_}; }

    bool operator==(const VelocityGrid&) const = default;

private:
    int dim_ = 1;
    std::size_t n_ = 8;
    double half_width_ = 1.0;
};

namespace detail {

// FFTW planning is not thread-safe; execution with new-array functions is.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans plans;
        return plans;
    }

    fftw_plan get(const std::vector<int>& dims, int sign) {
        std::lock_guard lock(mutex_);
        auto key = std::make_pair(dims, sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        std::size_t total = 1;
        for (int d : dims) total *= static_cast<std::size_t>(d);
        std::vector<cplx> scratch_in(total), scratch_out(total);
        fftw_plan p = fftw_plan_dft(static_cast<int>(dims.size()), dims.data(),
                                    reinterpret_cast<fftw_complex*>(scratch_in.data()),
                                    reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (p == nullptr) throw std::runtime_error("FFTW planning failed");
        plans_.emplace(std::move(key), p);
        return p;
    }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

    ~FftPlans() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

private:
    FftPlans() = default;
    std::mutex mutex_;
    std::map<std::pair<std::vector<int>, int>, fftw_plan> plans_;
};

/// Unitary multidimensional DFT over a cube of side n.
inline std::vector<cplx> unitary_dft(std::span<const cplx> in, const std::vector<int>& dims, int sign) {
    std::vector<cplx> input(in.begin(), in.end());
    std::vector<cplx> out(in.size());
    fftw_plan plan = FftPlans::instance().get(dims, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(input.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / std::sqrt(static_cast<double>(in.size()));
    for (auto& z : out) z *= scale;
    return out;
}

inline std::vector<int> cube_dims(const VelocityGrid& g) {
    return std::vector<int>(static_cast<std::size_t>(g.dim()), static_cast<int>(g.points_per_axis()));
}

}  // namespace detail

inline std::vector<cplx> forward_transform(const VelocityGrid& g, std::span<const cplx> samples) {
    return detail::unitary_dft(samples, detail::cube_dims(g), FFTW_FORWARD);
}

inline std::vector<cplx> inverse_transform(const VelocityGrid& g, std::span<const cplx> coefficients) {
    return detail::unitary_dft(coefficients, detail::cube_dims(g), FFTW_BACKWARD);
}

/// A function on a VelocityGrid held simultaneously as samples and as unitary
/// Fourier coefficients. The two views are always in sync: fields can only be
/// built from one view (the other is derived) or validated via from_parts().
class SpectralField {
public:
    SpectralField() = default;

    static SpectralField from_samples(const VelocityGrid& g, std::vector<cplx> samples) {
        if (samples.size() != g.size()) throw std::invalid_argument("SpectralField: sample count does not match grid");
        SpectralField f;
        f.grid_ = g;
        f.coefficients_ = forward_transform(g, samples);
        f.samples_ = std::move(samples);
        return f;
    }

    static SpectralField from_real_samples(const VelocityGrid& g, std::span<const double> samples) {
        return from_samples(g, std::vector<cplx>(samples.begin(), samples.end()));
    }

    static SpectralField from_coefficients(const VelocityGrid& g, std::vector<cplx> coefficients) {
        if (coefficients.size() != g.size())
            throw std::invalid_argument("SpectralField: coefficient count does not match grid");
        SpectralField f;
        f.grid_ = g;
        f.samples_ = inverse_transform(g, coefficients);
        f.coefficients_ = std::move(coefficients);
        return f;
    }

    /// Accepts externally supplied views; rejects them unless they agree to
    /// round-trip precision.
    static SpectralField from_parts(const VelocityGrid& g, std::vector<cplx> samples, std::vector<cplx> coefficients,
                                    double tolerance = 1e-12) {
        if (samples.size() != g.size() || coefficients.size() != g.size())
            throw std::invalid_argument("SpectralField: size mismatch");
        const auto check = forward_transform(g, samples);
        double diff = 0, ref = 0;
        for (std::size_t i = 0; i < check.size(); ++i) {
            diff += std::norm(check[i] - coefficients[i]);
            ref += std::norm(coefficients[i]);
        }
        if (std::sqrt(diff) > tolerance * std::max(std::sqrt(ref), 1e-300) && diff > 0)
            throw std::invalid_argument("SpectralField: samples and coefficients are inconsistent");
        SpectralField f;
        f.grid_ = g;
        f.samples_ = std::move(samples);
        f.coefficients_ = std::move(coefficients);
        return f;
    }

    /// Samples fn at every grid point. fn takes a double (d = 1) or a Point.
    template <class Fn>
    static SpectralField sample(const VelocityGrid& g, Fn&& fn) {
        std::vector<cplx> values(g.size());
        for (std::size_t i = 0; i < values.size(); ++i) {
            const Point p = g.position(i);
            if constexpr (std::is_invocable_v<Fn, double>) {
                if (g.dim() != 1) throw std::invalid_argument("SpectralField::sample: scalar callback needs d = 1");
                values[i] = cplx(fn(p[0]));
            } else {
                values[i] = cplx(fn(p));
            }
        }
        return from_samples(g, std::move(values));
    }

    static SpectralField zeros(const VelocityGrid& g) {
        SpectralField f;
        f.grid_ = g;
        f.samples_.assign(g.size(), cplx{});
        f.coefficients_.assign(g.size(), cplx{});
        return f;
    }

    const VelocityGrid& grid() const { return grid_; }
    std::span<const cplx> samples() const { return samples_; }
    std::span<const cplx> coefficients() const { return coefficients_; }

    /// Quadrature L^2 norm (h^d * sum |f|^2)^{1/2}.
    double l2_norm() const { return std::sqrt(grid_.cell_volume() * sum_abs2(samples_)); }

    /// The same norm computed on the Fourier side (Parseval).
    double coefficient_l2_norm() const { return std::sqrt(grid_.cell_volume() * sum_abs2(coefficients_)); }

    double max_abs() const {
        double m = 0;
        for (auto z : samples_) m = std::max(m, std::abs(z));
        return m;
    }

    double min_real() const {
        double m = std::numeric_limits<double>::infinity();
        for (auto z : samples_) m = std::min(m, z.real());
        return m;
    }

    /// Relative round-trip error of the stored views.
    double consistency_error() const {
        const auto back = inverse_transform(grid_, coefficients_);
        double diff = 0, ref = 0;
        for (std::size_t i = 0; i < back.size(); ++i) {
            diff += std::norm(back[i] - samples_[i]);
            ref += std::norm(samples_[i]);
        }
        return ref > 0 ? std::sqrt(diff / ref) : std::sqrt(diff);
    }

    SpectralField scaled(cplx factor) const {
        SpectralField f = *this;
        for (auto& z : f.samples_) z *= factor;
        for (auto& z : f.coefficients_) z *= factor;
        return f;
    }

    SpectralField real_part() const {
        std::vector<cplx> re(samples_.size());
        for (std::size_t i = 0; i < re.size(); ++i) re[i] = samples_[i].real();
        return from_samples(grid_, std::move(re));
    }

    friend SpectralField operator+(const SpectralField& a, const SpectralField& b) { return combine(a, b, 1.0); }
    friend SpectralField operator-(const SpectralField& a, const SpectralField& b) { return combine(a, b, -1.0); }

private:
    static SpectralField combine(const SpectralField& a, const SpectralField& b, double sign) {
        if (!(a.grid_ == b.grid_)) throw std::invalid_argument("SpectralField: grids differ");
        SpectralField f = a;
        for (std::size_t i = 0; i < f.samples_.size(); ++i) {
            f.samples_[i] += sign * b.samples_[i];
            f.coefficients_[i] += sign * b.coefficients_[i];
        }
        return f;
    }

    VelocityGrid grid_;
    std::vector<cplx> samples_;
    std::vector<cplx> coefficients_;
};

/// Multiplies coefficient i by symbol(wavevector_i).
template <class Symbol>
SpectralField apply_fourier_symbol(const SpectralField& f, Symbol&& symbol) {
    const auto& g = f.grid();
    std::vector<cplx> c(f.coefficients().begin(), f.coefficients().end());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= symbol(g.wavevector(i));
    return SpectralField::from_coefficients(g, std::move(c));
}

/// Multiplies coefficient i by symbol(|eta_i|).
template <class Symbol>
SpectralField apply_radial_symbol(const SpectralField& f, Symbol&& symbol) {
    const auto& g = f.grid();
    const auto radii = g.frequency_radii();
    std::vector<cplx> c(f.coefficients().begin(), f.coefficients().end());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= symbol(radii[i]);
    return SpectralField::from_coefficients(g, std::move(c));
}

/// Multiplies sample i by weight(|v_i|).
template <class Weight>
SpectralField apply_radial_weight(const SpectralField& f, Weight&& weight) {
    const auto& g = f.grid();
    const auto radii = g.radii();
    std::vector<cplx> s(f.samples().begin(), f.samples().end());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] *= weight(radii[i]);
    return SpectralField::from_samples(g, std::move(s));
}

struct MultiplierSpec {
    enum class Kind { japanese_bracket, fractional_power };

    Kind kind = Kind::japanese_bracket;
    double order = 0.0;  // r for <eta>^r, s for |eta|^{2s}

    static MultiplierSpec bracket_power(double r) { return {Kind::japanese_bracket, r}; }

    static MultiplierSpec fractional_laplacian(double s) {
        if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("fractional multiplier needs 0 < s < 1");
        return {Kind::fractional_power, s};
    }

    double symbol(double eta) const {
        switch (kind) {
            case Kind::japanese_bracket:
                return std::pow(bracket(eta), order);
            case Kind::fractional_power:
                return eta == 0.0 ? 0.0 : std::pow(eta, 2.0 * order);
        }
        return 0.0;
    }
};

inline SpectralField apply_multiplier(const SpectralField& f, const MultiplierSpec& m) {
    if (m.kind == MultiplierSpec::Kind::fractional_power && !(m.order > 0.0 && m.order < 1.0))
        throw std::invalid_argument("apply_multiplier: fractional order must lie in (0, 1)");
    return apply_radial_symbol(f, [&](double eta) { return m.symbol(eta); });
}

/// Velocity weights: <v>^p, e^{c<v>^2}, and the time-dependent
/// omega(t, v) = e^{(a0 - t)<v>^2} restricted to 0 <= t <= a0/2.
class WeightFunction {
public:
    enum class Kind { polynomial, exponential, time_dependent };

    static WeightFunction polynomial(double p) { return WeightFunction(Kind::polynomial, p, 0.0, 0.0); }
    static WeightFunction exponential(double c) { return WeightFunction(Kind::exponential, c, 0.0, 0.0); }

    static WeightFunction omega(double a0, double t) {
        if (!(a0 > 0.0)) throw std::domain_error("omega: a0 must be positive");
        if (t < 0.0 || t > a0 / 2.0) throw std::domain_error("omega: time must lie in [0, a0/2]");
        return WeightFunction(Kind::time_dependent, a0 - t, a0, t);
    }

    Kind kind() const { return kind_; }
    double a0() const { return a0_; }
    double time() const { return t_; }

    double value(double r) const {
        const double br = bracket(r);
        if (kind_ == Kind::polynomial) return std::pow(br, parameter_);
        return std::exp(parameter_ * br * br);
    }

    /// Exact d/dt of omega, which equals -<v>^2 omega.
    double time_derivative(double r) const {
        if (kind_ != Kind::time_dependent) return 0.0;
        const double br2 = 1.0 + r * r;
        return -br2 * value(r);
    }

    /// Exact d/dv_j of the weight at a point.
    double partial(const Point& v, int axis) const {
        const double r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        const double vj = v[static_cast<std::size_t>(axis)];
        const double r = std::sqrt(r2);
        if (kind_ == Kind::polynomial) return parameter_ * std::pow(1.0 + r2, parameter_ / 2.0 - 1.0) * vj;
        return 2.0 * parameter_ * vj * value(r);
    }

private:
    WeightFunction(Kind k, double parameter, double a0, double t) : kind_(k), parameter_(parameter), a0_(a0), t_(t) {}

    Kind kind_;
    double parameter_;
    double a0_;
    double t_;
};

inline SpectralField apply_weight(const SpectralField& f, const WeightFunction& w) {
    return apply_radial_weight(f, [&](double r) { return w.value(r); });
}

struct RegularizerSpec {
    double theta = 1.0;

    explicit RegularizerSpec(double th) : theta(th) {
        if (!(th > 0.0 && th <= 1.0)) throw std::invalid_argument("regularizer strength must lie in (0, 1]");
    }

    double symbol(double eta_abs) const { return 1.0 / (1.0 + theta * eta_abs * eta_abs); }
};

/// theta^{order/2} (1 - theta*Delta)^{-1} d^order/dv_axis^order.
inline SpectralField apply_regularizer(const SpectralField& f, const RegularizerSpec& r, int derivative_order,
                                       int axis = 0) {
    if (derivative_order < 0 || derivative_order > 2) throw std::invalid_argument("derivative order must be 0, 1 or 2");
    if (axis < 0 || axis >= f.grid().dim()) throw std::invalid_argument("axis out of range");
    const auto& g = f.grid();
    const double gain = std::pow(r.theta, derivative_order / 2.0);
    const long nyquist_mode = -static_cast<long>(g.points_per_axis() / 2);
    std::vector<cplx> c(f.coefficients().begin(), f.coefficients().end());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const Point k = g.wavevector(i);
        const double eta2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        const double ka = k[static_cast<std::size_t>(axis)];
        cplx d = 1.0;
        if (derivative_order == 1) {
            // the odd derivative of the Nyquist mode is not representable
            const auto idx = g.unflatten(i);
            d = g.mode(idx[static_cast<std::size_t>(axis)]) == nyquist_mode ? cplx{} : cplx(0.0, ka);
        } else if (derivative_order == 2) {
            d = -ka * ka;
        }
        c[i] *= gain * d / (1.0 + r.theta * eta2);
    }
    return SpectralField::from_coefficients(g, std::move(c));
}

/// Spectral derivative d/dv_axis (Nyquist mode dropped).
inline SpectralField derivative(const SpectralField& f, int axis = 0) {
    const auto& g = f.grid();
    const long nyquist_mode = -static_cast<long>(g.points_per_axis() / 2);
    std::vector<cplx> c(f.coefficients().begin(), f.coefficients().end());
    for (std::size_t i = 0; i < c.size(); ++i) {
        const auto idx = g.unflatten(i);
        const long m = g.mode(idx[static_cast<std::size_t>(axis)]);
        c[i] *= m == nyquist_mode ? cplx{} : cplx(0.0, g.frequency(idx[static_cast<std::size_t>(axis)]));
    }
    return SpectralField::from_coefficients(g, std::move(c));
}

/// ||<v>^p <D_v>^m f|| (multiplier first, then weight).
inline double weighted_sobolev_norm(const SpectralField& f, double p, double m) {
    SpectralField u = m == 0.0 ? f : apply_multiplier(f, MultiplierSpec::bracket_power(m));
    if (p != 0.0) u = apply_weight(u, WeightFunction::polynomial(p));
    return u.l2_norm();
}

/// ||<D_v>^m <v>^p f|| (weight first, then multiplier).
inline double weighted_sobolev_norm_reversed(const SpectralField& f, double p, double m) {
    SpectralField u = p == 0.0 ? f : apply_weight(f, WeightFunction::polynomial(p));
    if (m != 0.0) u = apply_multiplier(u, MultiplierSpec::bracket_power(m));
    return u.l2_norm();
}

}  // namespace kgl
