#pragma once

// Deterministic one-dimensional test corpora. Each member is an analytic
// description, so the same function can be sampled on a grid and on its
// refinement.
//
//  - Gaussians e^{-c (v - v0)^2}, c in [1/4, 4], |v0| <= L/4
//  - Hermite functions of degree <= 12, shifted and dilated
//  - random real band-limited fields with spectral decay <eta>^{-2}

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgl/spectral_core.hpp"

namespace kgl {

/// Normalized Hermite function h_n(x) via the three-term recurrence.
inline double hermite_function(int n, double x) {
    double prev = 0.0;
    double cur = std::pow(pi, -0.25) * std::exp(-0.5 * x * x);
    for (int k = 0; k < n; ++k) {
        const double next = std::sqrt(2.0 / (k + 1)) * x * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

struct CorpusMember {
    enum class Kind { gaussian, hermite, band_limited };

    Kind kind = Kind::gaussian;
    std::string id;
    double rate = 1.0;    // gaussian c, or hermite dilation
    double center = 0.0;  // v0
    int degree = 0;       // hermite degree
    double half_width = 16.0;
    std::vector<double> cos_amp, sin_amp;  // band-limited amplitudes for modes 0..M

    double operator()(double v) const {
        switch (kind) {
            case Kind::gaussian:
                return std::exp(-rate * (v - center) * (v - center));
            case Kind::hermite:
                return hermite_function(degree, rate * (v - center));
            case Kind::band_limited: {
                double acc = 0.0;
                for (std::size_t m = 0; m < cos_amp.size(); ++m) {
                    const double w = pi / half_width * static_cast<double>(m);
                    acc += cos_amp[m] * std::cos(w * v) + sin_amp[m] * std::sin(w * v);
                }
                return acc;
            }
        }
        return 0.0;
    }

    bool decays() const { return kind != Kind::band_limited; }

    SpectralField materialize(const VelocityGrid& g) const {
        if (g.dim() != 1) throw std::invalid_argument("corpus members are one-dimensional");
        if (kind == Kind::band_limited && g.half_width() != half_width)
            throw std::invalid_argument("band-limited member sampled on a box of different width");
        return SpectralField::sample(g, [this](double v) { return (*this)(v); });
    }
};

struct CorpusOptions {
    std::size_t size = 500;
    double half_width = 16.0;
    double band_limit = 24.0;  // largest |eta| carried by band-limited members
    double gaussian_share = 0.4;
    double hermite_share = 0.2;
};

inline CorpusMember random_band_limited(std::mt19937_64& rng, double half_width, double band_limit,
                                        const std::string& id) {
    CorpusMember m;
    m.kind = CorpusMember::Kind::band_limited;
    m.id = id;
    m.half_width = half_width;
    const auto modes = static_cast<std::size_t>(std::floor(band_limit * half_width / pi));
    std::normal_distribution<double> normal(0.0, 1.0);
    m.cos_amp.resize(modes + 1);
    m.sin_amp.resize(modes + 1);
    for (std::size_t k = 0; k <= modes; ++k) {
        const double decay = 1.0 / (1.0 + std::pow(pi / half_width * static_cast<double>(k), 2));
        m.cos_amp[k] = normal(rng) * decay;
        m.sin_amp[k] = k == 0 ? 0.0 : normal(rng) * decay;
    }
    return m;
}

inline std::vector<CorpusMember> make_corpus(std::uint64_t seed, const CorpusOptions& opt = {}) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<CorpusMember> out;
    out.reserve(opt.size);
    const auto n_gauss = static_cast<std::size_t>(opt.gaussian_share * static_cast<double>(opt.size));
    const auto n_herm = static_cast<std::size_t>(opt.hermite_share * static_cast<double>(opt.size));
    const double shift = opt.half_width / 4.0;
    for (std::size_t i = 0; i < opt.size; ++i) {
        if (i < n_gauss) {
            CorpusMember m;
            m.kind = CorpusMember::Kind::gaussian;
            m.id = "gauss-" + std::to_string(i);
            m.rate = 0.25 * std::pow(16.0, unit(rng));  // log-uniform on [1/4, 4]
            m.center = shift * (2.0 * unit(rng) - 1.0);
            out.push_back(std::move(m));
        } else if (i < n_gauss + n_herm) {
            CorpusMember m;
            m.kind = CorpusMember::Kind::hermite;
            m.degree = static_cast<int>((i - n_gauss) % 13);
            m.id = "hermite" + std::to_string(m.degree) + "-" + std::to_string(i);
            m.rate = 1.0 + unit(rng);
            m.center = shift * (2.0 * unit(rng) - 1.0);
            out.push_back(std::move(m));
        } else {
            out.push_back(random_band_limited(rng, opt.half_width, opt.band_limit, "band-" + std::to_string(i)));
        }
    }
    return out;
}

}  // namespace kgl
