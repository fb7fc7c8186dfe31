#pragma once

// Binary container for spectral fields.
//
//   bytes 0..3   magic "KGL1"
//   uint32       dimension d
//   uint32 x d   points per axis
//   float64      half-width L
//   then (re, im) float64 pairs for every coefficient, row-major over the
//   sorted frequency index m in [-N/2, N/2) on each axis.
//
// All multi-byte values are little-endian.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgl/spectral_core.hpp"

namespace kgl {

namespace detail {

template <class T>
void put_le(std::ostream& os, T value) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    os.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& is) {
    unsigned char bytes[sizeof(T)];
    if (!is.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw std::runtime_error("field container: truncated input");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

/// FFT-natural flat index of the k-th coefficient in sorted frequency order.
inline std::size_t sorted_to_natural(const VelocityGrid& g, std::size_t sorted) {
    const std::size_t n = g.points_per_axis();
    std::size_t natural = 0;
    std::size_t stride = 1;
    for (int a = g.dim() - 1; a >= 0; --a) {
        const std::size_t s = sorted % n;
        sorted /= n;
        natural += ((s + n / 2) % n) * stride;
        stride *= n;
    }
    return natural;
}

}  // namespace detail

inline constexpr char field_magic[4] = {'K', 'G', 'L', '1'};

inline void write_field(std::ostream& os, const SpectralField& f) {
    const auto& g = f.grid();
    os.write(field_magic, 4);
    detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
    for (int a = 0; a < g.dim(); ++a) detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(g.points_per_axis()));
    detail::put_le<double>(os, g.half_width());
    const auto c = f.coefficients();
    for (std::size_t k = 0; k < g.size(); ++k) {
        const cplx z = c[detail::sorted_to_natural(g, k)];
        detail::put_le<double>(os, z.real());
        detail::put_le<double>(os, z.imag());
    }
    if (!os) throw std::runtime_error("field container: write failed");
}

inline SpectralField read_field(std::istream& is) {
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, field_magic, 4) != 0)
        throw std::runtime_error("field container: bad magic");
    const auto d = detail::get_le<std::uint32_t>(is);
    if (d < 1 || d > 3) throw std::runtime_error("field container: bad dimension");
    std::vector<std::uint32_t> n(d);
    for (auto& x : n) x = detail::get_le<std::uint32_t>(is);
    if (!std::all_of(n.begin(), n.end(), [&](std::uint32_t x) { return x == n[0]; }))
        throw std::runtime_error("field container: anisotropic grids are not supported");
    const double L = detail::get_le<double>(is);
    const VelocityGrid g(static_cast<int>(d), n[0], L);
    std::vector<cplx> c(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double re = detail::get_le<double>(is);
        const double im = detail::get_le<double>(is);
        c[detail::sorted_to_natural(g, k)] = cplx(re, im);
    }
    return SpectralField::from_coefficients(g, std::move(c));
}

inline void save_field(const std::string& path, const SpectralField& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_field(os, f);
}

inline SpectralField load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_field(is);
}

}  // namespace kgl
