#pragma once

// Exact polynomial calculus for the time-weighted vector fields
//   H_{delta,j} = t^{delta+1}/(delta+1) d/dx_j + t^delta d/dv_j,
// their commutators with the free transport d_t + v.d_x, the generation of
// classical derivatives from two such fields, and the Gevrey ledger
// L_{rho,k} = (k+1)^3 / (rho^{k-1} (k!)^e).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

#include "kgl/inequalities.hpp"

namespace kgl {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline std::string to_string(const Rational& q) {
    std::ostringstream os;
    os << q;
    return os.str();
}

/// t^a x^alpha v^beta; the t exponent is rational, the others are nonnegative integers.
struct Monomial {
    Rational t = 0;
    std::array<int, 3> x{0, 0, 0};
    std::array<int, 3> v{0, 0, 0};

    friend bool operator<(const Monomial& a, const Monomial& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.x != b.x) return a.x < b.x;
        return a.v < b.v;
    }
    friend bool operator==(const Monomial& a, const Monomial& b) { return a.t == b.t && a.x == b.x && a.v == b.v; }

    int spatial_degree() const { return x[0] + x[1] + x[2] + v[0] + v[1] + v[2]; }
};

class PolyFunction {
public:
    using Terms = std::map<Monomial, Rational>;

    PolyFunction() = default;

    static PolyFunction constant(const Rational& c) { return term(c, Monomial{}); }

    static PolyFunction term(const Rational& c, const Monomial& m) {
        PolyFunction p;
        if (c != 0) p.terms_[m] = c;
        return p;
    }

    /// c t^a prod x_j^{xj} v_j^{vj}
    static PolyFunction term(const Rational& c, const Rational& t_exp, std::array<int, 3> x, std::array<int, 3> v) {
        for (int i = 0; i < 3; ++i)
            if (x[static_cast<std::size_t>(i)] < 0 || v[static_cast<std::size_t>(i)] < 0)
                throw std::invalid_argument("PolyFunction: spatial exponents must be nonnegative");
        return term(c, Monomial{t_exp, x, v});
    }

    const Terms& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    friend bool operator==(const PolyFunction& a, const PolyFunction& b) { return a.terms_ == b.terms_; }

    PolyFunction& operator+=(const PolyFunction& o) {
        for (const auto& [m, c] : o.terms_) accumulate(m, c);
        return *this;
    }
    PolyFunction& operator-=(const PolyFunction& o) {
        for (const auto& [m, c] : o.terms_) accumulate(m, -c);
        return *this;
    }
    friend PolyFunction operator+(PolyFunction a, const PolyFunction& b) { return a += b; }
    friend PolyFunction operator-(PolyFunction a, const PolyFunction& b) { return a -= b; }

    friend PolyFunction operator*(const Rational& c, const PolyFunction& p) {
        PolyFunction out;
        if (c == 0) return out;
        for (const auto& [m, a] : p.terms_) out.terms_[m] = c * a;
        return out;
    }

    friend PolyFunction operator*(const PolyFunction& a, const PolyFunction& b) {
        PolyFunction out;
        for (const auto& [ma, ca] : a.terms_)
            for (const auto& [mb, cb] : b.terms_) {
                Monomial m{ma.t + mb.t, {}, {}};
                for (std::size_t i = 0; i < 3; ++i) {
                    m.x[i] = ma.x[i] + mb.x[i];
                    m.v[i] = ma.v[i] + mb.v[i];
                }
                out.accumulate(m, ca * cb);
            }
        return out;
    }

    /// t^q * p
    PolyFunction times_t_power(const Rational& q) const {
        PolyFunction out;
        for (const auto& [m, c] : terms_) {
            Monomial n = m;
            n.t += q;
            out.terms_[n] = c;
        }
        return out;
    }

    PolyFunction d_t() const {
        PolyFunction out;
        for (const auto& [m, c] : terms_) {
            if (m.t == 0) continue;
            Monomial n = m;
            n.t -= 1;
            out.accumulate(n, c * m.t);
        }
        return out;
    }

    /// d/dx_j for j in 1..3
    PolyFunction d_x(int j) const { return d_spatial(j, true); }
    /// d/dv_j for j in 1..3
    PolyFunction d_v(int j) const { return d_spatial(j, false); }

    std::string to_string() const {
        if (terms_.empty()) return "0";
        std::ostringstream os;
        bool first = true;
        for (const auto& [m, c] : terms_) {
            if (!first) os << " + ";
            first = false;
            os << '(' << c << ')';
            if (m.t != 0) os << "*t^(" << m.t << ')';
            for (std::size_t i = 0; i < 3; ++i) {
                if (m.x[i]) os << "*x" << i + 1 << '^' << m.x[i];
                if (m.v[i]) os << "*v" << i + 1 << '^' << m.v[i];
            }
        }
        return os.str();
    }

private:
    void accumulate(const Monomial& m, const Rational& c) {
        if (c == 0) return;
        auto [it, fresh] = terms_.try_emplace(m, c);
        if (!fresh) {
            it->second += c;
            if (it->second == 0) terms_.erase(it);
        }
    }

    PolyFunction d_spatial(int j, bool spatial) const {
        if (j < 1 || j > 3) throw std::invalid_argument("direction must be 1, 2 or 3");
        const auto i = static_cast<std::size_t>(j - 1);
        PolyFunction out;
        for (const auto& [m, c] : terms_) {
            const int e = spatial ? m.x[i] : m.v[i];
            if (e == 0) continue;
            Monomial n = m;
            (spatial ? n.x[i] : n.v[i]) -= 1;
            out.accumulate(n, c * e);
        }
        return out;
    }

    Terms terms_;
};

/// d_t f + sum_j v_j d_{x_j} f
inline PolyFunction transport(const PolyFunction& f) {
    PolyFunction out = f.d_t();
    for (int j = 1; j <= 3; ++j) {
        std::array<int, 3> e{0, 0, 0};
        e[static_cast<std::size_t>(j - 1)] = 1;
        out += PolyFunction::term(1, 0, {0, 0, 0}, e) * f.d_x(j);
    }
    return out;
}

/// H_{delta,j} f = t^{delta+1}/(delta+1) d_{x_j} f + t^delta d_{v_j} f
inline PolyFunction apply_H(const PolyFunction& f, const Rational& delta, int j = 1) {
    return Rational(1) / (delta + 1) * f.d_x(j).times_t_power(delta + 1) + f.d_v(j).times_t_power(delta);
}

inline PolyFunction apply_H_power(PolyFunction f, const Rational& delta, int k, int j = 1) {
    if (k < 0) throw std::invalid_argument("power must be nonnegative");
    for (int n = 0; n < k; ++n) f = apply_H(f, delta, j);
    return f;
}

/// [T, H^k] f - delta k t^{delta-1} d_{v_j} H^{k-1} f; zero when the commutator law holds.
inline PolyFunction commutator_residual(const PolyFunction& f, const Rational& delta, int k, int j = 1) {
    if (k < 0) throw std::invalid_argument("commutator_residual: k must be nonnegative");
    if (k == 0) return {};
    const PolyFunction lhs = transport(apply_H_power(f, delta, k, j)) - apply_H_power(transport(f), delta, k, j);
    const PolyFunction rhs = (delta * k) * apply_H_power(f, delta, k - 1, j).d_v(j).times_t_power(delta - 1);
    return lhs - rhs;
}

/// Violating monomials of a residual, for reports.
inline std::vector<std::string> offending_monomials(const PolyFunction& residual) {
    std::vector<std::string> out;
    for (const auto& [m, c] : residual.terms()) out.push_back(PolyFunction::term(c, m).to_string());
    return out;
}

// ---------------------------------------------------------------------------

class VFParams {
public:
    /// delta1 = lambda; delta2 = 1 if gamma/2 + 2s >= 1, else 1 + (1 - 2 tau) lambda.
    VFParams(const Rational& lambda, const Rational& gamma, const Rational& s, int direction = 1)
        : lambda_(lambda), gamma_(gamma), s_(s), direction_(direction) {
        if (!(gamma > -3 && gamma < 0) || !(s > 0 && s < 1) || !(gamma + 2 * s > -1))
            throw std::invalid_argument("VFParams: (gamma, s) outside the admissible range");
        if (direction < 1 || direction > 3) throw std::invalid_argument("VFParams: direction must be 1, 2 or 3");
        tau_ = 2 * s / (2 - gamma);
        const Rational floor = std::max(Rational(1), Rational(1 / (2 * tau_)));
        if (!(lambda > floor)) throw std::invalid_argument("VFParams: lambda must exceed max{1, 1/(2 tau)}");
        analytic_ = gamma / 2 + 2 * s >= 1;
        delta1_ = lambda;
        delta2_ = analytic_ ? Rational(1) : 1 + (1 - 2 * tau_) * lambda;
        if (!(delta1_ > delta2_ && delta2_ >= 1)) throw std::logic_error("VFParams: delta1 > delta2 >= 1 violated");
    }

    const Rational& lambda() const { return lambda_; }
    const Rational& gamma() const { return gamma_; }
    const Rational& s() const { return s_; }
    const Rational& tau() const { return tau_; }
    const Rational& delta1() const { return delta1_; }
    const Rational& delta2() const { return delta2_; }
    int direction() const { return direction_; }
    /// gamma/2 + 2s >= 1
    bool analytic_regime() const { return analytic_; }

private:
    Rational lambda_, gamma_, s_, tau_, delta1_, delta2_;
    int direction_;
    bool analytic_ = false;
};

/// [T, H1^a1 H2^a2] f minus a1 d1 t^{d1-1} d_v H1^{a1-1} H2^{a2} f + a2 d2 t^{d2-1} d_v H1^{a1} H2^{a2-1} f.
/// With literal = true the factors d1, d2 are dropped.
inline PolyFunction mixed_commutator_residual(const PolyFunction& f, const VFParams& vp, int a1, int a2,
                                              bool literal = false) {
    if (a1 < 0 || a2 < 0) throw std::invalid_argument("mixed_commutator_residual: negative multi-index");
    const int j = vp.direction();
    const Rational &d1 = vp.delta1(), &d2 = vp.delta2();
    auto word = [&](const PolyFunction& g, int p1, int p2) {
        return apply_H_power(apply_H_power(g, d2, p2, j), d1, p1, j);
    };
    const PolyFunction lhs = transport(word(f, a1, a2)) - word(transport(f), a1, a2);
    PolyFunction rhs;
    if (a1 > 0) rhs += (literal ? Rational(a1) : Rational(a1 * d1)) * word(f, a1 - 1, a2).d_v(j).times_t_power(d1 - 1);
    if (a2 > 0) rhs += (literal ? Rational(a2) : Rational(a2 * d2)) * word(f, a1, a2 - 1).d_v(j).times_t_power(d2 - 1);
    return lhs - rhs;
}

struct Reconstruction {
    Rational coefficient_x;   // (d2+1)(d1+1)/(d2-d1)
    Rational coefficient_v1;  // -(d1+1)/(d2-d1)
    Rational coefficient_v2;  // (d2+1)/(d2-d1)
    PolyFunction g_x;         // c_x H1 f - c_x t^{d1-d2} H2 f
    PolyFunction g_v;         // c_v1 H1 f + c_v2 t^{d1-d2} H2 f
    PolyFunction direct_x;    // t^{d1+1} d_x f
    PolyFunction direct_v;    // t^{d1} d_v f

    bool exact() const { return g_x == direct_x && g_v == direct_v; }
};

inline Reconstruction reconstruct_derivatives(const PolyFunction& f, const Rational& d1, const Rational& d2, int j = 1) {
    if (d1 == d2) throw std::invalid_argument("reconstruct_derivatives: delta1 equals delta2");
    Reconstruction r;
    const Rational gap = d2 - d1;
    r.coefficient_x = (d2 + 1) * (d1 + 1) / gap;
    r.coefficient_v1 = -(d1 + 1) / gap;
    r.coefficient_v2 = (d2 + 1) / gap;
    const PolyFunction h1 = apply_H(f, d1, j);
    const PolyFunction h2 = apply_H(f, d2, j).times_t_power(d1 - d2);
    r.g_x = r.coefficient_x * h1 - r.coefficient_x * h2;
    r.g_v = r.coefficient_v1 * h1 + r.coefficient_v2 * h2;
    r.direct_x = f.d_x(j).times_t_power(d1 + 1);
    r.direct_v = f.d_v(j).times_t_power(d1);
    return r;
}

inline Reconstruction reconstruct_derivatives(const PolyFunction& f, const VFParams& vp) {
    return reconstruct_derivatives(f, vp.delta1(), vp.delta2(), vp.direction());
}

// ---------------------------------------------------------------------------
// identity suites

/// Random polynomials in (t, x1, x2, v1, v2) with small rational coefficients,
/// integer or third-integer t exponents, and total spatial degree <= max_degree.
inline std::vector<PolyFunction> make_poly_corpus(std::uint64_t seed, std::size_t size = 50, int max_degree = 6) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> n_terms(1, 6), coef(-9, 9), den(1, 4), t_num(0, 6), t_den(1, 3), var(0, 3);
    std::uniform_int_distribution<int> deg(0, max_degree);
    std::vector<PolyFunction> out;
    while (out.size() < size) {
        PolyFunction p;
        const int terms = n_terms(rng);
        for (int i = 0; i < terms; ++i) {
            Monomial m;
            m.t = Rational(t_num(rng), t_den(rng));
            const int d = deg(rng);
            for (int e = 0; e < d; ++e) {
                const int which = var(rng);
                (which < 2 ? m.x : m.v)[static_cast<std::size_t>(which % 2)] += 1;
            }
            p += PolyFunction::term(Rational(coef(rng), den(rng)), m);
        }
        if (!p.is_zero()) out.push_back(std::move(p));
    }
    return out;
}

struct IdentityReport {
    std::string identity_id;
    std::vector<std::pair<std::string, std::string>> params;
    std::size_t corpus_size = 0;
    std::size_t cases = 0;
    std::vector<std::string> failures;

    bool passed() const { return failures.empty(); }
};

inline void to_json(nlohmann::ordered_json& j, const IdentityReport& r) {
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    j = nlohmann::ordered_json{{"identity_id", r.identity_id},
                               {"params", params},
                               {"corpus_size", r.corpus_size},
                               {"cases", r.cases},
                               {"failures", r.failures}};
}

inline IdentityReport commutator_suite(const std::vector<PolyFunction>& corpus, const std::vector<Rational>& deltas,
                                       int k_max = 5) {
    IdentityReport rep;
    rep.identity_id = "Eq-(kehigher)";
    rep.corpus_size = corpus.size();
    rep.params = {{"k_max", std::to_string(k_max)}};
    std::string ds;
    for (const auto& d : deltas) ds += (ds.empty() ? "" : ",") + to_string(d);
    rep.params.emplace_back("deltas", ds);
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (const auto& d : deltas)
            for (int k = 1; k <= k_max; ++k) {
                ++rep.cases;
                const auto r = commutator_residual(corpus[i], d, k);
                if (!r.is_zero())
                    rep.failures.push_back("f" + std::to_string(i) + " delta=" + to_string(d) + " k=" + std::to_string(k) +
                                           ": " + r.to_string());
            }
    return rep;
}

inline IdentityReport mixed_commutator_suite(const std::vector<PolyFunction>& corpus, const VFParams& vp, int order = 4) {
    IdentityReport rep;
    rep.identity_id = "Prop-5.1-commutator";
    rep.corpus_size = corpus.size();
    rep.params = {{"delta1", to_string(vp.delta1())}, {"delta2", to_string(vp.delta2())}, {"max_order", std::to_string(order)}};
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (int a1 = 0; a1 <= order; ++a1)
            for (int a2 = 0; a1 + a2 <= order; ++a2) {
                if (a1 + a2 == 0) continue;
                ++rep.cases;
                const auto r = mixed_commutator_residual(corpus[i], vp, a1, a2);
                if (!r.is_zero())
                    rep.failures.push_back("f" + std::to_string(i) + " alpha=(" + std::to_string(a1) + "," +
                                           std::to_string(a2) + "): " + r.to_string());
            }
    return rep;
}

inline IdentityReport reconstruction_suite(const std::vector<PolyFunction>& corpus, const std::vector<VFParams>& params) {
    IdentityReport rep;
    rep.identity_id = "Eq-(generate)";
    rep.corpus_size = corpus.size();
    for (std::size_t n = 0; n < params.size(); ++n)
        rep.params.emplace_back("lambda_gamma_s_" + std::to_string(n), to_string(params[n].lambda()) + "," +
                                                                            to_string(params[n].gamma()) + "," +
                                                                            to_string(params[n].s()));
    for (const auto& vp : params)
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            ++rep.cases;
            const auto r = reconstruct_derivatives(corpus[i], vp);
            if (!r.exact())
                rep.failures.push_back("f" + std::to_string(i) + " lambda=" + to_string(vp.lambda()) + ": " +
                                       (r.g_x - r.direct_x).to_string() + " | " + (r.g_v - r.direct_v).to_string());
        }
    return rep;
}

// ---------------------------------------------------------------------------
// ledger

/// log L_{rho,k} = 3 log(k+1) - (k-1) log rho - e log k!
inline double ledger_log_value(double rho, int k, double e) {
    if (!(rho > 0.0)) throw std::invalid_argument("ledger: rho must be positive");
    if (k < 0) throw std::invalid_argument("ledger: k must be nonnegative");
    if (k == 0) return 0.0;
    return 3.0 * std::log(k + 1.0) - (k - 1.0) * std::log(rho) - e * std::lgamma(k + 1.0);
}

/// L_{rho,k}; direct products up to k = 20, log domain beyond.
inline double ledger_value(double rho, int k, double e) {
    if (!(rho > 0.0)) throw std::invalid_argument("ledger: rho must be positive");
    if (k < 0) throw std::invalid_argument("ledger: k must be nonnegative");
    if (k == 0) return 1.0;
    if (k > 20) return std::exp(ledger_log_value(rho, k, e));
    double factorial = 1.0;
    for (int i = 2; i <= k; ++i) factorial *= i;
    return std::pow(k + 1.0, 3) / (std::pow(rho, k - 1) * std::pow(factorial, e));
}

class Ledger {
public:
    Ledger(double rho, double exponent) : rho_(rho), e_(exponent) {
        if (!(rho > 0.0)) throw std::invalid_argument("ledger: rho must be positive");
        if (!(exponent >= 1.0)) throw std::invalid_argument("ledger: Gevrey exponent must be at least 1");
    }
    /// exponent max{1/(2 tau), 1}
    Ledger(double rho, const SoftPotentialParams& prm) : Ledger(rho, prm.gevrey_exponent()) {}

    double rho() const { return rho_; }
    double exponent() const { return e_; }
    double value(int k) const { return ledger_value(rho_, k, e_); }
    double log_value(int k) const { return ledger_log_value(rho_, k, e_); }

    /// log L + (k-1) log rho + e log k! - 3 log(k+1): zero up to rounding of the four terms.
    double round_trip_residual(int k) const {
        if (k == 0) return log_value(0);
        return log_value(k) + (k - 1.0) * std::log(rho_) + e_ * std::lgamma(k + 1.0) - 3.0 * std::log(k + 1.0);
    }
    /// Rounding allowance for round_trip_residual: a few ulps of the largest term.
    double round_trip_tolerance(int k) const {
        const double big = std::max({3.0 * std::log(k + 1.0), std::abs((k - 1.0) * std::log(rho_)),
                                     e_ * std::lgamma(k + 1.0), 1.0});
        return 8.0 * std::numeric_limits<double>::epsilon() * big;
    }

private:
    double rho_;
    double e_;
};

inline void write_ledger_csv(std::ostream& os, const Ledger& ledger, int k_max) {
    os << "k,L_value,log_L\n";
    os.precision(17);
    for (int k = 0; k <= k_max; ++k) os << k << ',' << ledger.value(k) << ',' << ledger.log_value(k) << '\n';
}

namespace detail {

inline double convolution_sum(int k, const std::vector<double>& inv_cubes, std::vector<double>& scratch) {
    scratch.clear();
    const double k1 = std::pow(k + 1.0, 3);
    for (int j = 1; j <= k - 1; ++j)
        scratch.push_back(k1 * inv_cubes[static_cast<std::size_t>(j + 1)] * inv_cubes[static_cast<std::size_t>(k - j + 1)]);
    return pairwise_sum(scratch);
}

inline std::vector<double> inverse_cubes(int n) {
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    for (int i = 1; i <= n; ++i) c[static_cast<std::size_t>(i)] = 1.0 / (double(i) * i * i);
    return c;
}

}  // namespace detail

/// sum_{1<=j<=k-1} (k+1)^3 / ((j+1)^3 (k-j+1)^3)
inline double convolution_sum(int k) {
    std::vector<double> scratch;
    return detail::convolution_sum(k, detail::inverse_cubes(std::max(k, 1)), scratch);
}

/// sup over 2 <= k <= kmax of convolution_sum(k).
inline double convolution_bound(int kmax) {
    const auto inv = detail::inverse_cubes(std::max(kmax, 1));
    std::vector<double> scratch;
    scratch.reserve(static_cast<std::size_t>(std::max(kmax, 1)));
    double best = 0.0;
    for (int k = 2; k <= kmax; ++k) best = std::max(best, detail::convolution_sum(k, inv, scratch));
    return best;
}

inline BigInt binomial(int n, int r) {
    if (r < 0 || r > n) return 0;
    r = std::min(r, n - r);
    BigInt out = 1;
    for (int i = 1; i <= r; ++i) out = out * (n - r + i) / i;
    return out;
}

inline BigInt factorial(int n) {
    BigInt out = 1;
    for (int i = 2; i <= n; ++i) out *= i;
    return out;
}

/// Exact value of
///   [sum_j C(k,j) (rho^{j-1} j!/(j+1)^3)(rho^{k-j-1}(k-j)!/(k-j+1)^3)] / [rho^{k-1} k!/(k+1)^3],
/// which equals convolution_sum(k)/rho.
inline Rational convolution_ratio_exact(int k, const Rational& rho) {
    Rational total = 0;
    auto rho_pow = [&](int n) {
        Rational p = 1;
        for (int i = 0; i < std::abs(n); ++i) p *= rho;
        return n >= 0 ? p : 1 / p;
    };
    for (int j = 1; j <= k - 1; ++j) {
        const Rational a = rho_pow(j - 1) * Rational(factorial(j)) / Rational(BigInt(j + 1) * (j + 1) * (j + 1));
        const Rational b =
            rho_pow(k - j - 1) * Rational(factorial(k - j)) / Rational(BigInt(k - j + 1) * (k - j + 1) * (k - j + 1));
        total += Rational(binomial(k, j)) * a * b;
    }
    const Rational scale = rho_pow(k - 1) * Rational(factorial(k)) / Rational(BigInt(k + 1) * (k + 1) * (k + 1));
    return total / scale;
}

/// Same sum as convolution_sum, exactly.
inline Rational convolution_sum_exact(int k) {
    Rational total = 0;
    const BigInt k1 = BigInt(k + 1) * (k + 1) * (k + 1);
    for (int j = 1; j <= k - 1; ++j)
        total += Rational(k1, BigInt(j + 1) * (j + 1) * (j + 1) * (k - j + 1) * (k - j + 1) * (k - j + 1));
    return total;
}

// ---------------------------------------------------------------------------
// X / Y norms from sampled tables

struct NormSample {
    double sup_norm = 0.0;     // sup_t || omega H^k h ||
    double dissipation = 0.0;  // (int_0^T (triple norm^2 + ||<v> omega H^k h||^2) dt)^{1/2}
};

/// Keys are (i, j, k) with field i in {1,2}, direction j in {1,2,3} in the separate regime,
/// and (j, a1, a2) with |a| = a1 + a2 = k in the mixed regime.
struct NormTable {
    bool mixed = false;
    int k_max = 0;
    std::map<std::array<int, 3>, NormSample> entries;
};

struct XYValues {
    double x = 0.0;
    double y = 0.0;
};

inline XYValues xy_norm_from_samples(const NormTable& table, const Ledger& ledger) {
    std::vector<std::string> missing;
    auto lookup = [&](std::array<int, 3> key) -> const NormSample* {
        const auto it = table.entries.find(key);
        if (it == table.entries.end()) {
            missing.push_back("(" + std::to_string(key[0]) + "," + std::to_string(key[1]) + "," + std::to_string(key[2]) + ")");
            return nullptr;
        }
        return &it->second;
    };
    XYValues out;
    std::vector<double> xs, ys;
    if (!table.mixed) {
        for (int j = 1; j <= 3; ++j)
            for (int i = 1; i <= 2; ++i) {
                double sx = 0.0, sy = 0.0;
                for (int k = 0; k <= table.k_max; ++k) {
                    const auto* e = lookup({i, j, k});
                    if (!e) continue;
                    sx = std::max(sx, ledger.value(k) * e->sup_norm);
                    sy = std::max(sy, ledger.value(k) * e->dissipation);
                }
                xs.push_back(sx);
                ys.push_back(sy);
            }
    } else {
        for (int j = 1; j <= 3; ++j) {
            double sx = 0.0, sy = 0.0;
            for (int k = 0; k <= table.k_max; ++k)
                for (int a1 = 0; a1 <= k; ++a1) {
                    const auto* e = lookup({j, a1, k - a1});
                    if (!e) continue;
                    sx = std::max(sx, ledger.value(k) * e->sup_norm);
                    sy = std::max(sy, ledger.value(k) * e->dissipation);
                }
            xs.push_back(sx);
            ys.push_back(sy);
        }
    }
    if (!missing.empty()) {
        std::string msg = "xy_norm_from_samples: missing entries";
        for (const auto& m : missing) msg += ' ' + m;
        throw std::invalid_argument(msg);
    }
    out.x = pairwise_sum(xs);
    out.y = pairwise_sum(ys);
    return out;
}

}  // namespace kgl
