#pragma once

// Numerical witnesses for the velocity-space inequalities: the tau
// interpolation (sum and product forms), the epsilon-weighted splitting,
// composition bounds in H^s, and the regularizer bound with constant 3.
// Constants are fitted on a grid and then checked on its refinement.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kgl/corpus.hpp"
#include "kgl/numeric.hpp"
#include "kgl/spectral_core.hpp"

namespace kgl {

class SoftPotentialParams {
public:
    SoftPotentialParams(double gamma, double s) : gamma_(gamma), s_(s) {
        if (!(gamma > -3.0 && gamma < 0.0)) throw std::invalid_argument("gamma must lie in (-3, 0)");
        if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0, 1)");
        if (!(gamma + 2.0 * s > -1.0)) throw std::invalid_argument("gamma + 2s must exceed -1");
    }

    /// Boundary values such as gamma = 0 for diagnostics; no admissibility check.
    static SoftPotentialParams diagnostic(double gamma, double s) {
        if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0, 1)");
        return SoftPotentialParams(gamma, s, 0);
    }

    double gamma() const { return gamma_; }
    double s() const { return s_; }
    bool admissible() const { return gamma_ > -3.0 && gamma_ < 0.0 && gamma_ + 2.0 * s_ > -1.0; }

    double tau() const { return 2.0 * s_ / (2.0 - gamma_); }
    /// Interpolation exponent of the product form.
    double theta() const { return 2.0 / (2.0 - gamma_); }
    double gevrey_exponent() const { return std::max(1.0 / (2.0 * tau()), 1.0); }

private:
    SoftPotentialParams(double gamma, double s, int) : gamma_(gamma), s_(s) {}

    double gamma_;
    double s_;
};

struct InequalityWitness {
    std::string test_function_id;
    double lhs = 0.0;
    double bare_rhs = 0.0;  // right side without the constant
    double constant_used = 0.0;
    double rhs = 0.0;
    double margin = 0.0;

    bool passed() const { return margin >= 0.0; }
    /// lhs / bare_rhs, the constant this function alone would need.
    double required_constant() const {
        if (lhs == 0.0) return 0.0;
        return bare_rhs > 0.0 ? lhs / bare_rhs : std::numeric_limits<double>::infinity();
    }
};

inline InequalityWitness make_witness(std::string id, double lhs, double bare_rhs, double constant) {
    if (!std::isfinite(lhs) || !std::isfinite(bare_rhs)) throw std::domain_error("non-finite norm in witness " + id);
    InequalityWitness w;
    w.test_function_id = std::move(id);
    w.lhs = lhs;
    w.bare_rhs = bare_rhs;
    w.constant_used = constant;
    w.rhs = constant * bare_rhs;
    w.margin = w.rhs - w.lhs;
    return w;
}

/// ||<v>^p <D>^m u|| with the multiplier applied first.
inline double wnorm(const SpectralField& u, double p, double m) { return weighted_sobolev_norm(u, p, m); }

struct InterpolationTerms {
    double derivative = 0.0;   // ||<D>^tau u||
    double weight = 0.0;       // ||<v> u||
    double dissipation = 0.0;  // ||<v>^{gamma/2} <D>^s u||
};

inline InterpolationTerms interpolation_terms(const SpectralField& u, const SoftPotentialParams& prm) {
    return {wnorm(u, 0.0, prm.tau()), wnorm(u, 1.0, 0.0), wnorm(u, prm.gamma() / 2.0, prm.s())};
}

struct InterpolationCheck {
    InequalityWitness sum;     // ||<D>^tau u|| <= C (||<v>u|| + ||<v>^{gamma/2}<D>^s u||)
    InequalityWitness holder;  // ||<D>^tau u|| <= C ||<v>^{gamma/2}<D>^s u||^theta ||<v>u||^{1-theta}
    bool am_gm_holds = true;   // product <= theta*a + (1-theta)*b <= a + b
};

inline InterpolationCheck verify_interpolation_tau(const SpectralField& u, const SoftPotentialParams& prm,
                                                   double c_sum, double c_holder, const std::string& id = "") {
    const auto t = interpolation_terms(u, prm);
    const double th = prm.theta();
    const double product = std::pow(t.dissipation, th) * std::pow(t.weight, 1.0 - th);
    const double mean = th * t.dissipation + (1.0 - th) * t.weight;
    InterpolationCheck out;
    out.sum = make_witness(id, t.derivative, t.weight + t.dissipation, c_sum);
    out.holder = make_witness(id, t.derivative, product, c_holder);
    const double slack = 1e-12 * (t.weight + t.dissipation);
    out.am_gm_holds = product <= mean + slack && mean <= t.weight + t.dissipation + slack;
    return out;
}

struct SplittingTerms {
    double lhs = 0.0;         // ||<v>^s <D>^s h||
    double derivative = 0.0;  // ||<D> h||
    double weight = 0.0;      // ||<v>^{s/(1-s)} h||
};

inline SplittingTerms splitting_terms(const SpectralField& h, double s) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0, 1)");
    return {wnorm(h, s, s), wnorm(h, 0.0, 1.0), wnorm(h, s / (1.0 - s), 0.0)};
}

/// Smallest C_eps for which h satisfies the splitting inequality.
inline double splitting_required_constant(const SplittingTerms& t, double eps) {
    const double excess = t.lhs - eps * t.derivative;
    if (excess <= 0.0) return 0.0;
    return t.weight > 0.0 ? excess / t.weight : std::numeric_limits<double>::infinity();
}

/// ||<v>^s<D>^s h|| <= eps ||<D>h|| + C_eps ||<v>^{s/(1-s)} h||; the witness's
/// bare right side is the weight term and the eps term is moved to the left.
inline InequalityWitness verify_appendixA_eps(const SpectralField& h, double s, double eps, double c_eps,
                                              const std::string& id = "") {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    const auto t = splitting_terms(h, s);
    auto w = make_witness(id, t.lhs, t.weight, c_eps);
    w.rhs = eps * t.derivative + c_eps * t.weight;
    w.margin = w.rhs - w.lhs;
    return w;
}

enum class Composition { log1p, saturation };

inline double apply_composition(Composition f, double x) {
    return f == Composition::log1p ? std::log1p(x) : x / (1.0 + x);
}

inline const char* composition_name(Composition f) { return f == Composition::log1p ? "log1p" : "x/(1+x)"; }

/// (||g||^2 + int int |g(x+y)-g(x)|^2 / |y|^{1+2s} dx dy)^{1/2} on a one-dimensional grid.
/// Shifts up to L/2 are integrated with D(y) = int |g(x+y)-g(x)|^2 dx linear between
/// nodes and the kernel exact; D ~ y^2 below one cell; beyond L/2 D is replaced by 2||g||^2.
inline double gagliardo_hs_norm(const SpectralField& g, double s) {
    const auto& grid = g.grid();
    if (grid.dim() != 1) throw std::invalid_argument("gagliardo_hs_norm: one-dimensional grids only");
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0, 1)");
    const std::size_t n = grid.points_per_axis();
    const double h = grid.spacing();
    const std::size_t shifts = n / 4;
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = g.samples()[i].real();

    std::vector<double> d(shifts + 1, 0.0), sq(n);
    for (std::size_t m = 1; m <= shifts; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            const double diff = x[(i + m) % n] - x[i];
            sq[i] = diff * diff;
        }
        d[m] = h * pairwise_sum(sq);
    }

    const double a = 2.0 * s;
    auto kernel_int = [a](double y0, double y1) { return (std::pow(y0, -a) - std::pow(y1, -a)) / a; };
    auto moment_int = [a](double y0, double y1) {
        return a == 1.0 ? std::log(y1 / y0) : (std::pow(y1, 1.0 - a) - std::pow(y0, 1.0 - a)) / (1.0 - a);
    };
    std::vector<double> pieces;
    pieces.push_back(d[1] * std::pow(h, -a) / (2.0 - a));
    for (std::size_t m = 1; m < shifts; ++m) {
        const double y0 = h * static_cast<double>(m), y1 = y0 + h;
        const double slope = (d[m + 1] - d[m]) / h;
        pieces.push_back((d[m] - slope * y0) * kernel_int(y0, y1) + slope * moment_int(y0, y1));
    }
    const double l2 = g.l2_norm();
    const double reach = h * static_cast<double>(shifts);
    const double seminorm2 = 2.0 * pairwise_sum(pieces) + 4.0 * l2 * l2 * std::pow(reach, -a) / a;
    return std::sqrt(l2 * l2 + seminorm2);
}

struct CompositionCheck {
    InequalityWitness multiplier;  // ||F(g)||_{H^s} <= C ||g||_{H^s} with <eta>^s norms
    InequalityWitness gagliardo;   // same with double-integral norms, constant 1
    double agreement = 1.0;        // worst of the two Gagliardo/multiplier ratios, folded to >= 1
};

inline CompositionCheck verify_composition_bound(const SpectralField& g, double s, Composition f, double c,
                                                 const std::string& id = "") {
    if (g.min_real() < 0.0) throw std::invalid_argument("verify_composition_bound: negative samples");
    std::vector<double> fg(g.samples().size());
    for (std::size_t i = 0; i < fg.size(); ++i) fg[i] = apply_composition(f, g.samples()[i].real());
    const auto Fg = SpectralField::from_real_samples(g.grid(), fg);
    const double mg = wnorm(g, 0.0, s), mf = wnorm(Fg, 0.0, s);
    const double gg = gagliardo_hs_norm(g, s), gf = gagliardo_hs_norm(Fg, s);
    auto fold = [](double a, double b) {
        if (a == 0.0 && b == 0.0) return 1.0;
        return std::max(a / b, b / a);
    };
    CompositionCheck out;
    out.multiplier = make_witness(id, mf, mg, c);
    out.gagliardo = make_witness(id, gf, gg, 1.0);
    out.gagliardo.margin += 1e-12 * gg;  // the pointwise Lipschitz bound holds up to rounding
    out.agreement = std::max(fold(mg, gg), fold(mf, gf));
    return out;
}

/// ||L^{-1} g|| + ||theta^{1/2} L^{-1} dg|| + ||theta L^{-1} d^2 g|| <= 3 ||g||, L = 1 - theta*Laplacian.
inline InequalityWitness verify_regularizer_bounds(const SpectralField& g, double theta, int axis = 0,
                                                   const std::string& id = "") {
    const RegularizerSpec r(theta);
    const double lhs = apply_regularizer(g, r, 0, axis).l2_norm() + apply_regularizer(g, r, 1, axis).l2_norm() +
                       apply_regularizer(g, r, 2, axis).l2_norm();
    auto w = make_witness(id, lhs, g.l2_norm(), 3.0);
    w.margin += 1e-12 * w.rhs;
    return w;
}

namespace detail {

// true when samples agree on every sphere of lattice points
inline bool is_radial(const SpectralField& u, double tol = 1e-10) {
    const auto& g = u.grid();
    if (g.dim() == 1) return true;
    const long half = static_cast<long>(g.points_per_axis() / 2);
    std::map<long, std::pair<double, double>> range;
    double scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto idx = g.unflatten(i);
        long key = 0;
        for (int a = 0; a < g.dim(); ++a) {
            const long c = static_cast<long>(idx[static_cast<std::size_t>(a)]) - half;
            key += c * c;
        }
        const double v = u.samples()[i].real();
        scale = std::max(scale, std::abs(u.samples()[i]));
        auto [it, fresh] = range.try_emplace(key, v, v);
        if (!fresh) it->second = {std::min(it->second.first, v), std::max(it->second.second, v)};
    }
    for (const auto& [key, r] : range)
        if (r.second - r.first > tol * std::max(scale, 1e-300)) return false;
    return true;
}

}  // namespace detail

/// ||<v>^{gamma/2} <D>^s u||; the spherical term vanishes on radial data.
inline double triple_norm_radial(const SpectralField& u, const SoftPotentialParams& prm) {
    if (!detail::is_radial(u)) throw std::invalid_argument("triple_norm_radial: data is not radial");
    return wnorm(u, prm.gamma() / 2.0, prm.s());
}

/// ||<D>^tau u|| <= C (||<v>u|| + triple norm).
inline InequalityWitness verify_coercive_interpolation(const SpectralField& u, const SoftPotentialParams& prm, double c,
                                                       const std::string& id = "") {
    const double tn = triple_norm_radial(u, prm);
    return make_witness(id, wnorm(u, 0.0, prm.tau()), wnorm(u, 1.0, 0.0) + tn, c);
}

// ---------------------------------------------------------------------------
// corpus sweeps

struct InequalityReport {
    std::string inequality_id;
    std::vector<std::pair<std::string, double>> params;
    std::size_t corpus_size = 0;
    double min_margin = 0.0;
    double fitted_constant = 0.0;
    double refinement_ratio = 1.0;  // constant fitted on the refined grid / on the base grid
    std::size_t failures = 0;
    bool refinement_stable = true;  // |refinement_ratio - 1| <= 0.1

    bool passed() const { return failures == 0 && refinement_stable; }
};

inline void to_json(nlohmann::ordered_json& j, const InequalityReport& r) {
    nlohmann::ordered_json params = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    j = nlohmann::ordered_json{{"inequality_id", r.inequality_id},
                               {"params", params},
                               {"corpus_size", r.corpus_size},
                               {"min_margin", r.min_margin},
                               {"fitted_constant", r.fitted_constant},
                               {"refinement_ratio", r.refinement_ratio},
                               {"failures", r.failures},
                               {"passed", r.passed()}};
}

struct SweepOptions {
    VelocityGrid grid{1, 512, 16.0};
    double envelope = 1.1;  // fitted constant is enlarged by this factor before the check on the refined grid
    unsigned jobs = 1;
};

/// Fits max_f q(f) on the base grid, refits on the refined grid, then checks
/// every member on the refined grid against envelope * fitted constant.
/// ratio(member, grid) returns the constant that member needs; check(member, grid, C)
/// returns its witness.
template <class Ratio, class Check>
InequalityReport fit_and_check(std::string id, std::span<const CorpusMember> corpus, const SweepOptions& opt,
                               Ratio&& ratio, Check&& check) {
    const VelocityGrid fine = opt.grid.refined();
    std::vector<double> base(corpus.size()), refined(corpus.size());
    parallel_for(corpus.size(), opt.jobs, [&](std::size_t i) {
        base[i] = ratio(corpus[i], opt.grid);
        refined[i] = ratio(corpus[i], fine);
    });
    InequalityReport rep;
    rep.inequality_id = std::move(id);
    rep.corpus_size = corpus.size();
    rep.fitted_constant = base.empty() ? 0.0 : *std::max_element(base.begin(), base.end());
    const double refit = refined.empty() ? 0.0 : *std::max_element(refined.begin(), refined.end());
    rep.refinement_ratio = rep.fitted_constant > 0.0 ? refit / rep.fitted_constant : 1.0;
    rep.refinement_stable = std::abs(rep.refinement_ratio - 1.0) <= 0.1;
    std::vector<InequalityWitness> ws(corpus.size());
    const double c = opt.envelope * rep.fitted_constant;
    parallel_for(corpus.size(), opt.jobs, [&](std::size_t i) { ws[i] = check(corpus[i], fine, c); });
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (const auto& w : ws) {
        rep.min_margin = std::min(rep.min_margin, w.margin);
        rep.failures += w.passed() ? 0 : 1;
    }
    if (ws.empty()) rep.min_margin = 0.0;
    return rep;
}

struct InterpolationSuite {
    InequalityReport sum;
    InequalityReport holder;
    InequalityReport coercive;
    std::size_t am_gm_failures = 0;
};

inline InterpolationSuite interpolation_suite(std::span<const CorpusMember> corpus, const SoftPotentialParams& prm,
                                              const SweepOptions& opt = {}) {
    const std::vector<std::pair<std::string, double>> params{{"gamma", prm.gamma()}, {"s", prm.s()},
                                                             {"tau", prm.tau()}, {"theta", prm.theta()}};
    InterpolationSuite out;
    out.sum = fit_and_check(
        "Lemma-2.1", corpus, opt,
        [&](const CorpusMember& m, const VelocityGrid& g) {
            return verify_interpolation_tau(m.materialize(g), prm, 1, 1).sum.required_constant();
        },
        [&](const CorpusMember& m, const VelocityGrid& g, double c) {
            return verify_interpolation_tau(m.materialize(g), prm, c, c, m.id).sum;
        });
    out.holder = fit_and_check(
        "Lemma-2.1-product", corpus, opt,
        [&](const CorpusMember& m, const VelocityGrid& g) {
            return verify_interpolation_tau(m.materialize(g), prm, 1, 1).holder.required_constant();
        },
        [&](const CorpusMember& m, const VelocityGrid& g, double c) {
            return verify_interpolation_tau(m.materialize(g), prm, c, c, m.id).holder;
        });
    // the coercive form reuses the sum-form constant rather than fitting its own
    out.coercive = out.sum;
    out.coercive.inequality_id = "Corollary-2.2";
    out.coercive.failures = 0;
    out.coercive.min_margin = std::numeric_limits<double>::infinity();
    const VelocityGrid fine = opt.grid.refined();
    const double c = opt.envelope * out.sum.fitted_constant;
    std::vector<InequalityWitness> ws(corpus.size());
    std::vector<char> amgm(corpus.size(), 1);
    parallel_for(corpus.size(), opt.jobs, [&](std::size_t i) {
        const auto u = corpus[i].materialize(fine);
        ws[i] = verify_coercive_interpolation(u, prm, c, corpus[i].id);
        amgm[i] = verify_interpolation_tau(u, prm, c, c).am_gm_holds ? 1 : 0;
    });
    for (std::size_t i = 0; i < ws.size(); ++i) {
        out.coercive.min_margin = std::min(out.coercive.min_margin, ws[i].margin);
        out.coercive.failures += ws[i].passed() ? 0 : 1;
        out.am_gm_failures += amgm[i] ? 0 : 1;
    }
    for (auto* r : {&out.sum, &out.holder, &out.coercive}) r->params = params;
    return out;
}

struct SplittingSuite {
    std::vector<InequalityReport> per_eps;
    LineFit scaling;             // log C_eps against log eps
    double predicted_slope = 0;  // -s/(1-s)
    bool slope_within_tolerance = false;  // within 25% of the predicted slope
};

inline SplittingSuite splitting_suite(std::span<const CorpusMember> corpus, double s, std::span<const double> eps_values,
                                      const SweepOptions& opt = {}) {
    const VelocityGrid fine = opt.grid.refined();
    std::vector<SplittingTerms> base(corpus.size()), refined(corpus.size());
    parallel_for(corpus.size(), opt.jobs, [&](std::size_t i) {
        base[i] = splitting_terms(corpus[i].materialize(opt.grid), s);
        refined[i] = splitting_terms(corpus[i].materialize(fine), s);
    });
    SplittingSuite out;
    out.predicted_slope = -s / (1.0 - s);
    std::vector<double> lx, ly;
    for (double eps : eps_values) {
        if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
        InequalityReport rep;
        rep.inequality_id = "Eq-(tau-j)";
        rep.params = {{"s", s}, {"eps", eps}};
        rep.corpus_size = corpus.size();
        double c0 = 0.0, c1 = 0.0;
        for (const auto& t : base) c0 = std::max(c0, splitting_required_constant(t, eps));
        for (const auto& t : refined) c1 = std::max(c1, splitting_required_constant(t, eps));
        rep.fitted_constant = c0;
        rep.refinement_ratio = c0 > 0.0 ? c1 / c0 : 1.0;
        rep.refinement_stable = std::abs(rep.refinement_ratio - 1.0) <= 0.1;
        const double c = opt.envelope * c0;
        rep.min_margin = std::numeric_limits<double>::infinity();
        for (const auto& t : refined) {
            const double margin = eps * t.derivative + c * t.weight - t.lhs;
            rep.min_margin = std::min(rep.min_margin, margin);
            rep.failures += margin >= 0.0 ? 0 : 1;
        }
        if (c0 > 0.0) {
            lx.push_back(std::log(eps));
            ly.push_back(std::log(c0));
        }
        out.per_eps.push_back(std::move(rep));
    }
    if (lx.size() >= 2) {
        out.scaling = fit_line(lx, ly);
        out.slope_within_tolerance = std::abs(out.scaling.slope - out.predicted_slope) <= 0.25 * std::abs(out.predicted_slope);
    }
    return out;
}

/// u^2 sampled from a corpus member: a nonnegative field with the member's decay.
inline SpectralField nonnegative_field(const CorpusMember& m, const VelocityGrid& g) {
    return SpectralField::sample(g, [&m](double v) {
        const double u = m(v);
        return u * u;
    });
}

struct CompositionSuite {
    InequalityReport multiplier;
    InequalityReport gagliardo;
    double worst_agreement = 1.0;
};

inline CompositionSuite composition_suite(std::span<const CorpusMember> corpus, double s, Composition f,
                                          const SweepOptions& opt = {}) {
    const std::string id = f == Composition::log1p ? "Lemma-A.2-log" : "Lemma-A.2-saturation";
    CompositionSuite out;
    out.multiplier = fit_and_check(
        id, corpus, opt,
        [&](const CorpusMember& m, const VelocityGrid& g) {
            return verify_composition_bound(nonnegative_field(m, g), s, f, 1.0).multiplier.required_constant();
        },
        [&](const CorpusMember& m, const VelocityGrid& g, double c) {
            return verify_composition_bound(nonnegative_field(m, g), s, f, c, m.id).multiplier;
        });
    out.gagliardo.inequality_id = id + "-gagliardo";
    out.gagliardo.corpus_size = corpus.size();
    out.gagliardo.fitted_constant = 1.0;
    out.gagliardo.min_margin = std::numeric_limits<double>::infinity();
    std::vector<CompositionCheck> cs(corpus.size());
    parallel_for(corpus.size(), opt.jobs, [&](std::size_t i) {
        cs[i] = verify_composition_bound(nonnegative_field(corpus[i], opt.grid), s, f, 1.0, corpus[i].id);
    });
    for (const auto& c : cs) {
        out.gagliardo.min_margin = std::min(out.gagliardo.min_margin, c.gagliardo.margin);
        out.gagliardo.failures += c.gagliardo.passed() ? 0 : 1;
        out.worst_agreement = std::max(out.worst_agreement, c.agreement);
    }
    for (auto* r : {&out.multiplier, &out.gagliardo}) r->params = {{"s", s}};
    return out;
}

inline InequalityReport regularizer_suite(std::span<const CorpusMember> corpus, std::span<const double> thetas,
                                          const SweepOptions& opt = {}) {
    InequalityReport rep;
    rep.inequality_id = "Eq-(ubd)";
    rep.corpus_size = corpus.size();
    rep.fitted_constant = 3.0;
    rep.min_margin = std::numeric_limits<double>::infinity();
    std::vector<std::vector<InequalityWitness>> ws(corpus.size());
    parallel_for(corpus.size(), opt.jobs, [&](std::size_t i) {
        const auto g = corpus[i].materialize(opt.grid);
        for (double th : thetas) ws[i].push_back(verify_regularizer_bounds(g, th, 0, corpus[i].id));
    });
    for (const auto& row : ws)
        for (const auto& w : row) {
            rep.min_margin = std::min(rep.min_margin, w.margin);
            rep.failures += w.passed() ? 0 : 1;
        }
    for (std::size_t i = 0; i < thetas.size(); ++i) rep.params.emplace_back("theta_" + std::to_string(i), thetas[i]);
    return rep;
}

}  // namespace kgl
