#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kgl/experiment.hpp"

using namespace kgl;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

struct Criterion {
    int number;
    std::string name;
    double budget;  // seconds, 0 = none
    std::function<Outcome()> body;
};

std::string fmt(std::initializer_list<std::pair<const char*, double>> kv) {
    std::ostringstream os;
    os.precision(6);
    bool first = true;
    for (const auto& [k, v] : kv) {
        os << (first ? "" : " ") << k << '=' << v;
        first = false;
    }
    return os.str();
}

bool check_passed(const RunReport& rep, const std::string& id) {
    for (const auto& c : rep.checks)
        if (c.id == id) return c.passed;
    throw std::logic_error("report has no check " + id);
}

Outcome from_report(const RunReport& rep, const std::vector<std::string>& ids) {
    Outcome o{true, ""};
    for (const auto& id : ids) {
        const bool ok = check_passed(rep, id);
        o.passed = o.passed && ok;
        o.detail += (o.detail.empty() ? "" : " ") + id + (ok ? ":ok" : ":fail");
    }
    return o;
}

Outcome sharp_index() {
    Outcome o{true, ""};
    for (auto [gamma, s] : std::vector<std::pair<double, double>>{{-1.0, 0.5}, {-2.0, 0.75}}) {
        ToyParams p;
        p.prm = SoftPotentialParams(gamma, s);
        const auto fit = estimate_gevrey_index(block_law(p, 1.0, 0, 40), 16, 40);
        const double predicted = 4 * s / (2 - gamma);
        const double err = std::abs(fit.slope / predicted - 1.0);
        o.passed = o.passed && err <= 0.01 && std::abs(fit.r_hat * predicted - 1.0) <= 0.01;
        o.detail += fmt({{"r_hat", fit.r_hat}, {"slope_rel_err", err}}) + "; ";
    }
    return o;
}

Outcome analytic_clamp() {
    ToyParams p;
    p.prm = SoftPotentialParams(-0.5, 0.75);
    const auto fit = estimate_gevrey_index(block_law(p, 1.0, 0, 40), 16, 40);
    return {fit.clamped_index() == 1.0 && predicted_index(p.prm) == 1.0,
            fmt({{"raw", raw_index(p.prm)}, {"r_hat", fit.r_hat}, {"index", fit.clamped_index()}})};
}

Outcome pde_consistency() {
    ToyParams p;  // d=1, N=4096, L=32, gamma=-1, s=1/2, a0=1, T=1
    const auto r = pde_block_consistency(p, 1, BumpPair{});
    return {r.blocks_ok && r.slope_ok,
            fmt({{"compared", double(r.blocks.size())}, {"outside_factor_4", double(r.outside_envelope)},
                 {"worst_factor", r.worst_factor}, {"pde_slope", r.pde_fit.slope}, {"slope_rel_err", r.slope_relative_error}})};
}

Outcome infimum() {
    ToyParams p;
    const auto r = sharpness_infimum(10, p);
    bool ok = r.k_star == 3 && r.value == 192.0;
    double lo = 1e300, hi = 0;
    for (const auto& row : sharpness_sweep(p, 1, 40)) {
        lo = std::min(lo, row.ratio);
        hi = std::max(hi, row.ratio);
    }
    ok = ok && lo >= 0.125 && hi <= 8.0;
    return {ok, fmt({{"k_star", double(r.k_star)}, {"value", r.value}, {"ratio_min", lo}, {"ratio_max", hi}})};
}

Outcome partition() {
    const VelocityGrid g(1, 512, 16.0);
    const BumpPair bumps;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, g.nyquist());
    std::vector<double> radii(10000);
    for (auto& r : radii) r = u(rng);
    const double defect = bumps.partition_defect(radii);
    double worst = 0.0;
    const int jmax = max_frequency_shell(g);
    for (int n = 0; n < 50; ++n) {
        const auto f = random_band_limited(rng, g.half_width(), 0.9 * g.nyquist(), "b").materialize(g);
        auto sum = SpectralField::zeros(g);
        for (int j = -1; j <= jmax; ++j) sum = sum + project_frequency(f, bumps, j);
        worst = std::max(worst, (sum - f).max_abs() / std::max(1.0, f.max_abs()));
    }
    return {defect <= 1e-12 && worst <= 1e-10, fmt({{"partition_defect", defect}, {"reconstruction_error", worst}})};
}

RunReport run_default(const std::string& id) {
    auto c = ExperimentConfig::defaults(id);
    c.jobs = resolve_jobs(0);
    return run(c);
}

Outcome norms() {
    const auto rep = run_default("norms");
    auto o = from_report(rep, {"Eq-(chara)"});
    o.detail += ' ' + fmt({{"ratio_min", rep.metrics["ratio_min"].get<double>()},
                           {"ratio_max", rep.metrics["ratio_max"].get<double>()},
                           {"refinement_drift", rep.metrics["max_refinement_drift"].get<double>()}});
    return o;
}

Outcome inequalities() {
    const auto rep = run_default("verify-inequalities");
    auto o = from_report(rep, {"Lemma-2.1", "Lemma-2.1-product", "Eq-(tau-j)", "Eq-(tau-j)-scaling", "Lemma-A.2-log",
                               "Lemma-A.2-log-gagliardo", "Lemma-A.2-saturation", "Lemma-A.2-saturation-gagliardo", "Eq-(ubd)"});
    o.detail += ' ' + fmt({{"slope", rep.metrics["splitting_slope"].get<double>()},
                           {"predicted", rep.metrics["splitting_predicted_slope"].get<double>()}});
    return o;
}

Outcome vector_fields() { return from_report(run_default("vector-fields"), {"Eq-(kehigher)", "Prop-5.1-commutator", "Eq-(generate)"}); }

Outcome ledger() {
    bool ok = true;
    double worst = 0.0;
    for (double rho : {0.5, 1.0, 2.0})
        for (double e : {1.0, 1.5, 4.0 / 3.0}) {
            const Ledger led(rho, e);
            for (int k = 0; k <= 200; ++k) {
                worst = std::max(worst, std::abs(led.round_trip_residual(k)));
                ok = ok && std::abs(led.round_trip_residual(k)) <= led.round_trip_tolerance(k);
            }
        }
    const double a = convolution_bound(5000), b = convolution_bound(10000);
    return {ok && std::abs(a - b) <= 1e-6, fmt({{"worst_log_residual", worst}, {"sup_5000", a}, {"sup_10000", b}})};
}

Outcome picard() {
    const auto rep = run_default("picard");
    auto o = from_report(rep, {"Eq-(Picard+++)", "Eq-(linparabolic)-order"});
    o.detail += ' ' + fmt({{"T", rep.metrics["T_used"].get<double>()},
                           {"residual", rep.metrics["fixed_point_residual"].get<double>()},
                           {"richardson_slope", rep.metrics["richardson_slope"].get<double>()}});
    return o;
}

Outcome moment_checks() {
    const VelocityGrid g(1, 256, 8.0);
    const auto k = moments(SpectralField::sample(g, [](double v) { return std::exp(-v * v); }));
    bool ok = std::abs(k.mass - std::sqrt(pi)) <= 1e-8 && std::abs(k.energy - std::sqrt(pi) / 2) <= 1e-8;

    RegularizedProblem rp;
    rp.eps = 0.0;
    rp.x_points = 16;
    const auto f = PhaseSpaceField::sample(rp.grid, 16, [](double x, double v) { return std::exp(-v * v) * (1 + 0.5 * std::cos(x)); });
    const auto tr = solve_regularized(f, rp);
    const double drift = std::abs(moments(tr.snapshots.back()).mass - moments(tr.snapshots.front()).mass) / rp.T;
    ok = ok && drift <= 1e-10;

    const MomentBounds b{1.0, 1.0, 1.0, 1.0};
    const auto vacuum = moment_flags(moments(SpectralField::zeros(g)), b);
    const auto hot = moment_flags(moments(SpectralField::sample(g, [](double v) { return 0.3 * std::exp(-v * v / 8); })), b);
    const auto fine = moment_flags(k, b);
    ok = ok && vacuum.vacuum && !vacuum.admissible() && hot.energy_excess && !hot.admissible() && fine.admissible();
    return {ok, fmt({{"mass_err", std::abs(k.mass - std::sqrt(pi))}, {"energy_err", std::abs(k.energy - std::sqrt(pi) / 2)},
                     {"transport_mass_drift", drift}})};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all{
        {1, "sharp index from the exact block law", 1, sharp_index},
        {2, "analytic-regime clamp", 1, analytic_clamp},
        {3, "toy PDE against the block law", 60, pde_consistency},
        {4, "infimum brute force", 0.1, infimum},
        {5, "partition of unity and reconstruction", 5, partition},
        {6, "block norm characterization", 30, norms},
        {7, "inequality suite", 60, inequalities},
        {8, "vector-field algebra", 5, vector_fields},
        {9, "ledger and convolution", 5, ledger},
        {10, "Picard surrogate contraction", 120, picard},
        {11, "moments", 0, moment_checks},
    };
    bool all_ok = true;
    for (const auto& c : all) {
        if (only && c.number != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = c.budget == 0 || secs < c.budget;
        const bool ok = o.passed && in_time;
        all_ok = all_ok && ok;
        std::cout << "criterion " << c.number << " [" << c.name << "]: " << (ok ? "PASS" : "FAIL") << " (" << secs << " s"
                  << (in_time ? "" : ", over budget") << ") " << o.detail << std::endl;
    }
    return all_ok ? 0 : 1;
}
