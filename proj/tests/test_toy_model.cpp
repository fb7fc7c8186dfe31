#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "kgl/toy_model.hpp"

using namespace kgl;

namespace {

ToyParams small_params(double gamma, double s, int steps = 32) {
    ToyParams p;
    p.prm = gamma == 0.0 ? SoftPotentialParams::diagnostic(gamma, s) : SoftPotentialParams(gamma, s);
    p.grid = VelocityGrid(1, 256, 16.0);
    p.T = 0.5;
    p.steps = steps;
    return p;
}

SpectralField bump(const VelocityGrid& g) {
    return SpectralField::sample(g, [](double v) { return std::exp(-v * v / 2) * (1 + 0.3 * std::sin(3 * v)); });
}

double distance(const SpectralField& a, const SpectralField& b) { return (a - b).l2_norm(); }

}  // namespace

TEST(ToyParams, Validation) {
    auto p = small_params(-1, 0.5);
    p.steps = 15;
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.steps = 16;
    EXPECT_NO_THROW(p.validate());
    p.weight_monitoring = true;
    p.T = 0.6;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(EvolveToy, RejectsDataThatReachesTheBoundary) {
    const auto p = small_params(-1, 0.5);
    const auto f = SpectralField::sample(p.grid, [](double v) { return std::exp(-v * v / 50); });
    EXPECT_THROW(evolve_toy(f, p), std::invalid_argument);
}

TEST(EvolveToy, ConstantWeightIsExact) {
    const auto p = small_params(0.0, 0.5, 16);
    const auto f0 = bump(p.grid);
    const auto traj = evolve_toy(f0, p);
    const auto exact = apply_radial_symbol(f0, [&](double eta) { return std::exp(-p.T * bracket(eta)); });
    EXPECT_LT(distance(traj.snapshots.back(), exact), 1e-10);
    // commutes with a Fourier multiplier
    const auto m = MultiplierSpec::bracket_power(1.5);
    const auto lhs = apply_multiplier(traj.snapshots.back(), m);
    auto rhs = apply_multiplier(f0, m);
    for (int n = 0; n < p.steps; ++n) rhs = toy_step(rhs, p.prm, p.T / p.steps);
    EXPECT_LT(distance(lhs, rhs), 1e-10);
}

TEST(EvolveToy, NormIsNonincreasing) {
    for (auto [gamma, s] : std::vector<std::pair<double, double>>{{-1, 0.5}, {-2, 0.75}, {-0.5, 0.3}}) {
        const auto p = small_params(gamma, s, 64);
        const auto traj = evolve_toy(bump(p.grid), p);
        for (std::size_t i = 1; i < traj.snapshots.size(); ++i)
            EXPECT_LE(traj.snapshots[i].l2_norm(), traj.snapshots[i - 1].l2_norm() * (1 + 1e-12)) << gamma << ' ' << s;
    }
}

TEST(EvolveToy, OneStepMatchesFirstOrderExpansion) {
    const auto p = small_params(-1, 0.5);
    const auto f0 = SpectralField::sample(p.grid, [](double v) { return std::exp(-v * v) * std::cos(v); });
    const auto rhs = toy_rhs(f0, p.prm);
    std::vector<double> errs;
    for (double dt : {1e-2, 5e-3, 2.5e-3}) errs.push_back(distance(toy_step(f0, p.prm, dt), f0 + rhs.scaled(dt)));
    EXPECT_NEAR(std::log2(errs[0] / errs[1]), 2.0, 0.1);
    EXPECT_NEAR(std::log2(errs[1] / errs[2]), 2.0, 0.1);
}

TEST(EvolveToy, SecondOrderGlobalConvergence) {
    auto p = small_params(-1, 0.5, 2048);
    const auto f0 = bump(p.grid);
    const auto reference = evolve_toy(f0, p, 4096).snapshots.back();
    std::vector<double> errs;
    for (int steps : {32, 64, 128}) {
        p.steps = steps;
        errs.push_back(distance(evolve_toy(f0, p, 4096).snapshots.back(), reference));
    }
    EXPECT_NEAR(std::log2(errs[0] / errs[1]), 2.0, 0.25);
    EXPECT_NEAR(std::log2(errs[1] / errs[2]), 2.0, 0.25);
}

TEST(EvolveToy, RecordsRequestedSnapshots) {
    const auto p = small_params(-1, 0.5, 32);
    const auto traj = evolve_toy(bump(p.grid), p, 8);
    ASSERT_EQ(traj.times.size(), 5u);
    EXPECT_DOUBLE_EQ(traj.times.back(), p.T);
}

TEST(BlockDecay, ClosedForm) {
    ToyParams p;
    EXPECT_EQ(block_decay_exact(4, 2, 0.0, p), 1.0);
    EXPECT_NEAR(block_decay_exact(4, 2, 1.0, p), 1.8316e-2, 1e-6);
    EXPECT_DOUBLE_EQ(block_decay_exact(4, 2, 1.0, p), std::exp(-4.0));
    const double t = 0.3;
    const double ratio = block_decay_exact(6, 1, t, p) / block_decay_exact(5, 1, t, p);
    const double expected = std::exp(-(std::pow(2.0, 1.0) - 1) * std::pow(2.0, 5.0) * std::pow(2.0, -1.0) * t);
    EXPECT_NEAR(ratio, expected, 1e-14);
}

TEST(Sharpness, SmallCases) {
    ToyParams p;
    for (auto [gamma, s] : std::vector<std::pair<double, double>>{{-1, 0.5}, {-2, 0.75}, {-0.5, 0.3}}) {
        p.prm = SoftPotentialParams(gamma, s);
        const auto r = sharpness_infimum(0, p);
        EXPECT_EQ(r.k_star, 0);
        EXPECT_EQ(r.value, 2.0);
    }
    p.prm = SoftPotentialParams(-1, 0.5);
    const auto r = sharpness_infimum(10, p);
    EXPECT_EQ(r.k_star, 3);
    EXPECT_EQ(r.value, 192.0);
    EXPECT_FALSE(r.widened);
    EXPECT_THROW(sharpness_infimum(10, p, 32), std::invalid_argument);
}

TEST(Sharpness, BruteForceOracleAndRatioBounds) {
    ToyParams p;
    for (const auto& row : sharpness_sweep(p, 1, 40)) {
        double best = std::numeric_limits<double>::infinity();
        int arg = -1;
        for (int k = 0; k <= 64; ++k) {
            const double g = std::pow(2.0, row.j - k) + std::pow(4.0, k);
            if (g < best) {
                best = g;
                arg = k;
            }
        }
        EXPECT_EQ(row.k_star, arg) << row.j;
        EXPECT_EQ(row.inf_value, best) << row.j;
        EXPECT_GE(row.ratio, 1.0 / 8.0) << row.j;
        EXPECT_LE(row.ratio, 8.0) << row.j;
    }
}

TEST(Sharpness, InfimumSlopeConverges) {
    for (auto [gamma, s] : std::vector<std::pair<double, double>>{{-1, 0.5}, {-2, 0.75}}) {
        ToyParams p;
        p.prm = SoftPotentialParams(gamma, s);
        std::vector<double> x, y;
        for (const auto& row : sharpness_sweep(p, 20, 40)) {
            x.push_back(row.j);
            y.push_back(std::log2(row.inf_value));
        }
        EXPECT_NEAR(fit_line(x, y).slope, 4 * s / (2 - gamma), 0.05);
    }
}

TEST(Sharpness, WidensWhenMinimumHitsTheRange) {
    ToyParams p;
    p.a0 = std::exp2(-200.0);
    const auto r = sharpness_infimum(100, p);
    EXPECT_TRUE(r.widened);
    EXPECT_GT(r.k_star, 64);
    EXPECT_LT(r.k_star, r.kmax);
}

TEST(GevreyFit, ExactLawReproducesSharpSlope) {
    for (auto [gamma, s] : std::vector<std::pair<double, double>>{{-1, 0.5}, {-2, 0.75}}) {
        ToyParams p;
        p.prm = SoftPotentialParams(gamma, s);
        const auto fit = estimate_gevrey_index(block_law(p, 1.0, 0, 48), 16, 40);
        const double predicted = 4 * s / (2 - gamma);
        EXPECT_NEAR(fit.slope / predicted, 1.0, 1e-3);
        EXPECT_NEAR(fit.r_hat, (2 - gamma) / (4 * s), 2e-3 * fit.r_hat);
        EXPECT_FALSE(fit.non_monotone);
        EXPECT_EQ(fit.shells.size(), 25u);
    }
}

TEST(GevreyFit, AnalyticRegimeIsClamped) {
    ToyParams p;
    p.prm = SoftPotentialParams(-0.5, 0.75);
    EXPECT_NEAR(raw_index(p.prm), 2.5 / 3.0, 1e-15);
    EXPECT_EQ(predicted_index(p.prm), 1.0);
    const auto fit = estimate_gevrey_index(block_law(p, 1.0, 0, 48), 16, 40);
    EXPECT_LT(fit.r_hat, 1.0);
    EXPECT_EQ(fit.clamped_index(), 1.0);
}

TEST(GevreyFit, HeatTypeSlopeIsOne) {
    ToyParams p;
    p.prm = SoftPotentialParams::diagnostic(0.0, 0.5);
    const auto st = block_law(p, 1.0, 0, 48);
    EXPECT_NEAR(-st.log_magnitude(10, 0), std::pow(2.0, 10) + 1.0, 1e-9);
    const auto fit = estimate_gevrey_index(st, 16, 40);
    EXPECT_NEAR(fit.slope, 1.0, 1e-4);
    EXPECT_NEAR(fit.clamped_index(), 1.0, 1e-4);
}

TEST(GevreyFit, RejectsShortRangesAndZeroTime) {
    ToyParams p;
    EXPECT_THROW(estimate_gevrey_index(block_law(p, 1.0, 0, 48), 16, 22), std::invalid_argument);
    EXPECT_THROW(estimate_gevrey_index(block_law(p, 0.0, 0, 48), 16, 40), std::invalid_argument);
}

TEST(GevreyFit, FlagsNonMonotoneExponents) {
    ToyParams p;
    const auto st = block_law(p, 1.0, 0, 20, 0, 64, [](int j, int) { return j == 12 ? 200.0 : 0.0; });
    const auto fit = estimate_gevrey_index(st, 0, 20);
    EXPECT_TRUE(fit.non_monotone);
}

TEST(PredictedIndex, Substitutions) {
    EXPECT_DOUBLE_EQ(predicted_index(SoftPotentialParams(-1, 0.5)), 1.5);
    EXPECT_DOUBLE_EQ(predicted_index(SoftPotentialParams(-2, 0.75)), 4.0 / 3.0);
    EXPECT_DOUBLE_EQ(predicted_index(SoftPotentialParams(-1, 0.5), 2.0), 1.5);
    const auto ipl = inverse_power_law(3.0);
    EXPECT_DOUBLE_EQ(ipl.gamma(), -1.0);
    EXPECT_DOUBLE_EQ(ipl.s(), 0.5);
    for (double q : {2.5, 3.0, 4.0, 4.9}) {
        const auto r = inverse_power_law(q);
        EXPECT_NEAR(r.gamma() + 4 * r.s(), 1.0, 1e-15);
    }
}

TEST(MeasuredBlocks, InitialProfileFollowsWeight) {
    ToyParams p;
    p.grid = VelocityGrid(1, 1024, 16.0);
    const auto [f_in, g] = toy_initial_datum(p, 3);
    const BumpPair bumps;
    const auto st = measure_block_law(f_in, g, bumps, 0.0);
    // within a ring the weight e^{-<v>^2} varies, but the block ratio stays between its extremes
    for (int k = 0; k <= 2; ++k) {
        const double lo = std::exp(-(1 + std::pow(BumpPair::ring_outer * std::exp2(k), 2)));
        const double hi = std::exp(-(1 + std::pow(std::exp2(k), 2)));
        EXPECT_GE(st.magnitude(-1, k), lo * 0.5) << k;
        EXPECT_LE(st.magnitude(-1, k), hi * 2.0) << k;
    }
}
