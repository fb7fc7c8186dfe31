#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "kgl/vector_fields.hpp"

using namespace kgl;

namespace {

PolyFunction mono(Rational c, Rational t, std::array<int, 3> x, std::array<int, 3> v) {
    return PolyFunction::term(c, t, x, v);
}

const PolyFunction x1v1 = mono(1, 0, {1, 0, 0}, {1, 0, 0});

}  // namespace

TEST(PolyFunction, ExactArithmetic) {
    const auto p = mono(Rational(1, 3), Rational(5, 3), {2, 0, 0}, {0, 1, 0});
    EXPECT_EQ(p.d_x(1), mono(Rational(2, 3), Rational(5, 3), {1, 0, 0}, {0, 1, 0}));
    EXPECT_EQ(p.d_t(), mono(Rational(5, 9), Rational(2, 3), {2, 0, 0}, {0, 1, 0}));
    EXPECT_TRUE(p.d_v(1).is_zero());
    EXPECT_TRUE((p - p).is_zero());
    EXPECT_EQ((p + p), Rational(2) * p);
    EXPECT_THROW(p.d_x(4), std::invalid_argument);
}

TEST(ApplyH, HandExpansion) {
    const auto h = apply_H(x1v1, 1);
    EXPECT_EQ(h, mono(Rational(1, 2), 2, {0, 0, 0}, {1, 0, 0}) + mono(1, 1, {1, 0, 0}, {0, 0, 0}));
    EXPECT_TRUE(apply_H(PolyFunction::constant(7), Rational(3, 2)).is_zero());
    EXPECT_EQ(apply_H_power(x1v1, 2, 0), x1v1);
}

TEST(ApplyH, LeibnizRuleOnRandomPairs) {
    const auto corpus = make_poly_corpus(11, 20, 4);
    for (const Rational& d : {Rational(1), Rational(5, 3)})
        for (std::size_t i = 0; i + 1 < corpus.size(); i += 2) {
            const auto &f = corpus[i], &g = corpus[i + 1];
            EXPECT_EQ(apply_H(f * g, d), apply_H(f, d) * g + f * apply_H(g, d)) << i;
        }
}

TEST(Commutator, HandExample) {
    const auto th = transport(apply_H(x1v1, 1));
    EXPECT_EQ(th, mono(2, 1, {0, 0, 0}, {1, 0, 0}) + mono(1, 0, {1, 0, 0}, {0, 0, 0}));
    EXPECT_EQ(apply_H(transport(x1v1), 1), mono(2, 1, {0, 0, 0}, {1, 0, 0}));
    EXPECT_TRUE(commutator_residual(x1v1, 1, 1).is_zero());
    EXPECT_TRUE(commutator_residual(x1v1, 3, 0).is_zero());
    EXPECT_TRUE(commutator_residual(mono(1, 0, {2, 0, 0}, {3, 0, 0}), 2, 3).is_zero());
}

TEST(Commutator, WrongCoefficientIsReported) {
    // dropping the factor delta k must leave a nonzero residual with listed monomials
    const auto f = mono(1, 0, {2, 0, 0}, {3, 0, 0});
    const Rational d = 2;
    const auto lhs = transport(apply_H_power(f, d, 2)) - apply_H_power(transport(f), d, 2);
    const auto wrong = lhs - apply_H_power(f, d, 1).d_v(1).times_t_power(d - 1);
    EXPECT_FALSE(wrong.is_zero());
    EXPECT_FALSE(offending_monomials(wrong).empty());
}

TEST(Commutator, CorpusSweep) {
    const auto corpus = make_poly_corpus(1);
    ASSERT_EQ(corpus.size(), 50u);
    const auto rep = commutator_suite(corpus, {1, Rational(3, 2), 2, Rational(5, 3)});
    EXPECT_TRUE(rep.passed()) << (rep.failures.empty() ? "" : rep.failures.front());
    EXPECT_EQ(rep.cases, 50u * 4u * 5u);
}

TEST(VFParams, DeltaSelection) {
    const VFParams a(2, -1, Rational(1, 2));
    EXPECT_EQ(a.tau(), Rational(1, 3));
    EXPECT_EQ(a.delta1(), 2);
    EXPECT_EQ(a.delta2(), Rational(5, 3));
    EXPECT_FALSE(a.analytic_regime());
    const VFParams b(2, Rational(-1, 2), Rational(3, 4));
    EXPECT_TRUE(b.analytic_regime());
    EXPECT_EQ(b.delta2(), 1);
    EXPECT_THROW(VFParams(Rational(3, 2), -1, Rational(1, 2)), std::invalid_argument);  // 1/(2 tau) = 3/2
    EXPECT_THROW(VFParams(1, Rational(-1, 2), Rational(3, 4)), std::invalid_argument);
}

TEST(VFParams, SweepKeepsOrdering) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> gn(-299, -1), sn(1, 99), ln(1, 400);
    int built = 0;
    while (built < 100) {
        const Rational gamma(gn(rng), 100), s(sn(rng), 100);
        if (!(gamma + 2 * s > -1)) continue;
        const Rational tau = 2 * s / (2 - gamma);
        const Rational lambda = std::max(Rational(1), Rational(1 / (2 * tau))) + Rational(ln(rng), 100);
        const VFParams vp(lambda, gamma, s);
        EXPECT_GT(vp.delta1(), vp.delta2());
        EXPECT_GE(vp.delta2(), 1);
        ++built;
    }
}

TEST(Reconstruction, WorkedCoefficients) {
    const VFParams vp(2, -1, Rational(1, 2));
    const auto r = reconstruct_derivatives(x1v1, vp);
    EXPECT_EQ(r.coefficient_x, -24);
    EXPECT_EQ(r.coefficient_v1, 9);
    EXPECT_EQ(r.coefficient_v2, -8);
    EXPECT_TRUE(r.exact());
    const auto manual = Rational(9) * apply_H(x1v1, 2) - Rational(8) * apply_H(x1v1, Rational(5, 3)).times_t_power(Rational(1, 3));
    EXPECT_EQ(manual, x1v1.d_v(1).times_t_power(2));
}

TEST(Reconstruction, KernelAndDegenerateCase) {
    const auto f = mono(3, 1, {0, 2, 0}, {0, 0, 1});
    const auto r = reconstruct_derivatives(f, VFParams(2, -1, Rational(1, 2)));
    EXPECT_TRUE(r.g_x.is_zero());
    EXPECT_TRUE(r.g_v.is_zero());
    EXPECT_THROW(reconstruct_derivatives(f, 2, 2), std::invalid_argument);
}

TEST(Reconstruction, CorpusSweepBothRegimes) {
    const std::vector<VFParams> params{VFParams(2, -1, Rational(1, 2)), VFParams(3, -2, Rational(3, 4)),
                                       VFParams(2, Rational(-1, 2), Rational(3, 4))};
    EXPECT_FALSE(params[0].analytic_regime());
    EXPECT_TRUE(params[2].analytic_regime());
    const auto rep = reconstruction_suite(make_poly_corpus(2), params);
    EXPECT_TRUE(rep.passed()) << (rep.failures.empty() ? "" : rep.failures.front());
}

TEST(MixedCommutator, WithDeltaFactorsIsExact) {
    const VFParams vp(2, -1, Rational(1, 2));
    const auto rep = mixed_commutator_suite(make_poly_corpus(3, 20, 5), vp, 4);
    EXPECT_TRUE(rep.passed()) << (rep.failures.empty() ? "" : rep.failures.front());
    EXPECT_EQ(rep.cases, 20u * 14u);
}

TEST(MixedCommutator, UnweightedFormFailsAwayFromDeltaOne) {
    const VFParams vp(2, -1, Rational(1, 2));
    const auto r = mixed_commutator_residual(x1v1, vp, 1, 0, true);
    // residual (delta1 - 1) t^{delta1-1} d_v f = t x1
    EXPECT_EQ(r, mono(1, 1, {1, 0, 0}, {0, 0, 0}));
    const VFParams unit(2, Rational(-1, 2), Rational(3, 4));  // delta2 = 1
    EXPECT_TRUE(mixed_commutator_residual(x1v1, unit, 0, 2, true).is_zero());
}

TEST(Ledger, Values) {
    EXPECT_EQ(ledger_value(2, 0, 1), 1.0);
    EXPECT_DOUBLE_EQ(ledger_value(2, 2, 1), 6.75);
    const double v = ledger_value(2, 3, 1.5);
    EXPECT_NEAR(v, 64.0 / (4.0 * std::pow(6.0, 1.5)), 1e-14);
    EXPECT_NEAR(v, 1.0887, 1e-4);
    EXPECT_NEAR(std::log(v), ledger_log_value(2, 3, 1.5), 1e-14);
    EXPECT_THROW(ledger_value(0, 2, 1), std::invalid_argument);
}

TEST(Ledger, LogDomainBeyondTwenty) {
    const Ledger led(0.5, 1.5);
    // direct and log branches agree at the switch
    EXPECT_NEAR(std::log(led.value(20)), led.log_value(20), 1e-12);
    EXPECT_GT(led.value(60), 0.0);
    EXPECT_NEAR(std::log(led.value(60)), led.log_value(60), 1e-12);
    EXPECT_TRUE(std::isfinite(led.log_value(5000)));
    for (int k : {0, 1, 7, 21, 150, 5000}) EXPECT_LE(std::abs(led.round_trip_residual(k)), led.round_trip_tolerance(k)) << k;
}

TEST(Ledger, CsvLayout) {
    std::ostringstream os;
    write_ledger_csv(os, Ledger(2, 1), 3);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "k,L_value,log_L");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 4);
}

TEST(Convolution, SmallCases) {
    EXPECT_DOUBLE_EQ(convolution_sum(2), 27.0 / 64.0);
    EXPECT_EQ(convolution_sum_exact(2), Rational(27, 64));
    EXPECT_EQ(convolution_sum_exact(3), Rational(2 * 64, 8 * 27));
    EXPECT_NEAR(convolution_sum(3), 0.5926, 1e-4);
}

TEST(Convolution, BinomialFormMatchesReducedSum) {
    for (int k = 2; k <= 25; ++k)
        for (const Rational& rho : {Rational(1), Rational(3, 2), Rational(1, 4)})
            EXPECT_EQ(convolution_ratio_exact(k, rho), convolution_sum_exact(k) / rho) << k;
}

TEST(Convolution, SupremumStabilizes) {
    const double half = convolution_bound(5000), full = convolution_bound(10000);
    EXPECT_TRUE(std::isfinite(full));
    EXPECT_LE(std::abs(full - half), 1e-6);
    // tail tends to 2(zeta(3) - 1)
    EXPECT_NEAR(convolution_sum(10000), 2 * (1.2020569031595942 - 1), 1e-3);
    EXPECT_EQ(convolution_bound(100), full);
}

TEST(XYNorm, ZeroAndSixC) {
    const Ledger led(2, 1.5);
    NormTable t;
    t.k_max = 3;
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 3; ++j)
            for (int k = 0; k <= 3; ++k) t.entries[{i, j, k}] = {};
    auto z = xy_norm_from_samples(t, led);
    EXPECT_EQ(z.x, 0.0);
    EXPECT_EQ(z.y, 0.0);
    const double c = 0.7;
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 3; ++j) t.entries[{i, j, 0}] = {c, 2 * c};
    const auto r = xy_norm_from_samples(t, led);
    EXPECT_DOUBLE_EQ(r.x, 6 * c);
    EXPECT_DOUBLE_EQ(r.y, 12 * c);
}

TEST(XYNorm, LedgerFixedPoint) {
    const Ledger led(2, 1.5);
    NormTable t;
    t.mixed = true;
    t.k_max = 12;
    for (int j = 1; j <= 3; ++j)
        for (int k = 0; k <= t.k_max; ++k)
            for (int a1 = 0; a1 <= k; ++a1) {
                const double v = k == 0 ? 1.0 : std::exp(-led.log_value(k));
                t.entries[{j, a1, k - a1}] = {v, v};
            }
    const auto r = xy_norm_from_samples(t, led);
    EXPECT_NEAR(r.x, 3.0, 1e-12);
    EXPECT_NEAR(r.y, 3.0, 1e-12);
}

TEST(XYNorm, MissingEntriesAreListed) {
    NormTable t;
    t.k_max = 1;
    for (int i = 1; i <= 2; ++i)
        for (int j = 1; j <= 3; ++j) t.entries[{i, j, 0}] = {1, 1};
    t.entries[{1, 1, 1}] = {1, 1};
    try {
        xy_norm_from_samples(t, Ledger(2, 1));
        FAIL();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("(2,1,1)"), std::string::npos);
        EXPECT_EQ(msg.find("(1,1,1)"), std::string::npos);
    }
}

TEST(IdentityReport, JsonShape) {
    const auto rep = commutator_suite(make_poly_corpus(4, 3), {1}, 2);
    nlohmann::ordered_json j = rep;
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"identity_id", "params", "corpus_size", "cases", "failures"}));
    EXPECT_TRUE(j["failures"].empty());
    EXPECT_EQ(make_poly_corpus(4, 3)[2], make_poly_corpus(4, 3)[2]);
}
