#include <gtest/gtest.h>

#include <polyquant/iterate.hpp>
#include <polyquant/oracle.hpp>

using namespace polyquant;

namespace {

constexpr double E0 = 1.06036209048;

SchemeConfig config(int k_max, SchemeKind kind = SchemeKind::alternating_immediate) {
    SchemeConfig c;
    c.k_max = k_max;
    c.kind = kind;
    return c;
}

}  // namespace

TEST(Schemes, ParseNames) {
    EXPECT_EQ(parse_scheme("alternating-immediate"), SchemeKind::alternating_immediate);
    EXPECT_EQ(parse_scheme("full-cycle-refresh"), SchemeKind::full_cycle_refresh);
    EXPECT_EQ(parse_scheme("naive"), SchemeKind::full_cycle_refresh);
    EXPECT_EQ(parse_scheme("conjugate-symmetrized"), SchemeKind::conjugate_symmetrized);
    EXPECT_EQ(parse_scheme("custom-sequence"), SchemeKind::custom_sequence);
    EXPECT_THROW(parse_scheme("gauss"), std::invalid_argument);
    for (auto k : {SchemeKind::alternating_immediate, SchemeKind::custom_sequence}) EXPECT_EQ(parse_scheme(scheme_name(k)), k);
}

TEST(Schemes, ContractionRatioOfGeometricDeltas) {
    std::vector<double> d;
    for (int i = 0; i < 10; ++i) d.push_back(std::pow(0.3, i));
    EXPECT_NEAR(contraction_ratio(d), 0.3, 1e-12);
    EXPECT_EQ(contraction_ratio({1.0, 0.5}), 0.0);
}

TEST(Schemes, ConfigContracts) {
    const Potential V(4, {});
    const auto tail = bs_coefficients(V, Parity::neumann, 6);
    auto c = config(3);
    EXPECT_THROW(initialize_chains(V, Parity::neumann, c, tail), contract_error);
    c = config(8, SchemeKind::custom_sequence);
    EXPECT_THROW(initialize_chains(V, Parity::neumann, c, tail), contract_error);
    c.sequence = {0, 3};
    EXPECT_THROW(initialize_chains(V, Parity::neumann, c, tail), contract_error);
    EXPECT_THROW(initialize_chains(V, Parity::neumann, config(8), tail, 4), contract_error);
}

TEST(InitializeChains, SeedsNearOracle) {
    const Potential V(4, {});
    const auto s = initialize_chains(V, Parity::neumann, config(16), bs_coefficients(V, Parity::neumann, 1));
    const auto ref = oracle_spectrum(V, Parity::neumann, 6);
    EXPECT_LT(std::abs(s.chain(0).level(0) - ref[0]) / ref[0].real(), 0.25);
    EXPECT_LT(std::abs(s.chain(0).level(5) - ref[5]) / ref[5].real(), 0.01);  // k = 10
}

TEST(InitializeChains, HomogeneousSeedsAreRotations) {
    const Potential V(3, {});
    const auto s = initialize_chains(V, Parity::dirichlet, config(8), bs_coefficients(V, Parity::dirichlet, 1));
    ASSERT_EQ(s.L(), 5);
    for (int l = 1; l < s.L(); ++l) {
        const cplx phase = s.chain(l).level(0) / s.chain(0).level(0);
        EXPECT_NEAR(std::abs(phase), 1.0, 1e-13);
        for (int m = 1; m <= 8; ++m) EXPECT_LT(std::abs(s.chain(l).level(m) - phase * s.chain(0).level(m)), 1e-12 * std::abs(s.chain(0).level(m)));
    }
}

TEST(InitializeChains, EvenQuarticPartnersConjugate) {
    const Potential V(4, {0, 1.5, 0});
    const auto s = initialize_chains(V, Parity::neumann, config(10), bs_coefficients(V, Parity::neumann, 6));
    ASSERT_EQ(s.L(), 3);
    for (int m = 0; m <= 10; ++m) {
        EXPECT_EQ(s.chain(2).level(m), std::conj(s.chain(1).level(m)));
        EXPECT_EQ(s.chain(0).level(m).imag(), 0.0);
    }
}

TEST(SolveSpectrum, QuarticGroundState) {
    const Potential V(4, {});
    // at k_max 16 the closed-form tail alone is off by a few 1e-6; the fitted tail is not
    const auto lev = oracle_spectrum(V, Parity::neumann, 80);
    const auto r = solve_spectrum(V, Parity::neumann, config(16), bs_coefficients(V, Parity::neumann, 13, std::span<const cplx>(lev)));
    ASSERT_TRUE(r.report.converged) << r.report.stop_reason;
    EXPECT_NEAR(r.system.chain(0).level(0).real(), E0, 1e-6);
    EXPECT_GT(r.report.contraction_ratio, 0.0);
    EXPECT_LE(r.report.contraction_ratio, 0.5);
    // deltas decay
    EXPECT_LT(r.report.deltas.back(), 1e-9);
}

TEST(SolveSpectrum, Deterministic) {
    const Potential V(4, {0, -1.0, 0});
    const auto tail = bs_coefficients(V, Parity::dirichlet, 6);
    const auto a = solve_spectrum(V, Parity::dirichlet, config(8), tail);
    const auto b = solve_spectrum(V, Parity::dirichlet, config(8), tail);
    ASSERT_EQ(a.report.sweeps_used, b.report.sweeps_used);
    for (int l = 0; l < a.system.L(); ++l) EXPECT_EQ(a.system.chain(l).levels(), b.system.chain(l).levels());
}

TEST(SolveSpectrum, ResumeFromFixedPoint) {
    const Potential V(4, {0, 1.0, 0});
    const auto tail = bs_coefficients(V, Parity::neumann, 6);
    const auto a = solve_spectrum(V, Parity::neumann, config(10), tail);
    ASSERT_TRUE(a.report.converged);
    const auto b = resume_spectrum(a.system, config(10));
    EXPECT_TRUE(b.report.converged);
    EXPECT_LE(b.report.sweeps_used, 3);
    EXPECT_LT(std::abs(b.system.chain(0).level(0) - a.system.chain(0).level(0)), 1e-8);
}

TEST(SolveSpectrum, ConjugateSymmetrizedKeepsRealLevels) {
    const Potential V(4, {0, 1.0, 0});
    const auto r = solve_spectrum(V, Parity::dirichlet, config(10, SchemeKind::conjugate_symmetrized), bs_coefficients(V, Parity::dirichlet, 6));
    ASSERT_TRUE(r.report.converged);
    for (int m = 0; m <= 10; ++m) {
        EXPECT_EQ(r.system.chain(0).level(m).imag(), 0.0);
        EXPECT_EQ(r.system.chain(2).level(m), std::conj(r.system.chain(1).level(m)));
    }
}

TEST(LinearizedDynamics, MatchesObservedRatio) {
    const Potential V(4, {});
    const auto cfg = config(12);
    const auto r = solve_spectrum(V, Parity::neumann, cfg, bs_coefficients(V, Parity::neumann, 6));
    ASSERT_TRUE(r.report.converged);
    const auto ld = linearized_dynamics(r.system, cfg);
    EXPECT_LE(ld.spectral_radius, 0.5);
    EXPECT_NEAR(ld.spectral_radius, r.report.contraction_ratio, 0.15);
    ASSERT_FALSE(ld.eigenvalues.empty());
    EXPECT_NEAR(std::abs(ld.eigenvalues.front()), ld.spectral_radius, 1e-12);
}

TEST(EvenLevelsViaDW, MatchDirectEvenSolve) {
    const Potential V(4, {0, 1.0, 0});
    const auto odd = solve_spectrum(V, Parity::dirichlet, config(48), bs_coefficients(V, Parity::dirichlet, 6));
    ASSERT_TRUE(odd.report.converged);
    const auto ref = oracle_spectrum(V, Parity::neumann, 4);
    std::vector<cplx> guesses;
    for (const auto& E : ref) guesses.push_back(E * 1.01);
    const auto got = even_levels_via_dw(odd.system, guesses);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_LT(std::abs(got[i] - ref[i]) / std::abs(ref[i]), 1e-6) << i;
}

TEST(EvenLevelsViaDW, NeedsDirichletSystem) {
    const Potential V(4, {});
    const auto s = initialize_chains(V, Parity::neumann, config(8), bs_coefficients(V, Parity::neumann, 6));
    EXPECT_THROW(even_determinant_via_dw(s, 1.0), contract_error);
}
