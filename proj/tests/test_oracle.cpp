#include <gtest/gtest.h>

#include <polyquant/oracle.hpp>

using namespace polyquant;

namespace {

constexpr double E0 = 1.06036209048;

int sign_changes(const Potential& V, cplx E, double q_max) {
    std::vector<double> q;
    for (int i = 1; i <= 600; ++i) q.push_back(q_max * i / 600.0);
    const auto psi = recessive_solution(V, -E, q);
    int n = 0;
    for (std::size_t i = 1; i < psi.size(); ++i)
        if ((psi[i].first.real() > 0) != (psi[i - 1].first.real() > 0)) ++n;
    return n;
}

}  // namespace

TEST(Shooting, QuarticGroundState) {
    const Potential V(4, {});
    EXPECT_NEAR(shoot_eigenvalue(V, Parity::neumann, 0, 0.8671).real(), E0, 1e-9);
    EXPECT_NEAR(oracle_spectrum(V, Parity::neumann, 1)[0].real(), E0, 1e-9);
}

TEST(Shooting, NodeCountsOrderLevels) {
    const Potential V(4, {});
    const auto even = oracle_spectrum(V, Parity::neumann, 4);
    const auto odd = oracle_spectrum(V, Parity::dirichlet, 4);
    for (int m = 0; m < 4; ++m) {
        EXPECT_EQ(sign_changes(V, even[static_cast<std::size_t>(m)], 5.0), m) << m;
        EXPECT_EQ(sign_changes(V, odd[static_cast<std::size_t>(m)], 5.0), m) << m;
        EXPECT_LT(even[static_cast<std::size_t>(m)].real(), odd[static_cast<std::size_t>(m)].real());
    }
}

TEST(Shooting, AgreesWithFiniteDifferences) {
    const Potential V(4, {0, 1.0, 0});
    for (Parity p : {Parity::neumann, Parity::dirichlet}) {
        const auto fd = finite_difference_levels(V, p, 3, 7.0, 1000);
        const auto sh = oracle_spectrum(V, p, 3);
        for (int m = 0; m < 3; ++m) EXPECT_NEAR(sh[static_cast<std::size_t>(m)].real(), fd[static_cast<std::size_t>(m)], 1e-7) << parity_name(p) << m;
    }
}

TEST(Shooting, DoubleWellPairs) {
    const Potential V(4, {0, -5.0, 0});
    for (Parity p : {Parity::neumann, Parity::dirichlet}) {
        const auto fd = finite_difference_levels(V, p, 4, 7.0, 1000);
        const auto sh = oracle_spectrum(V, p, 4);
        for (int m = 0; m < 4; ++m) EXPECT_NEAR(sh[static_cast<std::size_t>(m)].real(), fd[static_cast<std::size_t>(m)], 1e-7) << parity_name(p) << m;
    }
}

TEST(Shooting, RotatedLevelsPairUnderConjugation) {
    const Potential V(4, {0, 1.0, 0});
    const auto lev = oracle_spectrum(V, Parity::dirichlet, 5);
    EXPECT_EQ(oracle_spectrum_rotated(Potential(4, {}), 1, Parity::dirichlet, lev), lev);
    const auto r1 = oracle_spectrum_rotated(V, 1, Parity::dirichlet, lev);
    const auto r2 = oracle_spectrum_rotated(V, 2, Parity::dirichlet, lev);
    for (int m = 0; m < 5; ++m) {
        const auto i = static_cast<std::size_t>(m);
        EXPECT_GT(std::abs(r1[i].imag()), 1e-3);
        EXPECT_LT(std::abs(r2[i] - std::conj(r1[i])), 1e-9 * std::abs(r1[i])) << m;
    }
}

TEST(NaturalPsi, IndependentOfStartingPoint) {
    const Potential V(4, {});
    std::vector<cplx> psi;
    for (double q : {6.0, 8.0, 10.0}) {
        OracleConfig c;
        c.q_infinity = q;
        psi.push_back(natural_psi_at_zero(V, 1.0, c).first);
    }
    EXPECT_LT(std::abs(psi[1] / psi[0] - 1.0), 1e-9);
    EXPECT_LT(std::abs(psi[2] / psi[0] - 1.0), 1e-9);
}

TEST(NaturalPsi, VanishesAtLevels) {
    const Potential V(4, {});
    const auto [p0, d0] = natural_psi_at_zero(V, -E0);
    EXPECT_LT(std::abs(d0), 1e-8 * std::abs(p0));
    const auto odd = oracle_spectrum(V, Parity::dirichlet, 2);
    const auto [p1, d1] = natural_psi_at_zero(V, -odd[1]);
    EXPECT_LT(std::abs(p1), 1e-9 * std::abs(d1));
}

TEST(NaturalPsi, Conjugation) {
    const Potential V(4, {0, -1.0, 0});
    const cplx l(0.7, 1.3);
    const auto a = natural_psi_at_zero(V, l), b = natural_psi_at_zero(V, std::conj(l));
    EXPECT_LT(std::abs(a.first - std::conj(b.first)), 1e-10 * std::abs(a.first));
    EXPECT_LT(std::abs(a.second - std::conj(b.second)), 1e-10 * std::abs(a.second));
}

TEST(RecessiveSolution, RawAndNaturalDifferByConstant) {
    const Potential V(4, {0, 1.0, 0});
    OracleConfig c;
    c.mode = OracleConfig::Mode::raw;
    const std::vector<double> q{0.0, 0.5, 1.0, 2.0};
    const auto raw = recessive_solution(V, 1.0, q, c);
    const auto nat = recessive_solution(V, 1.0, q);
    const cplx k = raw[0].first / nat[0].first;
    for (std::size_t i = 0; i < q.size(); ++i) {
        EXPECT_LT(std::abs(raw[i].first / nat[i].first / k - 1.0), 1e-9) << q[i];
        EXPECT_LT(std::abs(raw[i].second / nat[i].second / k - 1.0), 1e-9) << q[i];
    }
}

TEST(CountingLaw, ClosedFormTermsMissOnlyTheQuantumCorrection) {
    // for q^4 only the leading term survives in closed form; the missing hbar^2 term
    // leaves a relative error proportional to (k + 1/2)^-2
    const Potential V(4, {});
    const auto lev = oracle_spectrum(V, Parity::neumann, 40);
    const auto bs = bs_coefficients(V, Parity::neumann, 6);
    std::vector<double> scaled;
    for (int m = 15; m < 40; ++m) {
        const cplx E = semiclassical_level(bs, Parity::neumann, m);
        const double rel = std::abs(E - lev[static_cast<std::size_t>(m)]) / lev[static_cast<std::size_t>(m)].real();
        EXPECT_LT(rel, 5e-5) << m;
        scaled.push_back(rel * std::pow(2 * m + 0.5, 2));
    }
    for (double x : scaled) EXPECT_NEAR(x / scaled.back(), 1.0, 0.03);
}

TEST(CountingLaw, FittedConstantTermVanishes) {
    // Z(0) = 0 means the E^0 term of the counting law is zero for q^4
    const Potential V(4, {});
    const auto lev = oracle_spectrum(V, Parity::neumann, 80);
    const auto exact = classical_bs_coefficients(V, 3);
    const auto fit = fit_bs_terms(4, Parity::neumann, std::span<const cplx>(lev), exact, {3, 6, 7});
    EXPECT_LT(std::abs(fit.values[0]), 1e-6);
}

TEST(CountingLaw, ResidualsShrinkWithTerms) {
    const Potential V(4, {0, 1.0, 0});
    const auto lev = oracle_spectrum(V, Parity::dirichlet, 80);
    const auto exact = classical_bs_coefficients(V, 6);
    const auto few = fit_bs_terms(4, Parity::dirichlet, std::span<const cplx>(lev), exact, {6});
    const auto more = fit_bs_terms(4, Parity::dirichlet, std::span<const cplx>(lev), exact, {6, 8});
    EXPECT_LT(more.max_residual, few.max_residual);
}
