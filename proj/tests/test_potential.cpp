#include <gtest/gtest.h>

#include <polyquant/potential.hpp>

using namespace polyquant;

namespace {

void expect_near(cplx a, cplx b, double tol) { EXPECT_LE(std::abs(a - b), tol) << a << " vs " << b; }

}  // namespace

TEST(Potential, Evaluate) {
    expect_near(Potential(4, {})(0.0), 0.0, 0);
    expect_near(Potential(4, {0, 1, 0})(2.0), 20.0, 1e-14);
    expect_near(Potential(4, {-1, 0, 0})(1.0), 0.0, 1e-14);
    // missing trailing coefficients are zero
    EXPECT_EQ(Potential(4, {0, 1}), Potential(4, {0, 1, 0}));
}

TEST(Potential, Derivative) {
    const Potential V(4, {0, 1, 0});
    expect_near(V.derivative(2.0), 4.0 * 8 + 2 * 2, 1e-13);
    expect_near(V.derivative(2.0, 2), 12.0 * 4 + 2, 1e-13);
    expect_near(V.derivative(2.0, 5), 0.0, 0);
}

TEST(Potential, RejectsBadDegree) {
    EXPECT_THROW(Potential(2, {}), contract_error);
    EXPECT_THROW(Potential(0, {}), contract_error);
    EXPECT_THROW(Potential(4, {1, 2, 3, 4}), contract_error);
}

TEST(Potential, SymmetryData) {
    EXPECT_DOUBLE_EQ(growth_order(4), 0.75);
    EXPECT_DOUBLE_EQ(symmetry_angle(4), 4 * pi / 6);
    EXPECT_EQ(symmetry_order(Potential(4, {0, 3.0, 0})), 3);
    EXPECT_EQ(symmetry_order(shift_potential(Potential(4, {}), 0.7)), 6);
    EXPECT_EQ(symmetry_order(Potential(3, {})), 5);
}

TEST(Potential, RotateQuartic) {
    const std::vector<cplx> v{0, 2.5, 0};
    const auto r = rotate_coefficients(v, 4, 1);
    expect_near(r[0], 0.0, 0);
    expect_near(r[1], std::exp(cplx(0, 2 * pi / 3)) * 2.5, 1e-14);
    expect_near(r[2], 0.0, 0);
}

TEST(Potential, RotationIdentities) {
    const std::vector<cplx> v{0.3, cplx(-1, 0.5), 2.0};
    EXPECT_EQ(rotate_coefficients(v, 4, 0), v);
    const auto full = rotate_coefficients(v, 4, 6);
    for (std::size_t j = 0; j < v.size(); ++j) expect_near(full[j], v[j], 1e-14);
    // composition
    const auto twice = rotate_coefficients(rotate_coefficients(v, 4, 1), 4, 2);
    const auto three = rotate_coefficients(v, 4, 3);
    for (std::size_t j = 0; j < v.size(); ++j) expect_near(twice[j], three[j], 1e-13);
}

TEST(Potential, ZZeroGate) {
    for (double v2 : {-5.0, 0.0, 3.0}) expect_near(z_zero_quartic(std::vector<cplx>{0, v2, 0}), 0.0, 0);
    expect_near(z_zero_quartic(std::vector<cplx>{-1, 0, 0.125}), 0.0, 0);
    expect_near(z_zero_quartic(std::vector<cplx>{1, 0, 0}), -1.0 / 32, 1e-15);
}

TEST(Potential, ShiftedQuarticKeepsZZero) {
    for (double a : {0.25, 1.0, 1.7})
        for (double v2 : {0.0, -2.0, 1.0}) {
            const auto Va = shift_potential(Potential(4, {0, v2, 0}), a);
            EXPECT_LT(std::abs(z_zero_quartic(Va)), 1e-12) << a << " " << v2;
        }
}

TEST(Potential, ShiftMatchesExpansion) {
    const double a = 0.6;
    const auto Va = shift_potential(Potential(4, {}), a);
    expect_near(Va.coefficient(1), 4 * a, 1e-14);
    expect_near(Va.coefficient(2), 6 * a * a, 1e-14);
    expect_near(Va.coefficient(3), 4 * a * a * a, 1e-14);
    EXPECT_EQ(shift_potential(Potential(4, {0, 1, 0}), 0), Potential(4, {0, 1, 0}));
}

TEST(Potential, ShiftGroupLaw) {
    const Potential V(4, {-1, 0.5, 0.125});
    const auto ab = shift_potential(shift_potential(V, 0.3), 0.45);
    const auto direct = shift_potential(V, 0.75);
    for (int j = 1; j < 4; ++j) expect_near(ab.coefficient(j), direct.coefficient(j), 1e-13);
    // V_a(q) = V(q + a) - V(a)
    for (double q : {0.0, 0.4, 2.0}) expect_near(direct(q), V(q + 0.75) - V(0.75), 1e-12);
}

TEST(Potential, Admissibility) {
    EXPECT_NO_THROW(check_admissible(Potential(4, {0, -5, 0})));
    EXPECT_NO_THROW(check_admissible(Potential(4, {-1, 0, 0.125})));
    EXPECT_THROW(check_admissible(Potential(4, {1, 0, 0})), admissibility_error);
    // the override covers degrees where Z(0) cannot be checked, not a known nonzero Z(0)
    EXPECT_THROW(check_admissible(Potential(4, {1, 0, 0}), true), admissibility_error);
    EXPECT_THROW(check_admissible(Potential(6, {1, 0, 0, 0, 0})), admissibility_error);
    EXPECT_NO_THROW(check_admissible(Potential(6, {1, 0, 0, 0, 0}), true));
}
