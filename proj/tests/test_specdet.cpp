#include <gtest/gtest.h>

#include <polyquant/validate.hpp>

using namespace polyquant;

namespace {

class QuarticChains : public ::testing::Test {
protected:
    static void SetUpTestSuite() { chains_ = new OracleChains(oracle_chains(Potential(4, {}), 80, 13)); }
    static void TearDownTestSuite() {
        delete chains_;
        chains_ = nullptr;
    }
    static const OracleChains& c() { return *chains_; }
    static inline OracleChains* chains_ = nullptr;
};

}  // namespace

TEST(SpectrumChain, Contracts) {
    const auto tail = bs_coefficients(Potential(4, {}), Parity::neumann, 6);
    EXPECT_THROW(SpectrumChain(0, Parity::neumann, {}, tail), contract_error);
    EXPECT_THROW(SpectrumChain(0, Parity::neumann, {1.0}, tail, 1), contract_error);
}

TEST_F(QuarticChains, RotatedChainOfHomogeneousPotential) {
    // v^[1] = v, so the rotation acts through lambda alone
    EXPECT_EQ(c().plus1.levels(), c().plus0.levels());
    EXPECT_EQ(c().minus1.levels(), c().minus0.levels());
}

TEST_F(QuarticChains, DeterminantVanishesLinearlyAtLevels) {
    const cplx E1 = c().minus0.level(1);
    const cplx a = c().minus0.det(-E1 + 1e-5) / 1e-5;
    const cplx b = c().minus0.det(-E1 + 1e-7) / 1e-7;
    EXPECT_LT(std::abs(a / b - 1.0), 1e-4);
    EXPECT_LT(std::abs(c().minus0.det(-E1 + 1e-9)), 1e-8 * std::abs(a));
    EXPECT_THROW(c().minus0.log_det(-E1), pole_error);
}

TEST_F(QuarticChains, OddDeterminantAtZeroIsPsiAtZero) {
    const auto [psi, dpsi] = natural_psi_at_zero(c().V, 0.0);
    EXPECT_LT(std::abs(c().minus0.det(0.0) / psi - 1.0), 1e-6);
    EXPECT_LT(std::abs(c().plus0.det(0.0) / (-dpsi) - 1.0), 1e-6);
}

TEST_F(QuarticChains, BilinearIdentity) {
    for (cplx l : {cplx(0.3), cplx(1.0), cplx(2, 1), cplx(0)})
        EXPECT_LT(std::abs(wronskian_residual(4, c().plus0, c().minus0, c().plus1, c().minus1, l)), 1e-6) << l;
}

TEST_F(QuarticChains, BilinearIdentityDetectsPerturbedLevel) {
    SpectrumChain bad = c().minus0;
    bad.set_level(0, bad.level(0) * 1.01);
    const double before = std::abs(wronskian_residual(4, c().plus0, c().minus0, c().plus1, c().minus1, 1.0));
    const double after = std::abs(wronskian_residual(4, c().plus0, bad, c().plus1, c().minus1, 1.0));
    EXPECT_GT(after, before + 1e-3);
}

TEST_F(QuarticChains, IndependentOfExplicitLevelCount) {
    const auto r = check_k_independence(c(), default_lambda_grid());
    EXPECT_TRUE(r.pass) << r.value << " " << r.detail;
}

TEST_F(QuarticChains, IndependentOfClosurePoint) {
    const auto& ch = c().plus0;
    const SpectrumChain wide(0, ch.parity(), ch.levels(), ch.tail(), 8);
    for (cplx l : default_lambda_grid()) EXPECT_LT(std::abs(wide.log_det(l) - ch.log_det(l)), 1e-9) << l;
}

TEST_F(QuarticChains, LogDerivativeMatchesDifferences) {
    const auto& ch = c().minus0;
    const double h = 1e-5;
    for (cplx l : {cplx(0.5), cplx(1, 2)}) {
        const cplx fd = (ch.log_det(l + h) - ch.log_det(l - h)) / (2 * h);
        EXPECT_LT(std::abs(ch.log_det_derivative(l) - fd), 1e-7 * std::max(1.0, std::abs(fd))) << l;
    }
}

TEST_F(QuarticChains, ConjugationSymmetry) {
    for (cplx l : {cplx(0.5, 0.7), cplx(-0.3, 2)}) EXPECT_LT(std::abs(c().plus0.log_det(std::conj(l)) - std::conj(c().plus0.log_det(l))), 1e-11);
}
