#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "specdet.hpp"

namespace polyquant {

struct CheckResult {
    std::string name;
    double value = 0;      // worst case over the check
    double threshold = 0;  // pass iff value < threshold
    bool pass = false;
    std::string detail;
};

// Chains of both parities for V and for V^[1], all from oracle spectra.
struct OracleChains {
    Potential V;
    SpectrumChain plus0, minus0, plus1, minus1;
};

inline OracleChains oracle_chains(const Potential& V, int count = 80, int bs_terms = 13, const OracleConfig& cfg = {}) {
    OracleChains c;
    c.V = V;
    SpectrumChain* zero[] = {&c.plus0, &c.minus0};
    SpectrumChain* one[] = {&c.plus1, &c.minus1};
    int i = 0;
    for (Parity p : {Parity::neumann, Parity::dirichlet}) {
        const auto lev = oracle_spectrum(V, p, count, cfg);
        const auto tail = bs_coefficients(V, p, bs_terms, std::span<const cplx>(lev));
        *zero[i] = SpectrumChain(0, p, lev, tail);
        *one[i] = SpectrumChain(1, p, oracle_spectrum_rotated(V, 1, p, lev, cfg, &tail), tail.rotated(1));
        ++i;
    }
    return c;
}

// Ten points around the origin, both half-planes, moduli up to 5.
inline std::vector<cplx> default_lambda_grid() {
    return {{0, 0}, {0.3, 0}, {1, 0}, {2, 1}, {-0.5, 0.2}, {3, 0}, {1, -2}, {0, 5}, {-2, 0.5}, {4, 0}};
}

namespace detail {

inline std::string lambda_text(cplx l) {
    std::ostringstream o;
    o << l.real() << (l.imag() < 0 ? "-" : "+") << std::abs(l.imag()) << "i";
    return o.str();
}

inline CheckResult finish(CheckResult r, double worst, cplx at) {
    r.value = worst;
    r.pass = std::isfinite(worst) && worst < r.threshold;
    r.detail = "worst at lambda = " + lambda_text(at);
    return r;
}

}  // namespace detail

// |bilinear identity residual| over the grid.
inline CheckResult check_wronskian(const OracleChains& c, const std::vector<cplx>& grid, double threshold = 1e-6) {
    double worst = 0;
    cplx at{};
    for (cplx l : grid) {
        double r = INFINITY;
        try {
            r = std::abs(wronskian_residual(c.V.degree(), c.plus0, c.minus0, c.plus1, c.minus1, l));
        } catch (const pole_error&) {
        }
        if (!(r <= worst)) worst = r, at = l;
    }
    return detail::finish({"wronskian", 0, threshold, false, {}}, worst, at);
}

// D-(lambda) = psi(0) and D+(lambda) = -psi'(0), relative deviation over the grid.
inline CheckResult check_identity(const OracleChains& c, const std::vector<cplx>& grid, double threshold = 1e-6,
                                  const OracleConfig& cfg = {}) {
    double worst = 0;
    cplx at{};
    for (cplx l : grid) {
        const auto [psi, dpsi] = natural_psi_at_zero(c.V, l, cfg);
        const double a = std::abs(c.minus0.det(l) / psi - 1.0);
        const double b = std::abs(c.plus0.det(l) / (-dpsi) - 1.0);
        const double r = std::max(a, b);
        if (!(r <= worst)) worst = r, at = l;
    }
    return detail::finish({"identity", 0, threshold, false, {}}, worst, at);
}

// log D with half of the explicit levels replaced by tail levels.
inline CheckResult check_k_independence(const OracleChains& c, const std::vector<cplx>& grid, double threshold = 1e-9) {
    double worst = 0;
    cplx at{};
    for (const SpectrumChain* ch : {&c.plus0, &c.minus0}) {
        const auto& lev = ch->levels();
        const SpectrumChain half(ch->ell(), ch->parity(), std::vector<cplx>(lev.begin(), lev.begin() + static_cast<long>(lev.size() / 2)),
                                 ch->tail());
        for (cplx l : grid) {
            const double r = std::abs(half.log_det(l) - ch->log_det(l));
            if (!(r <= worst)) worst = r, at = l;
        }
    }
    return detail::finish({"k_independence", 0, threshold, false, {}}, worst, at);
}

// Fit residual of the counting law on the real chains, in units of the counting function.
inline CheckResult check_bs_fit(const OracleChains& c, double threshold = 1e-6) {
    CheckResult r{"bs_fit", 0, threshold, false, {}};
    const int N = c.V.degree();
    double worst = 0;
    std::ostringstream d;
    for (const SpectrumChain* ch : {&c.plus0, &c.minus0}) {
        const auto& b = ch->tail().coefficients();
        const int exact = std::min<int>(static_cast<int>(b.size()), N + 2);
        std::vector<int> orders;
        for (int j = exact; j < static_cast<int>(b.size()); ++j)
            if (b[static_cast<std::size_t>(j)] != cplx{}) orders.push_back(j);
        const auto fit = fit_bs_terms(N, ch->parity(), std::span<const cplx>(ch->levels()),
                                      std::vector<cplx>(b.begin(), b.begin() + exact), orders);
        worst = std::max(worst, fit.max_residual);
        d << parity_name(ch->parity()) << " residual " << fit.max_residual << "; ";
    }
    r.value = worst;
    r.pass = worst < threshold;
    r.detail = d.str();
    return r;
}

}  // namespace polyquant
