#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "iterate.hpp"
#include "oracle.hpp"

namespace polyquant {

struct WavefunctionOptions {
    SchemeConfig scheme = default_scheme();
    int bs_terms = 13;
    int fit_levels = 70;  // oracle levels behind the tail fit; 0 keeps the closed-form terms only
    bool with_derivative = true;  // also solve the Neumann sector for psi'(a)
    OracleConfig oracle{};

    static SchemeConfig default_scheme() {
        SchemeConfig c;
        c.kind = SchemeKind::custom_sequence;
        c.k_max = 16;
        c.enforce_conjugation = true;
        return c;
    }
};

struct WavefunctionPoint {
    double a = 0;
    cplx psi{NAN, NAN};   // NaN when the Dirichlet solve did not converge
    cplx dpsi{NAN, NAN};  // NaN when not requested or not converged
    bool converged = false;
    bool derivative_converged = false;
    double contraction = 0;  // of the Dirichlet solve that produces psi
    double derivative_contraction = 0;
    int sweeps = 0;
    int L = 0;
    std::string note;
};

// Sweep order over the independent chains; the conjugate partners are mirrored.
inline std::vector<int> wavefunction_sequence(int L) {
    if (L == 6) return {0, 2, 3, 1};
    std::vector<int> seq;
    for (int l = 0; l <= L / 2; ++l) seq.push_back(l);
    return seq;
}

// Counting law for one sector: closed-form terms, plus fitted ones from fit_levels oracle levels.
inline BSExpansion sector_tail(const Potential& V, Parity p, int bs_terms, int fit_levels, const OracleConfig& cfg = {}) {
    const int exact = V.degree() + 2;
    if (fit_levels <= 0 || bs_terms <= exact) return bs_coefficients(V, p, std::min(bs_terms, exact));
    const auto lev = oracle_spectrum(V, p, fit_levels, cfg);
    return bs_coefficients(V, p, bs_terms, std::span<const cplx>(lev));
}

// psi(a) = D-(V(a) + lambda) and psi'(a) = -D+(V(a) + lambda) for the shifted potential
// V_a(q) = V(q + a) - V(a) on the half-line, both determinants from quantization-condition
// solves of V_a. Points whose solve fails are flagged, never filled in.
inline std::vector<WavefunctionPoint> wavefunction_by_eqc(const Potential& V, cplx lambda, const std::vector<double>& a_points,
                                                          const WavefunctionOptions& opt = {}) {
    std::vector<WavefunctionPoint> out;
    for (double a : a_points) {
        WavefunctionPoint pt;
        pt.a = a;
        const Potential Va = shift_potential(V, a);
        check_admissible(Va);
        pt.L = symmetry_order(Va);
        SchemeConfig cfg = opt.scheme;
        if (cfg.kind == SchemeKind::custom_sequence) {
            bool fits = !cfg.sequence.empty();
            for (int l : cfg.sequence) fits = fits && l < pt.L;
            if (!fits) cfg.sequence = wavefunction_sequence(pt.L);
        }
        const cplx x = V(cplx(a)) + lambda;
        for (Parity p : {Parity::dirichlet, Parity::neumann}) {
            if (p == Parity::neumann && !opt.with_derivative) break;
            const auto tail = sector_tail(Va, p, opt.bs_terms, opt.fit_levels, opt.oracle);
            const auto r = solve_spectrum(Va, p, cfg, tail);
            const bool ok = r.report.converged;
            if (p == Parity::dirichlet) {
                pt.converged = ok;
                pt.contraction = r.report.contraction_ratio;
                pt.sweeps = r.report.sweeps_used;
                if (ok) pt.psi = r.system.chain(0).det(x);
                else pt.note = r.report.stop_reason;
            } else {
                pt.derivative_converged = ok;
                pt.derivative_contraction = r.report.contraction_ratio;
                if (ok) pt.dpsi = -r.system.chain(0).det(x);
            }
        }
        out.push_back(pt);
    }
    return out;
}

}  // namespace polyquant
