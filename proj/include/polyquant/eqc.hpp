#pragma once

#include <cmath>
#include <vector>

#include "potential.hpp"
#include "specdet.hpp"

namespace polyquant {

// All L rotation sectors of one parity. chains[ell] holds the levels E^[ell] of the
// rotated potential v^[ell] (not the rotated chain points e^{i ell phi} E^[ell]).
struct ChainSystem {
    Potential base;
    Parity parity = Parity::neumann;
    SymmetryData sym{};
    std::vector<Potential> orbit;
    std::vector<SpectrumChain> chains;
    bool enforce_conjugation = false;

    // Per condition (ell, m): the factors E_j + x over the explicit levels of both
    // neighbours at the last committed state, and the 2 pi i windings picked up so far.
    // Keeps log D continuous when a complex factor crosses the negative real axis.
    struct Branch {
        std::vector<cplx> ref;
        int winding = 0;
    };
    std::vector<Branch> branches;

    int L() const { return sym.L; }
    int k_max() const { return chains.empty() ? -1 : chains.front().k_max(); }
    int partner(int ell) const { return mod(L() - ell, L()); }
    bool conjugation_valid() const { return base.is_real(); }
    bool conjugate_pairs() const { return enforce_conjugation && conjugation_valid(); }
    SpectrumChain& chain(int ell) { return chains[static_cast<std::size_t>(mod(ell, L()))]; }
    const SpectrumChain& chain(int ell) const { return chains[static_cast<std::size_t>(mod(ell, L()))]; }
};

// pi i [k + 1/2 +- (N-2)/(2(N+2))] for global quantum number k, + on the Neumann side
inline cplx rhs_phase(int N, Parity p, int k) {
    if (mod(k, 2) != parity_offset(p)) throw contract_error("quantum number parity does not match the sector");
    const double s = p == Parity::neumann ? 1.0 : -1.0;
    return {0.0, pi * (k + 0.5 + s * (N - 2.0) / (2.0 * (N + 2)))};
}

namespace detail {

// index of the neighbour whose level m is bound to conj(E) during the solve, or -1
inline int implicit_partner(const ChainSystem& s, int ell) {
    if (!s.conjugate_pairs()) return -1;
    const int p = s.partner(ell);
    if (p == mod(ell, s.L())) return -1;
    if (p == mod(ell + 1, s.L()) || p == mod(ell - 1, s.L())) return p;
    return -1;
}

// +1 when the segment a -> b crosses the negative real axis downwards, -1 upwards
inline int cut_crossing(cplx a, cplx b) {
    const bool ua = a.imag() >= 0, ub = b.imag() >= 0;
    if (ua == ub) return 0;
    const double t = a.imag() / (a.imag() - b.imag());
    if (a.real() + t * (b.real() - a.real()) >= 0) return 0;
    return ua ? 1 : -1;
}

inline void factor_points(const ChainSystem& s, int ell, cplx E, std::vector<cplx>& z) {
    const cplx up = -std::polar(1.0, -s.sym.phi) * E;
    const cplx dn = -std::polar(1.0, s.sym.phi) * E;
    z.clear();
    for (const cplx& Ej : s.chain(ell + 1).levels()) z.push_back(Ej + up);
    for (const cplx& Ej : s.chain(ell - 1).levels()) z.push_back(Ej + dn);
}

inline std::size_t branch_index(const ChainSystem& s, int ell, int m) {
    return static_cast<std::size_t>(mod(ell, s.L()) * (s.k_max() + 1) + m);
}

}  // namespace detail

// Net winding of condition (ell, m) at trial value E relative to the committed state.
inline int branch_winding(const ChainSystem& s, int ell, int m, cplx E) {
    const std::size_t idx = detail::branch_index(s, ell, m);
    if (idx >= s.branches.size() || s.branches[idx].ref.empty()) return 0;
    const auto& b = s.branches[idx];
    thread_local std::vector<cplx> z;
    detail::factor_points(s, ell, E, z);
    if (z.size() != b.ref.size()) return b.winding;
    const std::size_t half = z.size() / 2;
    int n = b.winding;
    for (std::size_t j = 0; j < z.size(); ++j) n += (j < half ? 1 : -1) * detail::cut_crossing(b.ref[j], z[j]);
    return n;
}

// Accept the current levels as the new reference for every condition.
inline void commit_branches(ChainSystem& s) {
    const std::size_t n = static_cast<std::size_t>(s.L() * (s.k_max() + 1));
    const bool fresh = s.branches.size() != n;
    if (fresh) s.branches.assign(n, {});
    for (int l = 0; l < s.L(); ++l)
        for (int m = 0; m <= s.k_max(); ++m) {
            auto& b = s.branches[detail::branch_index(s, l, m)];
            const cplx E = s.chain(l).level(m);
            if (!fresh) b.winding = branch_winding(s, l, m, E);
            detail::factor_points(s, l, E, b.ref);
        }
}

// log D(-e^{-i phi} E; chain ell+1) - log D(-e^{i phi} E; chain ell-1) - rhs
// for the sector-local index m, on the branch tracked from the committed state.
inline cplx eqc_residual(const ChainSystem& s, int ell, int m, cplx E) {
    const cplx up = -std::polar(1.0, -s.sym.phi) * E;
    const cplx dn = -std::polar(1.0, s.sym.phi) * E;
    const cplx winding(0.0, 2 * pi * branch_winding(s, ell, m, E));
    return s.chain(ell + 1).log_det(up) - s.chain(ell - 1).log_det(dn) + winding -
           rhs_phase(s.base.degree(), s.parity, global_index(s.parity, m));
}

inline cplx eqc_residual_derivative(const ChainSystem& s, int ell, int /*m*/, cplx E) {
    const cplx ru = std::polar(1.0, -s.sym.phi), rd = std::polar(1.0, s.sym.phi);
    return -ru * s.chain(ell + 1).log_det_derivative(-ru * E) + rd * s.chain(ell - 1).log_det_derivative(-rd * E);
}

struct NewtonOptions {
    double tol = 1e-10;      // residual level reported as converged
    int max_iterations = 20;
    int max_halvings = 9;
};

struct NewtonResult {
    cplx value;
    bool converged = false;
    int iterations = 0;
    double residual = 0;
};

// Damped Newton for one level, other levels frozen. When the conjugate partner enters
// the same equation its level m is tied to conj(E) and the update solves the resulting
// non-holomorphic equation through its Wirtinger derivatives.
inline NewtonResult newton_update_level(const ChainSystem& s, int ell, int m, const NewtonOptions& opt = {}) {
    ell = mod(ell, s.L());
    const SpectrumChain& self = s.chain(ell);
    const int pair = detail::implicit_partner(s, ell);
    const bool real_axis = s.conjugate_pairs() && s.partner(ell) == ell;
    const cplx ru = std::polar(1.0, -s.sym.phi), rd = std::polar(1.0, s.sym.phi);
    const bool pair_up = pair >= 0 && pair == mod(ell + 1, s.L());
    const cplx rot = pair_up ? -ru : -rd;  // lambda = rot * E inside the partner's determinant
    const double sign = pair_up ? 1.0 : -1.0;

    auto residual = [&](cplx E) {
        cplx r = eqc_residual(s, ell, m, E);
        if (pair >= 0) {
            const cplx old = s.chain(pair).level(m);
            r += sign * std::log((std::conj(E) + rot * E) / (old + rot * E));
        }
        return r;
    };

    // local spacing bounds the step
    const cplx lo = m > 0 ? self.level(m - 1) : self.level(m) - (self.level(m + 1) - self.level(m));
    const double spacing = 0.5 * std::abs(self.level(m + 1) - lo);
    const double cap = 0.5 * std::max(spacing, 1e-3 * std::max(1.0, std::abs(self.level(m))));

    NewtonResult out;
    cplx E = self.level(m);
    if (real_axis) E = E.real();
    cplx R;
    try {
        R = residual(E);
    } catch (const pole_error&) {
        out.value = E;
        out.residual = INFINITY;
        return out;
    }
    for (int it = 0; it < opt.max_iterations; ++it) {
        out.iterations = it;
        const cplx dR = eqc_residual_derivative(s, ell, m, E);
        cplx step;
        if (pair >= 0) {
            const cplx c = std::conj(E) + rot * E, o = s.chain(pair).level(m) + rot * E;
            const cplx RE = dR + sign * (rot / c - rot / o);
            const cplx RB = sign / c;
            step = (-R * std::conj(RE) + RB * std::conj(R)) / (std::norm(RE) - std::norm(RB));
        } else {
            step = -R / dR;
        }
        if (real_axis) step = step.real();
        if (!std::isfinite(std::abs(step))) break;
        if (std::abs(step) > cap) step *= cap / std::abs(step);
        bool accepted = false;
        cplx E1, R1;
        for (int hv = 0; hv <= opt.max_halvings; ++hv) {
            E1 = E + step;
            try {
                R1 = residual(E1);
                if (std::abs(R1) < std::abs(R) || std::abs(R1) < 1e-14) {
                    accepted = true;
                    break;
                }
            } catch (const pole_error&) {
            }
            step *= 0.5;
        }
        if (!accepted) break;
        const double moved = std::abs(E1 - E);
        E = E1;
        R = R1;
        out.iterations = it + 1;
        if (moved <= 1e-15 * std::max(1.0, std::abs(E)) || std::abs(R) < 1e-15) break;
    }
    out.value = E;
    out.residual = std::abs(R);
    out.converged = out.residual < opt.tol;
    return out;
}

}  // namespace polyquant
