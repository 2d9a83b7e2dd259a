#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eqc.hpp"

namespace polyquant {

enum class SchemeKind { full_cycle_refresh, alternating_immediate, conjugate_symmetrized, custom_sequence };

inline const char* scheme_name(SchemeKind k) {
    switch (k) {
        case SchemeKind::full_cycle_refresh: return "full-cycle-refresh";
        case SchemeKind::alternating_immediate: return "alternating-immediate";
        case SchemeKind::conjugate_symmetrized: return "conjugate-symmetrized";
        case SchemeKind::custom_sequence: return "custom-sequence";
    }
    return "?";
}

inline SchemeKind parse_scheme(const std::string& s) {
    for (auto k : {SchemeKind::full_cycle_refresh, SchemeKind::alternating_immediate, SchemeKind::conjugate_symmetrized,
                   SchemeKind::custom_sequence})
        if (s == scheme_name(k)) return k;
    if (s == "naive") return SchemeKind::full_cycle_refresh;
    throw std::invalid_argument("unknown scheme '" + s + "'");
}

struct SchemeConfig {
    SchemeKind kind = SchemeKind::alternating_immediate;
    std::vector<int> sequence;  // custom schedule of ell values
    int k_max = 48;
    double tol_fixed = 1e-9;  // on max |delta E| / max(1, |E|) per sweep
    int max_sweeps = 200;
    bool enforce_conjugation = false;
    int continuation_steps = -1;  // -1: chosen from the coefficient scale
    int tail_factor = 4;
    NewtonOptions newton{};
};

struct ConvergenceReport {
    std::vector<double> deltas;
    double contraction_ratio = 0;
    bool converged = false;
    int sweeps_used = 0;
    std::vector<std::pair<int, int>> stuck_levels;  // (ell, m) of the last sweep
    std::string stop_reason;
    int continuation_steps = 0;
};

// geometric mean of the last (up to five) successive delta ratios
inline double contraction_ratio(const std::vector<double>& d) {
    if (d.size() < 3) return 0;
    const std::size_t n = std::min<std::size_t>(5, d.size() - 1);
    const double a = d[d.size() - 1 - n], b = d.back();
    if (a <= 0 || b <= 0) return 0;
    return std::pow(b / a, 1.0 / static_cast<double>(n));
}

namespace detail {

inline void check_config(const SchemeConfig& cfg, int L) {
    if (cfg.k_max < 4) throw contract_error("k_max must be >= 4");
    for (int l : cfg.sequence)
        if (l < 0 || l >= L) throw contract_error("sequence entries must lie in [0, L)");
    if (cfg.kind == SchemeKind::custom_sequence && cfg.sequence.empty()) throw contract_error("custom scheme needs a sequence");
}

inline bool mirrors(const ChainSystem& s, const SchemeConfig& cfg) {
    return s.conjugation_valid() && (cfg.kind == SchemeKind::conjugate_symmetrized || cfg.enforce_conjugation);
}

inline std::vector<int> schedule(const ChainSystem& s, const SchemeConfig& cfg) {
    std::vector<int> seq;
    switch (cfg.kind) {
        case SchemeKind::custom_sequence: return cfg.sequence;
        case SchemeKind::conjugate_symmetrized:
            for (int l = 0; l <= s.L() / 2; ++l) seq.push_back(l);
            return seq;
        default:
            if (!cfg.sequence.empty()) return cfg.sequence;
            if (mirrors(s, cfg)) {
                for (int l = 0; l <= s.L() / 2; ++l) seq.push_back(l);
                return seq;
            }
            for (int l = 0; l < s.L(); ++l) seq.push_back(l);
            return seq;
    }
}

inline void mirror_level(ChainSystem& s, int ell, int m) {
    const int p = s.partner(ell);
    if (p == mod(ell, s.L())) {
        s.chain(ell).set_level(m, s.chain(ell).level(m).real());
    } else {
        s.chain(p).set_level(m, std::conj(s.chain(ell).level(m)));
    }
}

inline void mirror_all(ChainSystem& s) {
    for (int l = 0; l <= s.L() / 2; ++l)
        for (int m = 0; m <= s.k_max(); ++m) mirror_level(s, l, m);
}

}  // namespace detail

// Every chain seeded with semiclassical levels of its rotated tail. L may be raised to
// N + 2 for potentials whose own orbit is shorter (continuation from a homogeneous start).
inline ChainSystem initialize_chains(const Potential& V, Parity parity, const SchemeConfig& cfg, const BSExpansion& tail,
                                     int L = 0) {
    ChainSystem s;
    s.base = V;
    s.parity = parity;
    s.sym = symmetry(V);
    if (L > 0) {
        if (L != s.sym.L && L != V.degree() + 2) throw contract_error("orbit length must be L or N + 2");
        s.sym.L = L;
    }
    detail::check_config(cfg, s.L());
    s.enforce_conjugation = detail::mirrors(s, cfg);
    for (int l = 0; l < s.L(); ++l) {
        s.orbit.push_back(rotate(V, l));
        const auto t = tail.rotated(l);
        std::vector<cplx> lev;
        for (int m = 0; m <= cfg.k_max; ++m) lev.push_back(semiclassical_level(t, parity, m));
        s.chains.emplace_back(l, parity, std::move(lev), t, cfg.tail_factor);
    }
    if (V.is_real()) detail::mirror_all(s);
    commit_branches(s);
    return s;
}

// Same levels, new potential and tails (continuation step).
inline ChainSystem retarget(const ChainSystem& old, const Potential& V, const BSExpansion& tail, const SchemeConfig& cfg) {
    ChainSystem s;
    s.base = V;
    s.parity = old.parity;
    s.sym = symmetry(V);
    if (s.L() != old.L()) {
        if (old.L() != V.degree() + 2) throw contract_error("continuation changed the symmetry order");
        s.sym.L = old.L();
    }
    s.enforce_conjugation = detail::mirrors(s, cfg);
    for (int l = 0; l < s.L(); ++l) {
        s.orbit.push_back(rotate(V, l));
        s.chains.emplace_back(l, s.parity, old.chain(l).levels(), tail.rotated(l), cfg.tail_factor);
    }
    s.branches = old.branches;
    return s;
}

struct SweepResult {
    double delta = 0;
    std::vector<std::pair<int, int>> stuck;
};

// One pass over the schedule, ascending m within each chain.
inline SweepResult sweep(ChainSystem& s, const SchemeConfig& cfg) {
    SweepResult r;
    const bool jacobi = cfg.kind == SchemeKind::full_cycle_refresh;
    const bool mirror = detail::mirrors(s, cfg);
    const ChainSystem snapshot = jacobi ? s : ChainSystem{};
    const ChainSystem& src = jacobi ? snapshot : s;
    for (int ell : detail::schedule(s, cfg)) {
        for (int m = 0; m <= s.k_max(); ++m) {
            const NewtonResult nr = newton_update_level(src, ell, m, cfg.newton);
            if (!nr.converged) r.stuck.emplace_back(ell, m);
            const cplx old = s.chain(ell).level(m);
            const cplx E = std::isfinite(std::abs(nr.value)) ? nr.value : old;
            r.delta = std::max(r.delta, std::abs(E - old) / std::max(1.0, std::abs(E)));
            s.chain(ell).set_level(m, E);
            if (mirror) detail::mirror_level(s, ell, m);
            if (!jacobi) commit_branches(s);
        }
    }
    if (jacobi) commit_branches(s);
    return r;
}

// Sweeps until the relative sup change drops below tol, diverges or runs out.
inline ConvergenceReport iterate_to_fixed_point(ChainSystem& s, const SchemeConfig& cfg, double tol, int max_sweeps) {
    ConvergenceReport rep;
    for (int it = 0; it < max_sweeps; ++it) {
        const SweepResult sr = sweep(s, cfg);
        rep.deltas.push_back(sr.delta);
        rep.stuck_levels = sr.stuck;
        rep.sweeps_used = it + 1;
        if (!std::isfinite(sr.delta)) {
            rep.stop_reason = "non-finite update";
            break;
        }
        if (sr.delta < tol) {
            rep.converged = true;
            rep.stop_reason = "tolerance reached";
            break;
        }
        const auto& d = rep.deltas;
        if (d.size() > 1 && sr.delta > 1e3 * d.front()) {
            rep.stop_reason = "diverging: delta grew by 1e3";
            break;
        }
        if (d.size() >= 6) {
            bool rising = true;
            for (std::size_t i = d.size() - 5; i < d.size(); ++i) rising = rising && d[i] > d[i - 1];
            if (rising) {
                rep.stop_reason = "diverging: delta rose for 5 sweeps";
                break;
            }
        }
    }
    if (!rep.converged && rep.stop_reason.empty()) rep.stop_reason = "sweep limit reached";
    rep.contraction_ratio = contraction_ratio(rep.deltas);
    return rep;
}

inline int default_continuation_steps(const Potential& V) {
    if (V.is_homogeneous()) return 0;
    return static_cast<int>(std::ceil(V.coefficient_scale() / 0.5));
}

struct SolveResult {
    ChainSystem system;
    ConvergenceReport report;
};

// Fixed-point solve of the quantization conditions for one parity sector. Seeds come
// from the homogeneous problem and follow v_j -> t^j v_j (which keeps Z(0) = 0) with
// closed-form tails; the last stage uses the supplied tail.
inline SolveResult solve_spectrum(const Potential& V, Parity parity, const SchemeConfig& cfg, const BSExpansion& tail) {
    const int steps = cfg.continuation_steps >= 0 ? cfg.continuation_steps : default_continuation_steps(V);
    const int N = V.degree();
    SolveResult out;
    if (steps == 0) {
        out.system = initialize_chains(V, parity, cfg, tail);
    } else {
        const Potential V0 = scale_potential(V, 0.0);
        out.system = initialize_chains(V0, parity, cfg, BSExpansion(N, classical_bs_coefficients(V0, N + 2)), symmetry_order(V));
        for (int i = 0; i < steps; ++i) {
            if (i > 0) {
                const Potential Vt = scale_potential(V, static_cast<double>(i) / steps);
                out.system = retarget(out.system, Vt, BSExpansion(N, classical_bs_coefficients(Vt, N + 2)), cfg);
            }
            const auto rep = iterate_to_fixed_point(out.system, cfg, std::max(cfg.tol_fixed, 1e-7), cfg.max_sweeps);
            if (!rep.converged) {
                out.report = rep;
                out.report.continuation_steps = i;
                out.report.stop_reason = "continuation stage " + std::to_string(i) + ": " + rep.stop_reason;
                return out;
            }
        }
        out.system = retarget(out.system, V, tail, cfg);
    }
    out.report = iterate_to_fixed_point(out.system, cfg, cfg.tol_fixed, cfg.max_sweeps);
    out.report.continuation_steps = steps;
    return out;
}

// Continue iterating from levels supplied by the caller (e.g. a saved chain file).
inline SolveResult resume_spectrum(ChainSystem s, const SchemeConfig& cfg) {
    if (detail::mirrors(s, cfg)) detail::mirror_all(s);
    s.branches.clear();
    commit_branches(s);
    SolveResult out;
    out.report = iterate_to_fixed_point(s, cfg, cfg.tol_fixed, cfg.max_sweeps);
    out.system = std::move(s);
    return out;
}

struct LinearizedDynamics {
    Eigen::MatrixXd jacobian;
    std::vector<cplx> eigenvalues;  // descending modulus
    double spectral_radius = 0;
};

// Jacobian of the sweep map at a fixed point, by forward differences over the real
// and imaginary parts of all explicit levels that the scheme treats as free.
inline LinearizedDynamics linearized_dynamics(const ChainSystem& fixed, const SchemeConfig& cfg) {
    struct Coord {
        int ell, m;
        bool imag;
    };
    std::vector<Coord> coords;
    const bool mirror = detail::mirrors(fixed, cfg);
    for (int l = 0; l < fixed.L(); ++l) {
        if (mirror && l > fixed.L() / 2) continue;
        const bool real_only = mirror && fixed.partner(l) == l;
        for (int m = 0; m <= fixed.k_max(); ++m) {
            coords.push_back({l, m, false});
            if (!real_only) coords.push_back({l, m, true});
        }
    }
    auto read = [&](const ChainSystem& s) {
        Eigen::VectorXd x(static_cast<Eigen::Index>(coords.size()));
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const cplx E = s.chain(coords[i].ell).level(coords[i].m);
            x(static_cast<Eigen::Index>(i)) = coords[i].imag ? E.imag() : E.real();
        }
        return x;
    };
    auto map = [&](ChainSystem s) {
        sweep(s, cfg);
        return read(s);
    };
    const Eigen::VectorXd g0 = map(fixed);
    const auto n = static_cast<Eigen::Index>(coords.size());
    LinearizedDynamics out;
    out.jacobian.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Coord& c = coords[static_cast<std::size_t>(i)];
        ChainSystem s = fixed;
        const cplx E = s.chain(c.ell).level(c.m);
        const double h = 1e-7 * std::max(1.0, std::abs(E));
        s.chain(c.ell).set_level(c.m, E + (c.imag ? cplx(0, h) : cplx(h, 0)));
        if (mirror) detail::mirror_level(s, c.ell, c.m);
        out.jacobian.col(i) = (map(std::move(s)) - g0) / h;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(out.jacobian, false);
    for (Eigen::Index i = 0; i < n; ++i) out.eigenvalues.push_back(es.eigenvalues()(i));
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), [](cplx a, cplx b) { return std::abs(a) > std::abs(b); });
    out.spectral_radius = out.eigenvalues.empty() ? 0.0 : std::abs(out.eigenvalues.front());
    return out;
}

// Neumann determinant of chain 0 from the Dirichlet chains alone: the bilinear
// identity on every rotated pair gives D+_l(x) = alpha_l(x) D+_{l+1}(e^{-i phi} x) + beta_l(x);
// going once around the orbit returns to D+_0(x), so D+_0 = B / (1 - A).
inline cplx even_determinant_via_dw(const ChainSystem& odd, cplx lambda) {
    if (odd.parity != Parity::dirichlet) throw contract_error("even_determinant_via_dw needs the Dirichlet system");
    const double phi = odd.sym.phi;
    const cplx I(0, 1), rot = std::polar(1.0, -phi);
    cplx A = 1.0, B = 0.0, x = lambda;
    const int L = odd.L();
    // closing the loop needs e^{-i L phi} = 1
    if (std::abs(std::polar(1.0, -L * phi) - 1.0) > 1e-12) throw contract_error("orbit does not close");
    for (int l = 0; l < L; ++l) {
        const cplx dm_l = odd.chain(l).log_det(x);
        const cplx dm_next = odd.chain(l + 1).log_det(rot * x);
        const cplx alpha = std::exp(I * phi / 2.0 + dm_l - dm_next);
        const cplx beta = -2.0 * I * std::exp(I * phi / 4.0 - dm_next);
        B += A * beta;
        A *= alpha;
        x *= rot;
    }
    return B / (1.0 - A);
}

// Zeros of the DW-derived Neumann determinant near the guesses, as levels E = -lambda.
inline std::vector<cplx> even_levels_via_dw(const ChainSystem& odd, const std::vector<cplx>& guesses) {
    std::vector<cplx> out;
    for (cplx g : guesses) {
        cplx x0 = -g, x1 = -g * (1.0 + 1e-4) - 1e-6;
        cplx f0 = even_determinant_via_dw(odd, x0), f1 = even_determinant_via_dw(odd, x1);
        for (int it = 0; it < 60 && f1 != f0; ++it) {
            const cplx step = -f1 * (x1 - x0) / (f1 - f0);
            x0 = x1;
            f0 = f1;
            x1 += step;
            f1 = even_determinant_via_dw(odd, x1);
            if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(x1))) break;
        }
        out.push_back(odd.base.is_real() ? cplx(-x1.real(), 0.0) : -x1);
    }
    return out;
}

}  // namespace polyquant
