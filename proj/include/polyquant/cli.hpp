#pragma once

#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "io.hpp"
#include "validate.hpp"
#include "wavefunction.hpp"

namespace polyquant::cli {

enum ExitCode : int { ok = 0, usage = 1, not_converged = 2, validation_failed = 3 };

// Command-line settings that are not part of the config file.
struct Flags {
    bool with_oracle = false;
    std::string seed_from;
};

namespace detail {

inline std::vector<Parity> parities(const std::string& s) {
    if (s == "even") return {Parity::neumann};
    if (s == "odd") return {Parity::dirichlet};
    return {Parity::neumann, Parity::dirichlet};
}

inline bool wants(const io::RunConfig& c, const char* fmt) {
    for (const auto& f : c.output.formats)
        if (f == fmt) return true;
    return false;
}

inline io::Metadata meta(const io::RunConfig& c, const char* command) { return {command, io::to_json(c), c.output.timestamp}; }

inline std::filesystem::path out_path(const io::RunConfig& c, const char* name) { return std::filesystem::path(c.output.directory) / name; }

inline SchemeConfig scheme_config(const io::SpectrumBlock& b) {
    SchemeConfig cfg;
    cfg.kind = parse_scheme(b.scheme);
    cfg.sequence = b.sequence;
    cfg.enforce_conjugation = b.enforce_conjugation;
    cfg.k_max = b.k_max;
    cfg.tol_fixed = b.tol;
    cfg.max_sweeps = b.max_sweeps;
    cfg.continuation_steps = b.continuation_steps;
    return cfg;
}

inline io::json level_json(cplx E) { return io::json::array({E.real(), E.imag()}); }

// Initial system with the levels of a chain file wherever it has them.
inline ChainSystem seeded_system(const Potential& V, Parity p, const SchemeConfig& cfg, const BSExpansion& tail,
                                 const std::vector<io::ChainRow>& rows) {
    int L = 0;
    for (const auto& r : rows)
        if (r.parity == p) L = std::max(L, r.ell + 1);
    ChainSystem s = initialize_chains(V, p, cfg, tail, L == V.degree() + 2 ? L : 0);
    if (L != 0 && L != s.L()) throw io::config_error("chain file has " + std::to_string(L) + " chains, the potential needs " + std::to_string(s.L()));
    for (int l = 0; l < s.L(); ++l) {
        const auto lev = io::chain_levels(rows, l, p);
        for (int m = 0; m < static_cast<int>(lev.size()) && m <= s.k_max(); ++m) s.chain(l).set_level(m, lev[static_cast<std::size_t>(m)]);
    }
    return s;
}

// Even levels of the real sector from the odd chains, seeded between the odd levels.
inline std::vector<cplx> even_levels_from_odd(const ChainSystem& odd) {
    const auto& lev = odd.chain(0).levels();
    std::vector<cplx> guesses;
    for (std::size_t m = 0; m + 1 < lev.size(); ++m)
        guesses.push_back(m == 0 ? lev[0] - 0.5 * (lev[1] - lev[0]) : 0.5 * (lev[m - 1] + lev[m]));
    return even_levels_via_dw(odd, guesses);
}

}  // namespace detail

inline int cmd_spectrum(const io::RunConfig& c, const Flags& f, std::ostream& log) {
    check_admissible(c.potential, c.allow_unverified);
    const auto& b = c.spectrum;
    const SchemeConfig cfg = detail::scheme_config(b);
    auto ps = detail::parities(b.parity);
    if (b.via_dw && std::find(ps.begin(), ps.end(), Parity::dirichlet) == ps.end()) ps.push_back(Parity::dirichlet);
    std::vector<io::ChainRow> rows;
    if (!f.seed_from.empty()) rows = io::read_chain_csv(f.seed_from);

    io::json body = {{"sectors", io::json::array()}};
    std::vector<SolveResult> results;
    bool all_converged = true;
    for (Parity p : ps) {
        const auto tail = sector_tail(c.potential, p, b.bs_terms, b.fit_levels);
        SolveResult r = rows.empty() ? solve_spectrum(c.potential, p, cfg, tail)
                                     : resume_spectrum(detail::seeded_system(c.potential, p, cfg, tail, rows), cfg);
        all_converged = all_converged && r.report.converged;
        io::json levels = io::json::array();
        for (const auto& E : r.system.chain(0).levels()) levels.push_back(detail::level_json(E));
        body["sectors"].push_back({{"parity", parity_name(p)}, {"levels", levels}, {"report", io::report_json(r.report)}});
        log << parity_name(p) << ": " << (r.report.converged ? "converged" : "not converged") << " after " << r.report.sweeps_used
            << " sweeps (" << r.report.stop_reason << "), contraction " << std::setprecision(3) << r.report.contraction_ratio
            << ", lowest level " << std::setprecision(12) << r.system.chain(0).level(0).real() << "\n";
        results.push_back(std::move(r));
    }
    if (b.via_dw) {
        const auto it = std::find_if(results.begin(), results.end(), [](const SolveResult& r) { return r.system.parity == Parity::dirichlet; });
        io::json dw = io::json::array();
        for (const auto& E : detail::even_levels_from_odd(it->system)) dw.push_back(detail::level_json(E));
        body["even_levels_via_dw"] = dw;
        log << "even levels from the odd chains: " << dw.size() << "\n";
    }
    if (f.with_oracle) {
        auto out = io::open_output(detail::out_path(c, "comparison.csv"));
        io::write_csv_header(out, detail::meta(c, "spectrum"));
        out << "parity,k,re_eqc,im_eqc,re_oracle,im_oracle,rel_dev\n";
        double worst = 0;
        for (const auto& r : results) {
            const auto& lev = r.system.chain(0).levels();
            const auto ref = oracle_spectrum(c.potential, r.system.parity, static_cast<int>(lev.size()));
            for (std::size_t m = 0; m < lev.size(); ++m) {
                const double dev = std::abs(lev[m] - ref[m]) / std::abs(ref[m]);
                worst = std::max(worst, dev);
                out << parity_name(r.system.parity) << "," << global_index(r.system.parity, static_cast<int>(m)) << "," << io::num(lev[m].real())
                    << "," << io::num(lev[m].imag()) << "," << io::num(ref[m].real()) << "," << io::num(ref[m].imag()) << "," << io::num(dev) << "\n";
            }
        }
        body["oracle_max_rel_dev"] = worst;
        log << "max relative deviation from the oracle: " << std::setprecision(3) << worst << "\n";
    }
    if (detail::wants(c, "csv")) {
        std::vector<const ChainSystem*> sys;
        for (const auto& r : results) sys.push_back(&r.system);
        io::write_chain_csv(detail::out_path(c, "chains.csv"), sys, detail::meta(c, "spectrum"));
    }
    if (detail::wants(c, "json")) io::write_json(detail::out_path(c, "spectrum.json"), body, detail::meta(c, "spectrum"));
    return all_converged ? ok : not_converged;
}

inline int cmd_stability(const io::RunConfig& c, const Flags&, std::ostream& log) {
    const auto& b = c.stability;
    const int N = c.potential.degree();
    auto out = io::open_output(detail::out_path(c, "stability.csv"));
    io::write_csv_header(out, detail::meta(c, "stability"));
    out << "v2,parity,scheme,observed_ratio,spectral_radius,converged,sweeps\n";
    io::json rows = io::json::array();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (double v : b.v2_grid) {
        auto coeffs = c.potential.coefficients();
        coeffs[static_cast<std::size_t>(b.coefficient - 1)] = v;
        const Potential V(N, coeffs);
        try {
            check_admissible(V, c.allow_unverified);
        } catch (const admissibility_error& e) {
            log << "v = " << v << ": skipped, " << e.what() << "\n";
            continue;
        }
        for (Parity p : detail::parities(b.parity)) {
            const BSExpansion tail = bs_coefficients(V, p, N + 2);
            // linearize every scheme at one fixed point, found by the first scheme that converges
            std::optional<ChainSystem> fixed;
            std::vector<std::pair<std::string, SolveResult>> runs;
            for (const auto& name : b.schemes) {
                SchemeConfig cfg;
                cfg.kind = parse_scheme(name);
                cfg.k_max = b.k_max;
                cfg.max_sweeps = b.max_sweeps;
                SolveResult r;
                try {
                    r = solve_spectrum(V, p, cfg, tail);
                } catch (const error& e) {
                    r.report.stop_reason = e.what();
                }
                if (!fixed && r.report.converged) fixed = r.system;
                runs.emplace_back(name, std::move(r));
            }
            for (const auto& [name, r] : runs) {
                double rho = nan;
                if (b.linearize && fixed) {
                    SchemeConfig cfg;
                    cfg.kind = parse_scheme(name);
                    cfg.k_max = b.k_max;
                    try {
                        rho = linearized_dynamics(*fixed, cfg).spectral_radius;
                    } catch (const std::exception& e) {
                        log << "v = " << v << " " << name << ": linearization failed, " << e.what() << "\n";
                    }
                }
                const double ratio = r.report.converged && r.report.contraction_ratio > 0 ? r.report.contraction_ratio : nan;
                out << io::num(v) << "," << parity_name(p) << "," << name << "," << io::num(ratio) << "," << io::num(rho) << ","
                    << (r.report.converged ? 1 : 0) << "," << r.report.sweeps_used << "\n";
                rows.push_back({{"v2", v}, {"parity", parity_name(p)}, {"scheme", name}, {"observed_ratio", ratio}, {"spectral_radius", rho},
                                {"converged", r.report.converged}, {"sweeps", r.report.sweeps_used}, {"stop_reason", r.report.stop_reason}});
                log << "v = " << std::setw(5) << v << " " << parity_name(p) << " " << std::setw(22) << name << " ratio " << std::setprecision(3)
                    << ratio << " radius " << rho << (r.report.converged ? "" : "  (not converged)") << "\n";
            }
        }
    }
    if (detail::wants(c, "json")) io::write_json(detail::out_path(c, "stability.json"), {{"rows", rows}}, detail::meta(c, "stability"));
    return ok;
}

inline int cmd_wavefunction(const io::RunConfig& c, const Flags&, std::ostream& log) {
    const auto& b = c.wavefunction;
    if (b.a_grid.empty()) throw io::config_error("wavefunction.a_grid is empty");
    cplx lambda;
    if (b.lambda) {
        lambda = *b.lambda;
    } else {
        check_admissible(c.potential, c.allow_unverified);
        SchemeConfig cfg;
        const auto r = solve_spectrum(c.potential, Parity::neumann, cfg, bs_coefficients(c.potential, Parity::neumann, c.potential.degree() + 2));
        if (!r.report.converged) {
            log << "ground level did not converge: " << r.report.stop_reason << "\n";
            return not_converged;
        }
        lambda = -r.system.chain(0).level(0);
        log << "lambda = -E_0 = " << std::setprecision(12) << lambda.real() << "\n";
    }
    WavefunctionOptions opt;
    opt.scheme.kind = parse_scheme(b.scheme);
    opt.scheme.sequence = b.sequence;
    opt.scheme.k_max = b.k_max;
    opt.bs_terms = b.bs_terms;
    opt.fit_levels = b.fit_levels;
    opt.with_derivative = b.with_derivative;
    const auto pts = wavefunction_by_eqc(c.potential, lambda, b.a_grid, opt);
    const auto ref = recessive_solution(c.potential, lambda, b.a_grid);

    io::json points = io::json::array(), flagged = io::json::array();
    double worst = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto& p = pts[i];
        const double dev = std::abs(p.psi / ref[i].first - 1.0);
        io::json j = {{"a", p.a},
                      {"psi", detail::level_json(p.psi)},
                      {"psi_oracle", detail::level_json(ref[i].first)},
                      {"rel_dev", dev},
                      {"converged", p.converged},
                      {"contraction", p.contraction},
                      {"sweeps", p.sweeps},
                      {"L", p.L}};
        if (b.with_derivative) {
            j["dpsi"] = detail::level_json(p.dpsi);
            j["dpsi_oracle"] = detail::level_json(ref[i].second);
            j["dpsi_rel_dev"] = std::abs(p.dpsi / ref[i].second - 1.0);
            j["derivative_converged"] = p.derivative_converged;
            j["derivative_contraction"] = p.derivative_contraction;
        }
        if (p.converged) {
            worst = std::max(worst, dev);
        } else {
            j["note"] = p.note;
            flagged.push_back(p.a);
        }
        points.push_back(j);
        log << "a = " << std::setw(5) << p.a << "  psi = " << std::setprecision(10) << p.psi.real() << "  oracle " << ref[i].first.real()
            << "  rel dev " << std::setprecision(3) << dev << "  contraction " << p.contraction << (p.converged ? "" : "  FLAGGED") << "\n";
    }
    if (detail::wants(c, "csv")) {
        auto out = io::open_output(detail::out_path(c, "wavefunction.csv"));
        io::write_csv_header(out, detail::meta(c, "wavefunction"));
        out << "a,re_psi,im_psi,source\n";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out << io::num(pts[i].a) << "," << io::num(pts[i].psi.real()) << "," << io::num(pts[i].psi.imag()) << ",eqc\n";
            out << io::num(pts[i].a) << "," << io::num(ref[i].first.real()) << "," << io::num(ref[i].first.imag()) << ",oracle\n";
        }
    }
    const io::json body = {{"lambda", detail::level_json(lambda)}, {"points", points}, {"max_rel_dev", worst}, {"flagged", flagged}};
    if (detail::wants(c, "json")) io::write_json(detail::out_path(c, "wavefunction.json"), body, detail::meta(c, "wavefunction"));
    log << "max relative deviation (converged points): " << worst << ", flagged: " << flagged.size() << "\n";
    return flagged.empty() ? ok : not_converged;
}

inline int cmd_validate(const io::RunConfig& c, const Flags& f, std::ostream& log) {
    const auto& b = c.validate;
    OracleChains chains;
    if (f.seed_from.empty()) {
        chains = oracle_chains(c.potential, b.levels, b.bs_terms);
    } else {
        const auto rows = io::read_chain_csv(f.seed_from);
        // the levels are checked against the tail they were solved with; without a
        // recorded run the tail is fitted to oracle levels
        const auto run = io::read_chain_config(f.seed_from);
        chains.V = run ? run->potential : c.potential;
        if (run && !(run->potential == c.potential)) log << "note: using the potential recorded in " << f.seed_from << "\n";
        const int terms = run ? run->spectrum.bs_terms : b.bs_terms;
        const int fit = run ? run->spectrum.fit_levels : b.levels;
        SpectrumChain* slot[2][2] = {{&chains.plus0, &chains.plus1}, {&chains.minus0, &chains.minus1}};
        for (Parity p : {Parity::neumann, Parity::dirichlet}) {
            const auto lev0 = io::chain_levels(rows, 0, p);
            auto lev1 = io::chain_levels(rows, 1, p);
            if (lev0.size() < 2) throw io::config_error("chain file lacks chain 0 of the " + std::string(parity_name(p)) + " sector");
            if (lev1.empty() && rotate(chains.V, 1) == chains.V) lev1 = lev0;
            if (lev1.size() != lev0.size()) throw io::config_error("chain file lacks chain 1 of the " + std::string(parity_name(p)) + " sector");
            const auto tail = sector_tail(chains.V, p, terms, fit);
            const int i = p == Parity::neumann ? 0 : 1;
            *slot[i][0] = SpectrumChain(0, p, lev0, tail);
            *slot[i][1] = SpectrumChain(1, p, lev1, tail.rotated(1));
        }
    }
    const auto grid = b.lambda_grid.empty() ? default_lambda_grid() : b.lambda_grid;
    std::vector<CheckResult> res;
    for (const auto& name : b.checks) {
        if (name == "wronskian") res.push_back(check_wronskian(chains, grid));
        else if (name == "identity") res.push_back(check_identity(chains, grid));
        else if (name == "k_independence") res.push_back(check_k_independence(chains, grid));
        else if (name == "bs_fit") res.push_back(check_bs_fit(chains));
    }
    bool all = true;
    io::json checks = io::json::array();
    for (const auto& r : res) {
        all = all && r.pass;
        checks.push_back({{"name", r.name}, {"value", r.value}, {"threshold", r.threshold}, {"pass", r.pass}, {"detail", r.detail}});
        log << (r.pass ? "PASS " : "FAIL ") << std::setw(15) << std::left << r.name << std::right << std::setprecision(3) << r.value << " (< "
            << r.threshold << ")  " << r.detail << "\n";
    }
    if (detail::wants(c, "json")) io::write_json(detail::out_path(c, "validate.json"), {{"checks", checks}, {"pass", all}}, detail::meta(c, "validate"));
    return all ? ok : validation_failed;
}

}  // namespace polyquant::cli
