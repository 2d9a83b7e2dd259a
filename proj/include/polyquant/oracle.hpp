#pragma once

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "potential.hpp"
#include "semiclassics.hpp"

namespace polyquant {

struct OracleConfig {
    enum class Mode { raw, natural };
    double q_infinity = 0;  // start of the inward integration, 0 = automatic
    double rtol = 1e-12;
    double atol = 1e-14;
    Mode mode = Mode::natural;
};

// (psi, dpsi) * exp(log_factor); keeps values representable deep in forbidden regions
struct ScaledValue {
    cplx psi;
    cplx dpsi;
    cplx log_factor;

    cplx value() const { return psi * std::exp(log_factor); }
    cplx derivative() const { return dpsi * std::exp(log_factor); }
};

struct RecessiveData {
    std::vector<ScaledValue> values;  // one per requested point, same order
    int sign_changes = 0;             // of Re psi between q_start and the smallest point
    double q_start = 0;
    double q_far = 0;
};

namespace detail {

using State4 = std::array<double, 4>;

struct QEval {
    cplx Q, dQ, d2Q;
};

inline QEval eval_q(const Potential& V, cplx lambda, double q) {
    const auto c = V.polynomial();
    cplx f{}, d{}, d2{};
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
        d2 = d2 * q + 2.0 * d;
        d = d * q + f;
        f = f * q + *it;
    }
    return {f + lambda, d, d2};
}

// Taylor coefficients of V + lambda about q0, padded to length K
inline std::vector<cplx> taylor_q(const Potential& V, cplx lambda, double q0, int K) {
    auto c = V.polynomial();
    c[0] += lambda;
    const int n = static_cast<int>(c.size()) - 1;
    std::vector<cplx> t(static_cast<std::size_t>(K), cplx{});
    for (int k = 0; k <= n; ++k) {
        cplx r{};
        for (int i = n; i >= k; --i) {
            r = r * q0 + c[static_cast<std::size_t>(i)];
            c[static_cast<std::size_t>(i)] = r;
        }
        if (k < K) t[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k)];
    }
    return t;
}

using Jet = std::vector<cplx>;

inline Jet jet_mul(const Jet& a, const Jet& b, std::size_t n) {
    Jet c(n, cplx{});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k <= i; ++k) c[i] += a[k] * b[i - k];
    return c;
}

inline Jet jet_div(const Jet& a, const Jet& b, std::size_t n) {
    Jet c(n, cplx{});
    for (std::size_t i = 0; i < n; ++i) {
        cplx s = a[i];
        for (std::size_t k = 1; k <= i; ++k) s -= b[k] * c[i - k];
        c[i] = s / b[0];
    }
    return c;
}

inline Jet jet_sqrt(const Jet& a, std::size_t n) {
    Jet s(n, cplx{});
    s[0] = std::sqrt(a[0]);
    for (std::size_t i = 1; i < n; ++i) {
        cplx t = a[i];
        for (std::size_t k = 1; k < i; ++k) t -= s[k] * s[i - k];
        s[i] = t / (2.0 * s[0]);
    }
    return s;
}

inline Jet jet_deriv(const Jet& a) {
    Jet d(a.size() > 1 ? a.size() - 1 : 1, cplx{});
    for (std::size_t i = 1; i < a.size(); ++i) d[i - 1] = a[i] * static_cast<double>(i);
    return d;
}

struct AsymptoticZeta {
    cplx zeta;
    bool converged;
};

// zeta = y + Pi + Q'/(4Q) from the WKB series of the log-derivative y, y' + y^2 = Q,
// summed to optimal truncation.
inline AsymptoticZeta wkb_zeta(const Potential& V, cplx lambda, double q, int nmax = 24) {
    const std::size_t K = static_cast<std::size_t>(nmax + 2);
    const Jet Q = taylor_q(V, lambda, q, static_cast<int>(K));
    const Jet ym1 = [&] {
        Jet s = jet_sqrt(Q, K);
        for (auto& x : s) x = -x;
        return s;
    }();
    Jet y0 = jet_div(jet_deriv(Q), Q, K - 1);
    for (auto& x : y0) x *= -0.25;
    std::vector<Jet> y{y0};
    cplx sum{};
    double prev = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= nmax; ++n) {
        const std::size_t len = K - 1 - static_cast<std::size_t>(n);
        Jet num = jet_deriv(y.back());
        num.resize(len);
        for (int a = 0; a <= n - 1; ++a) {
            const Jet pr = jet_mul(y[static_cast<std::size_t>(a)], y[static_cast<std::size_t>(n - 1 - a)], len);
            for (std::size_t i = 0; i < len; ++i) num[i] += pr[i];
        }
        Jet den(ym1.begin(), ym1.begin() + static_cast<long>(len));
        for (auto& x : den) x *= -2.0;
        Jet yn = jet_div(num, den, len);
        const double mag = std::abs(yn[0]);
        if (n > 2 && mag > prev) return {sum, false};
        sum += yn[0];
        if (mag <= 1e-17 * std::abs(sum) || mag == 0.0) return {sum, true};
        prev = mag;
        y.push_back(std::move(yn));
    }
    return {sum, false};
}

inline cplx pi_of(const QEval& e) { return std::sqrt(e.Q); }

struct Geometry {
    double q_start;  // the action series converges beyond this point
    double q_far;    // WKB start of the Riccati integration
};

inline Geometry choose_geometry(const Potential& V, cplx lambda, double q_infinity, double q_min_start) {
    Geometry g{};
    g.q_start = std::max(action_cut(V, lambda), q_min_start);
    if (q_infinity > 0) {
        g.q_far = std::max(q_infinity, g.q_start);
        return g;
    }
    g.q_far = g.q_start;
    for (int i = 0; i < 60 && !wkb_zeta(V, lambda, g.q_far).converged; ++i) g.q_far *= 1.15;
    return g;
}

template <class System>
inline void integrate_segment(System sys, State4& x, double a, double b, double rtol, double atol,
                              const std::function<void(const State4&, double)>& obs = {}) {
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled<ode::runge_kutta_dopri5<State4>>(atol, rtol);
    const double dt = (b - a) * 1e-3;
    if (obs)
        ode::integrate_adaptive(stepper, sys, x, a, b, dt, [&](const State4& s, double t) { obs(s, t); });
    else
        ode::integrate_adaptive(stepper, sys, x, a, b, dt);
}

// Core inward integration. points are arbitrary non-negative positions.
inline RecessiveData integrate_recessive(const Potential& V, cplx lambda, const std::vector<double>& points,
                                         const OracleConfig& cfg, const Geometry* fixed = nullptr) {
    for (double q : points)
        if (q < 0) throw contract_error("recessive_solution needs q >= 0");
    const double qmax = points.empty() ? 0.0 : *std::max_element(points.begin(), points.end());
    const Geometry g = fixed ? Geometry{std::max(fixed->q_start, qmax), std::max(fixed->q_far, qmax)}
                             : choose_geometry(V, lambda, cfg.q_infinity, qmax);
    RecessiveData out;
    out.q_start = g.q_start;
    out.q_far = g.q_far;

    // Riccati variable from q_far down to q_start, with its running integral
    auto riccati = [&](const State4& s, State4& d, double q) {
        const QEval e = eval_q(V, lambda, q);
        const cplx Pi = pi_of(e);
        const cplx P = e.dQ / (4.0 * e.Q);
        const cplx dP = e.d2Q / (4.0 * e.Q) - e.dQ * e.dQ / (4.0 * e.Q * e.Q);
        const cplx z(s[0], s[1]);
        const cplx dz = dP - (z - P) * (z - P) + 2.0 * Pi * z;
        d = {dz.real(), dz.imag(), z.real(), z.imag()};
    };
    const cplx z_far = wkb_zeta(V, lambda, g.q_far).zeta;
    State4 rs{z_far.real(), z_far.imag(), 0, 0};
    if (g.q_far > g.q_start) integrate_segment(riccati, rs, g.q_far, g.q_start, cfg.rtol, cfg.atol);
    const cplx z_start(rs[0], rs[1]);
    const cplx int_zeta_between(-rs[2], -rs[3]);  // int_{q_start}^{q_far} zeta

    const QEval es = eval_q(V, lambda, g.q_start);
    const cplx Pi_s = pi_of(es);
    cplx log_start;
    if (cfg.mode == OracleConfig::Mode::natural) {
        auto f = [&](double t) {
            const double q = g.q_far / t;
            return wkb_zeta(V, lambda, q).zeta * (g.q_far / (t * t));
        };
        double err = 0;
        const cplx int_far = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, 1.0, 12, 1e-13, &err);
        log_start = -0.5 * std::log(Pi_s) - (int_zeta_between + int_far) + regularized_tail_action(V, lambda, g.q_start);
    } else {
        cplx int_pi{};
        if (g.q_far > g.q_start) {
            double err = 0;
            int_pi = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
                [&](double q) { return std::sqrt(V(q) + lambda); }, g.q_start, g.q_far, 12, 1e-14, &err);
        }
        log_start = -0.5 * std::log(Pi_s) - int_zeta_between + int_pi;
    }
    const cplx y_start = z_start - es.dQ / (4.0 * es.Q) - Pi_s;

    // linear equation psi'' = (V + lambda) psi, rescaled segment by segment
    auto linear = [&](const State4& s, State4& d, double q) {
        const cplx Q = V(q) + lambda;
        const cplx p(s[0], s[1]), dp(s[2], s[3]);
        const cplx dd = Q * p;
        d = {dp.real(), dp.imag(), dd.real(), dd.imag()};
    };
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a] > points[b]; });
    out.values.resize(points.size());

    State4 x{1, 0, y_start.real(), y_start.imag()};
    cplx log_factor = log_start;
    double q = g.q_start;
    double last_sign = 1.0;
    auto count = [&](const State4& st) {
        if (st[0] == 0.0) return;
        const double sg = st[0] > 0 ? 1.0 : -1.0;
        if (sg != last_sign) ++out.sign_changes;
        last_sign = sg;
    };
    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled<ode::runge_kutta_fehlberg78<State4>>(1e-300, cfg.rtol);
    double dt = -std::min(0.05, 1.0 / std::max(1.0, std::abs(Pi_s)));
    for (std::size_t idx : order) {
        const double target = points[idx];
        while (q > target) {
            // in the oscillatory region, at most about a third of the node spacing so sign changes are not skipped
            const cplx w = V(cplx(q)) + lambda;
            const double node_cap = w.real() < 0 ? -1.0 / std::sqrt(std::abs(w) + 1.0) : dt;
            double h = std::max({dt, target - q, node_cap});
            const bool clipped = h != dt;
            if (stepper.try_step(linear, x, q, h) == ode::success) {
                if (!clipped) dt = h;
                count(x);
                const double s = std::max(std::hypot(x[0], x[1]), std::hypot(x[2], x[3]));
                if (s > 1e100 || (s < 1e-100 && s > 0)) {
                    for (auto& c : x) c /= s;
                    log_factor += std::log(s);
                }
            } else {
                dt = h;
            }
            if (q - target < 1e-14 * std::max(1.0, target)) q = target;
        }
        out.values[idx] = {cplx(x[0], x[1]), cplx(x[2], x[3]), log_factor};
    }
    return out;
}

}  // namespace detail

// Recessive solution at the given points. Natural mode uses the q0 = +inf WKB
// normalization; raw mode fixes psi(q_far) = Pi(q_far)^{-1/2} at the start point.
inline std::vector<ScaledValue> recessive_solution_scaled(const Potential& V, cplx lambda, const std::vector<double>& q_points,
                                                          const OracleConfig& cfg = {}) {
    return detail::integrate_recessive(V, lambda, q_points, cfg).values;
}

inline std::vector<std::pair<cplx, cplx>> recessive_solution(const Potential& V, cplx lambda, const std::vector<double>& q_points,
                                                             const OracleConfig& cfg = {}) {
    std::vector<std::pair<cplx, cplx>> r;
    for (const auto& s : recessive_solution_scaled(V, lambda, q_points, cfg)) r.emplace_back(s.value(), s.derivative());
    return r;
}

// psi_lambda(0) = D^-(lambda) and psi'_lambda(0) = -D^+(lambda)
inline std::pair<cplx, cplx> natural_psi_at_zero(const Potential& V, cplx lambda, OracleConfig cfg = {}) {
    cfg.mode = OracleConfig::Mode::natural;
    const auto s = recessive_solution_scaled(V, lambda, {0.0}, cfg).front();
    const cplx p = s.value(), d = s.derivative();
    if (!std::isfinite(std::abs(p)) || !std::isfinite(std::abs(d))) throw error("natural_psi_at_zero overflows; use the scaled form");
    return {p, d};
}

namespace detail {

// boundary quantity whose zeros in lambda are the sector eigenvalues, plus node data.
// f and g are the raw boundary values times exp(-ref), holomorphic in lambda.
struct Shot {
    cplx f;
    cplx g;
    int sign_changes;
    double log_magnitude;
};

inline Shot shoot(const Potential& V, Parity p, cplx lambda, const Geometry& geo, const OracleConfig& cfg, double ref = 0) {
    OracleConfig c = cfg;
    c.mode = OracleConfig::Mode::raw;
    const auto r = integrate_recessive(V, lambda, {0.0}, c, &geo);
    const auto& v = r.values.front();
    const cplx scale = std::exp(v.log_factor - ref);
    const cplx a = v.psi * scale, b = v.dpsi * scale;
    const double lm = v.log_factor.real();
    return p == Parity::dirichlet ? Shot{a, b, r.sign_changes, lm} : Shot{b, a, r.sign_changes, lm};
}

// Number of sector eigenvalues below E (real potential, real E).
inline int count_below(const Potential& V, Parity p, double E, const Geometry& geo, const OracleConfig& cfg) {
    const Shot s = shoot(V, p, -E, geo, cfg);
    if (p == Parity::dirichlet) return s.sign_changes;
    // Neumann: one more once psi'(0) has turned past zero, i.e. psi(0) psi'(0) > 0
    return s.sign_changes + ((s.f.real() * s.g.real() > 0) ? 1 : 0);
}

inline Geometry shooting_geometry(const Potential& V, double Emax, const OracleConfig& cfg) {
    return choose_geometry(V, -Emax * 1.5 - 4.0, cfg.q_infinity, 0.0);
}

}  // namespace detail

struct ShootOptions {
    int max_iterations = 60;
    double tol = 1e-14;
};

// Secant iteration on the sector boundary value as a function of lambda = -E.
inline cplx refine_level(const Potential& V, Parity p, cplx guess, const OracleConfig& cfg = {}, const ShootOptions& opt = {}) {
    const auto geo = detail::shooting_geometry(V, std::abs(guess), cfg);
    const bool real = V.is_real() && guess.imag() == 0.0;
    const int N = V.degree();
    const double mu = growth_order(N);
    // half the local level spacing of the sector
    const double cap = 0.5 * 4 * pi / (leading_bs_coefficient(N) * mu * std::pow(std::max(std::abs(guess), 1.0), mu - 1));
    cplx x0 = -guess, x1 = -guess * (1.0 + 1e-5) - 1e-7;
    const double ref = detail::shoot(V, p, x0, geo, cfg).log_magnitude;
    cplx f0 = detail::shoot(V, p, x0, geo, cfg, ref).f, f1 = detail::shoot(V, p, x1, geo, cfg, ref).f;
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (f1 == f0) break;
        cplx step = -f1 * (x1 - x0) / (f1 - f0);
        if (std::abs(step) > cap) step *= cap / std::abs(step);
        if (real) step = step.real();
        x0 = x1;
        f0 = f1;
        x1 += step;
        f1 = detail::shoot(V, p, x1, geo, cfg, ref).f;
        if (std::abs(step) <= opt.tol * std::max(1.0, std::abs(x1))) break;
    }
    return -x1;
}

// Eigenvalue with sector-local index m of a real potential, index fixed by Sturm counting.
inline double shoot_real_level(const Potential& V, Parity p, int m, double guess, const OracleConfig& cfg = {},
                               const ShootOptions& opt = {}) {
    if (!V.is_real()) throw contract_error("shoot_real_level needs a real potential");
    auto verified = [&](double E) {
        const double d = 1e-7 * std::max(1.0, std::abs(E));
        const auto geo = detail::shooting_geometry(V, std::abs(E) + d, cfg);
        return detail::count_below(V, p, E - d, geo, cfg) == m && detail::count_below(V, p, E + d, geo, cfg) == m + 1;
    };
    const double E = refine_level(V, p, guess, cfg, opt).real();
    if (std::isfinite(E) && verified(E)) return E;

    // bracket by counting, then bisect and polish
    double lo = std::min(guess, 0.0) - 1.0, hi = std::max(guess, 1.0);
    auto geo = detail::shooting_geometry(V, std::abs(hi), cfg);
    while (detail::count_below(V, p, hi, geo, cfg) <= m) {
        hi = 2 * hi + 1;
        geo = detail::shooting_geometry(V, std::abs(hi), cfg);
    }
    for (int i = 0; i < 200 && detail::count_below(V, p, lo, geo, cfg) > m; ++i) lo = 2 * lo - 1;
    for (int i = 0; i < 200 && hi - lo > 1e-6 * std::max(1.0, std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (detail::count_below(V, p, mid, geo, cfg) > m ? hi : lo) = mid;
    }
    const double polished = refine_level(V, p, 0.5 * (lo + hi), cfg, opt).real();
    if (polished >= lo - 1e-9 && polished <= hi + 1e-9 && verified(polished)) return polished;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (detail::count_below(V, p, mid, geo, cfg) > m ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

// Eigenvalue of sector index m. Real potentials are indexed by node counting; complex
// ones are tracked from the real part of the coefficients along a straight path.
inline cplx shoot_eigenvalue(const Potential& V, Parity p, int m, cplx guess, const OracleConfig& cfg = {}) {
    if (V.is_real()) return shoot_real_level(V, p, m, guess.real(), cfg);
    std::vector<cplx> re;
    for (auto v : V.coefficients()) re.push_back(v.real());
    const Potential V0(V.degree(), re);
    const auto start = bs_coefficients(V0, p, V0.degree() + 2);
    cplx E = shoot_real_level(V0, p, m, semiclassical_level(start, p, m).real(), cfg);
    const int steps = 8;
    for (int s = 1; s <= steps; ++s) {
        std::vector<cplx> v;
        for (auto c : V.coefficients()) v.push_back(cplx(c.real(), c.imag() * s / steps));
        E = refine_level(Potential(V.degree(), v), p, E, cfg);
    }
    return E;
}

// First count levels of one sector, ascending.
inline std::vector<cplx> oracle_spectrum(const Potential& V, Parity p, int count, const OracleConfig& cfg = {}) {
    std::vector<cplx> out;
    if (count <= 0) return out;
    const auto bs = bs_coefficients(V, p, V.degree() + 2);
    if (V.is_real()) {
        for (int m = 0; m < count; ++m) {
            double guess = 0;
            try {
                guess = semiclassical_level(bs, p, m).real();
            } catch (const tail_level_error&) {
                // deep double wells: low levels have no semiclassical root, counting brackets them
            }
            if (m == 1) guess = std::max(guess, out[0].real());
            if (m >= 2) guess = 2 * out[static_cast<std::size_t>(m - 1)].real() - out[static_cast<std::size_t>(m - 2)].real();
            out.emplace_back(shoot_real_level(V, p, m, guess, cfg));
        }
        return out;
    }
    for (int m = 0; m < count; ++m) out.push_back(shoot_eigenvalue(V, p, m, semiclassical_level(bs, p, m), cfg));
    return out;
}

// Levels of the rotated potential V^[ell] for a real V, continued from the real levels
// by turning the coefficient phases gradually. With a tail for the real sector, levels
// it already predicts to a small fraction of the spacing are refined directly from the
// rotated semiclassical value.
inline std::vector<cplx> oracle_spectrum_rotated(const Potential& V, int ell, Parity p, const std::vector<cplx>& real_levels,
                                                 const OracleConfig& cfg = {}, const BSExpansion* tail = nullptr, int steps = 8) {
    if (!V.is_real()) throw contract_error("oracle_spectrum_rotated needs a real base potential");
    const int N = V.degree();
    if (rotate(V, ell) == V) return real_levels;
    const Potential target = rotate(V, ell);
    std::vector<cplx> out(real_levels);
    std::vector<std::size_t> tracked;
    for (std::size_t m = 0; m < out.size(); ++m) {
        if (tail && m + 1 < out.size()) {
            try {
                const cplx sc = semiclassical_level(*tail, p, static_cast<int>(m));
                const double spacing = std::abs(real_levels[m + 1] - real_levels[m]);
                if (std::abs(sc - real_levels[m]) < 1e-4 * spacing) {
                    out[m] = refine_level(target, p, semiclassical_level(tail->rotated(ell), p, static_cast<int>(m)), cfg);
                    continue;
                }
            } catch (const tail_level_error&) {
                // no semiclassical root (double-well bottom): follow the homotopy instead
            }
        }
        tracked.push_back(m);
    }
    const double angle = ell * symmetry_angle(N) / 2;
    for (int s = 1; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        std::vector<cplx> v(V.coefficients());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= std::polar(1.0, static_cast<double>(i + 1) * angle * t);
        const Potential Vt(N, v);
        for (auto m : tracked) out[m] = refine_level(Vt, p, out[m], cfg);
    }
    return out;
}

// Independent check: cell-centred second-order differences on [0, box] with the
// parity condition at q = 0, Richardson-extrapolated over n, 2n, 4n cells.
inline std::vector<double> finite_difference_levels(const Potential& V, Parity p, int count, double box, int n) {
    if (!V.is_real()) throw contract_error("finite_difference_levels needs a real potential");
    auto solve = [&](int cells) {
        const double h = box / cells;
        Eigen::VectorXd diag(cells), off(cells - 1);
        for (int i = 0; i < cells; ++i) diag(i) = 2 / (h * h) + V((i + 0.5) * h).real();
        diag(0) += (p == Parity::neumann ? -1.0 : 1.0) / (h * h);
        off.setConstant(-1 / (h * h));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
        std::vector<double> e(es.eigenvalues().data(), es.eigenvalues().data() + count);
        return e;
    };
    const auto e1 = solve(n), e2 = solve(2 * n), e3 = solve(4 * n);
    std::vector<double> out(static_cast<std::size_t>(count));
    for (std::size_t k = 0; k < out.size(); ++k) {
        const double r12 = (4 * e2[k] - e1[k]) / 3, r23 = (4 * e3[k] - e2[k]) / 3;
        out[k] = (16 * r23 - r12) / 15;
    }
    return out;
}

}  // namespace polyquant
