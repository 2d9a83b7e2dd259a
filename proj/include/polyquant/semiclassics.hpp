#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "potential.hpp"

namespace polyquant {

// b_mu = closed-path action over p^2 + q^N = 1
inline double leading_bs_coefficient(int N) {
    if (N < 1 || N == 2) throw contract_error("leading_bs_coefficient needs N >= 1, N != 2");
    return 2 * std::sqrt(pi) / N * std::tgamma(1.0 / N) / std::tgamma(1.5 + 1.0 / N);
}

// Per-sector level counting law  sum_j b_j E^{mu - j/N} ~ 2 pi (k + 1/2).
class BSExpansion {
public:
    BSExpansion() = default;
    BSExpansion(int N, std::vector<cplx> coefficients) : n_(N), b_(std::move(coefficients)) {
        if (b_.empty()) throw contract_error("BSExpansion needs at least one term");
    }

    int degree() const { return n_; }
    std::size_t size() const { return b_.size(); }
    double mu() const { return growth_order(n_); }
    double exponent(std::size_t j) const { return mu() - static_cast<double>(j) / n_; }
    cplx coefficient(std::size_t j) const { return j < b_.size() ? b_[j] : cplx{}; }
    const std::vector<cplx>& coefficients() const { return b_; }

    cplx counting(cplx E) const {
        cplx s{};
        for (std::size_t j = 0; j < b_.size(); ++j)
            if (b_[j] != cplx{}) s += b_[j] * std::pow(E, exponent(j));
        return s;
    }

    cplx counting_derivative(cplx E) const {
        cplx s{};
        for (std::size_t j = 0; j < b_.size(); ++j)
            if (b_[j] != cplx{}) s += b_[j] * exponent(j) * std::pow(E, exponent(j) - 1);
        return s;
    }

    // coefficients of the rotated potential v^[ell]: weight j picks up exp(i j ell phi/2)
    BSExpansion rotated(int ell) const {
        std::vector<cplx> b(b_);
        for (std::size_t j = 1; j < b.size(); ++j)
            if (b[j] != cplx{}) b[j] *= root_of_unity(static_cast<long long>(j) * ell, n_ + 2);
        return {n_, b};
    }

    BSExpansion truncated(std::size_t n) const {
        return {n_, std::vector<cplx>(b_.begin(), b_.begin() + static_cast<long>(std::min(n, b_.size())))};
    }

private:
    int n_ = 4;
    std::vector<cplx> b_{1.0};
};

namespace detail {

inline double rgamma(double x) {
    if (x <= 0 && x == std::floor(x)) return 0.0;
    return 1.0 / std::tgamma(x);
}

inline double binom_half(int n) {
    double r = 1;
    for (int i = 0; i < n; ++i) r *= (0.5 - i) / (i + 1);
    return r;
}

}  // namespace detail

// Closed-form classical coefficients, exact for j < N + 2 (hbar^2 enters at weight N+2).
// b_j = (4/N) sum_n binom(1/2,n) (-1)^n w_{n,j} B(n - (j-1)/N, 3/2 - n) with B taken as
// its finite part; w_{n,r} is the weight-r part of (sum_i v_i q^{N-i})^n.
inline std::vector<cplx> classical_bs_coefficients(const Potential& V, int n_terms) {
    const int N = V.degree();
    const int J = std::max(n_terms, 1);
    std::vector<std::vector<cplx>> w(static_cast<std::size_t>(J), std::vector<cplx>(static_cast<std::size_t>(J), cplx{}));
    w[0][0] = 1.0;
    for (int n = 1; n < J; ++n)
        for (int r = 0; r < J; ++r) {
            cplx s{};
            for (int i = 1; i < N && i <= r; ++i) s += V.coefficient(i) * w[n - 1][r - i];
            w[n][r] = s;
        }
    std::vector<cplx> b(static_cast<std::size_t>(J), cplx{});
    b[0] = leading_bs_coefficient(N);
    for (int j = 1; j < J; ++j) {
        cplx s{};
        for (int n = 1; n <= j && n < J; ++n) {
            if (w[n][j] == cplx{}) continue;
            const double a = n - (j - 1.0) / N;
            const double beta = std::tgamma(a) * std::tgamma(1.5 - n) * detail::rgamma(a + 1.5 - n);
            s += detail::binom_half(n) * (n % 2 ? -1.0 : 1.0) * w[n][j] * beta;
        }
        b[static_cast<std::size_t>(j)] = 4.0 / N * s;
    }
    return b;
}

// Weights allowed by the coefficient pattern: j is reachable as a sum of indices of
// nonzero v_i and of N + 2. Other coefficients vanish identically.
inline std::vector<bool> allowed_weights(const Potential& V, int n_terms) {
    const int N = V.degree();
    std::vector<bool> ok(static_cast<std::size_t>(std::max(n_terms, 1)), false);
    ok[0] = true;
    std::vector<int> gens{N + 2};
    for (int i = 1; i < N; ++i)
        if (V.coefficient(i) != cplx{}) gens.push_back(i);
    for (int j = 1; j < n_terms; ++j)
        for (int g : gens)
            if (g <= j && ok[static_cast<std::size_t>(j - g)]) ok[static_cast<std::size_t>(j)] = true;
    return ok;
}

struct BSFit {
    std::vector<int> orders;              // fitted j
    std::vector<cplx> values;
    std::vector<double> standard_errors;  // from the weighted residual variance
    double max_residual = 0;              // unweighted, in units of the counting function
};

// Weighted least squares of  2 pi (2m + p + 1/2) - sum_{j in fixed} b_j E^{a_j}
// against E^{a_j}, j in orders, over the levels with m >= m_min.
inline BSFit fit_bs_terms(int N, Parity parity, std::span<const cplx> levels, const std::vector<cplx>& fixed,
                          const std::vector<int>& orders, int m_min = 20) {
    const int n = static_cast<int>(levels.size()) - m_min;
    const int p = static_cast<int>(orders.size());
    if (p == 0) return {};
    if (n < 3 * p) throw fit_error("need at least " + std::to_string(3 * p) + " levels above m = " + std::to_string(m_min));
    const double mu = growth_order(N);
    const BSExpansion known(N, fixed.empty() ? std::vector<cplx>{0.0} : fixed);
    Eigen::MatrixXcd A(n, p);
    Eigen::VectorXcd y(n), wt(n);
    for (int r = 0; r < n; ++r) {
        const int m = m_min + r;
        const cplx E = levels[static_cast<std::size_t>(m)];
        const double w = std::pow(std::abs(E), -mu);
        wt(r) = w;
        y(r) = w * (2 * pi * (global_index(parity, m) + 0.5) - (fixed.empty() ? cplx{} : known.counting(E)));
        for (int c = 0; c < p; ++c) A(r, c) = w * std::pow(E, mu - static_cast<double>(orders[static_cast<std::size_t>(c)]) / N);
    }
    // column scaling keeps the normal matrix usable for the error estimate
    Eigen::VectorXd scale(p);
    for (int c = 0; c < p; ++c) {
        scale(c) = A.col(c).norm();
        A.col(c) /= scale(c);
    }
    Eigen::VectorXcd x = A.colPivHouseholderQr().solve(y);
    const Eigen::VectorXcd res = A * x - y;
    const double sigma2 = n > p ? res.squaredNorm() / (n - p) : 0.0;
    const Eigen::MatrixXcd cov = (A.adjoint() * A).inverse() * sigma2;
    BSFit out;
    out.orders = orders;
    for (int c = 0; c < p; ++c) {
        out.values.push_back(x(c) / scale(c));
        out.standard_errors.push_back(std::sqrt(std::abs(cov(c, c))) / scale(c));
    }
    for (int r = 0; r < n; ++r) out.max_residual = std::max(out.max_residual, std::abs(res(r) / wt(r)));
    return out;
}

struct FitOptions {
    int m_min = 20;
};

// Expansion with n_terms coefficients for one parity sector. Terms below N + 2 are
// exact; higher allowed terms are fitted to the supplied sector levels (ascending,
// sector-local index from 0).
inline BSExpansion bs_coefficients(const Potential& V, Parity parity, int n_terms,
                                   std::optional<std::span<const cplx>> levels = std::nullopt, FitOptions opt = {}) {
    if (n_terms < 1) throw contract_error("n_terms must be >= 1");
    const int N = V.degree();
    const int exact = std::min(n_terms, N + 2);
    auto b = classical_bs_coefficients(V, exact);
    if (n_terms <= exact) return {N, b};
    const auto ok = allowed_weights(V, n_terms);
    std::vector<int> orders;
    for (int j = exact; j < n_terms; ++j)
        if (ok[static_cast<std::size_t>(j)]) orders.push_back(j);
    b.resize(static_cast<std::size_t>(n_terms), cplx{});
    if (orders.empty()) return {N, b};
    if (!levels) throw fit_error("terms beyond j = " + std::to_string(N + 1) + " need oracle levels");
    const auto fit = fit_bs_terms(N, parity, *levels, std::vector<cplx>(b.begin(), b.begin() + exact), orders, opt.m_min);
    for (std::size_t c = 0; c < orders.size(); ++c) b[static_cast<std::size_t>(orders[c])] = fit.values[c];
    return {N, b};
}

// Solve counting(E) = 2 pi (k + 1/2) for global quantum number k.
inline cplx semiclassical_level(const BSExpansion& bs, int k) {
    if (k < 0) throw contract_error("semiclassical_level needs k >= 0");
    const cplx target = 2 * pi * (k + 0.5);
    const double mu = bs.mu();
    cplx E = std::pow(target / bs.coefficient(0), 1.0 / mu);
    if (bs.size() == 1) return E;

    auto newton = [&](const BSExpansion& b, cplx E0) -> std::optional<cplx> {
        cplx x = E0;
        for (int it = 0; it < 50; ++it) {
            const cplx f = b.counting(x) - target;
            const cplx d = b.counting_derivative(x);
            cplx step = f / d;
            // keep the iterate inside the right half of its own scale
            if (std::abs(step) > 0.5 * std::abs(x)) step *= 0.5 * std::abs(x) / std::abs(step);
            x -= step;
            if (std::abs(step) <= 1e-13 * std::abs(x)) {
                // quadratic convergence: one more step reaches rounding level
                return x - (b.counting(x) - target) / b.counting_derivative(x);
            }
        }
        return std::nullopt;
    };

    if (auto r = newton(bs, E)) return *r;
    // homotopy on the subleading terms for stubborn low levels
    std::vector<cplx> b(bs.coefficients());
    for (int s = 1; s <= 16; ++s) {
        const double t = s / 16.0;
        std::vector<cplx> bt(b);
        for (std::size_t j = 1; j < bt.size(); ++j) bt[j] *= t;
        auto r = newton(BSExpansion(bs.degree(), bt), E);
        if (!r) throw tail_level_error("semiclassical level " + std::to_string(k) + " did not converge");
        E = *r;
    }
    return E;
}

inline cplx semiclassical_level(const BSExpansion& bs, Parity p, int m) {
    return semiclassical_level(bs, global_index(p, m));
}

namespace detail {

// Taylor coefficients in x = 1/q of (1 + w)^a and of d/da (1 + w)^a,
// w = sum_j v_j x^j + lambda x^N.
inline void binomial_series(const Potential& V, cplx lambda, double a, int P, std::vector<cplx>& f, std::vector<cplx>& dfda) {
    const int N = V.degree();
    std::vector<cplx> w(static_cast<std::size_t>(P + 1), cplx{});
    for (int j = 1; j < N && j <= P; ++j) w[static_cast<std::size_t>(j)] = V.coefficient(j);
    if (N <= P) w[static_cast<std::size_t>(N)] += lambda;
    f.assign(static_cast<std::size_t>(P + 1), cplx{});
    std::vector<cplx> lg(static_cast<std::size_t>(P + 1), cplx{});
    f[0] = 1.0;
    const int kmax = N;  // w has at most N nonzero entries
    for (int n = 1; n <= P; ++n) {
        cplx s{}, t = static_cast<double>(n) * w[static_cast<std::size_t>(n)];
        for (int k = 1; k <= std::min(n, kmax); ++k) s += (a * k - (n - k)) * w[static_cast<std::size_t>(k)] * f[static_cast<std::size_t>(n - k)];
        for (int k = std::max(1, n - kmax); k < n; ++k) t -= static_cast<double>(k) * lg[static_cast<std::size_t>(k)] * w[static_cast<std::size_t>(n - k)];
        f[static_cast<std::size_t>(n)] = s / static_cast<double>(n);
        lg[static_cast<std::size_t>(n)] = t / static_cast<double>(n);
    }
    dfda.assign(static_cast<std::size_t>(P + 1), cplx{});
    for (int n = 0; n <= P; ++n)
        for (int k = 0; k <= n; ++k) dfda[static_cast<std::size_t>(n)] += f[static_cast<std::size_t>(n - k)] * lg[static_cast<std::size_t>(k)];
}

// sum_j |v_j| Q^{-j} + |lambda| Q^{-N}: the series in 1/q converges for q >= Q when < 1
inline double tail_ratio(const Potential& V, cplx lambda, double Q) {
    double s = std::abs(lambda) * std::pow(Q, -V.degree());
    for (int j = 1; j < V.degree(); ++j) s += std::abs(V.coefficient(j)) * std::pow(Q, -j);
    return s;
}

}  // namespace detail

// Default split point for the action: beyond every turning point.
inline double action_cut(const Potential& V, cplx lambda) {
    const int N = V.degree();
    double Q = 2 * (1 + std::pow(std::abs(lambda), 1.0 / N) + V.coefficient_scale());
    for (int i = 0; i < 40 && detail::tail_ratio(V, lambda, Q) > 0.5; ++i) Q *= 1.25;
    return Q;
}

// s = -1/2 continuation of int_Q^inf (V + lambda)^{-s} dq, obtained termwise from the
// expansion of (V + lambda)^{1/2} in powers of 1/q. The q^{-1} term has no power
// continuation; it is finite only when its coefficient vanishes (Z(0) = 0) and then
// contributes the s-derivative of that coefficient.
inline cplx regularized_tail_action(const Potential& V, cplx lambda, double Q) {
    const int N = V.degree();
    if (detail::tail_ratio(V, lambda, Q) >= 0.9) throw error("action tail series does not converge at the cut");
    const double half = 0.5 * N;
    int P = 64;
    for (;;) {
        std::vector<cplx> c, dc;
        detail::binomial_series(V, lambda, 0.5, P, c, dc);
        cplx sum{};
        double last = 0, top = 0;  // last: largest term among the final N + 1
        for (int p = 0; p <= P; ++p) {
            const double e = 1 + half - p;
            cplx term;
            if (N % 2 == 0 && p == N / 2 + 1) {
                const double scale = std::pow(1 + V.coefficient_scale() + std::pow(std::abs(lambda), 1.0 / N), p);
                if (std::abs(c[static_cast<std::size_t>(p)]) > 1e-9 * scale)
                    throw admissibility_error("regularized action has a pole: Z(0) != 0");
                term = -dc[static_cast<std::size_t>(p)] / static_cast<double>(N);
            } else {
                term = c[static_cast<std::size_t>(p)] * std::pow(Q, e) / (p - 1 - half);
            }
            sum += term;
            top = std::max(top, std::abs(term));
            if (p >= P - N) last = std::max(last, std::abs(term));
        }
        if (last <= 1e-17 * std::max(top, 1.0)) return sum;
        if (P >= 2048) throw error("action tail series converges too slowly");
        P *= 2;
    }
}

// s = -1/2 continuation of int_0^inf (V + lambda)^{-s} dq. Intended for lambda with
// V + lambda free of zeros on [0, inf); otherwise the principal root fixes the branch.
inline cplx regularized_action(const Potential& V, cplx lambda) {
    double Q = action_cut(V, lambda);
    auto f = [&](double q) { return std::sqrt(V(q) + lambda); };
    double err = 0;
    const cplx head = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, Q, 15, 1e-14, &err);
    return head + regularized_tail_action(V, lambda, Q);
}

}  // namespace polyquant
