#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "types.hpp"

namespace polyquant {

// V(q) = q^N + sum_j v_j q^{N-j}, j = 1..N-1, no constant term.
class Potential {
public:
    Potential() : Potential(4, {}) {}

    // missing trailing coefficients are zero
    Potential(int degree, std::vector<cplx> v) : n_(degree), v_(std::move(v)) {
        if (n_ < 1) throw contract_error("potential degree must be >= 1");
        if (n_ == 2) throw contract_error("degree 2 is excluded");
        if (v_.size() > static_cast<std::size_t>(n_ - 1))
            throw contract_error("too many coefficients for degree " + std::to_string(n_));
        v_.resize(static_cast<std::size_t>(n_ - 1), cplx{});
    }

    int degree() const { return n_; }
    const std::vector<cplx>& coefficients() const { return v_; }

    // v_j, j = 1..N-1; zero outside that range
    cplx coefficient(int j) const {
        if (j < 1 || j >= n_) return {};
        return v_[static_cast<std::size_t>(j - 1)];
    }

    // ascending monomial coefficients c_0..c_N
    std::vector<cplx> polynomial() const {
        std::vector<cplx> c(static_cast<std::size_t>(n_ + 1), cplx{});
        c[static_cast<std::size_t>(n_)] = 1.0;
        for (int j = 1; j < n_; ++j) c[static_cast<std::size_t>(n_ - j)] = coefficient(j);
        return c;
    }

    cplx operator()(cplx q) const {
        cplx r = 1.0;
        for (const auto& v : v_) r = r * q + v;
        return r * q;
    }

    // d^order V / dq^order
    cplx derivative(cplx q, int order = 1) const {
        auto c = polynomial();
        for (int o = 0; o < order; ++o) {
            if (c.size() <= 1) return {};
            for (std::size_t i = 1; i < c.size(); ++i) c[i - 1] = c[i] * static_cast<double>(i);
            c.pop_back();
        }
        cplx r{};
        for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * q + *it;
        return r;
    }

    bool is_real(double tol = 0.0) const {
        return std::all_of(v_.begin(), v_.end(), [tol](cplx v) { return std::abs(v.imag()) <= tol; });
    }

    bool is_homogeneous() const {
        return std::all_of(v_.begin(), v_.end(), [](cplx v) { return v == cplx{}; });
    }

    // V(-q) = V(q)
    bool is_even() const {
        if (n_ % 2) return false;
        for (int j = 1; j < n_; j += 2)
            if (coefficient(j) != cplx{}) return false;
        return true;
    }

    // V(-q) = -V(q)
    bool is_odd() const {
        if (n_ % 2 == 0) return false;
        for (int j = 2; j < n_; j += 2)
            if (coefficient(j) != cplx{}) return false;
        return true;
    }

    // rough length scale of the coefficients, max |v_j|^{1/j}
    double coefficient_scale() const {
        double s = 0;
        for (int j = 1; j < n_; ++j) s = std::max(s, std::pow(std::abs(coefficient(j)), 1.0 / j));
        return s;
    }

    friend bool operator==(const Potential&, const Potential&) = default;

private:
    int n_;
    std::vector<cplx> v_;
};

struct SymmetryData {
    double phi;
    int L;
    double mu;
};

inline double symmetry_angle(int N) { return 4 * pi / (N + 2); }
inline double growth_order(int N) { return 0.5 + 1.0 / N; }

inline int symmetry_order(const Potential& V) {
    const int N = V.degree();
    return V.is_even() ? N / 2 + 1 : N + 2;
}

inline SymmetryData symmetry(const Potential& V) {
    return {symmetry_angle(V.degree()), symmetry_order(V), growth_order(V.degree())};
}

inline int mod(int a, int L) { return ((a % L) + L) % L; }

// exp(2 pi i r / n), exact at multiples of quarter turns
inline cplx root_of_unity(long long r, long long n) {
    r = ((r % n) + n) % n;
    if (r == 0) return 1.0;
    if (2 * r == n) return -1.0;
    if (4 * r == n) return {0.0, 1.0};
    if (4 * r == 3 * n) return {0.0, -1.0};
    const double t = 2 * pi * static_cast<double>(r) / static_cast<double>(n);
    return {std::cos(t), std::sin(t)};
}

// v_j -> exp(i j ell phi / 2) v_j. The phase is reduced mod 2 pi in integers so
// that composition and full turns are exact.
inline std::vector<cplx> rotate_coefficients(const std::vector<cplx>& v, int N, int ell) {
    std::vector<cplx> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const long long j = static_cast<long long>(i) + 1;
        r[i] = v[i] == cplx{} ? cplx{} : v[i] * root_of_unity(j * ell, N + 2);
    }
    return r;
}

inline Potential rotate(const Potential& V, int ell) {
    return {V.degree(), rotate_coefficients(V.coefficients(), V.degree(), ell)};
}

// Z(0) for quartics; must vanish for the determinant normalization used here
inline cplx z_zero_quartic(const std::vector<cplx>& v) {
    if (v.size() != 3) throw unsupported_degree("z_zero_quartic needs N = 4");
    return -v[2] / 4.0 + v[0] * v[1] / 8.0 - v[0] * v[0] * v[0] / 32.0;
}

inline cplx z_zero_quartic(const Potential& V) {
    if (V.degree() != 4) throw unsupported_degree("z_zero_quartic needs N = 4");
    return z_zero_quartic(V.coefficients());
}

// V_a(q) = V(q + a) - V(a)
inline Potential shift_potential(const Potential& V, double a) {
    if (a == 0.0) return V;
    const int N = V.degree();
    auto c = V.polynomial();
    // repeated synthetic division gives the Taylor coefficients at a
    std::vector<cplx> t(c.size());
    for (int k = 0; k <= N; ++k) {
        cplx r{};
        for (int i = N; i >= k; --i) {
            r = r * a + c[static_cast<std::size_t>(i)];
            c[static_cast<std::size_t>(i)] = r;
        }
        t[static_cast<std::size_t>(k)] = c[static_cast<std::size_t>(k)];
    }
    std::vector<cplx> v(static_cast<std::size_t>(N - 1));
    for (int j = 1; j < N; ++j) v[static_cast<std::size_t>(j - 1)] = t[static_cast<std::size_t>(N - j)];
    return {N, v};
}

// v_j -> t^j v_j, the scaling path used for continuation. Z(0) scales like t^3.
inline Potential scale_potential(const Potential& V, double t) {
    std::vector<cplx> v(V.coefficients());
    double f = 1;
    for (auto& x : v) {
        f *= t;
        x *= f;
    }
    return {V.degree(), v};
}

inline constexpr double admissibility_tol = 1e-12;

// Throws admissibility_error unless Z(0) = 0 is known to hold. Non-quartics outside
// the unconditional classes need allow_unverified.
inline void check_admissible(const Potential& V, bool allow_unverified = false) {
    const int N = V.degree();
    if (V.is_homogeneous() || V.is_odd() || (V.is_even() && N % 4 == 0)) return;
    if (N == 4) {
        const auto z = z_zero_quartic(V);
        if (std::abs(z) > admissibility_tol)
            throw admissibility_error("Z(0) = " + std::to_string(std::abs(z)) + " is not zero");
        return;
    }
    if (!allow_unverified)
        throw admissibility_error("Z(0) = 0 cannot be verified for degree " + std::to_string(N) +
                                  "; pass the override to proceed");
}

}  // namespace polyquant
