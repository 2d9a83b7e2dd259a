#pragma once

#include <cmath>
#include <vector>

#include "semiclassics.hpp"

namespace polyquant {

// One rotation sector of one parity: explicit levels m = 0..k_max followed by the
// semiclassical tail of its BS expansion.
class SpectrumChain {
public:
    SpectrumChain() = default;

    // tail_factor sets the closure point M = tail_factor * (k_max + 1)
    SpectrumChain(int ell, Parity parity, std::vector<cplx> levels, BSExpansion tail, int tail_factor = 4)
        : ell_(ell), parity_(parity), levels_(std::move(levels)), tail_(std::move(tail)) {
        if (levels_.empty()) throw contract_error("chain needs at least one explicit level");
        if (tail_factor < 2) throw contract_error("tail_factor must be >= 2");
        build_tail(tail_factor * (k_max() + 1));
    }

    int ell() const { return ell_; }
    Parity parity() const { return parity_; }
    int k_max() const { return static_cast<int>(levels_.size()) - 1; }
    const std::vector<cplx>& levels() const { return levels_; }
    cplx level(int m) const { return m <= k_max() ? levels_[static_cast<std::size_t>(m)] : tail_levels_[static_cast<std::size_t>(m - k_max() - 1)]; }
    void set_level(int m, cplx E) { levels_.at(static_cast<std::size_t>(m)) = E; }
    const BSExpansion& tail() const { return tail_; }
    int closure_index() const { return static_cast<int>(levels_.size() + tail_levels_.size()); }

    // semiclassical value at k_max agrees with the explicit one to 10%
    bool tail_consistent() const {
        const cplx sc = semiclassical_level(tail_, parity_, k_max());
        return std::abs(sc - levels_.back()) <= 0.1 * std::abs(levels_.back());
    }

    // log D(lambda) with the principal branch of each factor. Sum to M, Euler-Maclaurin
    // half term and derivative term at M, then the regularized integral of the counting
    // law beyond M in closed form.
    cplx log_det(cplx lambda) const {
        const Closure& c = closure_for(lambda);
        cplx s{};
        auto add = [&](cplx E) {
            const cplx z = E + lambda;
            if (std::abs(z) <= 1e-12 * std::max(1.0, std::abs(E))) throw pole_error("lambda is at a chain level");
            s += std::log(z);
        };
        for (const auto& E : levels_) add(E);
        for (const auto& E : tail_levels_) add(E);
        for (const auto& E : c.extra) add(E);
        const cplx zM = c.EM + lambda;
        s += 0.5 * std::log(zM) - c.h / (12.0 * zM) + c.counterterm;
        s += series(c, lambda, false);
        return s;
    }

    cplx log_det_derivative(cplx lambda) const {
        const Closure& c = closure_for(lambda);
        cplx s{};
        for (const auto& E : levels_) s += 1.0 / (E + lambda);
        for (const auto& E : tail_levels_) s += 1.0 / (E + lambda);
        for (const auto& E : c.extra) s += 1.0 / (E + lambda);
        const cplx zM = c.EM + lambda;
        s += 0.5 / zM + c.h / (12.0 * zM * zM);
        s += series(c, lambda, true);
        return s;
    }

    cplx det(cplx lambda) const { return std::exp(log_det(lambda)); }

private:
    struct Closure {
        cplx EM;
        cplx h;            // dE/dm at M
        cplx counterterm;  // -(4 pi)^-1 sum_j b_j E_M^a_j (log E_M - 1/a_j)
        std::vector<cplx> coef;  // s_n = sum_j b_j a_j E_M^{a_j - n} / (n - a_j)
        std::vector<cplx> extra;  // levels between the cached closure point and this one
    };

    static constexpr double series_radius = 0.6;

    Closure make_closure(int M) const {
        Closure c;
        c.EM = semiclassical_level(tail_, parity_, M);
        c.h = 4 * pi / tail_.counting_derivative(c.EM);
        const cplx logE = std::log(c.EM);
        for (std::size_t j = 0; j < tail_.size(); ++j) {
            const double a = tail_.exponent(j);
            const cplx b = tail_.coefficient(j);
            if (b == cplx{} || std::abs(a) < 1e-14) continue;  // a = 0 carries 2 pi Z(0) = 0
            c.counterterm -= b * std::pow(c.EM, a) * (logE - 1.0 / a) / (4 * pi);
        }
        for (int n = 1; n <= 160; ++n) {
            cplx t{};
            for (std::size_t j = 0; j < tail_.size(); ++j) {
                const double a = tail_.exponent(j);
                const cplx b = tail_.coefficient(j);
                if (b == cplx{} || std::abs(a) < 1e-14) continue;
                t += b * a * std::pow(c.EM, a - n) / (n - a);
            }
            c.coef.push_back(t);
        }
        return c;
    }

    void build_tail(int M) {
        tail_levels_.clear();
        for (int m = k_max() + 1; m < M; ++m) tail_levels_.push_back(semiclassical_level(tail_, parity_, m));
        closure_ = make_closure(M);
    }

    // closure far enough out for |lambda / E_M| < series_radius
    const Closure& closure_for(cplx lambda) const {
        if (std::abs(lambda) < series_radius * std::abs(closure_.EM)) return closure_;
        thread_local Closure far;
        int M = closure_index();
        far.extra.clear();
        cplx E = closure_.EM;
        while (std::abs(lambda) >= 0.5 * std::abs(E)) {
            far.extra.push_back(E);
            E = semiclassical_level(tail_, parity_, ++M);
        }
        auto extra = std::move(far.extra);
        far = make_closure(M);
        far.extra = std::move(extra);
        return far;
    }

    // (4 pi)^-1 int_{E_M}^inf log(1 + lambda/E) dN(E), or its lambda-derivative
    static cplx series(const Closure& c, cplx lambda, bool derivative) {
        cplx tot{}, pw = derivative ? cplx(1.0) : lambda;
        for (std::size_t i = 0; i < c.coef.size(); ++i) {
            const int n = static_cast<int>(i) + 1;
            const double sg = n % 2 ? 1.0 : -1.0;
            const cplx term = derivative ? sg * pw * c.coef[i] : sg * pw / static_cast<double>(n) * c.coef[i];
            tot += term;
            if (std::abs(term) < 1e-18 * std::max(1.0, std::abs(tot)) && n > 2) break;
            pw *= lambda;
        }
        return tot / (4 * pi);
    }

    int ell_ = 0;
    Parity parity_ = Parity::neumann;
    std::vector<cplx> levels_;
    BSExpansion tail_;
    std::vector<cplx> tail_levels_;
    Closure closure_;
};

// e^{i phi/4} D+(e^{-i phi} lambda; v^[1]) D-(lambda; v) - e^{-i phi/4} D+(lambda; v) D-(e^{-i phi} lambda; v^[1]) - 2i
inline cplx wronskian_residual(int N, const SpectrumChain& plus0, const SpectrumChain& minus0, const SpectrumChain& plus1,
                               const SpectrumChain& minus1, cplx lambda) {
    const double phi = symmetry_angle(N);
    const cplx I(0, 1);
    const cplx rot = std::polar(1.0, -phi);
    const cplx a = std::exp(I * phi / 4.0 + plus1.log_det(rot * lambda) + minus0.log_det(lambda));
    const cplx b = std::exp(-I * phi / 4.0 + plus0.log_det(lambda) + minus1.log_det(rot * lambda));
    return a - b - 2.0 * I;
}

}  // namespace polyquant
