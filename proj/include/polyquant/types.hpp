#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace polyquant {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;

// Neumann sector holds the even levels E_{2m}, Dirichlet the odd ones E_{2m+1}.
enum class Parity { neumann, dirichlet };

inline int parity_offset(Parity p) { return p == Parity::neumann ? 0 : 1; }

// global quantum number of the m-th level inside a sector
inline int global_index(Parity p, int m) { return 2 * m + parity_offset(p); }

inline const char* parity_name(Parity p) { return p == Parity::neumann ? "even" : "odd"; }

inline Parity parse_parity(const std::string& s) {
    if (s == "even" || s == "+" || s == "neumann") return Parity::neumann;
    if (s == "odd" || s == "-" || s == "dirichlet") return Parity::dirichlet;
    throw std::invalid_argument("unknown parity '" + s + "'");
}

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// precondition violated by the caller
struct contract_error : error {
    using error::error;
};

struct admissibility_error : error {
    using error::error;
};

struct unsupported_degree : error {
    using error::error;
};

struct fit_error : error {
    using error::error;
};

struct tail_level_error : error {
    using error::error;
};

// lambda sits on (or numerically at) a zero of the determinant
struct pole_error : error {
    using error::error;
};

struct convergence_error : error {
    using error::error;
};

}  // namespace polyquant
