#pragma once

// Auxiliary polynomials of the radial and chordal problems, a simultaneous
// root finder, and the classification of the chordal root structure.

#include <complex>
#include <variant>
#include <vector>

#include "slitflow/config.hpp"
#include "slitflow/numerics.hpp"

namespace slitflow {

/// Coefficients in ascending degree; the leading coefficient is nonzero.
template <class T>
struct Polynomial {
    std::vector<T> coeffs;

    Polynomial() = default;
    explicit Polynomial(std::vector<T> c);

    int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
    const T& leading() const { return coeffs.back(); }

    template <class Z>
    Z operator()(Z z) const {
        Z acc{0};
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * z + Z(*it);
        return acc;
    }
    Polynomial derivative() const;
    Polynomial operator*(const Polynomial& o) const;
    Polynomial operator+(const Polynomial& o) const;
    Polynomial scaled(T s) const;

    /// Monic linear factor (z - r).
    static Polynomial linear(T r) { return Polynomial({-r, T(1)}); }
};

using RealPolynomial = Polynomial<double>;
using ComplexPolynomial = Polynomial<cplx>;

/// z prod(z - k_j) + sum 4 b_j prod_{i != j}(z - k_i).
RealPolynomial build_chordal_P(const ChordalConfig& config);

/// Q - i a R with Q = sum b_k (zeta_k + z) prod_{j != k}(zeta_j - z) and
/// R = prod (zeta_k - z).
ComplexPolynomial build_radial_QiaR(const RadialConfig& config);

struct RootOptions {
    double tol = 1e-12;   // residual bound relative to sum |c_k| max(1, |r|)^k
    int max_iter = 500;
};

/// All complex roots with multiplicity (Aberth-Ehrlich in extended precision,
/// then Newton polishing). Throws ConvergenceError when a root fails the
/// residual bound.
std::vector<cplx> find_roots(const ComplexPolynomial& poly, const RootOptions& options = {});
std::vector<cplx> find_roots(const RealPolynomial& poly, const RootOptions& options = {});

/// Remaining roots of P besides lambda_1 < ... < lambda_{n-1}, which lie one in each gap (k_j, k_{j+1}).
struct ComplexPair {
    cplx beta;  // Im beta > 0
    std::vector<double> lambda;
};

struct DistinctReal {
    double rho_low, rho_high;  // the two extra real roots, rho_low < rho_high
    std::vector<double> lambda;
    int ordering_case;          // 1: both below k_1, 2: both above k_n, 3: inside one gap
    int gap = -1;               // zero-based gap index for case 3
};

struct DoubleRoot {
    double rho0;
    std::vector<double> lambda;
    int position_case;  // 1: below k_1, 2: above k_n, 3: inside a gap
    int gap = -1;
};

struct TripleRoot {
    double rho0;
    int mu;  // zero-based index with rho0 = lambda_mu
    std::vector<double> lambda;  // remaining lambdas (mu removed)
};

struct RootStructure {
    std::variant<ComplexPair, DistinctReal, DoubleRoot, TripleRoot> kind;
    double cluster_tol;
    std::vector<cplx> raw_roots;
};

/// Default cluster tolerance 1e-8 (1 + max |k_j|).
double default_cluster_tol(const ChordalConfig& config);

/// Splits the roots of P into the interlacing lambdas and the remaining
/// structure. Throws ConfigError when the clustering is ambiguous at this
/// tolerance, InternalError when interlacing fails.
RootStructure classify_roots(const RealPolynomial& poly, const ChordalConfig& config, double cluster_tol);
RootStructure classify_roots(const RealPolynomial& poly, const ChordalConfig& config);

}  // namespace slitflow
