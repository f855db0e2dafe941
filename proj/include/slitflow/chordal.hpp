#pragma once

// Chordal multi-slit flows in the upper half-plane driven by point masses
// moving along k_j sqrt(1 - t). The root structure of
// P(z) = z prod(z - k_j) + sum 4 b_j prod_{i != j}(z - k_i)
// selects one of four explicit maps h, and the flow is h^{-1} of a simple
// time-dependent rescaling (or translation) of h.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "slitflow/config.hpp"
#include "slitflow/numerics.hpp"
#include "slitflow/polyroots.hpp"

namespace slitflow {

/// Non-real roots beta, conj(beta). h(z) = (z - beta) prod (z - lambda_j)^{-a_j e^{-i psi}} (z - conj beta)^{e^{-2 i psi}}.
struct SpiralCase {
    cplx beta;
    std::vector<double> lambda;
    cplx B;                 // residue of prod(z - k)/P at beta
    double psi;             // Arg B
    std::vector<double> A;  // residues at lambda_j, negative
    std::vector<double> a;  // -A_j / |B|, positive
};

/// Two extra simple real roots. h(z) = (z - rho_2)^b prod (z - lambda_j)^{a_j} / (z - rho_1).
struct DistinctRealCase {
    double rho1;  // root with the positive residue; attracts the traces
    double rho2;
    std::vector<double> lambda;
    double B1, B2;
    std::vector<double> A;
    double exponent_b;       // -B2 / B1
    std::vector<double> a;   // -A_j / B1
    int ordering_case;       // 1: below k_1, 2: above k_n, 3: inside a gap
};

/// Double root rho0. prod(z - k)/P = sum A_j/(z - lambda_j) + D1/(z - rho0) + D2/(z - rho0)^2,
/// h(z) = sum A_j log(z - lambda_j) + D1 log(z - rho0) - D2/(z - rho0).
struct DoubleCase {
    double rho0;
    std::vector<double> lambda;
    std::vector<double> A;
    double D1, D2;
    // Residues in the basis B1/(z - rho0) + B2 z/(z - rho0)^2; undefined when rho0 = 0.
    std::optional<double> B1, B2;
    int position_case;  // 1: below k_1, 2: above k_n, 3: inside a gap
};

/// Triple root rho0 = lambda_mu. Adds D3/(z - rho0)^3 to the expansion and
/// -D3 / (2 (z - rho0)^2) to h.
struct TripleCase {
    double rho0;
    int mu;
    std::vector<double> lambda;  // remaining lambdas
    std::vector<double> A;
    double D1, D2, D3;
    double C;  // equals D2
    std::optional<double> B1, B2, B3;
};

struct ChordalCaseData {
    ChordalConfig config;
    std::variant<SpiralCase, DistinctRealCase, DoubleCase, TripleCase> kind;

    std::string name() const;
    bool is_spiral() const { return std::holds_alternative<SpiralCase>(kind); }
    bool is_additive() const {
        return std::holds_alternative<DoubleCase>(kind) || std::holds_alternative<TripleCase>(kind);
    }
};

/// Partial-fraction data from closed product formulas. Throws InternalError
/// when a sign or sum invariant fails.
ChordalCaseData build_case(const ChordalConfig& config, const RootStructure& structure);
/// Builds P, classifies its roots with the default tolerance and builds the case.
ChordalCaseData build_case(const ChordalConfig& config);

/// Largest violation of the per-case coefficient identities (sum of residues,
/// 2 cos psi - sum a_j = 1/|B|, ...).
double coefficient_identity_residual(const ChordalCaseData& c);

/// h on the open upper half-plane. Throws DomainError when Im z <= 0.
cplx h_eval(const ChordalCaseData& c, cplx z);
cplx h_derivative(const ChordalCaseData& c, cplx z);
ValueAndDerivative h_with_derivative(const ChordalCaseData& c, cplx z);
/// Limit of h from above at a real point or any point of the closed half-plane.
cplx h_boundary(const ChordalCaseData& c, cplx z);
/// h''(k_j), used to seed traces off the critical points.
cplx h_second_derivative_at_anchor(const ChordalCaseData& c, std::size_t j);

/// Im(e^{i psi} (z - beta)(z - conj beta) h'(z)/h(z)); positive on the upper
/// half-plane in the spiral case. Throws UnsupportedCaseError otherwise.
double spiral_functional(const ChordalCaseData& c, cplx z);

/// Time variable used internally: tau = -log(1 - t)/2, so sqrt(1 - t) = e^{-tau}.
double tau_of_t(double t);
double t_of_tau(double tau);

/// Image under the flow's model map: the target of h at time tau given h(z) at time 0.
cplx model_evolution(const ChordalCaseData& c, cplx h0, double tau);

struct ChordalFlowOptions {
    double newton_tol = 1e-14;
    int points_per_unit = 16;   // initial continuation density per unit tau
    int max_depth = 40;
    double t_cap = 1 - 1e-6;
};

/// f(z, t) = h^{-1}(M_t(h((1 - t)^{-1/2} z))) with M_t the case's model evolution.
cplx chordal_flow(const ChordalCaseData& c, cplx z, double t, const ChordalFlowOptions& options = {});

/// The semigroup form: h^{-1}(M_tau(h(z))), with M_tau the model evolution.
cplx chordal_semigroup(const ChordalCaseData& c, cplx z, double tau, const ChordalFlowOptions& options = {});

struct ChordalTraceOptions {
    double newton_tol = 1e-14;
    double seed_offset = 1e-3;  // relative to 1 + max |k|
    int max_depth = 40;
};

/// gamma_j(t) = h^{-1}(M_t(h(k_j))). Grid starts at 0 and stays below 1.
std::vector<TraceSample> chordal_trace(const ChordalCaseData& c, std::size_t j, const std::vector<double>& t_grid,
                                       const ChordalTraceOptions& options = {});
/// Same trajectory sampled in tau; the t field of each sample holds tau.
std::vector<TraceSample> chordal_trace_tau(const ChordalCaseData& c, std::size_t j,
                                           const std::vector<double>& tau_grid,
                                           const ChordalTraceOptions& options = {});

/// beta, rho_1, or rho_0.
cplx attraction_point(const ChordalCaseData& c);

struct IntersectionAngles {
    double start_angle;             // Arg(gamma - k_j) as t -> 0
    std::optional<double> end_angle;           // real-endpoint cases only
    std::optional<double> expected_end_angle;
    std::optional<double> winding;  // spiral case: turns of gamma about beta
};

/// Expected end angle: Arg(H0 / h(k_j)) for distinct real roots where H0 is
/// the residue of h at rho_1; 0 or pi for a double root (sign of D2);
/// pi/2 for a triple root.
std::optional<double> expected_end_angle(const ChordalCaseData& c, std::size_t j);

/// tau grid from 0 out to where the trace of slit j is close to its
/// attraction point (about 1e-6 relative for exponential approach, tau = 1e4 |D2|
/// or 1e3 |D3| in the additive cases). Geometric spacing, at least 40 points.
std::vector<double> end_analysis_tau_grid(const ChordalCaseData& c, std::size_t j, std::size_t points = 120);

/// start from a linear fit in sqrt(t) of the first 10 samples; end from a
/// quadratic fit in |gamma - p| of the last 10 samples, p the attraction point.
IntersectionAngles intersection_angles(const ChordalCaseData& c, std::size_t j,
                                       const std::vector<TraceSample>& samples);

struct ChordalBoundarySample {
    double x;
    cplx value;      // h(x) as a limit from above
    double profile;  // S(x) in the spiral case, NaN otherwise
};

/// Spiral profile S(x) = -sum a_j log|x - lambda_j| + 2 cos psi log|x - beta| - 2 sin psi arg(x - beta).
double spiral_profile(const SpiralCase& s, double x);

/// Division points of the real line: the k_j, lambdas and rhos in increasing order.
std::vector<double> division_points(const ChordalCaseData& c);

/// Throws DomainError when a grid point is within 1e-9 (1 + |x|) of a special point.
std::vector<ChordalBoundarySample> h_boundary_image(const ChordalCaseData& c, const std::vector<double>& x_grid);

}  // namespace slitflow
