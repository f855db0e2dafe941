#pragma once

// Radial multi-slit flows in the unit disc driven by rotating point masses.
// The flow is conjugated to a dilation by the spirallike map phi, so every
// evaluation reduces to inverting phi along a path of targets.

#include <vector>

#include "slitflow/config.hpp"
#include "slitflow/numerics.hpp"

namespace slitflow {

/// Everything needed to evaluate phi for a radial configuration.
struct RadialSpiralData {
    std::vector<double> theta;  // anchor angles (copied from the config)
    std::vector<cplx> zeta;     // anchors e^{i theta_k}
    std::vector<double> rho;    // angles of the singular points, sorted in (0, 2pi]
    std::vector<cplx> xi;       // e^{i rho_k}
    std::vector<double> alpha;  // negative exponents paired with rho_k
    cplx xi_hat;                // (1 + i a/b) / (1 - i a/b)
    double half_arg = 0;        // Arg(xi_hat) / 2 = atan(a / b)
    int parity = 0;             // 0: theta_k < rho_k < theta_{k+1}; 1: rho_k < theta_k < rho_{k+1}
    double b_total = 0;
    double a = 0;

    std::size_t size() const noexcept { return zeta.size(); }
    /// e^{-i half_arg}, the exponent rotation in phi.
    cplx rotation() const { return std::polar(1.0, -half_arg); }
};

/// The real function whose zeros on the circle are the singular points:
/// (1/2)(sum b_k cot((theta - theta_k)/2) - a). Strictly decreasing between anchors.
double radial_g_tilde(const RadialConfig& config, double theta);

/// Singular points by bisection on each arc, exponents from the closed product
/// formula, parity from the interlacing pattern. Throws InternalError if the
/// exponents are not all negative or do not sum to -cos(half_arg).
RadialSpiralData compute_spiral_data(const RadialConfig& config);

/// phi(z) = z exp(e^{-i half_arg} sum 2 alpha_k log(z - xi_k)), |z| < 1.
cplx phi_eval(const RadialSpiralData& data, cplx z);
/// phi'(z); well defined at z = 0 where it equals phi(z)/z in the limit.
cplx phi_derivative(const RadialSpiralData& data, cplx z);
ValueAndDerivative phi_with_derivative(const RadialSpiralData& data, cplx z);
/// z phi'(z) / phi(z) = 1 + z e^{-i half_arg} sum 2 alpha_k / (z - xi_k).
cplx phi_log_derivative_times_z(const RadialSpiralData& data, cplx z);

/// Boundary value of phi on the closed disc away from the singular points.
cplx phi_boundary(const RadialSpiralData& data, cplx z);
/// phi''(zeta_k), the leading Taylor coefficient at the critical anchor.
cplx phi_second_derivative_at(const RadialSpiralData& data, std::size_t k);

/// Re(e^{i half_arg} z phi'(z)/phi(z)); positive on the disc for a spirallike map.
double spirallike_functional(const RadialSpiralData& data, cplx z);

struct FlowOptions {
    double newton_tol = 1e-14;
    int points_per_unit = 8;   // initial continuation density per unit of (|a| + b) t
    int max_depth = 40;
};

/// f(z, t) = phi^{-1}(e^{-(b - i a) t} phi(e^{-i a t} z)) by continuation in time.
/// Times with e^{-b t} < 1e-30 are capped.
cplx radial_flow(const RadialSpiralData& data, cplx z, double t, const FlowOptions& options = {});

struct TraceOptions {
    double newton_tol = 1e-14;
    double seed_offset = 1e-3;   // distance from the anchor at which continuation starts
    bool refine_angle = false;   // insert samples where the argument jumps by more than pi/2
    int max_depth = 40;
};

/// Tip trajectory gamma_k(t) solving phi(gamma) = e^{-(b - i a) t} phi(zeta_k).
std::vector<TraceSample> radial_trace(const RadialSpiralData& data, std::size_t k,
                                      const std::vector<double>& t_grid, const TraceOptions& options = {});

struct TraceDiagnostics {
    double start_angle;          // angle between the trace and the boundary tangent at the anchor; pi/2 is orthogonal
    double total_winding;        // unwrapped change of Arg(gamma) over 2 pi
    bool modulus_monotone;       // |gamma| strictly decreasing
    std::vector<double> crossing_times;  // times where the unwrapped argument passes a multiple of pi
};

/// Requires at least 10 samples with t > 0. The start angle is a linear fit of
/// the direction angle in sqrt(t) over the earliest samples, extrapolated to 0.
TraceDiagnostics trace_diagnostics(const std::vector<TraceSample>& samples, cplx anchor);

/// |f(e^{ia(t+s)} z, t + s) - f(e^{iat} f(e^{ias} z, s), t)|.
double semigroup_residual(const RadialSpiralData& data, cplx z, double s, double t,
                          const FlowOptions& options = {});

/// sup over the samples of |f_a(z, t) - z e^{-b t}| for each rotation rate a,
/// with anchors and weights taken from base.
std::vector<double> convergence_experiment(const RadialConfig& base, const std::vector<double>& a_values,
                                           const std::vector<cplx>& z_samples, double t,
                                           const FlowOptions& options = {});

struct BoundarySample {
    double theta;
    cplx value;     // phi(e^{i theta})
    double profile; // Theta(theta) = theta sin(h) - sum 2 alpha_k log|sin((theta - rho_k)/2)|
};

double boundary_profile(const RadialSpiralData& data, double theta);
double boundary_profile_derivative(const RadialSpiralData& data, double theta);
double boundary_profile_second_derivative(const RadialSpiralData& data, double theta);

/// Throws DomainError when a grid angle lies within 1e-6 of a singular point.
std::vector<BoundarySample> phi_boundary_image(const RadialSpiralData& data, const std::vector<double>& theta_grid);

}  // namespace slitflow
