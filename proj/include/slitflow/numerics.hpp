#pragma once

// Branch-safe complex elementary functions, an adaptive Dormand-Prince
// integrator for complex scalar ODEs, and Newton continuation along a path
// of targets. Everything here is pure and reentrant.

#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "slitflow/error.hpp"

namespace slitflow {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr cplx I{0.0, 1.0};

// ---------------------------------------------------------------------------
// Angles and branches
// ---------------------------------------------------------------------------

/// Principal argument in the half-open interval [-pi, pi).
/// Negative reals map to -pi regardless of the sign of their zero imaginary part.
double principal_arg(cplx w);

/// Principal logarithm consistent with principal_arg.
cplx principal_log(cplx w);

/// Arccot with range (0, pi): pi/2 - atan(x).
double arccot(double x);

/// Log(-xi) + Log(1 - z/xi): a branch of log(z - xi) continuous on the open
/// unit disc for unimodular xi. Throws DomainError when |z| >= 1.
cplx branch_log_disc(cplx z, cplx xi);

/// Same branch extended to the closed disc minus xi (boundary limits).
/// Used for boundary images and critical-point data at the anchors.
cplx branch_log_closed_disc(cplx z, cplx xi);

/// Logarithm of a base lying in the closed upper half-plane, with argument in
/// [0, pi]. A negative real base is treated as the limit from above (arg = pi).
cplx log_upper(cplx w);

/// exp(exponent * base_log).
cplx cpow(cplx base_log, cplx exponent);

/// Wraps an angle into [-pi, pi).
double wrap_angle(double x);

// ---------------------------------------------------------------------------
// Adaptive ODE integration
// ---------------------------------------------------------------------------

struct OdeSample {
    double t;
    cplx y;
};

enum class OdeStop { completed, guard, step_underflow, max_steps, non_finite };

struct OdePath {
    std::vector<OdeSample> samples;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
    double final_error_estimate = 0.0;
    OdeStop stop = OdeStop::completed;

    bool truncated() const noexcept { return stop != OdeStop::completed; }
    const OdeSample& back() const { return samples.back(); }
};

struct OdeOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double initial_step = 0.0;  // 0 selects a step from the tolerance
    std::size_t max_steps = 2'000'000;
    bool keep_samples = true;   // false keeps only the endpoints
};

using OdeField = std::function<cplx(double, cplx)>;
/// Returns false when the solution must not proceed (left the domain, too
/// close to a driving singularity, ...).
using OdeGuard = std::function<bool(double, cplx)>;

/// Dormand-Prince 5(4) with PI step-size control. The local error per step is
/// kept below rel_tol*|y| + abs_tol. Integration stops early, with a flagged
/// truncation, if the guard rejects an accepted state or the step underflows.
OdePath integrate_ode(const OdeField& field, double t0, double t1, cplx y0,
                      const OdeOptions& options = {}, const OdeGuard& guard = {});

// ---------------------------------------------------------------------------
// Newton continuation
// ---------------------------------------------------------------------------

struct ValueAndDerivative {
    cplx value;
    cplx derivative;
};

using HolomorphicMap = std::function<ValueAndDerivative(cplx)>;
using PathFunction = std::function<cplx(double)>;
using DomainPredicate = std::function<bool(cplx)>;

struct NewtonOptions {
    double abs_tol = 1e-12;
    double rel_tol = 0.0;        // converged when |F(z)-w| <= abs_tol + rel_tol*|w|
    int max_iter = 40;
    int max_depth = 40;          // bisection depth when densifying the path
    double min_derivative = 1e-300;
    DomainPredicate in_domain;   // empty means the whole plane
};

/// Solves F(z) = target from seed. Returns false if Newton fails to converge,
/// leaves the domain, or meets a vanishing derivative. On success z holds the
/// root and residual |F(z) - target|.
bool newton_solve(const HolomorphicMap& f, cplx target, cplx& z, const NewtonOptions& options,
                  double* residual = nullptr);

/// Follows the solutions of F(z) = path(s) for the ordered parameters,
/// starting from seed (a solution, or close to one, for path(params[0])).
/// Failed segments are bisected up to options.max_depth. Throws
/// ConvergenceError naming the index and parameter reached.
std::vector<cplx> continue_along_path(const HolomorphicMap& f, const PathFunction& path,
                                      std::span<const double> params, cplx seed,
                                      const NewtonOptions& options);

/// Continuation over an explicit list of targets; segments between targets
/// are straight lines in the target plane when densification is needed.
std::vector<cplx> newton_continuation(const HolomorphicMap& f, std::span<const cplx> targets,
                                      cplx seed, const NewtonOptions& options);

std::vector<cplx> newton_continuation(const HolomorphicMap& f, std::span<const cplx> targets,
                                      cplx seed, double tol, int max_iter);

}  // namespace slitflow
