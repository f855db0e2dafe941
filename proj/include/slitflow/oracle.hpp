#pragma once

// Independent verification by direct integration of the Loewner ODEs. The
// oracles integrate the expanding direction w(z, t) and the explicit flows are
// checked through the composition identity f(w(z, t), t) = z, so no inverse
// map is ever computed on the oracle side.

#include <functional>
#include <optional>
#include <vector>

#include "slitflow/chordal.hpp"
#include "slitflow/config.hpp"
#include "slitflow/numerics.hpp"
#include "slitflow/radial.hpp"

namespace slitflow {

struct OracleOptions {
    double rel_tol = 1e-9;
    double abs_tol = 1e-13;
    double safety_radius = 1e-6;    // scaled by 1 + max|k| in the chordal case
    double boundary_margin = 1e-6;  // radial: stop when |w| > 1 - margin; chordal: when Im w < margin (1 + max |k|)
};

struct OdeSolution {
    cplx value;
    double t_reached;
    bool truncated;
    std::size_t steps;
};

/// dw/dt = w sum b_k (e^{iat} zeta_k + w)/(e^{iat} zeta_k - w), w(t0) = z.
OdeSolution radial_ode_solve(const RadialConfig& config, cplx z, double t, const OracleOptions& options = {},
                             double t0 = 0.0);

/// dw/dt = sum 2 b_j / (w - k_j sqrt(1 - t)), w(t0) = z.
OdeSolution chordal_ode_solve(const ChordalConfig& config, cplx z, double t, const OracleOptions& options = {},
                              double t0 = 0.0);

struct OracleRecord {
    cplx z;
    double t;
    cplx explicit_value;
    cplx ode_value;
    double abs_err;
    bool truncated;  // the ODE stopped early; excluded from the maximum
    bool failed;     // the explicit side threw; counted as an infinite error
};

struct OracleReport {
    std::vector<OracleRecord> records;
    double max_abs_err = 0;
    std::size_t truncated = 0;
    std::size_t failed = 0;
};

using ExplicitMap = std::function<cplx(cplx, double)>;
/// Returns nullopt when the ODE run was truncated.
using OdeMap = std::function<std::optional<cplx>(cplx, double)>;

/// Full cross product of samples and times.
OracleReport compare(const ExplicitMap& explicit_map, const OdeMap& ode, const std::vector<cplx>& z_samples,
                     const std::vector<double>& t_grid);

/// |f(w_ode(z, t), t) - z| for the radial flow of data.
OracleReport radial_composition_report(const RadialConfig& config, const RadialSpiralData& data,
                                       const std::vector<cplx>& z_samples, const std::vector<double>& t_grid,
                                       const OracleOptions& options = {});

/// |f(w_ode(z, t), t) - z| for the chordal flow of the case data.
OracleReport chordal_composition_report(const ChordalCaseData& data, const std::vector<cplx>& z_samples,
                                        const std::vector<double>& t_grid, const OracleOptions& options = {});

/// Negative controls: shift one coefficient the explicit formulas rely on.
/// Radial: alpha_1. Chordal: B (spiral), B1 (distinct real), D2 (double), D3 (triple).
RadialSpiralData perturb_coefficient(RadialSpiralData data, double delta);
ChordalCaseData perturb_coefficient(ChordalCaseData data, double delta);

}  // namespace slitflow
