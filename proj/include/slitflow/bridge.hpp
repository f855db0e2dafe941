#pragma once

// Conjugating the chordal spiral case to a radial flow. With
// T z = (z - beta)/(z - conj beta) the chordal semigroup becomes a radial
// Loewner flow driven by the images T(k_j) with transformed weights and
// rotation rate tan(psi).

#include <vector>

#include "slitflow/chordal.hpp"
#include "slitflow/config.hpp"
#include "slitflow/radial.hpp"

namespace slitflow {

struct HalfPlaneToDisc {
    cplx beta;  // Im beta > 0
};

/// T z = (z - beta)/(z - conj beta). Throws DomainError at z = conj beta.
cplx moebius_apply(const HalfPlaneToDisc& map, cplx z);
/// T^{-1} w = (beta - conj(beta) w)/(1 - w). Throws DomainError at w = 1.
cplx moebius_inverse(const HalfPlaneToDisc& map, cplx w);

struct RadialBridge {
    HalfPlaneToDisc map;
    RadialConfig config;                 // anchors sorted by angle in [0, 2pi)
    std::vector<std::size_t> order;      // config anchor i comes from chordal point order[i]
    double weight_sum;
    double time_scale;                   // tau = time_scale * s, equal to |B| / cos(psi)
};

/// Spiral case only; other cases raise UnsupportedCaseError. Weights are
/// 8 b_j (Im beta)^2 |B| / (|beta - k_j|^4 cos psi) and the rotation is tan psi.
RadialBridge chordal_to_radial(const ChordalCaseData& data);

struct CorrespondenceReport {
    std::vector<cplx> expected;  // T(lambda_j) together with T(infinity) = 1
    std::vector<cplx> radial;    // singular points of the radial map
    double hausdorff;
};

/// Compares the radial singular points with the images of the lambdas.
CorrespondenceReport verify_correspondence(const ChordalCaseData& data, const RadialSpiralData& radial,
                                           const HalfPlaneToDisc& map);

/// T(f~(T^{-1}(e^{-i a s} z), tau)) with tau = time_scale * s, where f~ is the
/// chordal semigroup; this should equal the radial flow f(z, s).
cplx conjugated_chordal_flow(const ChordalCaseData& data, const RadialBridge& bridge, cplx z, double s);

struct ConjugationReport {
    double max_abs_err = 0;
    std::size_t evaluations = 0;
};

ConjugationReport conjugated_flow_agreement(const ChordalCaseData& data, const RadialBridge& bridge,
                                            const RadialSpiralData& radial, const std::vector<cplx>& z_samples,
                                            const std::vector<double>& s_grid);

/// |f~(z, s + t) - f~(f~(z, s), t)| for the chordal semigroup in any case.
double chordal_semigroup_residual(const ChordalCaseData& data, cplx z, double s, double t);

}  // namespace slitflow
