#include "slitflow/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slitflow {

cplx moebius_apply(const HalfPlaneToDisc& m, cplx z) {
    const cplx den = z - std::conj(m.beta);
    if (den == 0.0) throw DomainError("moebius_apply: pole at conj(beta)");
    return (z - m.beta) / den;
}

cplx moebius_inverse(const HalfPlaneToDisc& m, cplx w) {
    if (w == 1.0) throw DomainError("moebius_inverse: pole at 1");
    return (m.beta - std::conj(m.beta) * w) / (1.0 - w);
}

RadialBridge chordal_to_radial(const ChordalCaseData& data) {
    const auto* s = std::get_if<SpiralCase>(&data.kind);
    if (!s) throw UnsupportedCaseError("chordal_to_radial: only the spiral case maps to a radial flow");
    const auto& cfg = data.config;
    const std::size_t n = cfg.size();
    RadialBridge br;
    br.map = {s->beta};
    const double absB = std::abs(s->B), cpsi = std::cos(s->psi), im = s->beta.imag();

    std::vector<double> angle(n), weight(n);
    for (std::size_t j = 0; j < n; ++j) {
        double a = std::arg(moebius_apply(br.map, cfg.k[j]));
        if (a < 0) a += 2 * pi;
        if (a >= 2 * pi) a -= 2 * pi;
        angle[j] = a;
        weight[j] = 8 * cfg.b[j] * im * im * absB / (std::pow(std::abs(s->beta - cfg.k[j]), 4) * cpsi);
    }
    br.order.resize(n);
    std::iota(br.order.begin(), br.order.end(), 0);
    std::sort(br.order.begin(), br.order.end(), [&](auto x, auto y) { return angle[x] < angle[y]; });
    for (auto j : br.order) {
        br.config.theta.push_back(angle[j]);
        br.config.b.push_back(weight[j]);
    }
    br.config.a = std::tan(s->psi);
    br.weight_sum = std::accumulate(weight.begin(), weight.end(), 0.0);
    br.time_scale = absB / cpsi;
    br.config.validate();
    return br;
}

CorrespondenceReport verify_correspondence(const ChordalCaseData& data, const RadialSpiralData& radial,
                                           const HalfPlaneToDisc& map) {
    const auto* s = std::get_if<SpiralCase>(&data.kind);
    if (!s) throw UnsupportedCaseError("verify_correspondence: spiral case only");
    CorrespondenceReport rep;
    for (double l : s->lambda) rep.expected.push_back(moebius_apply(map, l));
    rep.expected.push_back(1.0);
    rep.radial = radial.xi;
    auto directed = [](const std::vector<cplx>& A, const std::vector<cplx>& B) {
        double d = 0;
        for (cplx a : A) {
            double m = INFINITY;
            for (cplx b : B) m = std::min(m, std::abs(a - b));
            d = std::max(d, m);
        }
        return d;
    };
    rep.hausdorff = std::max(directed(rep.expected, rep.radial), directed(rep.radial, rep.expected));
    return rep;
}

cplx conjugated_chordal_flow(const ChordalCaseData& data, const RadialBridge& br, cplx z, double s) {
    const cplx u = moebius_inverse(br.map, std::polar(1.0, -br.config.a * s) * z);
    return moebius_apply(br.map, chordal_semigroup(data, u, br.time_scale * s));
}

ConjugationReport conjugated_flow_agreement(const ChordalCaseData& data, const RadialBridge& br,
                                            const RadialSpiralData& radial, const std::vector<cplx>& z_samples,
                                            const std::vector<double>& s_grid) {
    ConjugationReport rep;
    for (double s : s_grid)
        for (cplx z : z_samples) {
            double e = std::abs(conjugated_chordal_flow(data, br, z, s) - radial_flow(radial, z, s));
            rep.max_abs_err = std::max(rep.max_abs_err, e);
            ++rep.evaluations;
        }
    return rep;
}

double chordal_semigroup_residual(const ChordalCaseData& data, cplx z, double s, double t) {
    cplx direct = chordal_semigroup(data, z, s + t);
    cplx composed = chordal_semigroup(data, chordal_semigroup(data, z, s), t);
    return std::abs(direct - composed);
}

}  // namespace slitflow
