#include "slitflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slitflow {

namespace {

OdeSolution finish(const OdePath& path, double t) {
    const auto& last = path.back();
    return {last.y, last.t, path.truncated() || last.t < t, path.accepted_steps};
}

OdeOptions ode_options(const OracleOptions& o) {
    OdeOptions opt;
    opt.rel_tol = o.rel_tol;
    opt.abs_tol = o.abs_tol;
    opt.keep_samples = false;
    return opt;
}

}  // namespace

OdeSolution radial_ode_solve(const RadialConfig& config, cplx z, double t, const OracleOptions& o, double t0) {
    config.validate();
    if (!(std::abs(z) < 1)) throw DomainError("radial_ode_solve: |z| >= 1");
    if (t <= t0) return {z, t0, false, 0};
    std::vector<cplx> zeta;
    for (double th : config.theta) zeta.push_back(std::polar(1.0, th));
    const double a = config.a;
    OdeField field = [&](double s, cplx w) {
        const cplx rot = std::polar(1.0, a * s);
        cplx acc = 0;
        for (std::size_t k = 0; k < zeta.size(); ++k) {
            cplx d = rot * zeta[k];
            acc += config.b[k] * (d + w) / (d - w);
        }
        return w * acc;
    };
    OdeGuard guard = [&](double s, cplx w) {
        if (!(std::abs(w) < 1 - o.boundary_margin)) return false;
        const cplx rot = std::polar(1.0, a * s);
        for (cplx zt : zeta)
            if (std::abs(w - rot * zt) < o.safety_radius) return false;
        return true;
    };
    return finish(integrate_ode(field, t0, t, z, ode_options(o), guard), t);
}

OdeSolution chordal_ode_solve(const ChordalConfig& config, cplx z, double t, const OracleOptions& o, double t0) {
    config.validate();
    if (!(z.imag() > 0)) throw DomainError("chordal_ode_solve: Im z must be positive");
    if (!(t < 1)) throw DomainError("chordal_ode_solve: t must be below 1");
    if (t <= t0) return {z, t0, false, 0};
    double scale = 0;
    for (double k : config.k) scale = std::max(scale, std::abs(k));
    const double radius = o.safety_radius * (1 + scale);
    OdeField field = [&](double s, cplx w) {
        const double root = std::sqrt(1 - s);
        cplx acc = 0;
        for (std::size_t j = 0; j < config.size(); ++j) acc += 2 * config.b[j] / (w - config.k[j] * root);
        return acc;
    };
    OdeGuard guard = [&](double s, cplx w) {
        if (!(w.imag() > o.boundary_margin * (1 + scale))) return false;
        const double root = std::sqrt(1 - s);
        for (double k : config.k)
            if (std::abs(w - k * root) < radius) return false;
        return true;
    };
    return finish(integrate_ode(field, t0, t, z, ode_options(o), guard), t);
}

OracleReport compare(const ExplicitMap& explicit_map, const OdeMap& ode, const std::vector<cplx>& z_samples,
                     const std::vector<double>& t_grid) {
    OracleReport rep;
    for (double t : t_grid) {
        for (cplx z : z_samples) {
            OracleRecord r{z, t, cplx(NAN, NAN), cplx(NAN, NAN), 0.0, false, false};
            auto w = ode(z, t);
            if (!w) {
                r.truncated = true;
                ++rep.truncated;
                rep.records.push_back(r);
                continue;
            }
            r.ode_value = *w;
            try {
                r.explicit_value = explicit_map(z, t);
                r.abs_err = std::abs(r.explicit_value - r.ode_value);
                if (!std::isfinite(r.abs_err)) throw std::runtime_error("non-finite value");
            } catch (const std::exception&) {
                r.failed = true;
                r.abs_err = std::numeric_limits<double>::infinity();
                ++rep.failed;
            }
            rep.max_abs_err = std::max(rep.max_abs_err, r.abs_err);
            rep.records.push_back(r);
        }
    }
    return rep;
}

OracleReport radial_composition_report(const RadialConfig& config, const RadialSpiralData& data,
                                       const std::vector<cplx>& z_samples, const std::vector<double>& t_grid,
                                       const OracleOptions& o) {
    // Explicit side is z itself; the ODE side is f(w_ode(z, t), t).
    ExplicitMap identity = [](cplx z, double) { return z; };
    OdeMap composed = [&](cplx z, double t) -> std::optional<cplx> {
        auto w = radial_ode_solve(config, z, t, o);
        if (w.truncated) return std::nullopt;
        try {
            return radial_flow(data, w.value, t);
        } catch (const Error&) {
            return cplx(std::numeric_limits<double>::infinity(), 0);
        }
    };
    return compare(identity, composed, z_samples, t_grid);
}

OracleReport chordal_composition_report(const ChordalCaseData& data, const std::vector<cplx>& z_samples,
                                        const std::vector<double>& t_grid, const OracleOptions& o) {
    ExplicitMap identity = [](cplx z, double) { return z; };
    OdeMap composed = [&](cplx z, double t) -> std::optional<cplx> {
        auto w = chordal_ode_solve(data.config, z, t, o);
        if (w.truncated) return std::nullopt;
        try {
            return chordal_flow(data, w.value, t);
        } catch (const Error&) {
            return cplx(std::numeric_limits<double>::infinity(), 0);
        }
    };
    return compare(identity, composed, z_samples, t_grid);
}

RadialSpiralData perturb_coefficient(RadialSpiralData data, double delta) {
    data.alpha.at(0) += delta;
    return data;
}

ChordalCaseData perturb_coefficient(ChordalCaseData data, double delta) {
    if (auto* s = std::get_if<SpiralCase>(&data.kind)) {
        s->B += delta;
        s->psi = std::arg(s->B);
    } else if (auto* d = std::get_if<DistinctRealCase>(&data.kind)) {
        d->B1 += delta;
    } else if (auto* d2 = std::get_if<DoubleCase>(&data.kind)) {
        d2->D2 += delta;
    } else if (auto* d3 = std::get_if<TripleCase>(&data.kind)) {
        d3->D3 += delta;
    }
    return data;
}

}  // namespace slitflow
