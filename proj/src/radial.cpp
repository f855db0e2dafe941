#include "slitflow/radial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace slitflow {

double radial_g_tilde(const RadialConfig& config, double theta) {
    double s = 0;
    for (std::size_t k = 0; k < config.size(); ++k) s += config.b[k] / std::tan(0.5 * (theta - config.theta[k]));
    return 0.5 * (s - config.a);
}

namespace {

// Zero of the decreasing function on the open interval (lo, hi); the
// endpoints themselves are poles and never evaluated.
double bisect_decreasing(const RadialConfig& config, double lo, double hi) {
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        double g = radial_g_tilde(config, mid);
        if (g == 0) return mid;
        if (g > 0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

RadialSpiralData compute_spiral_data(const RadialConfig& config) {
    config.validate();
    const std::size_t n = config.size();
    RadialSpiralData d;
    d.theta = config.theta;
    d.a = config.a;
    d.b_total = config.b_total();
    for (double th : config.theta) d.zeta.push_back(std::polar(1.0, th));
    const double ahat = config.a / d.b_total;
    d.xi_hat = cplx(1, ahat) / cplx(1, -ahat);
    d.half_arg = std::atan(ahat);

    std::vector<double> roots;
    for (std::size_t k = 0; k + 1 < n; ++k) roots.push_back(bisect_decreasing(config, config.theta[k], config.theta[k + 1]));
    double wrap = bisect_decreasing(config, config.theta[n - 1], config.theta[0] + 2 * pi);
    if (wrap > 2 * pi) {
        wrap -= 2 * pi;
        d.parity = 1;
    }
    roots.push_back(wrap);
    for (double r : roots)
        if (!(std::isfinite(r) && std::abs(radial_g_tilde(config, r)) < 1e300))
            throw InternalError("compute_spiral_data: bisection failed to bracket a root");
    std::sort(roots.begin(), roots.end());
    d.rho = roots;
    for (double r : d.rho) d.xi.push_back(std::polar(1.0, r));

    // Interlacing check (either pattern).
    for (std::size_t k = 0; k < n; ++k) {
        bool ok;
        if (d.parity == 0)
            ok = d.rho[k] > d.theta[k] && (k + 1 < n ? d.rho[k] < d.theta[k + 1] : d.rho[k] <= 2 * pi);
        else
            ok = d.rho[k] < d.theta[k] && (k > 0 ? d.rho[k] > d.theta[k - 1] : d.rho[k] > 0);
        if (!ok) throw InternalError("compute_spiral_data: singular points do not interlace the anchors");
    }

    const double sign = d.parity == 0 ? 1.0 : -1.0;
    double sum = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double at = std::sin(0.5 * (d.theta[k] - d.rho[k]));
        for (std::size_t j = 0; j < n; ++j) {
            if (j == k) continue;
            at *= std::sin(0.5 * (d.theta[j] - d.rho[k])) / std::sin(0.5 * (d.rho[j] - d.rho[k]));
        }
        d.alpha.push_back(sign * at);
        sum += sign * at;
    }
    for (std::size_t k = 0; k < n; ++k)
        if (!(d.alpha[k] < 0))
            throw InternalError("compute_spiral_data: exponent alpha_" + std::to_string(k + 1) + " = " +
                                std::to_string(d.alpha[k]) + " is not negative");
    if (std::abs(sum + std::cos(d.half_arg)) > 1e-10)
        throw InternalError("compute_spiral_data: exponents sum to " + std::to_string(sum) +
                            " instead of -cos(half_arg)");
    return d;
}

namespace {

// Exponent E(z) with phi = z exp(E).
cplx exponent(const RadialSpiralData& d, cplx z, bool closed) {
    cplx s = 0;
    for (std::size_t k = 0; k < d.size(); ++k)
        s += 2 * d.alpha[k] * (closed ? branch_log_closed_disc(z, d.xi[k]) : branch_log_disc(z, d.xi[k]));
    return d.rotation() * s;
}

// z * e^{-ih} sum 2 alpha_k / (z - xi_k)
cplx pole_sum_times_z(const RadialSpiralData& d, cplx z) {
    cplx s = 0;
    for (std::size_t k = 0; k < d.size(); ++k) s += 2 * d.alpha[k] / (z - d.xi[k]);
    return z * d.rotation() * s;
}

}  // namespace

cplx phi_eval(const RadialSpiralData& d, cplx z) { return z * std::exp(exponent(d, z, false)); }

ValueAndDerivative phi_with_derivative(const RadialSpiralData& d, cplx z) {
    cplx e = std::exp(exponent(d, z, false));
    return {z * e, e * (1.0 + pole_sum_times_z(d, z))};
}

cplx phi_derivative(const RadialSpiralData& d, cplx z) { return phi_with_derivative(d, z).derivative; }

cplx phi_log_derivative_times_z(const RadialSpiralData& d, cplx z) { return 1.0 + pole_sum_times_z(d, z); }

cplx phi_boundary(const RadialSpiralData& d, cplx z) { return z * std::exp(exponent(d, z, true)); }

cplx phi_second_derivative_at(const RadialSpiralData& d, std::size_t k) {
    // phi' = phi L with L(zeta_k) = 0, so phi'' = phi L' there.
    const cplx z = d.zeta.at(k);
    cplx s = 0;
    for (std::size_t j = 0; j < d.size(); ++j) s += 2 * d.alpha[j] / ((z - d.xi[j]) * (z - d.xi[j]));
    return phi_boundary(d, z) * (-1.0 / (z * z) - d.rotation() * s);
}

double spirallike_functional(const RadialSpiralData& d, cplx z) {
    if (!(std::abs(z) < 1)) throw DomainError("spirallike_functional: |z| >= 1");
    return (std::polar(1.0, d.half_arg) * phi_log_derivative_times_z(d, z)).real();
}

// ---------------------------------------------------------------------------

namespace {

double time_cap(const RadialSpiralData& d) { return 30 * std::log(10.0) / d.b_total; }

NewtonOptions disc_newton(double tol, int depth) {
    NewtonOptions o;
    o.abs_tol = 1e-300;
    o.rel_tol = tol;
    o.max_depth = depth;
    o.in_domain = [](cplx u) { return std::abs(u) < 1.0; };
    return o;
}

HolomorphicMap phi_map(const RadialSpiralData& d) {
    return [&d](cplx u) { return phi_with_derivative(d, u); };
}

}  // namespace

cplx radial_flow(const RadialSpiralData& d, cplx z, double t, const FlowOptions& opt) {
    if (!(std::abs(z) < 1)) throw DomainError("radial_flow: |z| >= 1");
    if (!(t >= 0)) throw DomainError("radial_flow: negative time");
    if (t == 0 || z == 0.0) return z;
    t = std::min(t, time_cap(d));
    const cplx rate(d.b_total, -d.a);
    PathFunction path = [&](double s) {
        return std::exp(-rate * s) * phi_eval(d, std::polar(1.0, -d.a * s) * z);
    };
    const auto n = static_cast<std::size_t>(
        std::ceil(opt.points_per_unit * (std::abs(d.a) + d.b_total) * t)) + 2;
    std::vector<double> params(n + 1);
    for (std::size_t i = 0; i <= n; ++i) params[i] = t * static_cast<double>(i) / static_cast<double>(n);
    auto sol = continue_along_path(phi_map(d), path, params, z, disc_newton(opt.newton_tol, opt.max_depth));
    return sol.back();
}

// ---------------------------------------------------------------------------

std::vector<TraceSample> radial_trace(const RadialSpiralData& d, std::size_t k, const std::vector<double>& t_grid,
                                      const TraceOptions& opt) {
    if (k >= d.size()) throw ConfigError("radial_trace: slit index out of range");
    if (t_grid.empty() || t_grid.front() != 0.0) throw ConfigError("radial_trace: grid must start at t = 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1])) throw ConfigError("radial_trace: grid must be increasing");

    const cplx zeta = d.zeta[k];
    const cplx tip = phi_boundary(d, zeta);
    const cplx second = phi_second_derivative_at(d, k);
    const cplx rate(d.b_total, -d.a);
    const double cap = time_cap(d);
    auto target = [&](double t) { return std::exp(-rate * std::min(t, cap)) * tip; };
    const auto f = phi_map(d);
    const NewtonOptions nopt = disc_newton(opt.newton_tol, opt.max_depth);

    auto quadratic_seed = [&](double t) {
        cplx delta = std::sqrt(2.0 * (target(t) - tip) / second);
        cplx p1 = zeta + delta, p2 = zeta - delta;
        cplx best = std::abs(p1) < std::abs(p2) ? p1 : p2;
        if (!(std::abs(best) < 1))
            throw InternalError("radial_trace: both quadratic seeds leave the disc for slit " + std::to_string(k + 1));
        return best;
    };

    const double t_seed = 0.5 * std::abs(second) * opt.seed_offset * opt.seed_offset / (std::abs(rate) * std::abs(tip));

    auto solve_near = [&](double t) {
        cplx z = quadratic_seed(t);
        double res = 0;
        if (!newton_solve(f, target(t), z, nopt, &res))
            throw ConvergenceError("radial_trace: Newton failed near the anchor", k, res, t);
        return z;
    };

    std::vector<TraceSample> out;
    out.push_back({0.0, zeta, 0.0});

    // Continuation anchor: solution at t_start (the first grid point if it is
    // closer to the anchor than the seed offset).
    std::size_t i = 1;
    while (i < t_grid.size() && t_grid[i] < t_seed) {
        cplx z = solve_near(t_grid[i]);
        out.push_back({t_grid[i], z, std::abs(phi_eval(d, z) - target(t_grid[i]))});
        ++i;
    }
    if (i < t_grid.size()) {
        double t_start;
        cplx z_start;
        bool record_start = false;
        if (out.size() > 1) {
            t_start = out.back().t;
            z_start = out.back().point;
        } else {
            t_start = std::min(t_seed, t_grid[i]);
            z_start = solve_near(t_start);
            record_start = t_start == t_grid[i];
        }
        std::vector<double> params{t_start};
        for (std::size_t j = i; j < t_grid.size(); ++j)
            if (t_grid[j] > t_start) params.push_back(t_grid[j]);
        auto sol = continue_along_path(f, target, params, z_start, nopt);
        if (record_start) out.push_back({t_start, sol[0], std::abs(phi_eval(d, sol[0]) - target(t_start))});
        for (std::size_t j = 1; j < params.size(); ++j)
            out.push_back({params[j], sol[j], std::abs(phi_eval(d, sol[j]) - target(params[j]))});
    }

    if (opt.refine_angle) {
        for (std::size_t j = 2; j < out.size();) {
            double jump = std::abs(wrap_angle(std::arg(out[j].point) - std::arg(out[j - 1].point)));
            if (jump > pi / 2 && out[j].t - out[j - 1].t > 1e-9) {
                double tm = 0.5 * (out[j - 1].t + out[j].t);
                std::vector<double> params{out[j - 1].t, tm};
                auto sol = continue_along_path(f, target, params, out[j - 1].point, nopt);
                out.insert(out.begin() + static_cast<long>(j), {tm, sol[1], std::abs(phi_eval(d, sol[1]) - target(tm))});
            } else {
                ++j;
            }
        }
    }
    return out;
}

TraceDiagnostics trace_diagnostics(const std::vector<TraceSample>& samples, cplx anchor) {
    std::vector<const TraceSample*> early;
    for (auto& s : samples)
        if (s.t > 0) early.push_back(&s);
    if (early.size() < 10) throw ConfigError("trace_diagnostics: at least 10 samples with t > 0 are required");

    TraceDiagnostics out{};
    // Direction of gamma - anchor measured from the tangent i*anchor.
    const cplx tangent = I * anchor;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const std::size_t m = 10;
    for (std::size_t i = 0; i < m; ++i) {
        double x = std::sqrt(early[i]->t);
        double y = std::arg((early[i]->point - anchor) / tangent);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double denom = m * sxx - sx * sx;
    double slope = denom != 0 ? (m * sxy - sx * sy) / denom : 0.0;
    out.start_angle = (sy - slope * sx) / m;

    // Unwrapped argument of gamma.
    double unwrapped = std::arg(samples.front().point);
    double start = unwrapped;
    double prev = unwrapped;
    out.modulus_monotone = true;
    for (std::size_t i = 1; i < samples.size(); ++i) {
        double a = std::arg(samples[i].point);
        double next = unwrapped + wrap_angle(a - prev);
        double lo = std::floor((unwrapped - start) / pi), hi = std::floor((next - start) / pi);
        if (lo != hi) {
            double level = start + std::max(lo, hi) * pi;
            double frac = (level - unwrapped) / (next - unwrapped);
            out.crossing_times.push_back(samples[i - 1].t + frac * (samples[i].t - samples[i - 1].t));
        }
        unwrapped = next;
        prev = a;
        if (!(std::abs(samples[i].point) < std::abs(samples[i - 1].point))) out.modulus_monotone = false;
    }
    out.total_winding = (unwrapped - start) / (2 * pi);
    return out;
}

double semigroup_residual(const RadialSpiralData& d, cplx z, double s, double t, const FlowOptions& opt) {
    const double a = d.a;
    cplx lhs = radial_flow(d, std::polar(1.0, a * (t + s)) * z, t + s, opt);
    cplx inner = radial_flow(d, std::polar(1.0, a * s) * z, s, opt);
    cplx rhs = radial_flow(d, std::polar(1.0, a * t) * inner, t, opt);
    return std::abs(lhs - rhs);
}

std::vector<double> convergence_experiment(const RadialConfig& base, const std::vector<double>& a_values,
                                           const std::vector<cplx>& z_samples, double t, const FlowOptions& opt) {
    std::vector<double> out;
    for (double a : a_values) {
        RadialConfig c = base;
        c.a = a;
        auto d = compute_spiral_data(c);
        double sup = 0;
        for (cplx z : z_samples) {
            if (std::abs(z) > 0.8 + 1e-12) throw DomainError("convergence_experiment: sample outside |z| <= 0.8");
            sup = std::max(sup, std::abs(radial_flow(d, z, t, opt) - z * std::exp(-d.b_total * t)));
        }
        out.push_back(sup);
    }
    return out;
}

// ---------------------------------------------------------------------------

double boundary_profile(const RadialSpiralData& d, double theta) {
    double s = theta * std::sin(d.half_arg);
    for (std::size_t k = 0; k < d.size(); ++k) s -= 2 * d.alpha[k] * std::log(std::abs(std::sin(0.5 * (theta - d.rho[k]))));
    return s;
}

double boundary_profile_derivative(const RadialSpiralData& d, double theta) {
    double s = std::sin(d.half_arg);
    for (std::size_t k = 0; k < d.size(); ++k) s -= d.alpha[k] / std::tan(0.5 * (theta - d.rho[k]));
    return s;
}

double boundary_profile_second_derivative(const RadialSpiralData& d, double theta) {
    double s = 0;
    for (std::size_t k = 0; k < d.size(); ++k) {
        double sn = std::sin(0.5 * (theta - d.rho[k]));
        s += d.alpha[k] / (2 * sn * sn);
    }
    return s;
}

std::vector<BoundarySample> phi_boundary_image(const RadialSpiralData& d, const std::vector<double>& theta_grid) {
    std::vector<BoundarySample> out;
    out.reserve(theta_grid.size());
    for (double th : theta_grid) {
        for (double r : d.rho) {
            double dist = std::abs(wrap_angle(th - r));
            if (dist < 1e-6)
                throw DomainError("phi_boundary_image: grid angle " + std::to_string(th) +
                                  " is too close to a singular point");
        }
        out.push_back({th, phi_boundary(d, std::polar(1.0, th)), boundary_profile(d, th)});
    }
    return out;
}

}  // namespace slitflow
