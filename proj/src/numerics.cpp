#include "slitflow/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace slitflow {

double principal_arg(cplx w) {
    double a = std::atan2(w.imag(), w.real());
    // atan2 returns pi for negative reals with +0 imaginary part; the
    // convention here is the half-open interval [-pi, pi).
    if (a >= pi) a = -pi;
    return a;
}

cplx principal_log(cplx w) { return {std::log(std::abs(w)), principal_arg(w)}; }

double arccot(double x) { return pi / 2 - std::atan(x); }

cplx branch_log_closed_disc(cplx z, cplx xi) {
    if (std::abs(z) > 1.0 + 1e-12) throw DomainError("branch_log: |z| > 1");
    if (z == xi) throw DomainError("branch_log: z coincides with the branch point");
    return principal_log(-xi) + principal_log(1.0 - z / xi);
}

cplx branch_log_disc(cplx z, cplx xi) {
    if (!(std::abs(z) < 1.0)) throw DomainError("branch_log_disc: |z| >= 1");
    return principal_log(-xi) + principal_log(1.0 - z / xi);
}

cplx log_upper(cplx w) {
    if (w.imag() < 0.0) {
        if (w.imag() < -1e-300) throw DomainError("log_upper: base in the lower half-plane");
    }
    double a = std::atan2(std::abs(w.imag()), w.real());
    return {std::log(std::abs(w)), a};
}

cplx cpow(cplx base_log, cplx exponent) { return std::exp(exponent * base_log); }

double wrap_angle(double x) {
    double r = std::fmod(x + pi, 2 * pi);
    if (r < 0) r += 2 * pi;
    return r - pi;
}

// ---------------------------------------------------------------------------

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

OdePath integrate_ode(const OdeField& field, double t0, double t1, cplx y0,
                      const OdeOptions& opt, const OdeGuard& guard) {
    if (!(t1 > t0)) throw ConfigError("integrate_ode: t1 must exceed t0");
    if (!(opt.rel_tol > 0) || !(opt.abs_tol > 0)) throw ConfigError("integrate_ode: tolerances must be positive");

    OdePath path;
    path.samples.push_back({t0, y0});

    double t = t0;
    cplx y = y0;
    cplx k1 = field(t, y);
    if (!finite(k1)) {
        path.stop = OdeStop::non_finite;
        return path;
    }

    const double span = t1 - t0;
    double h = opt.initial_step;
    if (h <= 0) {
        double scale = opt.abs_tol + opt.rel_tol * std::abs(y);
        double d0 = std::abs(y) / scale, d1 = std::abs(k1) / scale;
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 * span : 0.01 * d0 / d1;
        h = std::min(h, span);
    }

    constexpr double beta = 0.04;
    constexpr double alpha = 0.2 - 0.75 * beta;
    constexpr double safety = 0.9, min_factor = 0.2, max_factor = 10.0;
    double err_prev = 1e-4;
    bool last_rejected = false;

    while (t < t1) {
        if (path.accepted_steps + path.rejected_steps >= opt.max_steps) {
            path.stop = OdeStop::max_steps;
            break;
        }
        if (t + h > t1) h = t1 - t;
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            path.stop = OdeStop::step_underflow;
            break;
        }

        cplx k2 = field(t + c2 * h, y + h * (a21 * k1));
        cplx k3 = field(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
        cplx k4 = field(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
        cplx k5 = field(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
        cplx k6 = field(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
        cplx y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        cplx k7 = field(t + h, y_new);
        cplx err_vec = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double err = std::numeric_limits<double>::infinity();
        if (finite(y_new) && finite(k7) && finite(err_vec)) {
            double scale = opt.abs_tol + opt.rel_tol * std::max(std::abs(y), std::abs(y_new));
            err = std::abs(err_vec) / scale;
        }

        if (err <= 1.0) {
            double t_new = (t + h >= t1) ? t1 : t + h;
            if (guard && !guard(t_new, y_new)) {
                // Retry with a smaller step so the truncation point is as late
                // as the guard allows, then stop.
                if (h > 1e-10 * span) {
                    h *= 0.25;
                    last_rejected = true;
                    ++path.rejected_steps;
                    continue;
                }
                path.stop = OdeStop::guard;
                break;
            }
            t = t_new;
            y = y_new;
            k1 = k7;
            ++path.accepted_steps;
            path.final_error_estimate = err;
            if (opt.keep_samples || t >= t1) path.samples.push_back({t, y});

            double factor = err == 0.0 ? max_factor
                                       : safety * std::pow(err, -alpha) * std::pow(err_prev, beta);
            factor = std::clamp(factor, min_factor, last_rejected ? 1.0 : max_factor);
            h *= factor;
            err_prev = std::max(err, 1e-4);
            last_rejected = false;
        } else {
            ++path.rejected_steps;
            double factor = std::isfinite(err) ? std::max(min_factor, safety * std::pow(err, -alpha)) : min_factor;
            h *= factor;
            last_rejected = true;
        }
    }
    if (path.stop == OdeStop::completed && t < t1) path.stop = OdeStop::step_underflow;
    if (!opt.keep_samples && path.samples.size() > 1 && path.samples.back().t != t) path.samples.push_back({t, y});
    return path;
}

// ---------------------------------------------------------------------------

bool newton_solve(const HolomorphicMap& f, cplx target, cplx& z, const NewtonOptions& opt,
                  double* residual_out) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    cplx x = z;
    if (opt.in_domain && !opt.in_domain(x)) return false;
    auto fx = f(x);
    double res = std::abs(fx.value - target);
    for (int it = 0; it <= opt.max_iter; ++it) {
        if (!finite(fx.value) || !finite(fx.derivative)) return false;
        // Residual floor from rounding in the evaluation itself.
        double floor = 16 * eps * (std::abs(fx.value) + std::abs(fx.derivative) * std::abs(x));
        double tol = opt.abs_tol + opt.rel_tol * std::abs(target) + floor;
        if (res <= tol) {
            z = x;
            if (residual_out) *residual_out = res;
            return true;
        }
        if (it == opt.max_iter) break;
        if (std::abs(fx.derivative) < opt.min_derivative) return false;
        cplx step = (fx.value - target) / fx.derivative;
        // Damped update: halve until the iterate stays in the domain and the
        // residual does not grow too much.
        bool accepted = false;
        for (int d = 0; d < 30; ++d) {
            cplx cand = x - step;
            if (!opt.in_domain || opt.in_domain(cand)) {
                auto fc = f(cand);
                double rc = std::abs(fc.value - target);
                if (finite(fc.value) && (rc < res || d >= 8 || rc <= tol)) {
                    x = cand;
                    fx = fc;
                    res = rc;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) return false;
    }
    return false;
}

namespace {

struct Continuation {
    const HolomorphicMap& f;
    const PathFunction& path;
    const NewtonOptions& opt;
    std::size_t index = 0;
    double last_residual = 0.0;

    // One Newton solve for the target at s1 starting from the solution z0 at the previous parameter.
    // Uses a first-order predictor and rejects results whose Newton correction
    // is large compared with the predicted move (sign of a branch jump).
    bool step(double /*s0*/, cplx z0, cplx w0, double s1, cplx& z1, cplx& w1) {
        w1 = path(s1);
        auto d = f(z0);
        cplx pred = z0;
        if (std::abs(d.derivative) > opt.min_derivative) pred = z0 + (w1 - w0) / d.derivative;
        double move = std::abs(pred - z0);
        for (cplx seed : {pred, z0}) {
            if (opt.in_domain && !opt.in_domain(seed)) continue;
            cplx z = seed;
            double res = 0;
            if (!newton_solve(f, w1, z, opt, &res)) continue;
            double corr = std::abs(z - pred);
            if (corr > 0.5 * move + 1e-9 * (1 + std::abs(z0)) && move > 0) continue;
            z1 = z;
            last_residual = res;
            return true;
        }
        last_residual = std::abs(f(z0).value - w1);
        return false;
    }

    cplx advance(double s0, cplx z0, cplx w0, double s1, int depth) {
        cplx z1, w1;
        if (step(s0, z0, w0, s1, z1, w1)) return z1;
        if (depth >= opt.max_depth)
            throw ConvergenceError("newton continuation failed at parameter " + std::to_string(s1) +
                                       " (target index " + std::to_string(index) + ")",
                                   index, last_residual, s1);
        double sm = 0.5 * (s0 + s1);
        cplx zm = advance(s0, z0, w0, sm, depth + 1);
        return advance(sm, zm, path(sm), s1, depth + 1);
    }
};

}  // namespace

std::vector<cplx> continue_along_path(const HolomorphicMap& f, const PathFunction& path,
                                      std::span<const double> params, cplx seed,
                                      const NewtonOptions& opt) {
    if (params.empty()) throw ConfigError("continue_along_path: empty parameter list");
    std::vector<cplx> out;
    out.reserve(params.size());
    Continuation c{f, path, opt};

    cplx z = seed;
    cplx w0 = path(params[0]);
    double res = 0;
    if (!newton_solve(f, w0, z, opt, &res))
        throw ConvergenceError("newton continuation: seed does not converge", 0, std::abs(f(seed).value - w0),
                               params[0]);
    out.push_back(z);
    for (std::size_t i = 1; i < params.size(); ++i) {
        c.index = i;
        z = c.advance(params[i - 1], z, path(params[i - 1]), params[i], 0);
        out.push_back(z);
    }
    return out;
}

std::vector<cplx> newton_continuation(const HolomorphicMap& f, std::span<const cplx> targets,
                                      cplx seed, const NewtonOptions& opt) {
    if (targets.empty()) throw ConfigError("newton_continuation: empty target list");
    // Piecewise-linear interpolation of the targets, parameterized by index.
    PathFunction path = [&](double s) {
        auto i = static_cast<std::size_t>(std::floor(s));
        if (i + 1 >= targets.size()) return targets.back();
        double frac = s - static_cast<double>(i);
        return targets[i] + frac * (targets[i + 1] - targets[i]);
    };
    std::vector<double> params(targets.size());
    for (std::size_t i = 0; i < params.size(); ++i) params[i] = static_cast<double>(i);
    return continue_along_path(f, path, params, seed, opt);
}

std::vector<cplx> newton_continuation(const HolomorphicMap& f, std::span<const cplx> targets,
                                      cplx seed, double tol, int max_iter) {
    NewtonOptions opt;
    opt.abs_tol = tol;
    opt.max_iter = max_iter;
    return newton_continuation(f, targets, seed, opt);
}

}  // namespace slitflow
