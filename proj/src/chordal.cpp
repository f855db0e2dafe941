#include "slitflow/chordal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace slitflow {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

template <class T>
T prod_diff(T x, const std::vector<double>& pts) {
    T p = 1;
    for (double q : pts) p *= x - q;
    return p;
}

double prod_diff_except(double x, const std::vector<double>& pts, std::size_t skip) {
    double p = 1;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (i != skip) p *= x - pts[i];
    return p;
}

[[noreturn]] void invariant_failed(const std::string& what, double value) {
    throw InternalError("build_case: " + what + " (value " + std::to_string(value) + ")");
}

}  // namespace

std::string ChordalCaseData::name() const {
    return std::visit(overloaded{[](const SpiralCase&) { return std::string("spiral"); },
                                 [](const DistinctRealCase&) { return std::string("distinct_real"); },
                                 [](const DoubleCase&) { return std::string("double"); },
                                 [](const TripleCase&) { return std::string("triple"); }},
                      kind);
}

ChordalCaseData build_case(const ChordalConfig& config) {
    auto P = build_chordal_P(config);
    return build_case(config, classify_roots(P, config));
}

ChordalCaseData build_case(const ChordalConfig& config, const RootStructure& rs) {
    config.validate();
    const auto& k = config.k;
    ChordalCaseData out;
    out.config = config;

    std::visit(
        overloaded{
            [&](const ComplexPair& cp) {
                SpiralCase s;
                s.beta = cp.beta;
                s.lambda = cp.lambda;
                const cplx beta = cp.beta;
                s.B = prod_diff(beta, k) / (2.0 * I * beta.imag() * prod_diff(beta, cp.lambda));
                s.psi = std::arg(s.B);
                const double absB = std::abs(s.B);
                for (std::size_t j = 0; j < cp.lambda.size(); ++j) {
                    double l = cp.lambda[j];
                    double A = prod_diff(l, k) / (prod_diff_except(l, cp.lambda, j) * std::norm(l - beta));
                    if (!(A < 0)) invariant_failed("spiral residue A_j must be negative", A);
                    s.A.push_back(A);
                    s.a.push_back(-A / absB);
                }
                if (!(std::abs(s.psi) < pi / 2)) invariant_failed("psi must lie in (-pi/2, pi/2)", s.psi);
                out.kind = s;
            },
            [&](const DistinctReal& dr) {
                DistinctRealCase d;
                d.lambda = dr.lambda;
                d.ordering_case = dr.ordering_case;
                // Residue of prod(z - k)/P at a simple root r, with P' from the root product.
                auto residue = [&](double r, double other) {
                    return prod_diff(r, k) / ((r - other) * prod_diff(r, dr.lambda));
                };
                double c_low = residue(dr.rho_low, dr.rho_high);
                double c_high = residue(dr.rho_high, dr.rho_low);
                if ((c_low > 0) == (c_high > 0))
                    invariant_failed("exactly one extra root must carry a positive residue", c_low * c_high);
                if (c_low > 0) {
                    d.rho1 = dr.rho_low, d.rho2 = dr.rho_high, d.B1 = c_low, d.B2 = c_high;
                } else {
                    d.rho1 = dr.rho_high, d.rho2 = dr.rho_low, d.B1 = c_high, d.B2 = c_low;
                }
                for (std::size_t j = 0; j < dr.lambda.size(); ++j) {
                    double l = dr.lambda[j];
                    double A = prod_diff(l, k) / (prod_diff_except(l, dr.lambda, j) * (l - d.rho1) * (l - d.rho2));
                    if (!(A < 0)) invariant_failed("residue A_j must be negative", A);
                    d.A.push_back(A);
                    d.a.push_back(-A / d.B1);
                }
                d.exponent_b = -d.B2 / d.B1;
                if (!(d.B2 < 0)) invariant_failed("B_2 must be negative", d.B2);
                out.kind = d;
            },
            [&](const DoubleRoot& dr) {
                DoubleCase d;
                d.rho0 = dr.rho0;
                d.lambda = dr.lambda;
                d.position_case = dr.position_case;
                const double r = dr.rho0;
                // F = prod(z - k)/prod(z - lambda); D2 = F(r), D1 = F'(r).
                double F = prod_diff(r, k) / prod_diff(r, dr.lambda);
                double logd = 0;
                for (double q : k) logd += 1 / (r - q);
                for (double q : dr.lambda) logd -= 1 / (r - q);
                d.D2 = F;
                d.D1 = F * logd;
                for (std::size_t j = 0; j < dr.lambda.size(); ++j) {
                    double l = dr.lambda[j];
                    double A = prod_diff(l, k) / (prod_diff_except(l, dr.lambda, j) * (l - r) * (l - r));
                    if (!(A < 0)) invariant_failed("residue A_j must be negative", A);
                    d.A.push_back(A);
                }
                if (r != 0) {
                    d.B2 = d.D2 / r;
                    d.B1 = d.D1 - *d.B2;
                }
                // D2 = B2 rho0 is positive exactly when rho0 lies in (k_mu, lambda_mu) or above k_n.
                bool positive_expected = r > k.back();
                for (std::size_t m = 0; m + 1 < k.size(); ++m)
                    if (r > k[m] && r < dr.lambda.at(m)) positive_expected = true;
                if ((d.D2 > 0) != positive_expected) invariant_failed("sign of B_2 rho_0 does not match its position", d.D2);
                out.kind = d;
            },
            [&](const TripleRoot& tr) {
                TripleCase d;
                d.rho0 = tr.rho0;
                d.mu = tr.mu;
                d.lambda = tr.lambda;
                const double r = tr.rho0;
                double F = prod_diff(r, k) / prod_diff(r, tr.lambda);
                double s1 = 0, s1p = 0;
                for (double q : k) s1 += 1 / (r - q), s1p -= 1 / ((r - q) * (r - q));
                for (double q : tr.lambda) s1 -= 1 / (r - q), s1p += 1 / ((r - q) * (r - q));
                d.D3 = F;
                d.D2 = F * s1;
                d.D1 = 0.5 * F * (s1 * s1 + s1p);
                d.C = d.D2;
                for (std::size_t j = 0; j < tr.lambda.size(); ++j) {
                    double l = tr.lambda[j];
                    double A = prod_diff(l, k) / (prod_diff_except(l, tr.lambda, j) * std::pow(l - r, 3));
                    if (!(A < 0)) invariant_failed("residue A_j must be negative", A);
                    d.A.push_back(A);
                }
                if (!(d.D3 < 0)) invariant_failed("B_3 rho_0^2 must be negative", d.D3);
                if (r != 0) {
                    d.B3 = d.D3 / (r * r);
                    d.B2 = d.D2 / r - 2 * *d.B3;
                    d.B1 = d.D1 - *d.B2 - *d.B3;
                }
                out.kind = d;
            }},
        rs.kind);

    double resid = coefficient_identity_residual(out);
    if (resid > 1e-8) invariant_failed("coefficient identity violated", resid);
    return out;
}

double coefficient_identity_residual(const ChordalCaseData& c) {
    return std::visit(
        overloaded{[](const SpiralCase& s) {
                       // Residues of prod(z - k)/P sum to 1, and 2 cos psi - sum a = 1/|B|.
                       double r1 = std::abs(sum(s.A) + 2 * s.B.real() - 1);
                       double r2 = std::abs(2 * std::cos(s.psi) - sum(s.a) - 1 / std::abs(s.B));
                       return std::max(r1, r2);
                   },
                   [](const DistinctRealCase& d) {
                       double r1 = std::abs(d.B1 + d.B2 + sum(d.A) - 1);
                       double r2 = std::abs(-1 + d.exponent_b + sum(d.a) + 1 / d.B1);
                       return std::max(r1, r2);
                   },
                   [](const DoubleCase& d) {
                       double r = std::abs(d.D1 + sum(d.A) - 1);
                       if (d.B1) r = std::max(r, std::abs(*d.B1 + *d.B2 + sum(d.A) - 1));
                       return r;
                   },
                   [](const TripleCase& d) {
                       double r = std::abs(d.D1 + sum(d.A) - 1);
                       if (d.B1) r = std::max(r, std::abs(*d.B1 + *d.B2 + *d.B3 + sum(d.A) - 1));
                       return r;
                   }},
        c.kind);
}

// ---------------------------------------------------------------------------

namespace {

ValueAndDerivative h_any(const ChordalCaseData& c, cplx z) {
    return std::visit(
        overloaded{
            [&](const SpiralCase& s) -> ValueAndDerivative {
                const cplx rot = std::polar(1.0, -s.psi), rot2 = rot * rot;
                const cplx bc = std::conj(s.beta);
                cplx E = rot2 * log_upper(z - bc), dE = rot2 / (z - bc);
                for (std::size_t j = 0; j < s.lambda.size(); ++j) {
                    E -= s.a[j] * rot * log_upper(z - s.lambda[j]);
                    dE -= s.a[j] * rot / (z - s.lambda[j]);
                }
                cplx e = std::exp(E);
                return {(z - s.beta) * e, e * (1.0 + (z - s.beta) * dE)};
            },
            [&](const DistinctRealCase& d) -> ValueAndDerivative {
                cplx E = d.exponent_b * log_upper(z - d.rho2) - log_upper(z - d.rho1);
                cplx dE = d.exponent_b / (z - d.rho2) - 1.0 / (z - d.rho1);
                for (std::size_t j = 0; j < d.lambda.size(); ++j) {
                    E += d.a[j] * log_upper(z - d.lambda[j]);
                    dE += d.a[j] / (z - d.lambda[j]);
                }
                cplx h = std::exp(E);
                return {h, h * dE};
            },
            [&](const DoubleCase& d) -> ValueAndDerivative {
                const cplx u = z - d.rho0;
                cplx h = d.D1 * log_upper(u) - d.D2 / u;
                cplx dh = d.D1 / u + d.D2 / (u * u);
                for (std::size_t j = 0; j < d.lambda.size(); ++j) {
                    h += d.A[j] * log_upper(z - d.lambda[j]);
                    dh += d.A[j] / (z - d.lambda[j]);
                }
                return {h, dh};
            },
            [&](const TripleCase& d) -> ValueAndDerivative {
                const cplx u = z - d.rho0;
                cplx h = d.D1 * log_upper(u) - d.D2 / u - d.D3 / (2.0 * u * u);
                cplx dh = d.D1 / u + d.D2 / (u * u) + d.D3 / (u * u * u);
                for (std::size_t j = 0; j < d.lambda.size(); ++j) {
                    h += d.A[j] * log_upper(z - d.lambda[j]);
                    dh += d.A[j] / (z - d.lambda[j]);
                }
                return {h, dh};
            }},
        c.kind);
}

}  // namespace

ValueAndDerivative h_with_derivative(const ChordalCaseData& c, cplx z) {
    if (!(z.imag() > 0)) throw DomainError("h_eval: Im z must be positive");
    return h_any(c, z);
}

cplx h_eval(const ChordalCaseData& c, cplx z) { return h_with_derivative(c, z).value; }
cplx h_derivative(const ChordalCaseData& c, cplx z) { return h_with_derivative(c, z).derivative; }

cplx h_boundary(const ChordalCaseData& c, cplx z) {
    if (z.imag() < 0) throw DomainError("h_boundary: point below the real axis");
    return h_any(c, cplx(z.real(), std::max(z.imag(), 0.0))).value;
}

cplx h_second_derivative_at_anchor(const ChordalCaseData& c, std::size_t j) {
    const auto& cfg = c.config;
    if (j >= cfg.size()) throw ConfigError("h_second_derivative_at_anchor: index out of range");
    // prod_{i != j}(k_j - k_i) / P(k_j) = 1 / (4 b_j).
    const double base = 1 / (4 * cfg.b[j]);
    const cplx hk = h_boundary(c, cfg.k[j]);
    return std::visit(overloaded{[&](const SpiralCase& s) { return hk * base / s.B; },
                                 [&](const DistinctRealCase& d) { return -hk * base / d.B1; },
                                 [&](const DoubleCase&) { return cplx(base); },
                                 [&](const TripleCase&) { return cplx(base); }},
                      c.kind);
}

double spiral_functional(const ChordalCaseData& c, cplx z) {
    const auto* s = std::get_if<SpiralCase>(&c.kind);
    if (!s) throw UnsupportedCaseError("spiral_functional: only defined in the spiral case");
    auto hd = h_with_derivative(c, z);
    return (std::polar(1.0, s->psi) * (z - s->beta) * (z - std::conj(s->beta)) * hd.derivative / hd.value).imag();
}

double tau_of_t(double t) { return -0.5 * std::log1p(-t); }
double t_of_tau(double tau) { return -std::expm1(-2 * tau); }

cplx model_evolution(const ChordalCaseData& c, cplx h0, double tau) {
    return std::visit(
        overloaded{[&](const SpiralCase& s) { return std::exp(-tau * std::polar(1.0, -s.psi) / std::abs(s.B)) * h0; },
                   [&](const DistinctRealCase& d) { return std::exp(tau / d.B1) * h0; },
                   [&](const DoubleCase&) { return h0 - tau; },
                   [&](const TripleCase&) { return h0 - tau; }},
        c.kind);
}

// ---------------------------------------------------------------------------

namespace {

NewtonOptions half_plane_newton(double tol, int depth) {
    NewtonOptions o;
    o.abs_tol = 1e-300;
    o.rel_tol = tol;
    o.max_depth = depth;
    o.in_domain = [](cplx u) { return u.imag() > 0; };
    return o;
}

HolomorphicMap h_map(const ChordalCaseData& c) {
    return [&c](cplx u) { return h_with_derivative(c, u); };
}

std::vector<double> uniform(double end, std::size_t n) {
    std::vector<double> p(n + 1);
    for (std::size_t i = 0; i <= n; ++i) p[i] = end * static_cast<double>(i) / static_cast<double>(n);
    return p;
}

}  // namespace

cplx chordal_flow(const ChordalCaseData& c, cplx z, double t, const ChordalFlowOptions& opt) {
    if (!(z.imag() > 0)) throw DomainError("chordal_flow: Im z must be positive");
    if (!(t >= 0 && t < 1)) throw DomainError("chordal_flow: t must lie in [0, 1)");
    if (t > opt.t_cap) throw DomainError("chordal_flow: t exceeds the configured cap");
    if (t == 0) return z;
    const double tau = tau_of_t(t);
    PathFunction path = [&](double s) { return model_evolution(c, h_eval(c, std::exp(s) * z), s); };
    auto n = static_cast<std::size_t>(std::ceil(opt.points_per_unit * tau)) + 2;
    auto params = uniform(tau, n);
    return continue_along_path(h_map(c), path, params, z, half_plane_newton(opt.newton_tol, opt.max_depth)).back();
}

cplx chordal_semigroup(const ChordalCaseData& c, cplx z, double tau, const ChordalFlowOptions& opt) {
    if (!(z.imag() > 0)) throw DomainError("chordal_semigroup: Im z must be positive");
    if (tau == 0) return z;
    const cplx h0 = h_eval(c, z);
    PathFunction path = [&](double s) { return model_evolution(c, h0, s); };
    auto n = static_cast<std::size_t>(std::ceil(opt.points_per_unit * tau)) + 2;
    auto params = uniform(tau, n);
    return continue_along_path(h_map(c), path, params, z, half_plane_newton(opt.newton_tol, opt.max_depth)).back();
}

// ---------------------------------------------------------------------------

std::vector<TraceSample> chordal_trace_tau(const ChordalCaseData& c, std::size_t j, const std::vector<double>& tau_grid,
                                           const ChordalTraceOptions& opt) {
    const auto& cfg = c.config;
    if (j >= cfg.size()) throw ConfigError("chordal_trace: index out of range");
    if (tau_grid.empty() || tau_grid.front() != 0.0) throw ConfigError("chordal_trace: grid must start at 0");
    for (std::size_t i = 1; i < tau_grid.size(); ++i)
        if (!(tau_grid[i] > tau_grid[i - 1])) throw ConfigError("chordal_trace: grid must be increasing");

    const double kj = cfg.k[j];
    const cplx tip = h_boundary(c, kj);
    const cplx second = h_second_derivative_at_anchor(c, j);
    auto target = [&](double tau) { return model_evolution(c, tip, tau); };
    const auto f = h_map(c);
    const NewtonOptions nopt = half_plane_newton(opt.newton_tol, opt.max_depth);

    double scale = 1;
    for (double q : cfg.k) scale = std::max(scale, 1 + std::abs(q));
    const double delta0 = opt.seed_offset * scale;
    // |d target / d tau| at tau = 0.
    const double speed = std::abs(target(1e-8) - tip) / 1e-8;
    const double tau_seed = 0.5 * std::abs(second) * delta0 * delta0 / speed;

    auto quadratic_seed = [&](double tau) {
        cplx delta = std::sqrt(2.0 * (target(tau) - tip) / second);
        cplx p = kj + delta;
        if (p.imag() <= 0) p = kj - delta;
        if (!(p.imag() > 0))
            throw InternalError("chordal_trace: no quadratic seed in the upper half-plane for slit " +
                                std::to_string(j + 1));
        return p;
    };
    auto solve_near = [&](double tau) {
        cplx z = quadratic_seed(tau);
        double res = 0;
        if (!newton_solve(f, target(tau), z, nopt, &res))
            throw ConvergenceError("chordal_trace: Newton failed near the driving point", j, res, tau);
        return z;
    };
    auto residual = [&](double tau, cplx z) { return std::abs(h_eval(c, z) - target(tau)); };

    std::vector<TraceSample> out;
    out.push_back({0.0, cplx(kj, 0.0), 0.0});
    std::size_t i = 1;
    while (i < tau_grid.size() && tau_grid[i] < tau_seed) {
        cplx z = solve_near(tau_grid[i]);
        out.push_back({tau_grid[i], z, residual(tau_grid[i], z)});
        ++i;
    }
    if (i < tau_grid.size()) {
        double s0;
        cplx z0;
        bool record = false;
        if (out.size() > 1) {
            s0 = out.back().t;
            z0 = out.back().point;
        } else {
            s0 = std::min(tau_seed, tau_grid[i]);
            z0 = solve_near(s0);
            record = s0 == tau_grid[i];
        }
        std::vector<double> params{s0};
        for (std::size_t m = i; m < tau_grid.size(); ++m)
            if (tau_grid[m] > s0) params.push_back(tau_grid[m]);
        // Densify so that continuation steps stay moderate in tau.
        std::vector<double> dense{params[0]};
        std::vector<std::size_t> keep{0};
        for (std::size_t m = 1; m < params.size(); ++m) {
            double gap = params[m] - params[m - 1];
            auto sub = static_cast<std::size_t>(std::ceil(std::min(gap * 4.0, 256.0)));
            for (std::size_t q = 1; q < sub; ++q) dense.push_back(params[m - 1] + gap * q / sub);
            dense.push_back(params[m]);
            keep.push_back(dense.size() - 1);
        }
        auto sol = continue_along_path(f, target, dense, z0, nopt);
        if (record) out.push_back({s0, sol[0], residual(s0, sol[0])});
        for (std::size_t m = 1; m < keep.size(); ++m)
            out.push_back({params[m], sol[keep[m]], residual(params[m], sol[keep[m]])});
    }
    return out;
}

std::vector<TraceSample> chordal_trace(const ChordalCaseData& c, std::size_t j, const std::vector<double>& t_grid,
                                       const ChordalTraceOptions& opt) {
    std::vector<double> tau(t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] >= 0 && t_grid[i] < 1)) throw ConfigError("chordal_trace: grid must lie in [0, 1)");
        tau[i] = tau_of_t(t_grid[i]);
    }
    auto out = chordal_trace_tau(c, j, tau, opt);
    for (std::size_t i = 0; i < out.size(); ++i) out[i].t = t_grid[i];
    return out;
}

cplx attraction_point(const ChordalCaseData& c) {
    return std::visit(overloaded{[](const SpiralCase& s) { return s.beta; },
                                 [](const DistinctRealCase& d) { return cplx(d.rho1); },
                                 [](const DoubleCase& d) { return cplx(d.rho0); },
                                 [](const TripleCase& d) { return cplx(d.rho0); }},
                      c.kind);
}

std::optional<double> expected_end_angle(const ChordalCaseData& c, std::size_t j) {
    return std::visit(
        overloaded{[](const SpiralCase&) -> std::optional<double> { return std::nullopt; },
                   [&](const DistinctRealCase& d) -> std::optional<double> {
                       // Residue of h at rho_1 with the boundary branch of each factor.
                       cplx L = d.exponent_b * log_upper(cplx(d.rho1 - d.rho2));
                       for (std::size_t m = 0; m < d.lambda.size(); ++m) L += d.a[m] * log_upper(cplx(d.rho1 - d.lambda[m]));
                       cplx H0 = std::exp(L);
                       double ang = std::arg(H0 / h_boundary(c, c.config.k.at(j)));
                       if (ang < 0) ang += 2 * pi;
                       return ang;
                   },
                   [](const DoubleCase& d) -> std::optional<double> { return d.D2 > 0 ? 0.0 : pi; },
                   [](const TripleCase&) -> std::optional<double> { return pi / 2; }},
        c.kind);
}

std::vector<double> end_analysis_tau_grid(const ChordalCaseData& c, std::size_t j, std::size_t points) {
    double scale = 1;
    for (double q : c.config.k) scale = std::max(scale, 1 + std::abs(q));
    const double tau_max = std::visit(
        overloaded{[](const SpiralCase& s) { return std::abs(s.B) / std::cos(s.psi) * std::log(1e8); },
                   [&](const DistinctRealCase& d) {
                       // |gamma - rho_1| ~ |H0 / h(k_j)| e^{-tau / B1}; stop near 1e-6 (1 + max |k|).
                       cplx L = d.exponent_b * log_upper(cplx(d.rho1 - d.rho2));
                       for (std::size_t m = 0; m < d.lambda.size(); ++m)
                           L += d.a[m] * log_upper(cplx(d.rho1 - d.lambda[m]));
                       double ratio = std::abs(std::exp(L) / h_boundary(c, c.config.k.at(j)));
                       return d.B1 * std::max(1.0, std::log(1e6 * ratio / scale));
                   },
                   [](const DoubleCase& d) { return 1e4 * std::max(1.0, std::abs(d.D2)); },
                   [](const TripleCase& d) { return 1e3 * std::max(1.0, std::abs(d.D3)); }},
        c.kind);
    if (points < 40) points = 40;
    // Geometric from 1e-8 so both the start and the end fits see enough samples.
    std::vector<double> grid{0.0};
    const double lo = std::log(1e-8), hi = std::log(tau_max);
    for (std::size_t i = 0; i < points; ++i) grid.push_back(std::exp(lo + (hi - lo) * i / (points - 1)));
    return grid;
}

IntersectionAngles intersection_angles(const ChordalCaseData& c, std::size_t j, const std::vector<TraceSample>& samples) {
    std::vector<const TraceSample*> pos;
    for (auto& s : samples)
        if (s.t > 0) pos.push_back(&s);
    constexpr std::size_t m = 10;
    if (pos.size() < 2 * m) throw ConfigError("intersection_angles: at least 20 samples with t > 0 are required");

    IntersectionAngles out{};
    const double kj = c.config.k.at(j);
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < m; ++i) {
            double x = std::sqrt(pos[i]->t);
            double y = std::arg(pos[i]->point - kj);
            sx += x, sy += y, sxx += x * x, sxy += x * y;
        }
        double den = m * sxx - sx * sx;
        double slope = den != 0 ? (m * sxy - sx * sy) / den : 0.0;
        out.start_angle = (sy - slope * sx) / m;
    }

    const cplx p = attraction_point(c);
    out.expected_end_angle = expected_end_angle(c, j);
    if (c.is_spiral()) {
        double prev = std::arg(samples.front().point - p), total = 0;
        for (std::size_t i = 1; i < samples.size(); ++i) {
            double a = std::arg(samples[i].point - p);
            total += wrap_angle(a - prev);
            prev = a;
        }
        out.winding = total / (2 * pi);
        return out;
    }

    // Quadratic least squares in r = |gamma - p| over the last m samples.
    double S[5] = {0, 0, 0, 0, 0}, T[3] = {0, 0, 0};
    for (std::size_t i = pos.size() - m; i < pos.size(); ++i) {
        double r = std::abs(pos[i]->point - p);
        double y = std::arg(pos[i]->point - p);
        double pw = 1;
        for (int q = 0; q < 5; ++q) {
            S[q] += pw;
            if (q < 3) T[q] += pw * y;
            pw *= r;
        }
    }
    // Solve the 3x3 normal equations by Cramer's rule.
    double M[3][3] = {{S[0], S[1], S[2]}, {S[1], S[2], S[3]}, {S[2], S[3], S[4]}};
    auto det3 = [](double a[3][3]) {
        return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
               a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    };
    double D = det3(M);
    if (std::abs(D) > 0 && std::isfinite(D)) {
        double M0[3][3] = {{T[0], S[1], S[2]}, {T[1], S[2], S[3]}, {T[2], S[3], S[4]}};
        out.end_angle = det3(M0) / D;
    } else {
        out.end_angle = T[0] / S[0];
    }
    return out;
}

// ---------------------------------------------------------------------------

double spiral_profile(const SpiralCase& s, double x) {
    double v = 2 * std::cos(s.psi) * std::log(std::abs(x - s.beta)) - 2 * std::sin(s.psi) * std::arg(x - s.beta);
    for (std::size_t j = 0; j < s.lambda.size(); ++j) v -= s.a[j] * std::log(std::abs(x - s.lambda[j]));
    return v;
}

std::vector<double> division_points(const ChordalCaseData& c) {
    std::vector<double> pts = c.config.k;
    std::visit(overloaded{[&](const SpiralCase& s) { pts.insert(pts.end(), s.lambda.begin(), s.lambda.end()); },
                          [&](const DistinctRealCase& d) {
                              pts.insert(pts.end(), d.lambda.begin(), d.lambda.end());
                              pts.push_back(d.rho1);
                              pts.push_back(d.rho2);
                          },
                          [&](const DoubleCase& d) {
                              pts.insert(pts.end(), d.lambda.begin(), d.lambda.end());
                              pts.push_back(d.rho0);
                          },
                          [&](const TripleCase& d) {
                              pts.insert(pts.end(), d.lambda.begin(), d.lambda.end());
                              pts.push_back(d.rho0);
                          }},
               c.kind);
    std::sort(pts.begin(), pts.end());
    return pts;
}

std::vector<ChordalBoundarySample> h_boundary_image(const ChordalCaseData& c, const std::vector<double>& x_grid) {
    auto pts = division_points(c);
    std::vector<double> special;
    for (double q : pts)
        if (std::find(c.config.k.begin(), c.config.k.end(), q) == c.config.k.end()) special.push_back(q);
    const auto* s = std::get_if<SpiralCase>(&c.kind);
    std::vector<ChordalBoundarySample> out;
    out.reserve(x_grid.size());
    for (double x : x_grid) {
        for (double q : special)
            if (std::abs(x - q) < 1e-9 * (1 + std::abs(x)))
                throw DomainError("h_boundary_image: grid point " + std::to_string(x) + " touches a singular point");
        double prof = s ? spiral_profile(*s, x) : std::numeric_limits<double>::quiet_NaN();
        out.push_back({x, h_boundary(c, x), prof});
    }
    return out;
}

}  // namespace slitflow
