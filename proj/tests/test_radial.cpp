#include <doctest.h>

#include <cmath>
#include <random>

#include "slitflow/radial.hpp"

using namespace slitflow;

namespace {

struct Gen {
    std::mt19937_64 eng;
    explicit Gen(std::uint64_t seed) : eng(seed) {}
    double unit() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    cplx in_disc(double r) { return std::polar(r * std::sqrt(unit()), uniform(-pi, pi)); }
    RadialConfig config(std::size_t n) {
        RadialConfig c;
        // Sorted angles kept at least 0.05 apart.
        std::vector<double> th;
        while (th.size() < n) {
            double x = uniform(0, 2 * pi);
            bool ok = true;
            for (double y : th) ok = ok && std::abs(wrap_angle(x - y)) > 0.05;
            if (ok) th.push_back(x);
        }
        std::sort(th.begin(), th.end());
        c.theta = th;
        for (std::size_t k = 0; k < n; ++k) c.b.push_back(uniform(0.05, 1.5));
        c.a = uniform(-3, 3);
        return c;
    }
};

const RadialConfig spiral1{{0}, {1}, 1};
const RadialConfig still1{{0}, {1}, 0};
const RadialConfig pair{{0, pi}, {0.5, 0.5}, 0};

}  // namespace

TEST_CASE("compute_spiral_data examples") {
    auto d = compute_spiral_data(spiral1);
    REQUIRE(d.size() == 1);
    CHECK(std::abs(d.xi[0] - I) < 1e-12);
    CHECK(d.alpha[0] == doctest::Approx(-std::sqrt(0.5)).epsilon(1e-12));

    auto s = compute_spiral_data(still1);
    CHECK(std::abs(s.xi[0] + 1.0) < 1e-12);
    CHECK(s.alpha[0] == doctest::Approx(-1).epsilon(1e-12));

    auto p = compute_spiral_data(pair);
    REQUIRE(p.size() == 2);
    CHECK(std::abs(p.xi[0] - I) < 1e-12);
    CHECK(std::abs(p.xi[1] + I) < 1e-12);
    CHECK(p.alpha[0] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(p.alpha[1] == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("phi examples") {
    auto d = compute_spiral_data(spiral1);
    CHECK(phi_eval(d, 0.0) == cplx(0));
    // 1/2 (1/2 - i)^{i - 1} with the disc branch of log(z - i).
    cplx L = branch_log_disc(0.5, I);
    cplx expected = 0.5 * std::exp(cplx(-1, 1) * L);
    CHECK(std::abs(phi_eval(d, 0.5) - expected) < 1e-12);

    auto p = compute_spiral_data(pair);
    for (cplx z : {cplx(0.3), cplx(0, 0.5), cplx(-0.2, 0.4)})
        CHECK(std::abs(phi_eval(p, z) - z / (1.0 + z * z)) < 1e-12);
    CHECK(std::abs(phi_derivative(p, 0.0) - 1.0) < 1e-12);
    CHECK(std::abs(phi_derivative(p, 0.5) - 0.48) < 1e-12);
    CHECK_THROWS_AS(phi_eval(p, 1.0), DomainError);
}

TEST_CASE("phi derivative matches finite differences") {
    Gen g(21);
    for (int c = 0; c < 20; ++c) {
        auto d = compute_spiral_data(g.config(1 + c % 4));
        for (int i = 0; i < 20; ++i) {
            cplx z = g.in_disc(0.9);
            const double h = 1e-5;
            cplx fd = (phi_eval(d, z + h) - phi_eval(d, z - h)) / (2 * h);
            cplx an = phi_derivative(d, z);
            CHECK(std::abs(fd - an) < 1e-6 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("sum identity, negativity and interlacing over random configurations") {
    Gen g(22);
    for (int trial = 0; trial < 1000; ++trial) {
        auto cfg = g.config(1 + trial % 5);
        auto d = compute_spiral_data(cfg);
        double s = 0;
        for (double a : d.alpha) {
            CHECK(a < 0);
            s += a;
        }
        CHECK(std::abs(s + std::cos(d.half_arg)) < 1e-10);
        const std::size_t n = d.size();
        for (std::size_t k = 0; k < n; ++k) {
            // Each rho lies on its own arc between consecutive anchors.
            double lo = d.parity == 0 ? cfg.theta[k] : (k == 0 ? cfg.theta[n - 1] - 2 * pi : cfg.theta[k - 1]);
            double hi = d.parity == 0 ? (k + 1 < n ? cfg.theta[k + 1] : cfg.theta[0] + 2 * pi) : cfg.theta[k];
            double r = d.rho[k];
            while (r > hi) r -= 2 * pi;
            while (r < lo) r += 2 * pi;
            CHECK(r > lo);
            CHECK(r < hi);
        }
    }
}

TEST_CASE("spirallike functional is positive on the disc") {
    Gen g(23);
    for (int c = 0; c < 5; ++c) {
        auto d = compute_spiral_data(g.config(1 + c));
        double mn = INFINITY;
        for (int i = 0; i < 10000; ++i) mn = std::min(mn, spirallike_functional(d, g.in_disc(0.999)));
        CHECK(mn > 0);
    }
}

TEST_CASE("radial_flow basics") {
    auto d = compute_spiral_data(spiral1);
    CHECK(std::abs(radial_flow(d, cplx(0.3, 0.2), 0) - cplx(0.3, 0.2)) < 1e-15);
    for (double t : {0.5, 1.0, 3.0}) CHECK(std::abs(radial_flow(d, 0.0, t)) < 1e-14);
    cplx w = radial_flow(d, cplx(0.3, 0.2), 1.0);
    CHECK(std::abs(w) < 1);
    // Functional equation phi(f) = e^{-(b - ia)t} phi(e^{-iat} z).
    cplx lhs = phi_eval(d, w), rhs = std::exp(-cplx(1, -1) * 1.0) * phi_eval(d, std::polar(1.0, -1.0) * cplx(0.3, 0.2));
    CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("semigroup residual") {
    Gen g(24);
    auto d = compute_spiral_data({{0.4, 2.9}, {0.6, 0.3}, 0.7});
    for (int i = 0; i < 20; ++i) {
        cplx z = g.in_disc(0.8);
        CHECK(semigroup_residual(d, z, 0, g.unit()) < 1e-12);
        CHECK(semigroup_residual(d, z, g.unit(), 0) < 1e-12);
        CHECK(semigroup_residual(d, z, g.unit(), g.unit()) < 1e-6);
    }
}

TEST_CASE("conjugation symmetry between a and -a") {
    auto plus = compute_spiral_data({{0}, {1}, 1.3});
    auto minus = compute_spiral_data({{0}, {1}, -1.3});
    Gen g(25);
    for (int i = 0; i < 20; ++i) {
        cplx z = g.in_disc(0.8);
        double t = g.uniform(0.1, 2);
        CHECK(std::abs(radial_flow(minus, z, t) - std::conj(radial_flow(plus, std::conj(z), t))) < 1e-8);
    }
}

TEST_CASE("starlike pair: trace is the real segment x/(1 + x^2) = e^{-t}/2") {
    auto d = compute_spiral_data(pair);
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(0.1 * i);
    auto tr = radial_trace(d, 0, grid);
    CHECK(tr[0].point == cplx(1.0));
    CHECK(tr[0].residual == 0);
    for (std::size_t i = 1; i < tr.size(); ++i) {
        double c = std::exp(-grid[i]) / 2;
        double x = (1 - std::sqrt(1 - 4 * c * c)) / (2 * c);
        CHECK(std::abs(tr[i].point - x) < 1e-9);
    }
    std::vector<double> early{0};
    for (int i = 0; i < 20; ++i) early.push_back(1e-8 * std::ldexp(1.0, i));
    auto diag = trace_diagnostics(radial_trace(d, 0, early), 1.0);
    CHECK(std::abs(diag.start_angle - pi / 2) < 0.05);
    CHECK(std::abs(trace_diagnostics(tr, 1.0).total_winding) < 1e-6);
}

TEST_CASE("single spiral: orthogonal start, monotone modulus, more than two turns by t = 20") {
    auto d = compute_spiral_data(spiral1);
    std::vector<double> grid{0};
    for (int i = 0; i < 27; ++i) grid.push_back(1e-8 * std::ldexp(1.0, i));
    for (int i = 1; i <= 200; ++i)
        if (0.1 * i > grid.back()) grid.push_back(0.1 * i);
    auto tr = radial_trace(d, 0, grid);
    for (auto& s : tr) CHECK(s.residual < 1e-8);
    auto diag = trace_diagnostics(tr, 1.0);
    CHECK(std::abs(diag.start_angle - pi / 2) < 0.05);
    CHECK(diag.modulus_monotone);
    CHECK(diag.total_winding > 2);
    // Crossing times of the real diameter come closer together in log scale but stay ordered.
    for (std::size_t i = 1; i < diag.crossing_times.size(); ++i) CHECK(diag.crossing_times[i] > diag.crossing_times[i - 1]);
}

TEST_CASE("first crossing of the diameter comes earlier as the rotation grows") {
    std::vector<double> grid{0};
    for (int i = 0; i < 27; ++i) grid.push_back(1e-8 * std::ldexp(1.0, i));
    for (int i = 1; i <= 400; ++i)
        if (0.05 * i > grid.back()) grid.push_back(0.05 * i);
    TraceOptions to;
    to.refine_angle = true;
    double prev = INFINITY;
    for (double a : {1.0, 2.0, 4.0, 8.0}) {
        auto d = compute_spiral_data({{0}, {1}, a});
        auto diag = trace_diagnostics(radial_trace(d, 0, grid, to), 1.0);
        REQUIRE_FALSE(diag.crossing_times.empty());
        CHECK(diag.crossing_times[0] < prev);
        prev = diag.crossing_times[0];
    }
}

TEST_CASE("convergence towards the dilation as the rotation grows") {
    std::vector<cplx> zs;
    Gen g(26);
    for (int i = 0; i < 20; ++i) zs.push_back(g.in_disc(0.8));
    auto dev = convergence_experiment({{0}, {1}, 0}, {10, 100, 1000}, zs, 1.0);
    REQUIRE(dev.size() == 3);
    CHECK(dev[0] > dev[1]);
    CHECK(dev[1] > dev[2]);
    auto zero = convergence_experiment({{0}, {1}, 0}, {10, 100}, zs, 0.0);
    CHECK(zero[0] == 0);
    CHECK(convergence_experiment({{0}, {1}, 0}, {1}, {0.5}, 1.0)[0] > 0);
}

TEST_CASE("boundary image") {
    auto d = compute_spiral_data(spiral1);
    // |phi| grows without bound near the singular point.
    double r = d.rho[0];
    auto near = phi_boundary_image(d, {r + 1e-3, r + 1e-5});
    CHECK(std::abs(near[1].value) > std::abs(near[0].value));
    CHECK(std::abs(near[1].value) > 1e2);
    CHECK_THROWS_AS(phi_boundary_image(d, {r + 1e-7}), DomainError);
    // Theta'(theta_k) = 0 at the anchors.
    auto m = compute_spiral_data({{0.3, 2.0, 4.4}, {0.2, 0.5, 0.3}, -0.8});
    for (double th : m.theta) CHECK(std::abs(boundary_profile_derivative(m, th)) < 1e-10);
    // Theta is concave between consecutive singular points.
    for (double th = 0.01; th < 2 * pi; th += 0.01) {
        bool close = false;
        for (double x : m.rho) close = close || std::abs(wrap_angle(th - x)) < 1e-3;
        if (!close) CHECK(boundary_profile_second_derivative(m, th) < 0);
    }
}

TEST_CASE("boundary arcs lie on logarithmic spirals") {
    // On the arc around anchor k, phi(e^{i theta}) = phi(zeta_k) exp(-e^{-ih} s) for real s,
    // so Im(e^{ih} log(phi / phi(zeta_k))) vanishes modulo the 2 pi i ambiguity.
    auto d = compute_spiral_data({{0.3, 2.0, 4.4}, {0.2, 0.5, 0.3}, -0.8});
    for (std::size_t k = 0; k < d.size(); ++k) {
        double left = INFINITY, right = INFINITY;
        for (double r : d.rho) {
            double up = r - d.theta[k];
            while (up <= 0) up += 2 * pi;
            right = std::min(right, up);
            left = std::min(left, 2 * pi - up);
        }
        std::vector<double> grid;
        for (int i = -200; i <= 200; ++i) {
            double th = d.theta[k] + (i < 0 ? left : right) * (std::abs(i) / 201.0) * (i < 0 ? -1 : 1);
            th = std::fmod(th + 4 * pi, 2 * pi);
            grid.push_back(th);
        }
        std::sort(grid.begin(), grid.end());
        cplx tip = phi_boundary(d, d.zeta[k]);
        for (auto& s : phi_boundary_image(d, grid)) {
            cplx q = std::log(s.value / tip);
            double dev = INFINITY;
            for (int m = -3; m <= 3; ++m)
                dev = std::min(dev, std::abs((std::polar(1.0, d.half_arg) * (q + 2.0 * pi * m * I)).imag()));
            CHECK(dev < 1e-6);
        }
    }
}
