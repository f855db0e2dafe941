#include "slitflow/polyroots.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace slitflow {

double RadialConfig::b_total() const { return std::accumulate(b.begin(), b.end(), 0.0); }

void RadialConfig::validate() const {
    if (theta.empty()) throw ConfigError("radial config: at least one anchor is required");
    if (theta.size() != b.size()) throw ConfigError("radial config: theta and b differ in length");
    for (std::size_t i = 0; i < theta.size(); ++i) {
        if (!std::isfinite(theta[i]) || theta[i] < 0 || theta[i] >= 2 * pi)
            throw ConfigError("radial config: theta[" + std::to_string(i) + "] outside [0, 2pi)");
        if (i > 0 && !(theta[i] > theta[i - 1]))
            throw ConfigError("radial config: theta must be strictly increasing (index " + std::to_string(i) + ")");
        if (!(b[i] > 0) || !std::isfinite(b[i]))
            throw ConfigError("radial config: b[" + std::to_string(i) + "] must be positive");
    }
    if (!std::isfinite(a)) throw ConfigError("radial config: a must be finite");
}

void ChordalConfig::validate() const {
    if (k.empty()) throw ConfigError("chordal config: at least one point is required");
    if (k.size() != b.size()) throw ConfigError("chordal config: k and b differ in length");
    for (std::size_t i = 0; i < k.size(); ++i) {
        if (!std::isfinite(k[i])) throw ConfigError("chordal config: k[" + std::to_string(i) + "] not finite");
        if (i > 0 && !(k[i] > k[i - 1]))
            throw ConfigError("chordal config: k must be strictly increasing (index " + std::to_string(i) + ")");
        if (!(b[i] > 0) || !std::isfinite(b[i]))
            throw ConfigError("chordal config: b[" + std::to_string(i) + "] must be positive");
    }
}

// ---------------------------------------------------------------------------

template <class T>
Polynomial<T>::Polynomial(std::vector<T> c) : coeffs(std::move(c)) {
    while (!coeffs.empty() && coeffs.back() == T(0)) coeffs.pop_back();
    if (coeffs.empty()) throw ConfigError("polynomial: all coefficients are zero");
}

template <class T>
Polynomial<T> Polynomial<T>::derivative() const {
    if (coeffs.size() == 1) {
        Polynomial p;
        p.coeffs = {T(0)};
        return p;
    }
    std::vector<T> d(coeffs.size() - 1);
    for (std::size_t i = 1; i < coeffs.size(); ++i) d[i - 1] = coeffs[i] * T(static_cast<double>(i));
    Polynomial p;
    p.coeffs = std::move(d);
    return p;
}

template <class T>
Polynomial<T> Polynomial<T>::operator*(const Polynomial& o) const {
    std::vector<T> r(coeffs.size() + o.coeffs.size() - 1, T(0));
    for (std::size_t i = 0; i < coeffs.size(); ++i)
        for (std::size_t j = 0; j < o.coeffs.size(); ++j) r[i + j] += coeffs[i] * o.coeffs[j];
    return Polynomial(std::move(r));
}

template <class T>
Polynomial<T> Polynomial<T>::operator+(const Polynomial& o) const {
    std::vector<T> r(std::max(coeffs.size(), o.coeffs.size()), T(0));
    for (std::size_t i = 0; i < coeffs.size(); ++i) r[i] += coeffs[i];
    for (std::size_t i = 0; i < o.coeffs.size(); ++i) r[i] += o.coeffs[i];
    return Polynomial(std::move(r));
}

template <class T>
Polynomial<T> Polynomial<T>::scaled(T s) const {
    std::vector<T> r = coeffs;
    for (auto& c : r) c *= s;
    return Polynomial(std::move(r));
}

template struct Polynomial<double>;
template struct Polynomial<cplx>;

RealPolynomial build_chordal_P(const ChordalConfig& config) {
    config.validate();
    const std::size_t n = config.size();
    RealPolynomial prod({1.0});
    for (double k : config.k) prod = prod * RealPolynomial::linear(k);
    RealPolynomial p = prod * RealPolynomial({0.0, 1.0});
    for (std::size_t j = 0; j < n; ++j) {
        RealPolynomial term({4.0 * config.b[j]});
        for (std::size_t i = 0; i < n; ++i)
            if (i != j) term = term * RealPolynomial::linear(config.k[i]);
        p = p + term;
    }
    return p;
}

ComplexPolynomial build_radial_QiaR(const RadialConfig& config) {
    config.validate();
    const std::size_t n = config.size();
    std::vector<cplx> zeta(n);
    for (std::size_t k = 0; k < n; ++k) zeta[k] = std::polar(1.0, config.theta[k]);

    // (zeta - z) as a polynomial in z.
    auto factor = [](cplx zt) { return ComplexPolynomial({zt, cplx(-1.0)}); };

    ComplexPolynomial R({cplx(1.0)});
    for (cplx zt : zeta) R = R * factor(zt);

    std::vector<cplx> acc(n + 1, cplx(0));
    for (std::size_t k = 0; k < n; ++k) {
        ComplexPolynomial term({zeta[k] * config.b[k], cplx(config.b[k])});
        for (std::size_t j = 0; j < n; ++j)
            if (j != k) term = term * factor(zeta[j]);
        for (std::size_t i = 0; i < term.coeffs.size(); ++i) acc[i] += term.coeffs[i];
    }
    for (std::size_t i = 0; i < R.coeffs.size(); ++i) acc[i] -= I * config.a * R.coeffs[i];
    ComplexPolynomial p(std::move(acc));

    const double b = config.b_total();
    cplx prod_zeta = 1.0;
    for (cplx zt : zeta) prod_zeta *= zt;
    const cplx c0 = cplx(b, -config.a) * prod_zeta;
    const cplx lead = (n % 2 == 1 ? 1.0 : -1.0) * cplx(b, config.a);
    const double scale = b + std::abs(config.a);
    if (p.degree() != static_cast<int>(n) || std::abs(p.coeffs.front() - c0) > 1e-12 * scale * (1 << n) ||
        std::abs(p.leading() - lead) > 1e-12 * scale * (1 << n))
        throw InternalError("build_radial_QiaR: constant or leading coefficient mismatch");
    return p;
}

// ---------------------------------------------------------------------------

namespace {

using lcplx = std::complex<long double>;

struct EvalResult {
    lcplx p, dp;
    long double norm;  // sum |c_k| |z|^k
};

EvalResult horner(const std::vector<lcplx>& c, lcplx z) {
    lcplx p = 0, dp = 0;
    long double norm = 0, az = std::abs(z);
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
        dp = dp * z + p;
        p = p * z + *it;
        norm = norm * az + std::abs(*it);
    }
    return {p, dp, norm};
}

}  // namespace

std::vector<cplx> find_roots(const ComplexPolynomial& poly, const RootOptions& opt) {
    const int n = poly.degree();
    if (n < 1) throw ConfigError("find_roots: degree must be at least 1");

    std::vector<lcplx> c(poly.coeffs.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = lcplx(poly.coeffs[i].real(), poly.coeffs[i].imag());

    if (n == 1) {
        lcplx r = -c[0] / c[1];
        return {cplx(static_cast<double>(r.real()), static_cast<double>(r.imag()))};
    }

    // Initial guesses on a circle whose radius is the geometric mean of the
    // root moduli, rotated off the real axis to avoid symmetric stalls.
    long double lead = std::abs(c[n]);
    long double radius = 0;
    for (int k = 0; k < n; ++k) radius = std::max(radius, std::pow(std::abs(c[k]) / lead, 1.0L / (n - k)));
    if (radius == 0) radius = 1;
    std::vector<lcplx> z(n);
    for (int k = 0; k < n; ++k) {
        long double ang = 2.0L * std::numbers::pi_v<long double> * k / n + 0.4L;
        z[k] = std::polar(radius, ang);
    }

    std::vector<bool> done(n, false);
    for (int iter = 0; iter < opt.max_iter; ++iter) {
        bool all_done = true;
        for (int k = 0; k < n; ++k) {
            if (done[k]) continue;
            auto e = horner(c, z[k]);
            if (std::abs(e.p) <= 4 * std::numeric_limits<long double>::epsilon() * e.norm) {
                done[k] = true;
                continue;
            }
            lcplx ratio = e.p / e.dp;
            lcplx sum = 0;
            for (int j = 0; j < n; ++j)
                if (j != k) sum += 1.0L / (z[k] - z[j]);
            lcplx step = ratio / (1.0L - ratio * sum);
            if (!std::isfinite(std::abs(step))) step = ratio;
            z[k] -= step;
            if (std::abs(step) <= 4 * std::numeric_limits<long double>::epsilon() * std::abs(z[k]))
                done[k] = true;
            else
                all_done = false;
        }
        if (all_done) break;
    }

    // Newton polishing: keep the best iterate over a few steps.
    for (int k = 0; k < n; ++k) {
        auto e = horner(c, z[k]);
        long double best = std::abs(e.p);
        lcplx zb = z[k];
        for (int it = 0; it < 5 && std::abs(e.dp) > 0; ++it) {
            lcplx cand = zb - e.p / e.dp;
            auto ec = horner(c, cand);
            if (std::abs(ec.p) < best) {
                best = std::abs(ec.p);
                zb = cand;
                e = ec;
            } else {
                break;
            }
        }
        z[k] = zb;
    }

    std::vector<cplx> out(n);
    for (int k = 0; k < n; ++k) {
        cplx r(static_cast<double>(z[k].real()), static_cast<double>(z[k].imag()));
        auto e = horner(c, lcplx(r.real(), r.imag()));
        // Residual of the returned double-precision root against the
        // coefficient norm, weighted by max(1, |r|)^k.
        long double bound = opt.tol * horner(c, lcplx(std::max(1.0, std::abs(r)), 0)).norm;
        if (!(std::abs(e.p) <= bound))
            throw ConvergenceError("find_roots: residual bound not met", static_cast<std::size_t>(k),
                                   static_cast<double>(std::abs(e.p)));
        out[k] = r;
    }
    std::sort(out.begin(), out.end(), [](cplx x, cplx y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    return out;
}

std::vector<cplx> find_roots(const RealPolynomial& poly, const RootOptions& opt) {
    std::vector<cplx> c(poly.coeffs.begin(), poly.coeffs.end());
    return find_roots(ComplexPolynomial(std::move(c)), opt);
}

// ---------------------------------------------------------------------------

double default_cluster_tol(const ChordalConfig& config) {
    double m = 0;
    for (double k : config.k) m = std::max(m, std::abs(k));
    return 1e-8 * (1 + m);
}

namespace {

struct MergedRoot {
    cplx value;
    int multiplicity;
};

// Taylor coefficients of p at c: p(c + u) = sum t_j u^j.
std::vector<long double> taylor_at(const RealPolynomial& p, long double c) {
    std::vector<long double> a(p.coeffs.begin(), p.coeffs.end());
    const std::size_t n = a.size();
    // Repeated synthetic division.
    for (std::size_t j = 0; j + 1 < n; ++j)
        for (std::size_t i = n - 1; i > j; --i) a[i - 1] += c * a[i];
    return a;
}

// Newton on the (m-1)-th derivative to locate the center of a suspected
// m-fold cluster, starting from the centroid.
bool cluster_center(const RealPolynomial& p, int m, long double& c) {
    RealPolynomial d = p;
    for (int i = 0; i < m - 1; ++i) d = d.derivative();
    RealPolynomial dd = d.derivative();
    for (int it = 0; it < 60; ++it) {
        long double v = 0, dv = 0;
        for (auto k = d.coeffs.rbegin(); k != d.coeffs.rend(); ++k) v = v * c + *k;
        for (auto k = dd.coeffs.rbegin(); k != dd.coeffs.rend(); ++k) dv = dv * c + *k;
        if (dv == 0) return v == 0;
        long double step = v / dv;
        c -= step;
        if (std::abs(step) <= 1e-18L * (1 + std::abs(c))) return true;
    }
    return true;
}

// Spread of the m roots near center c implied by the local Taylor polynomial
// truncated at degree m. Returns the largest |u| among its roots.
double implied_spread(const RealPolynomial& p, long double c, int m) {
    auto t = taylor_at(p, c);
    std::vector<cplx> local(t.begin(), t.begin() + m + 1);
    bool all_zero = true;
    for (int j = 0; j < m; ++j)
        if (local[j] != cplx(0)) all_zero = false;
    if (all_zero) return 0.0;
    // Drop exactly vanishing low-order terms (roots at u = 0).
    std::size_t shift = 0;
    while (shift < static_cast<std::size_t>(m) && local[shift] == cplx(0)) ++shift;
    std::vector<cplx> reduced(local.begin() + shift, local.end());
    if (reduced.size() < 2) return 0.0;
    auto r = find_roots(ComplexPolynomial(reduced), RootOptions{1e-6, 500});
    double spread = 0;
    for (cplx u : r) spread = std::max(spread, std::abs(u));
    return 2 * spread;
}

}  // namespace

RootStructure classify_roots(const RealPolynomial& poly, const ChordalConfig& config) {
    return classify_roots(poly, config, default_cluster_tol(config));
}

RootStructure classify_roots(const RealPolynomial& poly, const ChordalConfig& config, double tol) {
    config.validate();
    const int n = static_cast<int>(config.size());
    if (poly.degree() != n + 1) throw ConfigError("classify_roots: polynomial degree must be n + 1");
    if (!(tol > 0)) throw ConfigError("classify_roots: cluster tolerance must be positive");

    // Work with the monic polynomial so everything below is scale invariant.
    const RealPolynomial p = poly.scaled(1.0 / poly.leading());
    std::vector<cplx> roots = find_roots(p);

    double scale = 1;
    for (cplx r : roots) scale = std::max(scale, std::abs(r));
    const double candidate_radius = std::max(1e3 * tol, 1e-4 * scale);

    // Group nearby roots into candidate clusters (connected components).
    const std::size_t N = roots.size();
    std::vector<int> group(N);
    std::iota(group.begin(), group.end(), 0);
    std::function<int(int)> find = [&](int x) { return group[x] == x ? x : group[x] = find(group[x]); };
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j)
            if (std::abs(roots[i] - roots[j]) <= candidate_radius) group[find(int(i))] = find(int(j));

    std::vector<MergedRoot> merged;
    std::vector<std::vector<std::size_t>> members(N);
    for (std::size_t i = 0; i < N; ++i) members[find(int(i))].push_back(i);

    auto check_ambiguous = [&](double spread) {
        if (spread > tol && spread <= 2 * tol)
            throw ConfigError("classify_roots: root separation " + std::to_string(spread) +
                              " is within a factor 2 of the cluster tolerance; choose a different tolerance");
    };

    for (auto& g : members) {
        if (g.empty()) continue;
        const int m = static_cast<int>(g.size());
        bool done = false;
        for (int mult = std::min(m, 3); mult >= 2 && !done; --mult) {
            // Choose the mult members closest to the group centroid.
            cplx centroid = 0;
            for (auto i : g) centroid += roots[i];
            centroid /= double(m);
            std::vector<std::size_t> sel = g;
            std::sort(sel.begin(), sel.end(), [&](auto x, auto y) {
                return std::abs(roots[x] - centroid) < std::abs(roots[y] - centroid);
            });
            sel.resize(mult);
            cplx cm = 0;
            for (auto i : sel) cm += roots[i];
            cm /= double(mult);
            if (std::abs(cm.imag()) > candidate_radius) continue;
            long double c = cm.real();
            if (!cluster_center(p, mult, c)) continue;
            double spread = implied_spread(p, c, mult);
            check_ambiguous(spread);
            if (spread <= tol) {
                merged.push_back({cplx(static_cast<double>(c), 0.0), mult});
                for (auto i : g)
                    if (std::find(sel.begin(), sel.end(), i) == sel.end()) merged.push_back({roots[i], 1});
                done = true;
            }
        }
        if (!done)
            for (auto i : g) merged.push_back({roots[i], 1});
    }

    // Snap simple near-real roots onto the axis.
    for (auto& r : merged) {
        if (r.multiplicity == 1 && std::abs(r.value.imag()) < tol) {
            check_ambiguous(2 * std::abs(r.value.imag()));
            r.value = r.value.real();
        } else if (r.multiplicity == 1) {
            check_ambiguous(2 * std::abs(r.value.imag()));
        }
    }

    RootStructure out;
    out.cluster_tol = tol;
    out.raw_roots = roots;

    std::vector<MergedRoot> real;
    std::vector<cplx> upper;
    for (auto& r : merged) {
        if (r.value.imag() == 0.0)
            real.push_back(r);
        else if (r.value.imag() > 0)
            upper.push_back(r.value);
    }
    std::sort(real.begin(), real.end(), [](auto& x, auto& y) { return x.value.real() < y.value.real(); });

    int total = 0;
    for (auto& r : merged) total += r.multiplicity;
    if (total != n + 1) throw InternalError("classify_roots: multiplicities do not sum to n + 1");

    const auto& k = config.k;
    auto gap_of = [&](double x) -> int {  // -1 below k_1, n-1 above k_n, j for (k_j, k_{j+1})
        if (x < k.front()) return -1;
        if (x > k.back()) return n - 1;
        for (int j = 0; j + 1 < n; ++j)
            if (x > k[j] && x < k[j + 1]) return j;
        throw InternalError("classify_roots: real root coincides with a driving point");
    };

    // Collect the real roots per gap.
    std::vector<std::vector<MergedRoot>> in_gap(n + 1);  // index gap + 1
    for (auto& r : real) in_gap[gap_of(r.value.real()) + 1].push_back(r);

    auto interlacing_error = [&](int j) {
        return InternalError("classify_roots: no root of P in the gap (k_" + std::to_string(j + 1) + ", k_" +
                             std::to_string(j + 2) + ")");
    };

    if (upper.size() > 1) throw InternalError("classify_roots: more than one non-real conjugate pair");
    if (upper.size() == 1) {
        ComplexPair cp{upper[0], {}};
        for (int j = 0; j + 1 < n; ++j) {
            auto& g = in_gap[j + 1];
            if (g.size() != 1 || g[0].multiplicity != 1) throw interlacing_error(j);
            cp.lambda.push_back(g[0].value.real());
        }
        out.kind = cp;
        return out;
    }

    // All roots real. Find the special gap (the one carrying extra roots).
    std::vector<double> lambda;
    int special = -2;
    for (int g = -1; g < n; ++g) {
        auto& rs = in_gap[g + 1];
        int mult = 0;
        for (auto& r : rs) mult += r.multiplicity;
        const bool outer = (g == -1 || g == n - 1);
        const int expected = outer ? 0 : 1;
        if (mult == expected) {
            if (!outer) lambda.push_back(rs[0].value.real());
            continue;
        }
        if (special != -2) throw InternalError("classify_roots: extra roots spread over two gaps");
        special = g;
        if (mult != expected + 2) throw InternalError("classify_roots: unexpected root count in a gap");
    }
    if (special == -2) throw InternalError("classify_roots: missing the two extra roots");

    const int position_case = special == -1 ? 1 : (special == n - 1 ? 2 : 3);
    auto& rs = in_gap[special + 1];

    // Reinsert lambdas in order: the special gap contributes one lambda when it is interior.
    auto insert_lambda = [&](double x) {
        lambda.insert(std::upper_bound(lambda.begin(), lambda.end(), x), x);
    };

    int max_mult = 0;
    for (auto& r : rs) max_mult = std::max(max_mult, r.multiplicity);

    if (max_mult == 1) {
        DistinctReal d{};
        d.ordering_case = position_case;
        if (position_case == 3) {
            // Three simple roots: the smallest is lambda, the other two are the rhos.
            insert_lambda(rs[0].value.real());
            d.rho_low = rs[1].value.real();
            d.rho_high = rs[2].value.real();
            d.gap = special;
        } else {
            d.rho_low = rs[0].value.real();
            d.rho_high = rs[1].value.real();
        }
        d.lambda = lambda;
        out.kind = d;
    } else if (max_mult == 2) {
        DoubleRoot d{};
        d.position_case = position_case;
        for (auto& r : rs) {
            if (r.multiplicity == 2)
                d.rho0 = r.value.real();
            else
                insert_lambda(r.value.real());
        }
        if (position_case == 3) d.gap = special;
        d.lambda = lambda;
        out.kind = d;
    } else {
        if (position_case != 3) throw InternalError("classify_roots: triple root outside the gaps");
        TripleRoot t{};
        t.rho0 = rs[0].value.real();
        t.mu = special;
        t.lambda = lambda;
        out.kind = t;
    }
    return out;
}

}  // namespace slitflow
