#include "slitflow/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include <json.hpp>

#include "slitflow/bridge.hpp"
#include "slitflow/chordal.hpp"
#include "slitflow/radial.hpp"

namespace slitflow {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string join_issues(const std::vector<ValidationIssue>& issues) {
    std::string out = "invalid experiment spec:";
    for (auto& i : issues) out += "\n  " + i.path + ": " + i.message;
    return out;
}

// Collects every problem instead of stopping at the first one.
class Validator {
public:
    std::vector<ValidationIssue> issues;

    void fail(const std::string& path, const std::string& msg) { issues.push_back({path, msg}); }

    std::optional<double> number(const json& obj, const std::string& key, const std::string& path, bool required) {
        if (!obj.contains(key)) {
            if (required) fail(path + key, "is required");
            return std::nullopt;
        }
        const json& v = obj.at(key);
        if (!v.is_number()) {
            fail(path + key, "must be a number");
            return std::nullopt;
        }
        double d = v.get<double>();
        if (!std::isfinite(d)) {
            fail(path + key, "must be finite");
            return std::nullopt;
        }
        return d;
    }

    std::optional<std::vector<double>> numbers(const json& obj, const std::string& key, const std::string& path) {
        if (!obj.contains(key)) {
            fail(path + key, "is required");
            return std::nullopt;
        }
        const json& v = obj.at(key);
        if (!v.is_array() || v.empty()) {
            fail(path + key, "must be a nonempty array of numbers");
            return std::nullopt;
        }
        std::vector<double> out;
        bool ok = true;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
                fail(path + key + "[" + std::to_string(i) + "]", "must be a finite number");
                ok = false;
                continue;
            }
            out.push_back(v[i].get<double>());
        }
        if (!ok) return std::nullopt;
        return out;
    }

    std::optional<std::size_t> count(const json& obj, const std::string& key, const std::string& path) {
        if (!obj.contains(key)) return std::nullopt;
        const json& v = obj.at(key);
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            fail(path + key, "must be a nonnegative integer");
            return std::nullopt;
        }
        return static_cast<std::size_t>(v.get<long long>());
    }

    std::optional<std::string> string(const json& obj, const std::string& key, const std::string& path) {
        if (!obj.contains(key)) return std::nullopt;
        if (!obj.at(key).is_string()) {
            fail(path + key, "must be a string");
            return std::nullopt;
        }
        return obj.at(key).get<std::string>();
    }

    void unknown_keys(const json& obj, const std::string& path, std::initializer_list<const char*> known) {
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
                fail(path + it.key(), "unknown field");
        }
    }

    bool object(const json& obj, const std::string& key, const std::string& path) {
        if (!obj.contains(key)) return false;
        if (!obj.at(key).is_object()) {
            fail(path + key, "must be an object");
            return false;
        }
        return true;
    }
};

void check_weights(Validator& v, const std::vector<double>& b, const std::string& path) {
    for (std::size_t i = 0; i < b.size(); ++i)
        if (!(b[i] > 0)) v.fail(path + "b[" + std::to_string(i) + "]", "weight must be positive");
}

void check_increasing(Validator& v, const std::vector<double>& x, const std::string& path, const std::string& name) {
    for (std::size_t i = 1; i < x.size(); ++i)
        if (!(x[i] > x[i - 1]))
            v.fail(path + name + "[" + std::to_string(i) + "]", name + " must be strictly increasing");
}

std::optional<RadialConfig> parse_radial(Validator& v, const json& c) {
    const std::string p = "config.";
    v.unknown_keys(c, p, {"theta", "b", "a"});
    auto theta = v.numbers(c, "theta", p);
    auto b = v.numbers(c, "b", p);
    auto a = v.number(c, "a", p, false);
    if (theta) {
        check_increasing(v, *theta, p, "theta");
        for (std::size_t i = 0; i < theta->size(); ++i)
            if (!((*theta)[i] >= 0 && (*theta)[i] < 2 * pi))
                v.fail(p + "theta[" + std::to_string(i) + "]", "angle must lie in [0, 2pi)");
    }
    if (b) check_weights(v, *b, p);
    if (theta && b && theta->size() != b->size()) v.fail(p + "b", "must have the same length as theta");
    if (!theta || !b) return std::nullopt;
    return RadialConfig{*theta, *b, a.value_or(0.0)};
}

std::optional<ChordalConfig> parse_chordal(Validator& v, const json& c) {
    const std::string p = "config.";
    v.unknown_keys(c, p, {"k", "b"});
    auto k = v.numbers(c, "k", p);
    auto b = v.numbers(c, "b", p);
    if (k) check_increasing(v, *k, p, "k");
    if (b) check_weights(v, *b, p);
    if (k && b && k->size() != b->size()) v.fail(p + "b", "must have the same length as k");
    if (!k || !b) return std::nullopt;
    return ChordalConfig{*k, *b};
}

bool radial_flow_of(const ExperimentSpec& s) { return s.radial.has_value(); }

constexpr int max_geometric = 20;

}  // namespace

SpecError::SpecError(std::vector<ValidationIssue> issues) : ConfigError(join_issues(issues)), issues_(std::move(issues)) {}

ExperimentSpec parse_spec(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SpecError(std::vector<ValidationIssue>{{"$", std::string("parse error: ") + e.what()}});
    }
    if (!root.is_object()) throw SpecError(std::vector<ValidationIssue>{{"$", "experiment spec must be a JSON object"}});

    Validator v;
    ExperimentSpec spec;
    v.unknown_keys(root, "", {"name", "mode", "config", "t_grid", "samples", "oracle", "tolerances", "output", "debug"});
    if (auto n = v.string(root, "name", "")) spec.name = *n;

    auto mode = v.string(root, "mode", "");
    if (!mode) {
        if (!root.contains("mode")) v.fail("mode", "is required");
    } else if (*mode == "radial") {
        spec.mode = Mode::radial;
    } else if (*mode == "chordal") {
        spec.mode = Mode::chordal;
    } else if (*mode == "bridge") {
        spec.mode = Mode::bridge;
    } else if (*mode == "verify") {
        spec.mode = Mode::verify;
    } else {
        v.fail("mode", "must be one of radial, chordal, bridge, verify");
    }

    if (!root.contains("config")) {
        v.fail("config", "is required");
    } else if (v.object(root, "config", "")) {
        const json& c = root.at("config");
        bool radial = spec.mode == Mode::radial ||
                      (spec.mode == Mode::verify && c.contains("theta") && !c.contains("k"));
        if (radial)
            spec.radial = parse_radial(v, c);
        else
            spec.chordal = parse_chordal(v, c);
    }
    const bool radial = spec.mode == Mode::radial || (spec.mode == Mode::verify && spec.radial);

    if (v.object(root, "t_grid", "")) {
        const json& g = root.at("t_grid");
        const std::string p = "t_grid.";
        v.unknown_keys(g, p, {"kind", "count", "t_max"});
        if (auto k = v.string(g, "kind", p)) {
            if (*k == "linear")
                spec.t_grid.kind = GridSpec::Kind::linear;
            else if (*k == "geometric")
                spec.t_grid.kind = GridSpec::Kind::geometric;
            else
                v.fail(p + "kind", "must be linear or geometric");
        }
        if (auto n = v.count(g, "count", p)) spec.t_grid.count = *n;
        spec.t_grid.t_max = v.number(g, "t_max", p, false);
    }
    if (spec.t_grid.count < 2) v.fail("t_grid.count", "grid count must be at least 2");
    if (spec.t_grid.kind == GridSpec::Kind::geometric && spec.t_grid.count > max_geometric + 1)
        v.fail("t_grid.count", "geometric grids use m <= 20, so at most 21 points");
    if (spec.t_grid.t_max) {
        double tm = *spec.t_grid.t_max;
        if (!(tm > 0)) v.fail("t_grid.t_max", "must be positive");
        if (!radial && spec.mode != Mode::bridge && !(tm < 1)) v.fail("t_grid.t_max", "chordal times must stay below 1");
    }

    if (v.object(root, "samples", "")) {
        const json& s = root.at("samples");
        const std::string p = "samples.";
        v.unknown_keys(s, p, {"count", "region", "radius", "re_min", "re_max", "im_min", "im_max", "seed"});
        if (auto n = v.count(s, "count", p)) spec.samples.count = *n;
        if (auto r = v.string(s, "region", p)) {
            if (*r == "disc")
                spec.samples.region = SampleSpec::Region::disc;
            else if (*r == "box")
                spec.samples.region = SampleSpec::Region::box;
            else
                v.fail(p + "region", "must be disc or box");
        }
        if (auto x = v.number(s, "radius", p, false)) spec.samples.radius = *x;
        if (auto x = v.number(s, "re_min", p, false)) spec.samples.re_min = *x;
        if (auto x = v.number(s, "re_max", p, false)) spec.samples.re_max = *x;
        if (auto x = v.number(s, "im_min", p, false)) spec.samples.im_min = *x;
        if (auto x = v.number(s, "im_max", p, false)) spec.samples.im_max = *x;
        if (s.contains("seed")) {
            if (!s.at("seed").is_number_unsigned())
                v.fail(p + "seed", "must be a nonnegative integer");
            else
                spec.samples.seed = s.at("seed").get<std::uint64_t>();
        }
    } else if (!radial) {
        spec.samples.region = SampleSpec::Region::box;
    }
    if (spec.samples.count < 1) v.fail("samples.count", "must be at least 1");
    if (!(spec.samples.radius > 0 && spec.samples.radius < 1)) v.fail("samples.radius", "must lie in (0, 1)");
    if (!(spec.samples.re_max > spec.samples.re_min)) v.fail("samples.re_max", "must exceed re_min");
    if (!(spec.samples.im_min > 0)) v.fail("samples.im_min", "must be positive");
    if (!(spec.samples.im_max > spec.samples.im_min)) v.fail("samples.im_max", "must exceed im_min");
    if (!radial && spec.mode != Mode::bridge && spec.samples.region == SampleSpec::Region::disc)
        v.fail("samples.region", "chordal samples live in the upper half-plane, use box");

    if (root.contains("oracle")) {
        const json& o = root.at("oracle");
        if (o.is_boolean()) {
            spec.oracle = o.get<bool>();
        } else if (o.is_object()) {
            v.unknown_keys(o, "oracle.", {"enabled", "times"});
            if (o.contains("enabled")) {
                if (!o.at("enabled").is_boolean())
                    v.fail("oracle.enabled", "must be a boolean");
                else
                    spec.oracle = o.at("enabled").get<bool>();
            }
            if (o.contains("times")) {
                if (auto ts = v.numbers(o, "times", "oracle.")) {
                    for (std::size_t i = 0; i < ts->size(); ++i) {
                        double t = (*ts)[i];
                        bool ok = t > 0 && (radial || spec.mode == Mode::bridge || t < 1);
                        if (!ok) v.fail("oracle.times[" + std::to_string(i) + "]", "time out of range");
                    }
                    spec.oracle_times = *ts;
                }
            }
        } else {
            v.fail("oracle", "must be a boolean or an object");
        }
    }

    if (v.object(root, "tolerances", "")) {
        const json& t = root.at("tolerances");
        const std::string p = "tolerances.";
        v.unknown_keys(t, p, {"ode_rel_tol", "ode_abs_tol", "oracle", "residual", "identity", "angle"});
        auto set = [&](const char* key, double& dst) {
            if (auto x = v.number(t, key, p, false)) {
                if (!(*x > 0))
                    v.fail(p + key, "tolerance must be positive");
                else
                    dst = *x;
            }
        };
        set("ode_rel_tol", spec.tol.ode_rel);
        set("ode_abs_tol", spec.tol.ode_abs);
        set("oracle", spec.tol.oracle);
        set("residual", spec.tol.residual);
        set("identity", spec.tol.identity);
        set("angle", spec.tol.angle);
    }

    spec.output = v.string(root, "output", "");
    if (v.object(root, "debug", "")) {
        v.unknown_keys(root.at("debug"), "debug.", {"perturb"});
        spec.perturb = v.number(root.at("debug"), "perturb", "debug.", false);
    }

    if (!v.issues.empty()) throw SpecError(std::move(v.issues));
    return spec;
}

ExperimentSpec load_spec(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SpecError(std::vector<ValidationIssue>{{"$", "cannot read " + path.string()}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str());
}

std::vector<double> make_t_grid(const ExperimentSpec& spec) {
    const bool chordal_time = !radial_flow_of(spec) && spec.mode != Mode::bridge;
    const std::size_t n = spec.t_grid.count;
    std::vector<double> grid{0.0};
    if (spec.t_grid.kind == GridSpec::Kind::linear) {
        const double tm = spec.t_grid.t_max.value_or(chordal_time ? 0.99 : 2.0);
        for (std::size_t i = 1; i < n; ++i) grid.push_back(tm * static_cast<double>(i) / static_cast<double>(n - 1));
    } else if (chordal_time) {
        for (std::size_t m = 1; m < n; ++m) grid.push_back(1 - std::ldexp(1.0, -static_cast<int>(m)));
    } else {
        const double tm = spec.t_grid.t_max.value_or(2.0);
        for (std::size_t m = n - 1; m >= 1; --m) grid.push_back(tm * std::ldexp(1.0, 1 - static_cast<int>(m)));
    }
    return grid;
}

std::vector<cplx> sample_points(const SampleSpec& s) {
    std::mt19937_64 gen(s.seed);
    auto unit = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    std::vector<cplx> out;
    out.reserve(s.count);
    for (std::size_t i = 0; i < s.count; ++i) {
        double u = unit(), v = unit();
        if (s.region == SampleSpec::Region::disc)
            out.push_back(std::polar(s.radius * std::sqrt(u), 2 * pi * v));
        else
            out.emplace_back(s.re_min + (s.re_max - s.re_min) * u, s.im_min + (s.im_max - s.im_min) * v);
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string traces_csv(const std::vector<CurveResult>& curves) {
    std::string out = "curve_id,t,re,im,residual\n";
    for (auto& c : curves)
        for (auto& s : c.samples)
            out += c.id + "," + format_double(s.t) + "," + format_double(s.point.real()) + "," +
                   format_double(s.point.imag()) + "," + format_double(s.residual) + "\n";
    return out;
}

void export_traces_csv(const std::vector<CurveResult>& curves, const fs::path& path) {
    bool any = std::any_of(curves.begin(), curves.end(), [](auto& c) { return !c.samples.empty(); });
    if (!any) throw ConfigError("export_traces_csv: no samples");
    write_file_atomic(path, traces_csv(curves));
}

std::string render_svg(const SvgScene& scene) {
    if (scene.curves.empty()) throw ConfigError("render_svg: no curves to draw");
    double x0, x1, y0, y1;
    if (scene.unit_circle) {
        x0 = y0 = -1.15;
        x1 = y1 = 1.15;
    } else {
        x0 = y0 = INFINITY;
        x1 = y1 = -INFINITY;
        auto grow = [&](cplx p) {
            if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) return;
            x0 = std::min(x0, p.real()), x1 = std::max(x1, p.real());
            y0 = std::min(y0, p.imag()), y1 = std::max(y1, p.imag());
        };
        for (auto& c : scene.curves)
            for (cplx p : c) grow(p);
        for (cplx p : scene.markers) grow(p);
        for (cplx p : scene.anchors) grow(p);
        if (!std::isfinite(x0)) x0 = -1, x1 = 1, y0 = 0, y1 = 1;
        y0 = std::min(y0, 0.0);
        double span = std::max({x1 - x0, y1 - y0, 1e-3});
        x0 -= 0.08 * span, x1 += 0.08 * span;
        y0 -= 0.08 * span, y1 += 0.08 * span;
    }
    const double size = 640, margin = 20;
    const double scale = (size - 2 * margin) / std::max(x1 - x0, y1 - y0);
    const double w = (x1 - x0) * scale + 2 * margin, h = (y1 - y0) * scale + 2 * margin;
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3f", v);
        return std::string(buf);
    };
    auto px = [&](cplx p) { return fmt((p.real() - x0) * scale + margin) + "," + fmt(h - ((p.imag() - y0) * scale + margin)); };

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};
    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
           "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\">\n";
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (scene.unit_circle) {
        auto c = px(0.0);
        auto comma = c.find(',');
        out += "<circle cx=\"" + c.substr(0, comma) + "\" cy=\"" + c.substr(comma + 1) + "\" r=\"" + fmt(scale) +
               "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    } else {
        auto a = px(cplx(x0, 0.0)), b = px(cplx(x1, 0.0));
        out += "<polyline points=\"" + a + " " + b + "\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";
    }
    for (std::size_t i = 0; i < scene.curves.size(); ++i) {
        std::string pts;
        for (cplx p : scene.curves[i]) {
            if (!std::isfinite(p.real()) || !std::isfinite(p.imag())) continue;
            if (!pts.empty()) pts += ' ';
            pts += px(p);
        }
        out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + palette[i % 7] +
               "\" stroke-width=\"1.5\"/>\n";
    }
    auto dot = [&](cplx p, const char* fill, double r) {
        auto c = px(p);
        auto comma = c.find(',');
        out += "<circle cx=\"" + c.substr(0, comma) + "\" cy=\"" + c.substr(comma + 1) + "\" r=\"" + fmt(r) +
               "\" fill=\"" + fill + "\"/>\n";
    };
    for (cplx p : scene.anchors) dot(p, "black", 2.5);
    for (cplx p : scene.markers) dot(p, "red", 4);
    out += "</svg>\n";
    return out;
}

bool RunSummary::passed() const {
    for (auto& c : checks)
        if (!c.pass) return false;
    for (auto& c : curves)
        if (c.error) return false;
    return true;
}

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string RunSummary::to_json() const {
    json j;
    j["name"] = name;
    j["flow"] = flow;
    if (!case_name.empty()) j["case"] = case_name;
    j["seed"] = seed;
    j["passed"] = passed();
    j["checks"] = json::array();
    for (auto& c : checks)
        j["checks"].push_back({{"name", c.name},
                               {"value", finite_or_null(c.value)},
                               {"threshold", finite_or_null(c.threshold)},
                               {"pass", c.pass},
                               {"detail", c.detail}});
    j["curves"] = json::array();
    for (auto& c : curves) {
        double mx = 0;
        for (auto& s : c.samples) mx = std::max(mx, s.residual);
        json e{{"id", c.id}, {"samples", c.samples.size()}, {"max_residual", finite_or_null(mx)}};
        e["error"] = c.error ? json(*c.error) : json(nullptr);
        j["curves"].push_back(e);
    }
    if (oracle) {
        j["oracle"] = {{"max_abs_err", finite_or_null(oracle->max_abs_err)},
                       {"samples", oracle->records.size()},
                       {"truncated", oracle->truncated},
                       {"failed", oracle->failed}};
    }
    j["diagnostics"] = json::object();
    for (auto& [k, v] : diagnostics) j["diagnostics"][k] = finite_or_null(v);
    return j.dump(2) + "\n";
}

namespace {

struct Context {
    const ExperimentSpec& spec;
    const RunOptions& opt;
    RunSummary& sum;
    std::vector<cplx> zs;
    std::optional<double> perturb;
    std::string boundary_csv;
    SvgScene scene;
};

void add_check(RunSummary& s, std::string name, double value, double threshold, bool pass, std::string detail = {}) {
    s.checks.push_back({std::move(name), value, threshold, pass, std::move(detail)});
}

// value < threshold, failing on NaN.
void add_below(RunSummary& s, std::string name, double value, double threshold, std::string detail = {}) {
    add_check(s, std::move(name), value, threshold, value < threshold, std::move(detail));
}

OracleOptions oracle_options(const ExperimentSpec& spec) {
    OracleOptions o;
    o.rel_tol = spec.tol.ode_rel;
    o.abs_tol = spec.tol.ode_abs;
    return o;
}

void add_oracle_checks(Context& cx, const OracleReport& rep, const std::string& prefix = {}) {
    add_below(cx.sum, prefix + "oracle_composition", rep.max_abs_err, cx.spec.tol.oracle,
              std::to_string(rep.records.size()) + " samples");
    double frac = rep.records.empty() ? 1.0 : static_cast<double>(rep.truncated) / rep.records.size();
    add_check(cx.sum, prefix + "oracle_coverage", frac, 0.5, frac <= 0.5, "fraction of ODE runs stopped at the boundary");
    cx.sum.oracle = rep;
}

std::vector<cplx> oracle_samples(const Context& cx) {
    std::vector<cplx> zs = cx.zs;
    if (cx.opt.fast && zs.size() > 5) zs.resize(5);
    return zs;
}

std::size_t positivity_count(const Context& cx) { return cx.opt.fast ? 1000 : 10000; }

std::vector<double> radial_start_grid() {
    std::vector<double> g{0.0};
    for (int i = 0; i < 27; ++i) g.push_back(1e-8 * std::ldexp(1.0, i));
    return g;
}

void record_max_residual(Context& cx) {
    double mx = 0;
    for (auto& c : cx.sum.curves)
        for (auto& s : c.samples) mx = std::max(mx, s.residual);
    add_check(cx.sum, "trace_residual", mx, cx.spec.tol.residual, mx <= cx.spec.tol.residual);
}

std::string boundary_radial(const RadialSpiralData& d) {
    std::string out = "theta,re,im,profile\n";
    const int n = 720;
    std::vector<double> grid;
    for (int i = 0; i < n; ++i) {
        double th = (i + 0.5) * 2 * pi / n;
        bool near = false;
        for (double r : d.rho) near = near || std::abs(wrap_angle(th - r)) < 1e-5;
        if (!near) grid.push_back(th);
    }
    for (auto& s : phi_boundary_image(d, grid))
        out += format_double(s.theta) + "," + format_double(s.value.real()) + "," + format_double(s.value.imag()) +
               "," + format_double(s.profile) + "\n";
    return out;
}

std::string boundary_chordal(const ChordalCaseData& c) {
    auto special = division_points(c);
    double lo = special.front(), hi = special.back();
    double pad = std::max(2.0, 0.5 * (hi - lo));
    lo -= pad, hi += pad;
    const int n = 801;
    std::vector<double> grid;
    for (int i = 0; i < n; ++i) {
        double x = lo + (hi - lo) * i / (n - 1);
        bool near = false;
        for (double p : special) near = near || std::abs(x - p) < 1e-6 * (1 + std::abs(x));
        if (!near) grid.push_back(x);
    }
    std::string out = "x,re,im,profile\n";
    for (auto& s : h_boundary_image(c, grid))
        out += format_double(s.x) + "," + format_double(s.value.real()) + "," + format_double(s.value.imag()) + "," +
               format_double(s.profile) + "\n";
    return out;
}

void run_radial_checks(Context& cx, const RadialConfig& cfg, const RadialSpiralData& d, const std::string& prefix) {
    const auto& spec = cx.spec;
    double sum = 0;
    for (double a : d.alpha) sum += a;
    add_below(cx.sum, prefix + "sum_identity", std::abs(sum + std::cos(d.half_arg)), spec.tol.identity);

    if (spec.oracle) {
        std::vector<double> times = spec.oracle_times;
        if (times.empty()) times = {0.1, 0.5, 1.0, 2.0};
        add_oracle_checks(cx, radial_composition_report(cfg, d, oracle_samples(cx), times, oracle_options(spec)), prefix);
    }

    SampleSpec ps;
    ps.count = positivity_count(cx);
    ps.radius = 0.999;
    ps.seed = cx.sum.seed + 1;
    double mn = INFINITY;
    for (cplx z : sample_points(ps)) mn = std::min(mn, spirallike_functional(d, z));
    add_check(cx.sum, prefix + "spirallike_positivity", mn, 0.0, mn > 0, "minimum over random disc points");

    double semi = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, cx.zs.size()); ++i)
        semi = std::max(semi, semigroup_residual(d, cx.zs[i], 0.3, 0.7));
    add_below(cx.sum, prefix + "semigroup", semi, spec.tol.residual);
}

void run_radial_traces(Context& cx, const RadialSpiralData& d, const std::vector<double>& grid,
                       const std::string& prefix) {
    const auto start_grid = radial_start_grid();
    for (std::size_t k = 0; k < d.size(); ++k) {
        CurveResult cr{prefix + "slit_" + std::to_string(k + 1), {}, std::nullopt};
        try {
            cr.samples = radial_trace(d, k, grid);
            auto early = radial_trace(d, k, start_grid);
            auto diag = trace_diagnostics(early, d.zeta[k]);
            add_check(cx.sum, cr.id + ".start_angle", diag.start_angle, pi / 2,
                      std::abs(diag.start_angle - pi / 2) <= cx.spec.tol.angle, "orthogonal start");
            std::size_t positive = 0;
            for (auto& s : cr.samples) positive += s.t > 0;
            if (positive >= 10) {
                auto full = trace_diagnostics(cr.samples, d.zeta[k]);
                cx.sum.diagnostics.emplace_back(cr.id + ".winding", full.total_winding);
                add_check(cx.sum, cr.id + ".modulus_monotone", full.modulus_monotone ? 1 : 0, 1, full.modulus_monotone);
            }
        } catch (const Error& e) {
            cr.error = e.what();
        }
        cx.scene.curves.emplace_back();
        for (auto& s : cr.samples) cx.scene.curves.back().push_back(s.point);
        cx.sum.curves.push_back(std::move(cr));
    }
}

void run_radial(Context& cx) {
    const auto& cfg = *cx.spec.radial;
    cx.sum.flow = "radial";
    auto d = compute_spiral_data(cfg);
    if (cx.perturb) d = perturb_coefficient(d, *cx.perturb);
    run_radial_checks(cx, cfg, d, "");
    run_radial_traces(cx, d, make_t_grid(cx.spec), "");
    if (cx.opt.write_artifacts) cx.boundary_csv = boundary_radial(d);
    record_max_residual(cx);
    cx.scene.unit_circle = true;
    cx.scene.markers = {0.0};
    cx.scene.anchors = d.zeta;
}

void run_chordal(Context& cx) {
    const auto& spec = cx.spec;
    const auto& cfg = *spec.chordal;
    cx.sum.flow = "chordal";
    auto c = build_case(cfg);
    cx.sum.case_name = c.name();
    if (cx.perturb) c = perturb_coefficient(c, *cx.perturb);

    add_below(cx.sum, "coefficient_identity", coefficient_identity_residual(c), spec.tol.identity);

    if (spec.oracle) {
        std::vector<double> times = spec.oracle_times;
        if (times.empty()) times = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
        add_oracle_checks(cx, chordal_composition_report(c, oracle_samples(cx), times, oracle_options(spec)));
    }

    if (c.is_spiral()) {
        SampleSpec ps;
        ps.count = positivity_count(cx);
        ps.region = SampleSpec::Region::box;
        ps.re_min = spec.samples.re_min, ps.re_max = spec.samples.re_max;
        ps.im_min = 1e-3, ps.im_max = spec.samples.im_max;
        ps.seed = cx.sum.seed + 1;
        double mn = INFINITY;
        for (cplx z : sample_points(ps)) mn = std::min(mn, spiral_functional(c, z));
        add_check(cx.sum, "spirallike_positivity", mn, 0.0, mn > 0, "minimum over random half-plane points");
    }

    const auto grid = make_t_grid(spec);
    const cplx attractor = attraction_point(c);
    for (std::size_t j = 0; j < cfg.size(); ++j) {
        CurveResult cr{"slit_" + std::to_string(j + 1), {}, std::nullopt};
        try {
            cr.samples = chordal_trace(c, j, grid);
            auto deep = chordal_trace_tau(c, j, end_analysis_tau_grid(c, j));
            auto ang = intersection_angles(c, j, deep);
            add_check(cx.sum, cr.id + ".start_angle", ang.start_angle, pi / 2,
                      std::abs(ang.start_angle - pi / 2) <= spec.tol.angle, "orthogonal start");
            if (ang.end_angle && ang.expected_end_angle) {
                double dev = std::abs(wrap_angle(*ang.end_angle - *ang.expected_end_angle));
                add_check(cx.sum, cr.id + ".end_angle", *ang.end_angle, *ang.expected_end_angle, dev <= spec.tol.angle,
                          "angle with the real line at the attraction point");
            }
            if (ang.winding) cx.sum.diagnostics.emplace_back(cr.id + ".winding", *ang.winding);
            auto late = chordal_trace(c, j, {0.0, 0.5, 0.9, 0.99, 0.999, 1 - 1e-4});
            cx.sum.diagnostics.emplace_back(cr.id + ".distance_at_t_1e-4", std::abs(late.back().point - attractor));
        } catch (const Error& e) {
            cr.error = e.what();
        }
        cx.scene.curves.emplace_back();
        for (auto& s : cr.samples) cx.scene.curves.back().push_back(s.point);
        cx.sum.curves.push_back(std::move(cr));
    }
    record_max_residual(cx);
    if (cx.opt.write_artifacts) cx.boundary_csv = boundary_chordal(c);
    cx.scene.unit_circle = false;
    cx.scene.markers = {attractor};
    for (double k : cfg.k) cx.scene.anchors.emplace_back(k);
}

void run_bridge(Context& cx) {
    const auto& spec = cx.spec;
    cx.sum.flow = "bridge";
    auto c = build_case(*spec.chordal);
    cx.sum.case_name = c.name();
    auto br = chordal_to_radial(c);
    auto rd = compute_spiral_data(br.config);
    if (cx.perturb) c = perturb_coefficient(c, *cx.perturb);

    add_below(cx.sum, "weight_sum", std::abs(br.weight_sum - 1), spec.tol.identity);
    auto corr = verify_correspondence(c, rd, br.map);
    add_below(cx.sum, "correspondence", corr.hausdorff, 1e-8, "Hausdorff distance of singular points and T(lambda)");

    std::vector<cplx> zs = cx.zs;
    if (zs.size() > 5) zs.resize(5);
    const std::vector<double> s_grid{0.1, 0.25, 0.5, 1.0, 2.0};
    double agree = INFINITY;
    try {
        agree = conjugated_flow_agreement(c, br, rd, zs, s_grid).max_abs_err;
    } catch (const Error&) {
    }
    add_below(cx.sum, "conjugated_flow", agree, 1e-5, "5 points x 5 matched times");

    double semi = 0;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, zs.size()); ++i) {
        try {
            semi = std::max(semi, chordal_semigroup_residual(c, moebius_inverse(br.map, zs[i]), 0.3, 0.5));
        } catch (const Error&) {
            semi = INFINITY;
        }
    }
    add_below(cx.sum, "chordal_semigroup", semi, 1e-6);

    run_radial_checks(cx, br.config, rd, "radial.");

    // Radial traces and the images of the chordal semigroup traces must coincide at matched times.
    const auto grid = make_t_grid(spec);
    run_radial_traces(cx, rd, grid, "radial.");
    std::vector<double> tau;
    for (double s : grid) tau.push_back(br.time_scale * s);
    double trace_gap = 0;
    for (std::size_t i = 0; i < br.order.size(); ++i) {
        std::size_t j = br.order[i];
        CurveResult cr{"chordal.slit_" + std::to_string(j + 1), {}, std::nullopt};
        try {
            auto tr = chordal_trace_tau(c, j, tau);
            for (std::size_t m = 0; m < tr.size(); ++m) {
                cr.samples.push_back({grid[m], moebius_apply(br.map, tr[m].point), tr[m].residual});
                const auto& radial_samples = cx.sum.curves[i].samples;
                if (m < radial_samples.size())
                    trace_gap = std::max(trace_gap, std::abs(cr.samples.back().point - radial_samples[m].point));
            }
        } catch (const Error& e) {
            cr.error = e.what();
            trace_gap = INFINITY;
        }
        cx.sum.curves.push_back(std::move(cr));
    }
    add_below(cx.sum, "trace_agreement", trace_gap, 1e-5, "radial traces against conjugated chordal traces");
    record_max_residual(cx);
    if (cx.opt.write_artifacts) cx.boundary_csv = boundary_radial(rd);
    cx.scene.unit_circle = true;
    cx.scene.markers = {0.0};
    cx.scene.anchors = rd.zeta;
}

std::string oracle_csv(const OracleReport& rep) {
    std::string out = "z_re,z_im,t,abs_err,truncated,failed\n";
    for (auto& r : rep.records)
        out += format_double(r.z.real()) + "," + format_double(r.z.imag()) + "," + format_double(r.t) + "," +
               format_double(r.abs_err) + "," + (r.truncated ? "1" : "0") + "," + (r.failed ? "1" : "0") + "\n";
    return out;
}

fs::path resolve_out_dir(const ExperimentSpec& spec, const RunOptions& opt) {
    if (opt.out_dir) return *opt.out_dir;
    if (spec.output) return *spec.output;
    if (const char* env = std::getenv("SLITFLOW_OUT"); env && *env) return fs::path(env) / spec.name;
    return fs::path("slitflow_out") / spec.name;
}

}  // namespace

RunSummary run_experiment(const ExperimentSpec& spec, const RunOptions& opt) {
    RunSummary sum;
    sum.name = spec.name;
    sum.seed = opt.seed.value_or(spec.samples.seed);
    RunOptions local = opt;
    if (spec.mode == Mode::verify) local.write_artifacts = false;

    SampleSpec ss = spec.samples;
    ss.seed = sum.seed;
    if (spec.mode == Mode::bridge) ss.region = SampleSpec::Region::disc;
    Context cx{spec, local, sum, sample_points(ss), opt.perturb ? opt.perturb : spec.perturb, {}, {}};

    if (spec.mode == Mode::bridge)
        run_bridge(cx);
    else if (spec.radial)
        run_radial(cx);
    else
        run_chordal(cx);

    if (local.write_artifacts) {
        sum.out_dir = resolve_out_dir(spec, local);
        fs::create_directories(sum.out_dir);
        export_traces_csv(sum.curves, sum.out_dir / "traces.csv");
        if (!cx.boundary_csv.empty()) write_file_atomic(sum.out_dir / "boundary.csv", cx.boundary_csv);
        if (sum.oracle) write_file_atomic(sum.out_dir / "oracle.csv", oracle_csv(*sum.oracle));
        write_file_atomic(sum.out_dir / "render.svg", render_svg(cx.scene));
        write_file_atomic(sum.out_dir / "summary.json", sum.to_json());
    }
    return sum;
}

}  // namespace slitflow
