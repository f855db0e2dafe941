#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "slitflow/experiment.hpp"

using namespace slitflow;
namespace fs = std::filesystem;

namespace {

const fs::path fixtures = SLITFLOW_FIXTURES;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<ValidationIssue> issues_of(const std::string& text) {
    try {
        parse_spec(text);
    } catch (const SpecError& e) {
        return e.issues();
    }
    return {};
}

bool has_path(const std::vector<ValidationIssue>& issues, const std::string& path) {
    return std::any_of(issues.begin(), issues.end(), [&](auto& i) { return i.path == path; });
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("slitflow_test_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST_CASE("every fixture parses") {
    int n = 0;
    for (auto& e : fs::directory_iterator(fixtures)) {
        if (e.path().extension() != ".json") continue;
        CAPTURE(e.path().string());
        auto spec = load_spec(e.path());
        CHECK((spec.radial.has_value() != spec.chordal.has_value()));
        ++n;
    }
    CHECK(n >= 10);
    auto s = load_spec(fixtures / "chordal_spiral_sym.json");
    CHECK(s.mode == Mode::chordal);
    CHECK(s.chordal->k == std::vector<double>{-2, 2});
    CHECK(s.samples.region == SampleSpec::Region::box);
}

TEST_CASE("validation names the offending field") {
    auto issues = issues_of(R"({"mode": "chordal", "config": {"k": [0], "b": [-1]}})");
    REQUIRE(issues.size() == 1);
    CHECK(issues[0].path == "config.b[0]");

    issues = issues_of(R"({"mode": "chordal", "config": {"k": [1, 1], "b": [1, 1]}})");
    CHECK(has_path(issues, "config.k[1]"));

    issues = issues_of(R"({"mode": "radial", "config": {"theta": [7], "b": [1]}})");
    CHECK(has_path(issues, "config.theta[0]"));
}

TEST_CASE("all issues are reported together") {
    auto issues = issues_of(R"({
        "mode": "chordal",
        "config": {"k": [2, -2], "b": [-1, 1], "extra": 0},
        "t_grid": {"kind": "geometric", "count": 40},
        "tolerances": {"oracle": -1}
    })");
    CHECK(has_path(issues, "config.k[1]"));
    CHECK(has_path(issues, "config.b[0]"));
    CHECK(has_path(issues, "config.extra"));
    CHECK(has_path(issues, "t_grid.count"));
    CHECK(has_path(issues, "tolerances.oracle"));
    CHECK(issues.size() == 5);

    CHECK(has_path(issues_of("{"), "$"));
    CHECK(has_path(issues_of("[]"), "$"));
    CHECK(has_path(issues_of(R"({"config": {"k": [0], "b": [1]}})"), "mode"));
    CHECK(has_path(issues_of(R"({"mode": "sideways", "config": {"k": [0], "b": [1]}})"), "mode"));
    CHECK_THROWS_AS(load_spec(fixtures / "missing.json"), SpecError);
}

TEST_CASE("time grids") {
    auto s = parse_spec(R"({"mode": "chordal", "config": {"k": [0], "b": [1]}, "t_grid": {"kind": "geometric", "count": 4}})");
    CHECK(make_t_grid(s) == std::vector<double>{0, 0.5, 0.75, 0.875});
    s = parse_spec(R"({"mode": "chordal", "config": {"k": [0], "b": [1]}, "t_grid": {"count": 3, "t_max": 0.5}})");
    CHECK(make_t_grid(s) == std::vector<double>{0, 0.25, 0.5});
    s = parse_spec(R"({"mode": "radial", "config": {"theta": [0], "b": [1]}, "t_grid": {"kind": "geometric", "count": 4, "t_max": 4}})");
    CHECK(make_t_grid(s) == std::vector<double>{0, 1, 2, 4});
    s = parse_spec(R"({"mode": "radial", "config": {"theta": [0], "b": [1]}})");
    auto g = make_t_grid(s);
    CHECK(g.size() == 50);
    CHECK(g.back() == 2.0);
}

TEST_CASE("sample points are deterministic and inside their region") {
    SampleSpec d;
    d.count = 200;
    d.seed = 9;
    auto a = sample_points(d), b = sample_points(d);
    CHECK(a == b);
    for (auto z : a) CHECK(std::abs(z) <= d.radius);
    d.seed = 10;
    CHECK(sample_points(d) != a);
    SampleSpec box;
    box.region = SampleSpec::Region::box;
    box.count = 200;
    for (auto z : sample_points(box)) {
        CHECK(z.real() >= box.re_min);
        CHECK(z.real() <= box.re_max);
        CHECK(z.imag() >= box.im_min);
        CHECK(z.imag() <= box.im_max);
    }
}

TEST_CASE("format_double round-trips") {
    for (double x : {0.1, 1.0 / 3, -2.5e-300, 1e300, 0.0, 123456789.125}) CHECK(std::stod(format_double(x)) == x);
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("trace CSV layout") {
    CurveResult c{"slit_0", {{0, {1, 0}, 0}, {0.5, {0.5, 0.25}, 1e-12}, {1, {0.25, 0.5}, 2e-12}}, std::nullopt};
    auto csv = traces_csv({c});
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv.rfind("curve_id,t,re,im,residual\n", 0) == 0);
    CHECK(csv.find("slit_0,0,1,0,0\n") != std::string::npos);

    auto dir = scratch("csv");
    fs::create_directories(dir);
    export_traces_csv({c}, dir / "t.csv");
    CHECK(slurp(dir / "t.csv") == csv);
    CHECK_FALSE(fs::exists(dir / "t.csv.tmp"));
    CHECK_THROWS_AS(export_traces_csv({}, dir / "empty.csv"), ConfigError);
    fs::remove_all(dir);
}

TEST_CASE("SVG rendering") {
    CHECK_THROWS_AS(render_svg({}), ConfigError);
    SvgScene s;
    s.curves = {{{1, 0}, {0.5, 0.1}, {0.2, 0.2}}};
    s.markers = {0.0};
    s.anchors = {1.0};
    auto svg = render_svg(s);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(render_svg(s) == svg);
}

TEST_CASE("runs write the same bytes twice") {
    auto spec = load_spec(fixtures / "chordal_triple_sym.json");
    RunOptions o;
    o.fast = true;
    o.out_dir = scratch("run_a");
    auto a = run_experiment(spec, o);
    o.out_dir = scratch("run_b");
    auto b = run_experiment(spec, o);
    CHECK(a.passed());
    for (auto f : {"traces.csv", "boundary.csv", "oracle.csv", "render.svg", "summary.json"}) {
        CAPTURE(f);
        REQUIRE(fs::exists(a.out_dir / f));
        CHECK(slurp(a.out_dir / f) == slurp(b.out_dir / f));
    }
    auto csv = slurp(a.out_dir / "traces.csv");
    // The first sample of each trace is its seed point on the real axis.
    CHECK(csv.find("slit_1,0,-2,0,0\n") != std::string::npos);
    fs::remove_all(a.out_dir);
    fs::remove_all(b.out_dir);
}

TEST_CASE("verify mode writes nothing and perturbation fails the run") {
    auto spec = load_spec(fixtures / "verify_spiral_sym.json");
    RunOptions o;
    o.fast = true;
    o.write_artifacts = false;
    auto s = run_experiment(spec, o);
    CHECK(s.passed());
    CHECK(s.out_dir.empty());
    o.perturb = 0.01;
    CHECK_FALSE(run_experiment(spec, o).passed());
}
