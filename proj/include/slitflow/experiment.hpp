#pragma once

// Experiment runner behind the command line tool: a JSON experiment spec is
// validated, the requested engine is run, and traces, boundary images, the
// oracle report, the check summary and an SVG rendering are written.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slitflow/config.hpp"
#include "slitflow/error.hpp"
#include "slitflow/numerics.hpp"
#include "slitflow/oracle.hpp"

namespace slitflow {

enum class Mode { radial, chordal, bridge, verify };

struct GridSpec {
    enum class Kind { linear, geometric } kind = Kind::linear;
    std::size_t count = 50;
    // Linear grids end at t_max. Geometric grids are 1 - 2^{-m} (chordal) or
    // t_max 2^{-m} (radial), m <= 20.
    std::optional<double> t_max;
};

struct SampleSpec {
    std::size_t count = 20;
    enum class Region { disc, box } region = Region::disc;
    double radius = 0.8;                        // disc
    double re_min = -3, re_max = 3, im_min = 0.5, im_max = 3;  // box
    std::uint64_t seed = 1;
};

struct Tolerances {
    double ode_rel = 1e-9;
    double ode_abs = 1e-13;
    double oracle = 1e-6;    // composition identity
    double residual = 1e-8;  // trace residuals
    double identity = 1e-9;  // coefficient identities
    double angle = 0.05;     // start and end angles
};

struct ExperimentSpec {
    std::string name = "experiment";
    Mode mode = Mode::radial;
    std::optional<RadialConfig> radial;
    std::optional<ChordalConfig> chordal;
    GridSpec t_grid;
    SampleSpec samples;
    bool oracle = true;
    std::vector<double> oracle_times;  // defaults depend on the flow
    Tolerances tol;
    std::optional<std::string> output;
    std::optional<double> perturb;  // debug: shift one explicit coefficient
};

struct ValidationIssue {
    std::string path;
    std::string message;
};

class SpecError : public ConfigError {
public:
    explicit SpecError(std::vector<ValidationIssue> issues);
    const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

private:
    std::vector<ValidationIssue> issues_;
};

/// Parses and validates; every problem found is listed in the thrown SpecError.
ExperimentSpec parse_spec(const std::string& json_text);
ExperimentSpec load_spec(const std::filesystem::path& path);

/// Trace time grid starting at 0.
std::vector<double> make_t_grid(const ExperimentSpec& spec);

/// Uniform samples from mt19937_64, doubles as (x >> 11) 2^-53.
std::vector<cplx> sample_points(const SampleSpec& spec);

struct CheckResult {
    std::string name;
    double value;
    double threshold;
    bool pass;
    std::string detail;
};

struct CurveResult {
    std::string id;
    std::vector<TraceSample> samples;
    std::optional<std::string> error;
};

struct RunOptions {
    bool fast = false;
    bool write_artifacts = true;
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<double> perturb;
};

struct RunSummary {
    std::string name;
    std::string flow;       // radial, chordal or bridge
    std::string case_name;  // chordal root structure
    std::uint64_t seed = 0;
    std::vector<CheckResult> checks;
    std::vector<CurveResult> curves;
    std::optional<OracleReport> oracle;
    std::vector<std::pair<std::string, double>> diagnostics;
    std::filesystem::path out_dir;

    bool passed() const;
    std::string to_json() const;
};

RunSummary run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

/// Shortest round-trip decimal form.
std::string format_double(double v);

/// Writes path.tmp and renames it over path.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

std::string traces_csv(const std::vector<CurveResult>& curves);
void export_traces_csv(const std::vector<CurveResult>& curves, const std::filesystem::path& path);

struct SvgScene {
    std::vector<std::vector<cplx>> curves;
    bool unit_circle = true;  // otherwise the real axis
    std::vector<cplx> markers;
    std::vector<cplx> anchors;
};

/// Throws ConfigError when there is no curve.
std::string render_svg(const SvgScene& scene);

}  // namespace slitflow
