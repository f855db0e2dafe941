#pragma once

#include <complex>
#include <vector>

namespace slitflow {

/// Radial driving data: point masses b_k at e^{i(theta_k + a t)}.
struct RadialConfig {
    std::vector<double> theta;  // strictly increasing in [0, 2pi)
    std::vector<double> b;      // positive
    double a = 0.0;

    std::size_t size() const noexcept { return theta.size(); }
    double b_total() const;
    /// Throws ConfigError on bad input.
    void validate() const;
};

/// Chordal driving data: point masses b_j at k_j sqrt(1 - t).
struct ChordalConfig {
    std::vector<double> k;  // strictly increasing
    std::vector<double> b;  // positive

    std::size_t size() const noexcept { return k.size(); }
    void validate() const;
};

/// One point of a slit-tip trajectory together with the mismatch of the
/// functional equation that defines it.
struct TraceSample {
    double t;
    std::complex<double> point;
    double residual;
};

}  // namespace slitflow
