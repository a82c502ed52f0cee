#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace wdl::kernel {

/// Empirically calibrated constants for inequalities whose constants are only
/// known to exist. Each value carries a safety factor over the extreme ratio
/// observed during calibration.
struct CalibratedConstants {
    int n = 2;
    double p = 2.0;

    /// C with |xi - eta|^p <= C | V_p(xi) - V_p(eta) |^2  (only for p > 2; 0 otherwise).
    double vp_difference_upper = 0.0;

    /// c with c^{-1} w <= |V_p(xi) - V_p(eta)|^2 / |xi - eta|^2 <= c w,
    /// w = (|xi|^2 + |eta|^2)^{(p-2)/2}.
    double vp_two_sided = 0.0;

    /// c with <H_{p-1}(xi) - H_{p-1}(eta), xi - eta> >= c |H_{p/2}(xi) - H_{p/2}(eta)|^2.
    double monotonicity_lower = 0.0;

    /// C with |V_lambda(xi) - V_lambda(eta)|^2 <= C <H_{p-1}(xi) - H_{p-1}(eta), xi - eta>,
    /// assembled from monotonicity_lower and the explicit lower bound for |eta| > lambda.
    double v_lambda_upper = 0.0;

    /// Extreme ratios actually observed (before the safety factor).
    double observed_vp_difference_max = 0.0;
    double observed_vp_ratio_min = 0.0;
    double observed_vp_ratio_max = 0.0;
    double observed_monotonicity_min = 0.0;

    std::string provenance;
};

struct CalibrationOptions {
    int grid_resolution = 400;
    int random_samples = 200000;
    std::uint64_t seed = 20250530;
    double safety_factor = 2.0;
};

CalibratedConstants calibrate_constants(int n, double p, const CalibrationOptions& opts = {});

/// The explicit constant min{1, p-1} / 2^{p+1} of the lower bound
/// <H_{p-1}(xi) - H_{p-1}(eta), xi - eta> >= c (|eta|-lambda)^p |xi-eta|^2 / (|eta| (|xi|+|eta|)).
double explicit_monotonicity_constant(double p);

/// Read-only table of calibrated constants keyed by (n, p). Build it once,
/// then share it freely between threads.
class ConstantsTable {
public:
    static ConstantsTable build(const std::vector<std::pair<int, double>>& keys,
                                const CalibrationOptions& opts = {});

    /// Throws InvalidArgument when (n, p) was not calibrated.
    [[nodiscard]] const CalibratedConstants& at(int n, double p) const;

    [[nodiscard]] bool contains(int n, double p) const;

    [[nodiscard]] const std::map<std::pair<int, double>, CalibratedConstants>& entries() const
    {
        return entries_;
    }

private:
    std::map<std::pair<int, double>, CalibratedConstants> entries_;
};

} // namespace wdl::kernel
