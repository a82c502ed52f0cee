#include "wdl/kernel/constants.hpp"

#include "wdl/errors.hpp"
#include "wdl/kernel/kernel.hpp"
#include "wdl/random.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wdl::kernel {

namespace {

using Vec2 = Eigen::Vector2d;

// All quantities calibrated here are invariant under rotations, so it is
// enough to sample pairs spanning a plane: xi = (s, 0), eta = r (cos t, sin t).

Vec2 vp2(const Vec2& x, double p)
{
    const double t = x.norm();
    return t == 0.0 ? Vec2::Zero() : Vec2(std::pow(t, 0.5 * (p - 2.0)) * x);
}

Vec2 hg2(const Vec2& x, double gamma, double lambda)
{
    return radial::h_gamma(x.norm(), gamma, lambda) * x;
}

struct Extremes {
    double diff_max = 0.0;
    double ratio_min = std::numeric_limits<double>::infinity();
    double ratio_max = 0.0;
    double mono_min = std::numeric_limits<double>::infinity();
};

void observe_vp(const Vec2& xi, const Vec2& eta, double p, Extremes& ex)
{
    const double dist2 = (xi - eta).squaredNorm();
    if (dist2 == 0.0) {
        return;
    }
    const double vdiff2 = (vp2(xi, p) - vp2(eta, p)).squaredNorm();
    if (vdiff2 <= 0.0) {
        return;
    }
    if (p > 2.0) {
        ex.diff_max = std::max(ex.diff_max, std::pow(dist2, 0.5 * p) / vdiff2);
    }
    const double w = std::pow(xi.squaredNorm() + eta.squaredNorm(), 0.5 * (p - 2.0));
    const double ratio = vdiff2 / (dist2 * w);
    ex.ratio_min = std::min(ex.ratio_min, ratio);
    ex.ratio_max = std::max(ex.ratio_max, ratio);
}

void observe_monotonicity(const Vec2& xi, const Vec2& eta, double p, double lambda, Extremes& ex)
{
    const double rhs = (hg2(xi, 0.5 * p, lambda) - hg2(eta, 0.5 * p, lambda)).squaredNorm();
    if (rhs <= 1e-280) {
        return;
    }
    const double lhs = (hg2(xi, p - 1.0, lambda) - hg2(eta, p - 1.0, lambda)).dot(xi - eta);
    ex.mono_min = std::min(ex.mono_min, lhs / rhs);
}

} // namespace

double explicit_monotonicity_constant(double p)
{
    return std::min(1.0, p - 1.0) / std::pow(2.0, p + 1.0);
}

CalibratedConstants calibrate_constants(int n, double p, const CalibrationOptions& opts)
{
    WDL_REQUIRE(n >= 2 && p > 1.0, InvalidArgument, "calibrate_constants: need n >= 2, p > 1");
    WDL_REQUIRE(opts.grid_resolution >= 4 && opts.random_samples >= 0 && opts.safety_factor >= 1.0,
                InvalidArgument, "calibrate_constants: bad options");

    Extremes ex;
    const int m = opts.grid_resolution;

    // Homogeneous quantities: |xi| = 1 and |eta| = r <= 1 cover every pair.
    for (int i = 0; i <= m; ++i) {
        // Radii cluster towards 0 and 1 where the ratios are extreme.
        const double u = static_cast<double>(i) / m;
        const double r = 0.5 - 0.5 * std::cos(M_PI * u);
        for (int j = 0; j <= m; ++j) {
            const double v = static_cast<double>(j) / m;
            const double theta = M_PI * v * v;
            const Vec2 xi(1.0, 0.0);
            const Vec2 eta(r * std::cos(theta), r * std::sin(theta));
            observe_vp(xi, eta, p, ex);
        }
    }

    // The monotonicity ratio is homogeneous only jointly in (xi, eta, lambda),
    // so lambda in {0, 1} covers every case.
    const int mr = std::max(8, m / 4);
    for (double lambda : {0.0, 1.0}) {
        for (int i = 0; i <= mr; ++i) {
            const double s = std::pow(10.0, -3.0 + 6.0 * i / mr);
            for (int k = 0; k <= mr; ++k) {
                const double r = s * (0.5 - 0.5 * std::cos(M_PI * static_cast<double>(k) / mr));
                for (int j = 0; j <= mr; ++j) {
                    const double v = static_cast<double>(j) / mr;
                    const double theta = M_PI * v * v;
                    observe_monotonicity(Vec2(s, 0.0), Vec2(r * std::cos(theta), r * std::sin(theta)),
                                         p, lambda, ex);
                }
            }
        }
    }

    Sampler rng(derive_seed(opts.seed, static_cast<std::uint64_t>(std::lround(p * 1000.0))));
    for (int k = 0; k < opts.random_samples; ++k) {
        const double lambda = (k % 2 == 0) ? 0.0 : 1.0;
        const double s = rng.log_uniform(1e-3, 1e3);
        const double r = s * rng.uniform();
        const double theta = rng.uniform(0.0, M_PI);
        const Vec2 xi(s, 0.0);
        const Vec2 eta(r * std::cos(theta), r * std::sin(theta));
        observe_vp(xi / s, eta / s, p, ex);
        observe_monotonicity(xi, eta, p, lambda, ex);
        // near the degeneracy shell
        const double s2 = 1.0 + rng.log_uniform(1e-7, 1.0);
        const double r2 = 1.0 + rng.uniform(-1.0, 1.0) * rng.log_uniform(1e-7, 1.0);
        const double th2 = rng.log_uniform(1e-6, M_PI);
        observe_monotonicity(Vec2(s2, 0.0), Vec2(r2 * std::cos(th2), r2 * std::sin(th2)), p, 1.0, ex);
    }

    const double sf = opts.safety_factor;
    CalibratedConstants out;
    out.n = n;
    out.p = p;
    out.observed_vp_difference_max = ex.diff_max;
    out.observed_vp_ratio_min = ex.ratio_min;
    out.observed_vp_ratio_max = ex.ratio_max;
    out.observed_monotonicity_min = ex.mono_min;
    out.vp_difference_upper = p > 2.0 ? sf * ex.diff_max : 0.0;
    out.vp_two_sided = sf * std::max(ex.ratio_max, 1.0 / ex.ratio_min);
    out.monotonicity_lower = ex.mono_min / sf;
    out.v_lambda_upper = 8.0 / (p * p * out.monotonicity_lower)
                         + 64.0 / (p * p * explicit_monotonicity_constant(p));

    std::ostringstream os;
    os << "empirical: n=" << n << " p=" << p << ", " << (m + 1) << "^2 homogeneous grid, "
       << 2 * (mr + 1) * (mr + 1) * (mr + 1) << " monotonicity grid points, "
       << opts.random_samples << " random pairs (seed " << opts.seed << "), safety factor " << sf;
    out.provenance = os.str();
    return out;
}

ConstantsTable ConstantsTable::build(const std::vector<std::pair<int, double>>& keys,
                                     const CalibrationOptions& opts)
{
    ConstantsTable table;
    for (const auto& key : keys) {
        if (!table.entries_.count(key)) {
            table.entries_.emplace(key, calibrate_constants(key.first, key.second, opts));
        }
    }
    return table;
}

const CalibratedConstants& ConstantsTable::at(int n, double p) const
{
    const auto it = entries_.find({n, p});
    if (it == entries_.end()) {
        std::ostringstream os;
        os << "ConstantsTable: (n=" << n << ", p=" << p << ") was not calibrated";
        throw InvalidArgument(os.str());
    }
    return it->second;
}

bool ConstantsTable::contains(int n, double p) const
{
    return entries_.count({n, p}) != 0;
}

} // namespace wdl::kernel
