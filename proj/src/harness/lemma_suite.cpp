#include "wdl/harness/lemma_suite.hpp"

#include "wdl/errors.hpp"
#include "wdl/harness/parallel.hpp"
#include "wdl/kernel/constants.hpp"
#include "wdl/kernel/kernel.hpp"
#include "wdl/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace wdl::harness {

using kernel::Params;
using kernel::VecN;
using nlohmann::json;

namespace {

enum Check : int {
    UnitVectorDifference,
    MonotonicityExplicit,
    MonotonicityCalibrated,
    Convexity,
    GLambdaWeightedBound,
    GLambdaPowerBounds,
    VLambdaChain,
    VLambdaCalibrated,
    PowerDifference,
    HessianSandwich,
    VpDifferenceUpper,
    VpTwoSided,
    PhiWeight,
    VLambdaContinuity,
    CheckCount
};

const std::array<const char*, CheckCount> kCheckNames = {
    "unit_vector_difference",
    "monotonicity_explicit_constant",
    "monotonicity_calibrated",
    "convexity_of_g_eps",
    "g_lambda_weighted_upper_bound",
    "g_lambda_power_bounds",
    "v_lambda_bound_chain",
    "v_lambda_calibrated",
    "elementary_power_difference",
    "hessian_eigenvalue_sandwich",
    "vp_difference_upper",
    "vp_two_sided",
    "phi_weight_bound",
    "v_lambda_shell_continuity",
};

struct Accum {
    long long checked = 0;
    long long violations = 0;
    double worst_excess = -1.0;
    json first_violation;
};

struct CellResult {
    double p = 0.0;
    double lambda = 0.0;
    double eps = 0.0;
    std::array<Accum, CheckCount> acc;
};

json vec_json(const VecN& v)
{
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        j.push_back(v[i]);
    }
    return j;
}

class Recorder {
public:
    Recorder(CellResult& cell, double tol) : cell_(cell), tol_(tol) {}

    /// Records lhs <= rhs with round-off allowance tol * scale. `tuple`
    /// builds the violating tuple on demand.
    template <typename TupleFn>
    void leq(Check c, double lhs, double rhs, double scale, TupleFn tuple)
    {
        Accum& a = cell_.acc[c];
        ++a.checked;
        const double denom = scale > 0.0 ? scale : 1.0;
        const double excess = (lhs - rhs) / denom;
        const bool bad = !(lhs - rhs <= tol_ * scale) || !std::isfinite(lhs) || !std::isfinite(rhs);
        if (excess > a.worst_excess || std::isnan(excess)) {
            a.worst_excess = excess;
        }
        if (bad) {
            if (a.violations == 0) {
                json j = tuple();
                j["p"] = cell_.p;
                j["lambda"] = cell_.lambda;
                j["eps"] = cell_.eps;
                j["lhs"] = lhs;
                j["rhs"] = rhs;
                a.first_violation = j;
            }
            ++a.violations;
        }
    }

private:
    CellResult& cell_;
    double tol_;
};

VecN random_direction(Sampler& rng, int n)
{
    VecN v(n);
    double norm = 0.0;
    do {
        for (int i = 0; i < n; ++i) {
            v[i] = rng.normal();
        }
        norm = v.norm();
    } while (norm < 1e-8);
    return v / norm;
}

double pairing(const VecN& a, const VecN& b, const VecN& xi, const VecN& eta)
{
    return (a - b).dot(xi - eta);
}

/// Magnitude of a vector with |v| = s in a random direction.
VecN with_norm(Sampler& rng, int n, double s) { return s * random_direction(rng, n); }

/// Draws the pair (xi, eta) according to one of five regimes.
void draw_pair(Sampler& rng, int n, double lambda, long long k, VecN& xi, VecN& eta)
{
    const double scale = std::max(lambda, 1.0);
    auto wide = [&] { return rng.log_uniform(1e-3, 1e2) * scale; };
    auto near_shell = [&] {
        if (lambda == 0.0) {
            return rng.log_uniform(1e-6, 1e-1);
        }
        const double delta = rng.log_uniform(1e-9, 0.5);
        return lambda * (rng.uniform() < 0.5 ? 1.0 - delta : 1.0 + delta);
    };
    const double adversarial = lambda > 0.0 ? lambda * (1.0 + 1e-6) : 1e-6;
    switch (k % 5) {
    case 0:
        xi = with_norm(rng, n, wide());
        eta = with_norm(rng, n, wide());
        break;
    case 1:
        xi = with_norm(rng, n, near_shell());
        eta = with_norm(rng, n, near_shell());
        break;
    case 2: {
        eta = with_norm(rng, n, rng.uniform() < 0.5 ? wide() : near_shell());
        const double delta = rng.log_uniform(1e-8, 1e-1);
        xi = eta + delta * eta.norm() * random_direction(rng, n);
        break;
    }
    case 3:
        eta = with_norm(rng, n, adversarial);
        xi = with_norm(rng, n, rng.uniform() < 0.5 ? wide() : near_shell());
        break;
    default:
        xi = with_norm(rng, n, lambda > 0.0 ? lambda * rng.uniform(1e-3, 1.0) : rng.log_uniform(1e-6, 1e-2));
        eta = with_norm(rng, n, wide());
        break;
    }
    if (rng.uniform() < 0.5) {
        std::swap(xi, eta);
    }
}

CellResult run_cell(const LemmaSuiteOptions& opt, const kernel::CalibratedConstants& cal,
                    double p, double lambda, double eps, std::uint64_t seed)
{
    CellResult cell;
    cell.p = p;
    cell.lambda = lambda;
    cell.eps = eps;
    Recorder rec(cell, opt.tolerance);
    const int n = 2;
    const Params prm = Params::make(n, p, lambda, eps);
    const Params prm0 = prm.with_eps(0.0);
    const double c_explicit = kernel::explicit_monotonicity_constant(p);
    const double c0 = std::min(1.0, p - 1.0);
    const double c1 = std::max(1.0, p - 1.0);
    const double gamma_p = 0.5 * p + 1.0 / (p - 1.0);
    const double c_low = (2.0 / p) * std::pow(2.0, 1.0 / (1.0 - p) - 0.5 * p);
    const double c_low_tilde = c_low + (p - 1.0);
    Sampler rng(seed);
    VecN xi;
    VecN eta;

    for (long long k = 0; k < opt.samples; ++k) {
        draw_pair(rng, n, lambda, k, xi, eta);
        const double nx = xi.norm();
        const double ny = eta.norm();
        const double dist = (xi - eta).norm();
        auto tuple = [&] { return json{{"xi", vec_json(xi)}, {"eta", vec_json(eta)}}; };

        // |xi/|xi| - eta/|eta|| <= 2 |xi - eta| / |eta|
        if (nx > 0.0 && ny > 0.0) {
            const double lhs = (xi / nx - eta / ny).norm();
            const double rhs = 2.0 * dist / ny;
            rec.leq(UnitVectorDifference, lhs, rhs, std::max(lhs, rhs), tuple);
        }

        const VecN hx = kernel::h_gamma(xi, p - 1.0, prm0);
        const VecN hy = kernel::h_gamma(eta, p - 1.0, prm0);
        const double mono = pairing(hx, hy, xi, eta);
        const double mono_scale = (hx.norm() + hy.norm()) * dist;

        // Explicit lower bound for |eta| > lambda > 0, in both orders.
        if (lambda > 0.0) {
            for (int order = 0; order < 2; ++order) {
                const VecN& a = order == 0 ? xi : eta;
                const VecN& b = order == 0 ? eta : xi;
                const double nb = b.norm();
                if (nb > lambda) {
                    const double rhs = c_explicit * std::pow(nb - lambda, p) * dist * dist /
                                       (nb * (a.norm() + nb));
                    rec.leq(MonotonicityExplicit, rhs, mono, std::max({mono, rhs, mono_scale}), tuple);
                }
            }
        }

        const VecN hx2 = kernel::h_gamma(xi, 0.5 * p, prm0);
        const VecN hy2 = kernel::h_gamma(eta, 0.5 * p, prm0);
        const double h2_diff_sq = (hx2 - hy2).squaredNorm();
        rec.leq(MonotonicityCalibrated, cal.monotonicity_lower * h2_diff_sq, mono,
                std::max({mono, mono_scale, cal.monotonicity_lower * h2_diff_sq}), tuple);

        // Convexity of G_eps.
        {
            const VecN gx = kernel::dg_eps(xi, prm);
            const VecN gy = kernel::dg_eps(eta, prm);
            const double pair = pairing(gx, gy, xi, eta);
            rec.leq(Convexity, 0.0, pair, (gx.norm() + gy.norm()) * dist, tuple);
        }

        // V_lambda(xi) = G_lambda(t) xi / |xi| with t = (|xi| - lambda)_+, so the
        // G_lambda bounds are read off |V_lambda|.
        const VecN vx = kernel::v_lambda(xi, prm0);
        const VecN vy = kernel::v_lambda(eta, prm0);
        const double tx = std::max(nx - lambda, 0.0);
        const double Gx = vx.norm();
        auto t_tuple = [&] { return json{{"t", tx}}; };
        if (tx > 0.0) {
            const double rhs = (2.0 / p) * std::pow(tx, 0.5 * p) * std::pow(tx / (tx + lambda), p / (p - 1.0));
            rec.leq(GLambdaWeightedBound, Gx, rhs, std::max(Gx, rhs), t_tuple);
        }
        {
            const double upper = (2.0 / p) * std::pow(tx, 0.5 * p);
            const double a = c_low * std::pow(tx + lambda, 0.5 * p);
            const double b = c_low_tilde * std::pow(lambda, 0.5 * p);
            rec.leq(GLambdaPowerBounds, Gx, upper, std::max(Gx, upper), t_tuple);
            rec.leq(GLambdaPowerBounds, a - b, Gx, std::max({a, b, Gx}), t_tuple);
        }

        const double v_diff_sq = (vx - vy).squaredNorm();
        const double v_scale = (vx.norm() + vy.norm()) * (vx.norm() + vy.norm());
        if (lambda > 0.0 && (nx > lambda || ny > lambda)) {
            const bool both = nx > lambda && ny > lambda;
            double rhs = 0.0;
            if (both) {
                const VecN& small = nx <= ny ? xi : eta;
                const VecN& large = nx <= ny ? eta : xi;
                const double nl = large.norm();
                rhs = 8.0 / (p * p) * h2_diff_sq +
                      64.0 / (p * p) * std::pow(nl - lambda, p) * dist * dist / (nl * (small.norm() + nl));
            } else {
                const double t = std::max(nx, ny) - lambda;
                rhs = 4.0 / (p * p) * std::pow(t, p);
            }
            rec.leq(VLambdaChain, v_diff_sq, rhs, std::max({v_diff_sq, rhs, v_scale}), tuple);
        }
        rec.leq(VLambdaCalibrated, v_diff_sq, cal.v_lambda_upper * mono,
                std::max({v_diff_sq, cal.v_lambda_upper * mono, cal.v_lambda_upper * mono_scale, v_scale}),
                tuple);

        // 2^-gamma a^gamma - b^gamma <= (a - b)^gamma for a >= b >= 0.
        {
            const double gamma = k % 2 == 0 ? gamma_p : rng.log_uniform(1e-2, 10.0);
            const double a = rng.log_uniform(1e-3, 1e2);
            const double u = rng.uniform();
            const double b = k % 7 == 0 ? 0.0 : (k % 11 == 0 ? a : a * u);
            const double lhs_a = std::pow(2.0, -gamma) * std::pow(a, gamma);
            const double lhs_b = std::pow(b, gamma);
            const double rhs = std::pow(a - b, gamma);
            rec.leq(PowerDifference, lhs_a - lhs_b, rhs, std::max({lhs_a, lhs_b, rhs}),
                    [&] { return json{{"a", a}, {"b", b}, {"gamma", gamma}}; });
        }

        // Rayleigh quotients of D^2 G_eps at z = xi.
        if (nx >= kernel::kHessianOriginFloor) {
            const VecN zeta = random_direction(rng, n);
            const double q = zeta.dot(kernel::d2g_eps(xi, prm) * zeta);
            const auto env = kernel::envelopes(nx, prm);
            const double weight = eps * kernel::radial::a(nx, prm);
            const double lower = c0 * weight + env.lower;
            const double upper = c1 * weight + env.upper;
            auto z_tuple = [&] { return json{{"z", vec_json(xi)}, {"zeta", vec_json(zeta)}}; };
            rec.leq(HessianSandwich, lower, q, std::max(std::abs(q), upper), z_tuple);
            rec.leq(HessianSandwich, q, upper, std::max(std::abs(q), upper), z_tuple);
        }

        // V_p bounds with calibrated constants.
        {
            const VecN px = kernel::v_p(xi, p);
            const VecN py = kernel::v_p(eta, p);
            const double vp_diff_sq = (px - py).squaredNorm();
            const double vp_scale = (px.norm() + py.norm()) * std::sqrt(vp_diff_sq);
            if (p > 2.0) {
                const double lhs = std::pow(dist, p);
                const double rhs = cal.vp_difference_upper * vp_diff_sq;
                rec.leq(VpDifferenceUpper, lhs, rhs,
                        std::max({lhs, rhs, cal.vp_difference_upper * vp_scale}), tuple);
            }
            if (dist > 0.0) {
                const double w = std::pow(nx * nx + ny * ny, 0.5 * (p - 2.0)) * dist * dist;
                const double c = cal.vp_two_sided;
                rec.leq(VpTwoSided, w / c, vp_diff_sq, std::max({w / c, vp_diff_sq, vp_scale}), tuple);
                rec.leq(VpTwoSided, vp_diff_sq, c * w, std::max({c * w, vp_diff_sq, vp_scale}), tuple);
            }
        }

        // Phi'(t) t <= c_Phi Phi(t) and 0 <= Phi <= 1.
        if (lambda > 0.0) {
            const double t = nx;
            const auto phi = kernel::phi_weight(t, prm);
            const double lhs = phi.derivative * t;
            const double rhs = kernel::phi_constant(prm) * phi.value;
            auto phi_tuple = [&] { return json{{"t", t}}; };
            rec.leq(PhiWeight, lhs, rhs, std::max(lhs, rhs), phi_tuple);
            rec.leq(PhiWeight, phi.value, 1.0, 1.0, phi_tuple);
            rec.leq(PhiWeight, 0.0, phi.value, 1.0, phi_tuple);
        }
    }

    // |V_lambda| on the shells lambda (1 + 2^-k) decreases to 0 and stays
    // below (2/p) (|xi| - lambda)^{p/2}.
    if (lambda > 0.0) {
        double previous = 0.0;
        for (int k = 1; k <= 40; ++k) {
            VecN z = with_norm(rng, n, lambda * (1.0 + std::ldexp(1.0, -k)));
            const double v = kernel::v_lambda(z, prm).norm();
            const double bound = (2.0 / p) * std::pow(z.norm() - lambda, 0.5 * p);
            auto shell_tuple = [&] { return json{{"z", vec_json(z)}, {"k", k}}; };
            rec.leq(VLambdaContinuity, v, bound, std::max(v, bound), shell_tuple);
            if (k > 1) {
                rec.leq(VLambdaContinuity, v, previous, std::max(v, previous), shell_tuple);
            }
            previous = v;
        }
    }
    return cell;
}

} // namespace

void LemmaSuiteOptions::validate() const
{
    WDL_REQUIRE(samples >= 1, InvalidArgument, "lemma suite: samples must be >= 1");
    WDL_REQUIRE(!p_values.empty() && !lambda_values.empty() && !eps_values.empty(), InvalidArgument,
                "lemma suite: empty parameter grid");
    WDL_REQUIRE(tolerance >= 0.0, InvalidArgument, "lemma suite: tolerance must be >= 0");
    WDL_REQUIRE(threads >= 1, InvalidArgument, "lemma suite: threads must be >= 1");
    for (double p : p_values) {
        for (double l : lambda_values) {
            for (double e : eps_values) {
                (void)Params::make(2, p, l, e);
            }
        }
    }
}

bool LemmaSuiteReport::passed() const
{
    return !checks.empty() &&
           std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.passed(); });
}

json LemmaSuiteReport::to_json() const
{
    json list = json::array();
    for (const auto& c : checks) {
        list.push_back({{"name", c.name},
                        {"checked", c.checked},
                        {"violations", c.violations},
                        {"worst_excess", c.worst_excess},
                        {"first_violation", c.first_violation},
                        {"passed", c.passed()}});
    }
    return {{"seed", options.seed},
            {"samples_per_cell", options.samples},
            {"p_values", options.p_values},
            {"lambda_values", options.lambda_values},
            {"eps_values", options.eps_values},
            {"tolerance", options.tolerance},
            {"passed", passed()},
            {"checks", list}};
}

LemmaSuiteReport run_lemma_suite(const LemmaSuiteOptions& options)
{
    options.validate();
    std::vector<std::pair<int, double>> keys;
    for (double p : options.p_values) {
        keys.emplace_back(2, p);
    }
    const auto table = kernel::ConstantsTable::build(keys);

    struct CellKey {
        double p, lambda, eps;
    };
    std::vector<CellKey> cells;
    for (double p : options.p_values) {
        for (double l : options.lambda_values) {
            for (double e : options.eps_values) {
                cells.push_back({p, l, e});
            }
        }
    }
    const auto results = parallel_map(cells.size(), options.threads, [&](std::size_t i) {
        const auto& c = cells[i];
        return run_cell(options, table.at(2, c.p), c.p, c.lambda, c.eps,
                        derive_seed(options.seed, i));
    });

    LemmaSuiteReport report;
    report.options = options;
    report.cells = Table({"p", "lambda", "eps", "check", "checked", "violations", "worst_excess"});
    report.checks.resize(CheckCount);
    for (int c = 0; c < CheckCount; ++c) {
        report.checks[c].name = kCheckNames[c];
    }
    for (const auto& cell : results) {
        for (int c = 0; c < CheckCount; ++c) {
            const Accum& a = cell.acc[c];
            LemmaCheck& out = report.checks[c];
            if (a.checked == 0) {
                continue;
            }
            if (out.checked == 0 || a.worst_excess > out.worst_excess) {
                out.worst_excess = a.worst_excess;
            }
            out.checked += a.checked;
            if (a.violations > 0 && out.violations == 0) {
                out.first_violation = a.first_violation;
            }
            out.violations += a.violations;
            report.cells.add_row({cell.p, cell.lambda, cell.eps, std::string(kCheckNames[c]),
                                  a.checked, a.violations, a.worst_excess});
        }
    }
    return report;
}

LemmaSuiteReport run_lemma_suite(std::uint64_t seed, long long samples)
{
    LemmaSuiteOptions opt;
    opt.seed = seed;
    opt.samples = samples;
    return run_lemma_suite(opt);
}

json GradientConsistency::to_json() const
{
    return {{"samples", samples},
            {"max_gradient_error", max_gradient_error},
            {"max_hessian_error", max_hessian_error},
            {"worst_gradient_case", worst_gradient_case},
            {"worst_hessian_case", worst_hessian_case}};
}

GradientConsistency run_gradient_consistency(std::uint64_t seed, long long samples, double step)
{
    WDL_REQUIRE(samples >= 1, InvalidArgument, "gradient consistency: samples must be >= 1");
    WDL_REQUIRE(step > 0.0, InvalidArgument, "gradient consistency: step must be > 0");
    const std::array<double, 4> ps{1.5, 2.0, 3.0, 4.5};
    const std::array<double, 3> lambdas{0.0, 0.5, 2.0};
    const std::array<double, 3> epss{0.0, 0.5, 1.0};
    const int n = 2;
    Sampler rng(seed);
    GradientConsistency out;
    out.samples = samples;
    for (long long k = 0; k < samples; ++k) {
        const double p = ps[k % ps.size()];
        const double lambda = lambdas[(k / ps.size()) % lambdas.size()];
        const double eps = epss[(k / (ps.size() * lambdas.size())) % epss.size()];
        const Params prm = Params::make(n, p, lambda, eps);
        double s = 0.0;
        do {
            s = rng.uniform(0.1, 4.0);
        } while (std::abs(s - lambda) < 0.1);
        const VecN z = with_norm(rng, n, s);
        const VecN g = kernel::dg_eps(z, prm);
        const kernel::MatN H = kernel::d2g_eps(z, prm);
        for (int i = 0; i < n; ++i) {
            VecN zp = z;
            VecN zm = z;
            zp[i] += step;
            zm[i] -= step;
            const double fd = (kernel::g_eps(zp, prm) - kernel::g_eps(zm, prm)) / (2.0 * step);
            const double err = std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i]));
            if (err > out.max_gradient_error) {
                out.max_gradient_error = err;
                out.worst_gradient_case = {{"p", p}, {"lambda", lambda}, {"eps", eps},
                                           {"z", vec_json(z)}, {"component", i}};
            }
            const VecN col = (kernel::dg_eps(zp, prm) - kernel::dg_eps(zm, prm)) / (2.0 * step);
            for (int j = 0; j < n; ++j) {
                const double herr = std::abs(col[j] - H(j, i)) / std::max(1.0, std::abs(H(j, i)));
                if (herr > out.max_hessian_error) {
                    out.max_hessian_error = herr;
                    out.worst_hessian_case = {{"p", p}, {"lambda", lambda}, {"eps", eps},
                                              {"z", vec_json(z)}, {"entry", {j, i}}};
                }
            }
        }
    }
    return out;
}

} // namespace wdl::harness
