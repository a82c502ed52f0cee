#include "wdl/kernel/kernel.hpp"

#include "wdl/errors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <sstream>

namespace wdl::kernel {

Params Params::make(int n, double p, double lambda, double eps)
{
    Params prm{n, p, lambda, eps};
    prm.validate();
    return prm;
}

void Params::validate() const
{
    WDL_REQUIRE(n >= 2, InvalidArgument, "Params: dimension n must be >= 2");
    WDL_REQUIRE(std::isfinite(p) && p > 1.0, InvalidArgument, "Params: exponent p must be > 1");
    WDL_REQUIRE(std::isfinite(lambda) && lambda >= 0.0, InvalidArgument,
                "Params: lambda must be >= 0");
    WDL_REQUIRE(eps >= 0.0 && eps <= 1.0, InvalidArgument, "Params: eps must lie in [0, 1]");
}

Params Params::with_eps(double e) const
{
    return make(n, p, lambda, e);
}

namespace radial {

double h_gamma(double t, double gamma, double lambda)
{
    if (t <= lambda || t <= 0.0) {
        return 0.0;
    }
    return std::pow(t - lambda, gamma) / t;
}

double h(double t, const Params& prm)
{
    return h_gamma(t, prm.p - 1.0, prm.lambda);
}

double h_prime(double t, const Params& prm)
{
    if (t <= prm.lambda || t <= 0.0) {
        return 0.0;
    }
    const double d = t - prm.lambda;
    // (p-1) d^{p-2} / t - d^{p-1} / t^2, written as d^{p-2} ((p-1) t - d) / t^2
    return std::pow(d, prm.p - 2.0) * ((prm.p - 1.0) * t - d) / (t * t);
}

double a(double t, const Params& prm)
{
    return std::pow(1.0 + t * t, 0.5 * (prm.p - 2.0));
}

double a_prime(double t, const Params& prm)
{
    return (prm.p - 2.0) * t * std::pow(1.0 + t * t, 0.5 * (prm.p - 4.0));
}

HessianCoefficients hessian_coefficients(double t, const Params& prm)
{
    double alpha = h(t, prm);
    double beta = h_prime(t, prm);
    if (prm.eps > 0.0) {
        alpha += prm.eps * a(t, prm);
        beta += prm.eps * a_prime(t, prm);
    }
    return {alpha, beta};
}

double g_eps(double t, const Params& prm)
{
    const double d = t - prm.lambda;
    double value = d > 0.0 ? std::pow(d, prm.p) / prm.p : 0.0;
    if (prm.eps > 0.0) {
        value += prm.eps / prm.p * std::pow(1.0 + t * t, 0.5 * prm.p);
    }
    return value;
}

double v_lambda_factor(double t, const Params& prm)
{
    if (t <= prm.lambda || t <= 0.0) {
        return 0.0;
    }
    return g_lambda(t - prm.lambda, prm) / t;
}

} // namespace radial

namespace {

void require_finite(const VecN& v, const char* what)
{
    if (!v.allFinite()) {
        std::ostringstream os;
        os << what << ": non-finite input vector";
        throw InvalidArgument(os.str());
    }
}

// G_lambda for p = 2:  t + lambda - lambda^2/(t+lambda) - 2 lambda log(1 + t/lambda).
// For small x = t/lambda the terms cancel to O(x^3); use the series
// lambda * sum_{k>=3} (-1)^{k+1} (k-2)/k x^k there.
double g_lambda_p2(double t, double lambda)
{
    const double x = t / lambda;
    if (x < 0.1) {
        double sum = 0.0;
        double xk = x * x * x;
        for (int k = 3; k < 40; ++k) {
            const double term = (k % 2 == 1 ? 1.0 : -1.0) * (k - 2.0) / k * xk;
            sum += term;
            if (std::abs(term) < 1e-18 * std::abs(sum)) {
                break;
            }
            xk *= x;
        }
        return lambda * sum;
    }
    return lambda * (x + x / (1.0 + x) - 2.0 * std::log1p(x));
}

} // namespace

double g_lambda_quadrature(double t, double p, double lambda)
{
    WDL_REQUIRE(t >= 0.0 && std::isfinite(t), InvalidArgument, "g_lambda: t must be >= 0");
    if (t == 0.0) {
        return 0.0;
    }
    const double num_exp = 0.5 * p + 1.0 / (p - 1.0);
    const double den_exp = p / (p - 1.0);
    // With w = t s the integral is t^{a+1} lambda^{-b} int_0^1 s^a (1 + x s)^{-b} ds,
    // x = t / lambda. The remaining integral is O(1) for small x, which keeps
    // the Kronrod error estimate meaningful when G is tiny in absolute terms.
    // For lambda = 0 the same substitution gives t^{a-b+1} int_0^1 s^{a-b} ds.
    // s = u^4 smooths the endpoint power s^c into 4 u^{4c+3}, 4c+3 >= 1.
    const bool homogeneous = lambda == 0.0;
    const double x = homogeneous ? 0.0 : t / lambda;
    const double power = homogeneous ? num_exp - den_exp : num_exp;
    auto integrand = [=](double u) {
        if (u <= 0.0) {
            return 0.0;
        }
        const double log_u = std::log(u);
        const double s = u * u * u * u;
        const double damping = homogeneous ? 0.0 : den_exp * std::log1p(x * s);
        return 4.0 * std::exp((4.0 * power + 3.0) * log_u - damping);
    };
    using boost::math::quadrature::gauss_kronrod;
    double error = 0.0;
    const double scaled = gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 15, 1e-13, &error);
    const double log_prefactor = homogeneous
                                     ? (num_exp - den_exp + 1.0) * std::log(t)
                                     : (num_exp + 1.0) * std::log(t) - den_exp * std::log(lambda);
    return std::exp(log_prefactor) * scaled;
}

double g_lambda(double t, const Params& prm)
{
    WDL_REQUIRE(t >= 0.0 && std::isfinite(t), InvalidArgument, "g_lambda: t must be >= 0");
    if (t == 0.0) {
        return 0.0;
    }
    if (prm.lambda == 0.0) {
        return 2.0 / prm.p * std::pow(t, 0.5 * prm.p);
    }
    if (prm.p == 2.0) {
        return g_lambda_p2(t, prm.lambda);
    }
    return g_lambda_quadrature(t, prm.p, prm.lambda);
}

VecN h_gamma(const VecN& xi, double gamma, const Params& prm)
{
    WDL_REQUIRE(gamma > 0.0 && std::isfinite(gamma), InvalidArgument,
                "h_gamma: gamma must be > 0");
    require_finite(xi, "h_gamma");
    return radial::h_gamma(xi.norm(), gamma, prm.lambda) * xi;
}

VecN v_lambda(const VecN& xi, const Params& prm)
{
    return radial::v_lambda_factor(xi.norm(), prm) * xi;
}

VecN v_p(const VecN& xi, double p)
{
    const double t = xi.norm();
    if (t == 0.0) {
        return VecN::Zero(xi.size());
    }
    return std::pow(t, 0.5 * (p - 2.0)) * xi;
}

double g_eps(const VecN& z, const Params& prm)
{
    return radial::g_eps(z.norm(), prm);
}

VecN dg_eps(const VecN& z, const Params& prm)
{
    return radial::flux_coefficient(z.norm(), prm) * z;
}

MatN d2g_eps(const VecN& z, const Params& prm)
{
    const double t = z.norm();
    if (!(t >= kHessianOriginFloor)) {
        throw DomainError("d2g_eps: Hessian does not exist at the origin");
    }
    const auto [alpha, beta] = radial::hessian_coefficients(t, prm);
    MatN m = (beta / t) * (z * z.transpose());
    m.diagonal().array() += alpha;
    return m;
}

Envelopes envelopes(double s, const Params& prm)
{
    WDL_REQUIRE(s >= 0.0, InvalidArgument, "envelopes: s must be >= 0");
    if (s <= prm.lambda || s == 0.0) {
        return {0.0, 0.0};
    }
    const double d = s - prm.lambda;
    const double p = prm.p;
    if (p > 2.0) {
        return {std::pow(d, p - 1.0) / s, (p - 1.0) * std::pow(d, p - 2.0)};
    }
    return {(p - 1.0) * std::pow(d, p - 1.0) / s, std::pow(d, p - 2.0)};
}

double ellipticity_ratio(const VecN& xi, const Params& prm)
{
    const double s = xi.norm();
    if (!(s > prm.lambda) || s == 0.0) {
        throw DomainError("ellipticity_ratio: requires |xi| > lambda");
    }
    const auto env = envelopes(s, prm);
    return env.upper / env.lower;
}

PhiValue phi_weight(double t, const Params& prm)
{
    WDL_REQUIRE(t >= 0.0 && std::isfinite(t), InvalidArgument, "phi_weight: t must be >= 0");
    if (prm.lambda == 0.0) {
        return {1.0, 0.0};
    }
    const double e = 1.0 + 2.0 / (prm.p - 1.0);
    const double r = t / (t + prm.lambda);
    const double value = std::pow(r, e);
    const double dr = prm.lambda / ((t + prm.lambda) * (t + prm.lambda));
    return {value, e * std::pow(r, e - 1.0) * dr};
}

double sobolev_conjugate(const Params& prm, std::optional<double> large_p_choice)
{
    if (prm.p < prm.n) {
        return prm.n * prm.p / (prm.n - prm.p);
    }
    if (large_p_choice) {
        WDL_REQUIRE(*large_p_choice > prm.p && std::isfinite(*large_p_choice), InvalidArgument,
                    "sobolev_conjugate: configured value must exceed p");
        return *large_p_choice;
    }
    return 2.0 * prm.p;
}

} // namespace wdl::kernel
