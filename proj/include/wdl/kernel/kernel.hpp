#pragma once

#include "wdl/kernel/params.hpp"

#include <optional>

namespace wdl::kernel {

// ---------------------------------------------------------------------------
// Radial profiles. Every vector-valued function below has the form
// profile(|xi|) * xi, so the scalar profiles are what the solver evaluates in
// its inner loops. All of them are total on t >= 0 and vanish for t <= lambda
// where the positive part kills the leading factor.
// ---------------------------------------------------------------------------
namespace radial {

/// (t - lambda)_+^gamma / t, with value 0 at t = 0.
double h_gamma(double t, double gamma, double lambda);

/// h(t) = (t - lambda)_+^{p-1} / t.
double h(double t, const Params& prm);

/// h'(t). For t <= lambda the one-sided (left) derivative 0 is returned.
double h_prime(double t, const Params& prm);

/// a(t) = (1 + t^2)^{(p-2)/2}.
double a(double t, const Params& prm);

/// a'(t) = (p - 2) t (1 + t^2)^{(p-4)/2}.
double a_prime(double t, const Params& prm);

/// Coefficient c(t) with D_z G_eps(z) = c(|z|) z.
inline double flux_coefficient(double t, const Params& prm)
{
    return h(t, prm) + prm.eps * a(t, prm);
}

/// Coefficients (alpha, beta) with D^2 G_eps(z) = alpha I + beta z (x) z / |z|.
struct HessianCoefficients {
    double alpha;
    double beta;
};
HessianCoefficients hessian_coefficients(double t, const Params& prm);

/// G_eps as a function of |z|.
double g_eps(double t, const Params& prm);

/// The scalar factor of V_lambda: G_lambda((t - lambda)_+) / t.
double v_lambda_factor(double t, const Params& prm);

} // namespace radial

// ---------------------------------------------------------------------------
// Vector-valued functions on R^n.
// ---------------------------------------------------------------------------

/// H_gamma(xi) = (|xi| - lambda)_+^gamma xi / |xi|, zero at xi = 0.
/// Throws InvalidArgument if gamma <= 0 or xi has non-finite entries.
VecN h_gamma(const VecN& xi, double gamma, const Params& prm);

/// The nonlinear gradient function V_lambda. For lambda = 0 it coincides with
/// (2/p) |xi|^{(p-2)/2} xi.
VecN v_lambda(const VecN& xi, const Params& prm);

/// |xi|^{(p-2)/2} xi.
VecN v_p(const VecN& xi, double p);

/// G_lambda(t) = int_0^t w^{p/2 + 1/(p-1)} / (w + lambda)^{1 + 1/(p-1)} dw.
///
/// Closed forms are used for lambda = 0 and p = 2; otherwise adaptive
/// Gauss-Kronrod quadrature with relative tolerance well below 1e-10.
/// Throws InvalidArgument for t < 0.
double g_lambda(double t, const Params& prm);

/// The quadrature route of g_lambda, without the analytic shortcuts.
double g_lambda_quadrature(double t, double p, double lambda);

/// G_eps(z) = (1/p)(|z| - lambda)_+^p + (eps/p)(1 + |z|^2)^{p/2}.
double g_eps(const VecN& z, const Params& prm);

/// D_z G_eps(z) = H_{p-1}(z) + eps (1 + |z|^2)^{(p-2)/2} z.
VecN dg_eps(const VecN& z, const Params& prm);

/// Floor below which d2g_eps refuses to evaluate.
inline constexpr double kHessianOriginFloor = 1e-12;

/// D^2 G_eps(z). Throws DomainError for |z| < kHessianOriginFloor.
MatN d2g_eps(const VecN& z, const Params& prm);

/// Lower and upper ellipticity envelopes of the operator at |z| = s.
struct Envelopes {
    double lower;
    double upper;
};
Envelopes envelopes(double s, const Params& prm);

/// Upper / lower envelope at |xi|. Throws DomainError for |xi| <= lambda.
double ellipticity_ratio(const VecN& xi, const Params& prm);

/// Weight Phi(t) = (t / (t + lambda))^{1 + 2/(p-1)} and its derivative.
/// For lambda = 0 the weight is identically 1.
struct PhiValue {
    double value;
    double derivative;
};
PhiValue phi_weight(double t, const Params& prm);

/// Constant in Phi'(t) t <= c_Phi Phi(t).
inline double phi_constant(const Params& prm) { return (prm.p + 1.0) / (prm.p - 1.0); }

/// Sobolev conjugate exponent p*. When p >= n, `large_p_choice` is used if
/// given (it must exceed p), else the default 2p.
double sobolev_conjugate(const Params& prm, std::optional<double> large_p_choice = std::nullopt);

} // namespace wdl::kernel
