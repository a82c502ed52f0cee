#include "wdl/errors.hpp"
#include "wdl/kernel/constants.hpp"
#include "wdl/kernel/kernel.hpp"
#include "wdl/random.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include <cmath>

using namespace wdl::kernel;
using mp = boost::multiprecision::cpp_bin_float_50;

namespace {

VecN vec(double a, double b)
{
    VecN v(2);
    v << a, b;
    return v;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

mp g_lambda_oracle(double t, double p, double lambda)
{
    const mp pp = p;
    const mp lam = lambda;
    const mp e1 = pp / 2 + 1 / (pp - 1);
    const mp e2 = 1 + 1 / (pp - 1);
    auto f = [&](mp w) -> mp {
        if (w <= 0) {
            return 0;
        }
        return lambda == 0.0 ? pow(w, e1 - e2) : pow(w, e1) / pow(w + lam, e2);
    };
    boost::math::quadrature::tanh_sinh<mp> ts;
    return ts.integrate(f, mp(0), mp(t));
}

mp g_eps_oracle(double z0, double z1, double p, double lambda, double eps)
{
    const mp pp = p;
    const mp t = sqrt(mp(z0) * z0 + mp(z1) * z1);
    mp first = 0;
    if (t > lambda) {
        first = pow(t - lambda, pp) / pp;
    }
    return first + mp(eps) / pp * pow(1 + t * t, pp / 2);
}

} // namespace

TEST(Params, RejectsInvalidValues)
{
    EXPECT_THROW(Params::make(1, 2.0, 0.0, 0.0), wdl::InvalidArgument);
    EXPECT_THROW(Params::make(2, 1.0, 0.0, 0.0), wdl::InvalidArgument);
    EXPECT_THROW(Params::make(2, 2.0, -1.0, 0.0), wdl::InvalidArgument);
    EXPECT_THROW(Params::make(2, 2.0, 0.0, 1.5), wdl::InvalidArgument);
    EXPECT_NO_THROW(Params::make(2, 1.5, 0.0, 1.0));
}

TEST(HGamma, Examples)
{
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    const VecN a = h_gamma(vec(2.0, 0.0), 2.0, prm);
    EXPECT_DOUBLE_EQ(a[0], 1.0);
    EXPECT_DOUBLE_EQ(a[1], 0.0);
    const VecN b = h_gamma(vec(0.5, 0.5), 2.0, prm);
    EXPECT_EQ(b.norm(), 0.0);
    EXPECT_EQ(h_gamma(vec(0.0, 0.0), 2.0, prm).norm(), 0.0);
    EXPECT_THROW(h_gamma(vec(1.0, 0.0), 0.0, prm), wdl::InvalidArgument);
    EXPECT_THROW(h_gamma(vec(NAN, 0.0), 1.0, prm), wdl::InvalidArgument);
}

TEST(HGamma, MatchesHighPrecision)
{
    const Params prm = Params::make(2, 2.5, 2.0, 0.0);
    const VecN v = h_gamma(vec(3.0, 4.0), 1.5, prm);
    const mp factor = pow(mp(3), mp(1.5)) / 5;
    EXPECT_LE(rel(v[0], static_cast<double>(factor * 3)), 1e-15);
    EXPECT_LE(rel(v[1], static_cast<double>(factor * 4)), 1e-15);
}

TEST(VLambda, Examples)
{
    EXPECT_EQ(v_lambda(vec(0.9, 0.0), Params::make(2, 3.0, 1.0, 0.0)).norm(), 0.0);
    const VecN a = v_lambda(vec(1.0, 0.0), Params::make(2, 4.0, 0.0, 0.0));
    EXPECT_NEAR(a[0], 0.5, 1e-15);
    EXPECT_EQ(a[1], 0.0);
    const VecN b = v_lambda(vec(2.0, 0.0), Params::make(2, 2.0, 1.0, 0.0));
    EXPECT_NEAR(b[0], 2.0 - 0.5 - 2.0 * std::log(2.0), 1e-12);
    EXPECT_EQ(b[1], 0.0);
}

TEST(VLambda, ZeroLambdaIsScaledVp)
{
    wdl::Sampler rng(3);
    for (double p : {1.5, 2.0, 3.0, 4.5}) {
        const Params prm = Params::make(2, p, 0.0, 0.0);
        for (int k = 0; k < 100; ++k) {
            const VecN xi = vec(rng.uniform(-3, 3), rng.uniform(-3, 3));
            const VecN expect = (2.0 / p) * v_p(xi, p);
            EXPECT_LE((v_lambda(xi, prm) - expect).norm(), 1e-12 * (1.0 + expect.norm()));
        }
    }
}

TEST(VLambda, VanishesTowardsTheShell)
{
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    double previous = INFINITY;
    for (int k = 1; k <= 30; ++k) {
        const double s = 1.0 + std::ldexp(1.0, -k);
        const double m = v_lambda(vec(s, 0.0), prm).norm();
        EXPECT_LT(m, previous);
        previous = m;
    }
    EXPECT_LT(previous, 1e-12);
}

TEST(GLambda, Examples)
{
    EXPECT_EQ(g_lambda(0.0, Params::make(2, 3.0, 1.0, 0.0)), 0.0);
    EXPECT_DOUBLE_EQ(g_lambda(4.0, Params::make(2, 3.0, 0.0, 0.0)), 16.0 / 3.0);
    EXPECT_NEAR(g_lambda(1.0, Params::make(2, 2.0, 1.0, 0.0)), 1.5 - 2.0 * std::log(2.0), 1e-14);
    EXPECT_THROW(g_lambda(-1.0, Params::make(2, 3.0, 1.0, 0.0)), wdl::InvalidArgument);
}

TEST(GLambda, QuadratureMatchesHighPrecision)
{
    for (double p : {1.5, 2.0, 3.0, 4.5}) {
        for (double lambda : {0.0, 0.5, 2.0}) {
            for (double t : {1e-3, 0.5, 3.0, 10.0}) {
                const double oracle = static_cast<double>(g_lambda_oracle(t, p, lambda));
                EXPECT_LE(rel(g_lambda_quadrature(t, p, lambda), oracle), 1e-10)
                    << "p=" << p << " lambda=" << lambda << " t=" << t;
                EXPECT_LE(rel(g_lambda(t, Params::make(2, p, lambda, 0.0)), oracle), 1e-10);
            }
        }
    }
}

TEST(GLambda, NonDecreasing)
{
    const Params prm = Params::make(2, 1.5, 0.5, 0.0);
    double previous = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double v = g_lambda(0.05 * k, prm);
        EXPECT_GE(v, previous);
        previous = v;
    }
}

TEST(GEps, Examples)
{
    EXPECT_DOUBLE_EQ(g_eps(vec(0.0, 0.0), Params::make(2, 2.0, 1.0, 0.5)), 0.25);
    EXPECT_DOUBLE_EQ(g_eps(vec(2.0, 0.0), Params::make(2, 2.0, 1.0, 0.0)), 0.5);
}

TEST(GEps, MatchesHighPrecision)
{
    wdl::Sampler rng(11);
    for (int k = 0; k < 2000; ++k) {
        const double p = rng.uniform(1.2, 5.0);
        const double lambda = rng.uniform(0.0, 2.0);
        const double eps = rng.uniform(0.0, 1.0);
        const double z0 = rng.uniform(-4, 4);
        const double z1 = rng.uniform(-4, 4);
        const double oracle = static_cast<double>(g_eps_oracle(z0, z1, p, lambda, eps));
        EXPECT_LE(rel(g_eps(vec(z0, z1), Params::make(2, p, lambda, eps)), oracle), 1e-13);
    }
}

TEST(DgEps, Examples)
{
    EXPECT_EQ(dg_eps(vec(0.0, 0.0), Params::make(2, 3.0, 1.0, 0.5)).norm(), 0.0);
    const VecN d = dg_eps(vec(2.0, 0.0), Params::make(2, 3.0, 1.0, 0.0));
    EXPECT_DOUBLE_EQ(d[0], 1.0);
    EXPECT_EQ(d[1], 0.0);
    EXPECT_EQ(dg_eps(vec(0.3, -0.4), Params::make(2, 1.5, 1.0, 0.0)).norm(), 0.0);
}

TEST(DgEps, CentralDifferences)
{
    wdl::Sampler rng(5);
    const double step = 1e-5;
    for (int k = 0; k < 500; ++k) {
        const Params prm = Params::make(2, rng.uniform(1.5, 4.5), rng.uniform(0, 2), rng.uniform(0, 1));
        VecN z = vec(rng.uniform(-3, 3), rng.uniform(-3, 3));
        if (std::abs(z.norm() - prm.lambda) < 0.05 || z.norm() < 0.05) {
            continue;
        }
        const VecN g = dg_eps(z, prm);
        for (int j = 0; j < 2; ++j) {
            VecN zp = z;
            VecN zm = z;
            zp[j] += step;
            zm[j] -= step;
            const double fd = (g_eps(zp, prm) - g_eps(zm, prm)) / (2 * step);
            EXPECT_NEAR(fd, g[j], 1e-6 * std::max(1.0, std::abs(g[j])));
        }
    }
}

TEST(D2gEps, RankOneEigenstructure)
{
    for (double p : {1.5, 3.0}) {
        const Params prm = Params::make(2, p, 1.0, 0.5);
        const double t = 2.5;
        const MatN m = d2g_eps(vec(t, 0.0), prm);
        const double c = radial::flux_coefficient(t, prm);
        const double dc = radial::h_prime(t, prm) + prm.eps * radial::a_prime(t, prm);
        EXPECT_NEAR(m(1, 1), c, 1e-13);
        EXPECT_NEAR(m(0, 0), c + t * dc, 1e-12);
        EXPECT_NEAR(m(0, 1), 0.0, 1e-15);
        EXPECT_EQ(m(0, 1), m(1, 0));
    }
}

TEST(D2gEps, DegenerateSetAndOrigin)
{
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    EXPECT_EQ(d2g_eps(vec(0.6, 0.3), prm).norm(), 0.0);
    EXPECT_THROW(d2g_eps(vec(0.0, 0.0), prm), wdl::DomainError);
}

TEST(D2gEps, CentralDifferencesOfGradient)
{
    wdl::Sampler rng(6);
    const double step = 1e-5;
    for (int k = 0; k < 500; ++k) {
        const Params prm = Params::make(2, rng.uniform(1.5, 4.5), rng.uniform(0, 2), rng.uniform(0, 1));
        VecN z = vec(rng.uniform(-3, 3), rng.uniform(-3, 3));
        if (std::abs(z.norm() - prm.lambda) < 0.1 || z.norm() < 0.1) {
            continue;
        }
        const MatN m = d2g_eps(z, prm);
        for (int j = 0; j < 2; ++j) {
            VecN zp = z;
            VecN zm = z;
            zp[j] += step;
            zm[j] -= step;
            const VecN fd = (dg_eps(zp, prm) - dg_eps(zm, prm)) / (2 * step);
            EXPECT_LE((fd - m.col(j)).norm(), 1e-5 * std::max(1.0, m.col(j).norm()));
        }
    }
}

TEST(Envelopes, Examples)
{
    const Envelopes a = envelopes(2.0, Params::make(2, 3.0, 1.0, 0.0));
    EXPECT_DOUBLE_EQ(a.lower, 0.5);
    EXPECT_DOUBLE_EQ(a.upper, 2.0);
    const Envelopes b = envelopes(1.0, Params::make(2, 3.0, 1.0, 0.0));
    EXPECT_EQ(b.lower, 0.0);
    EXPECT_EQ(b.upper, 0.0);
    const Envelopes c = envelopes(2.0, Params::make(2, 1.5, 1.0, 0.0));
    EXPECT_DOUBLE_EQ(c.lower, 0.25);
    EXPECT_DOUBLE_EQ(c.upper, 1.0);
}

TEST(EllipticityRatio, Examples)
{
    EXPECT_NEAR(ellipticity_ratio(vec(0.7, 0.2), Params::make(2, 3.0, 0.0, 0.0)), 2.0, 1e-14);
    EXPECT_NEAR(ellipticity_ratio(vec(2.0, 0.0), Params::make(2, 3.0, 1.0, 0.0)), 4.0, 1e-14);
    EXPECT_THROW(ellipticity_ratio(vec(1.0, 0.0), Params::make(2, 3.0, 1.0, 0.0)), wdl::DomainError);
}

TEST(EllipticityRatio, BlowsUpLinearlyAtTheShell)
{
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    const double r10 = ellipticity_ratio(vec(1.0 + std::ldexp(1.0, -10), 0.0), prm);
    const double r20 = ellipticity_ratio(vec(1.0 + std::ldexp(1.0, -20), 0.0), prm);
    EXPECT_NEAR(std::log2(r20 / r10) / 10.0, 1.0, 1e-3);
}

TEST(PhiWeight, Examples)
{
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    EXPECT_EQ(phi_weight(0.0, prm).value, 0.0);
    EXPECT_DOUBLE_EQ(phi_weight(1.0, prm).value, 0.25);
    EXPECT_THROW(phi_weight(-1.0, prm), wdl::InvalidArgument);
    EXPECT_EQ(phi_weight(3.0, Params::make(2, 3.0, 0.0, 0.0)).value, 1.0);
}

TEST(PhiWeight, DerivativeAndWeightBound)
{
    wdl::Sampler rng(8);
    for (int k = 0; k < 1000; ++k) {
        const Params prm = Params::make(2, rng.uniform(1.2, 5), rng.uniform(0.1, 2), 0.0);
        const double t = rng.uniform(0.01, 5);
        const PhiValue v = phi_weight(t, prm);
        EXPECT_GE(v.value, 0.0);
        EXPECT_LE(v.value, 1.0);
        EXPECT_LE(v.derivative * t - phi_constant(prm) * v.value, 1e-14);
        const double h = 1e-6;
        const double fd = (phi_weight(t + h, prm).value - phi_weight(t - h, prm).value) / (2 * h);
        EXPECT_NEAR(fd, v.derivative, 1e-6 * std::max(1.0, std::abs(v.derivative)));
    }
}

TEST(SobolevConjugate, Examples)
{
    EXPECT_DOUBLE_EQ(sobolev_conjugate(Params::make(4, 2.0, 0.0, 0.0)), 4.0);
    EXPECT_DOUBLE_EQ(sobolev_conjugate(Params::make(2, 2.0, 0.0, 0.0)), 4.0);
    EXPECT_DOUBLE_EQ(sobolev_conjugate(Params::make(3, 1.5, 0.0, 0.0)), 3.0);
    EXPECT_DOUBLE_EQ(sobolev_conjugate(Params::make(2, 3.0, 0.0, 0.0), 7.0), 7.0);
    EXPECT_THROW(sobolev_conjugate(Params::make(2, 3.0, 0.0, 0.0), 2.0), wdl::InvalidArgument);
}

TEST(Constants, ExplicitMonotonicityConstant)
{
    EXPECT_DOUBLE_EQ(explicit_monotonicity_constant(3.0), 1.0 / 16.0);
    EXPECT_DOUBLE_EQ(explicit_monotonicity_constant(1.5), 0.5 / std::pow(2.0, 2.5));
}

TEST(Constants, CalibrationCoversObservedExtremes)
{
    CalibrationOptions opt;
    opt.grid_resolution = 100;
    opt.random_samples = 20000;
    for (double p : {1.5, 3.0}) {
        const CalibratedConstants c = calibrate_constants(2, p, opt);
        EXPECT_GE(c.vp_two_sided, c.observed_vp_ratio_max);
        EXPECT_GE(c.vp_two_sided, 1.0 / c.observed_vp_ratio_min);
        EXPECT_LE(c.monotonicity_lower, c.observed_monotonicity_min);
        EXPECT_GT(c.monotonicity_lower, 0.0);
        EXPECT_GT(c.v_lambda_upper, 0.0);
        EXPECT_FALSE(c.provenance.empty());
        if (p > 2.0) {
            EXPECT_GE(c.vp_difference_upper, c.observed_vp_difference_max);
        }
    }
    const ConstantsTable table = ConstantsTable::build({{2, 3.0}}, opt);
    EXPECT_TRUE(table.contains(2, 3.0));
    EXPECT_THROW(static_cast<void>(table.at(2, 4.0)), wdl::InvalidArgument);
}
