#include "wdl/errors.hpp"
#include "wdl/kernel/constants.hpp"
#include "wdl/kernel/kernel.hpp"
#include "wdl/random.hpp"
#include "wdl/solver/solver.hpp"

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace wdl;
using namespace wdl::solver;
using grid::GridSpec;

namespace {

// f* = -div(c(|Du*|) Du*) for u* = a |x|^2 / 2 in two dimensions.
ScalarField manufactured_datum(const GridSpec& g, double a, const Params& prm)
{
    return ScalarField::sample(g, [&](double x, double y) {
        const double t = a * std::hypot(x, y);
        const double c = kernel::radial::flux_coefficient(t, prm);
        const double dc = kernel::radial::h_prime(t, prm) + prm.eps * kernel::radial::a_prime(t, prm);
        return -a * (2.0 * c + t * dc);
    });
}

ScalarField paraboloid(const GridSpec& g, double a)
{
    return ScalarField::sample(g, [a](double x, double y) { return 0.5 * a * (x * x + y * y); });
}

double max_diff(const ScalarField& u, const ScalarField& v)
{
    double m = 0.0;
    for (std::size_t k = 0; k < u.values.size(); ++k) {
        m = std::max(m, std::abs(u.values[k] - v.values[k]));
    }
    return m;
}

} // namespace

TEST(SolveConfig, Validation)
{
    SolveConfig c;
    EXPECT_NO_THROW(c.validate());
    c.grad_tol = 0.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = SolveConfig{};
    c.line_search.backtrack = 1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
    c = SolveConfig{};
    c.hessian_floor = -1.0;
    EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Energy, Examples)
{
    const GridSpec g = GridSpec::make(1.0, 8);
    const ScalarField zero = ScalarField::zeros(g);
    EXPECT_NEAR(energy(zero, zero, Params::make(2, 2.0, 1.0, 0.5)), 1.0, 1e-14);
    const Params degenerate = Params::make(2, 3.0, 1.0, 0.0);
    const ScalarField inside = ScalarField::sample(g, [](double x, double y) { return 0.3 * x - 0.4 * y; });
    EXPECT_EQ(energy(inside, zero, degenerate), 0.0);
    EXPECT_EQ(residual(inside, zero, degenerate), 0.0);
    // |Dv| = lambda up to rounding.
    const ScalarField shell = ScalarField::sample(g, [](double x, double y) { return 0.6 * x - 0.8 * y; });
    EXPECT_LE(energy(shell, zero, degenerate), 1e-13);
    EXPECT_LE(residual(shell, zero, degenerate), 1e-13);
    EXPECT_THROW(energy(shell, ScalarField::zeros(GridSpec::make(1.0, 4)), degenerate), InvalidArgument);
}

TEST(Energy, PartsAndDescentAlongNegativeGradient)
{
    const GridSpec g = GridSpec::make(1.0, 12);
    const BoundaryMask mask = BoundaryMask::square(g);
    Sampler rng(21);
    const Params prm = Params::make(2, 3.0, 0.5, 0.1);
    ScalarField v = ScalarField::sample(g, [&](double, double) { return rng.uniform(-1, 1); });
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return 1.0 + x * y; });
    const EnergyParts parts = energy_parts(v, f, prm);
    EXPECT_DOUBLE_EQ(parts.total(), energy(v, f, prm));
    const ScalarField grad = energy_gradient(v, f, prm, mask);
    double gnorm = 0.0;
    for (double x : grad.values) {
        gnorm = std::max(gnorm, std::abs(x));
    }
    EXPECT_DOUBLE_EQ(gnorm, residual(v, f, prm, mask));
    const double J0 = energy(v, f, prm);
    for (double step : {1e-3, 1e-4, 1e-5}) {
        ScalarField w = v;
        for (std::size_t k = 0; k < w.values.size(); ++k) {
            w.values[k] -= step * grad.values[k];
        }
        EXPECT_LT(energy(w, f, prm), J0);
    }
}

TEST(Energy, GradientMatchesCentralDifferences)
{
    const GridSpec g = GridSpec::make(1.0, 6);
    const BoundaryMask mask = BoundaryMask::square(g);
    Sampler rng(22);
    const Params prm = Params::make(2, 2.5, 0.3, 0.2);
    const ScalarField v = ScalarField::sample(g, [&](double, double) { return rng.uniform(-2, 2); });
    const ScalarField f = ScalarField::constant(g, 0.7);
    const ScalarField grad = energy_gradient(v, f, prm, mask);
    const double h = 1e-6;
    for (std::size_t k = 0; k < v.values.size(); ++k) {
        if (!mask.is_interior(k)) {
            EXPECT_EQ(grad.values[k], 0.0);
            continue;
        }
        ScalarField vp = v;
        ScalarField vm = v;
        vp.values[k] += h;
        vm.values[k] -= h;
        const double fd = (energy(vp, f, prm) - energy(vm, f, prm)) / (2 * h);
        EXPECT_NEAR(fd, grad.values[k], 1e-7);
    }
}

TEST(Solve, LipschitzBoundaryDataIsExactForTheHomogeneousProblem)
{
    const GridSpec g = GridSpec::make(1.0, 16);
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    const ScalarField b = ScalarField::sample(g, [](double x, double) { return x; });
    const SolveReport rep = solve(b, ScalarField::zeros(g), prm);
    EXPECT_TRUE(rep.converged);
    EXPECT_LE(rep.final_residual(), 1e-13);
    EXPECT_LE(std::abs(rep.energy), 1e-13);
    EXPECT_FALSE(rep.warnings.empty());
}

TEST(Solve, ShellDataIsExactBelowQuadraticGrowth)
{
    // |Du| = lambda on every cell; for p < 2 a rounding overshoot of the
    // discrete gradient must not leave a residual of order sqrt(ulp).
    const GridSpec g = GridSpec::make(1.0, 64);
    for (double lambda : {0.5, 2.0}) {
        const Params prm = Params::make(2, 1.5, lambda, 0.0);
        const double c = lambda / std::sqrt(2.0);
        const ScalarField b = ScalarField::sample(g, [&](double x, double y) { return c * (x - y) + 0.3; });
        EXPECT_EQ(residual(b, ScalarField::zeros(g), prm), 0.0);
        const SolveReport rep = solve(b, ScalarField::zeros(g), prm);
        EXPECT_TRUE(rep.converged);
        EXPECT_LE(rep.final_residual(), 1e-13);
    }
}

TEST(Solve, QuadraticCaseMatchesDirectLinearSolve)
{
    const GridSpec g = GridSpec::make(1.0, 10);
    const BoundaryMask mask = BoundaryMask::square(g);
    const Params prm = Params::make(2, 2.0, 0.0, 1.0);
    const ScalarField b = ScalarField::sample(g, [](double x, double y) { return std::sin(3 * x) + x * y * y; });
    const SolveReport rep = solve(b, ScalarField::zeros(g), prm);
    ASSERT_TRUE(rep.converged);

    // Stiffness matrix assembled column by column from the grid operators;
    // here D_z G = 2 z, so the discrete equation is linear.
    std::vector<std::size_t> interior;
    for (std::size_t k = 0; k < g.node_count(); ++k) {
        if (mask.is_interior(k)) {
            interior.push_back(k);
        }
    }
    const auto n = static_cast<Eigen::Index>(interior.size());
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        ScalarField e = ScalarField::zeros(g);
        e.values[interior[c]] = 1.0;
        grid::VectorField d = grid::gradient(e);
        for (auto& v : d.values) {
            v = {2 * v[0], 2 * v[1]};
        }
        const ScalarField col = grid::divergence_weak(d, mask);
        for (Eigen::Index r = 0; r < n; ++r) {
            K(r, c) = col.values[interior[r]];
        }
    }
    ScalarField boundary_only = b;
    for (std::size_t k : interior) {
        boundary_only.values[k] = 0.0;
    }
    grid::VectorField db = grid::gradient(boundary_only);
    for (auto& v : db.values) {
        v = {2 * v[0], 2 * v[1]};
    }
    const ScalarField load = grid::divergence_weak(db, mask);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        rhs[r] = -load.values[interior[r]];
    }
    const Eigen::VectorXd x = K.fullPivLu().solve(rhs);
    for (Eigen::Index r = 0; r < n; ++r) {
        EXPECT_NEAR(rep.solution.values[interior[r]], x[r], 1e-10);
    }
    const ScalarField h = harmonic_extension(b, mask);
    EXPECT_LE(max_diff(h, rep.solution), 1e-10);
}

TEST(Solve, ContractProperties)
{
    const GridSpec g = GridSpec::make(1.0, 16);
    for (double p : {1.5, 3.0}) {
        const Params prm = Params::make(2, p, 1.0, 0.01);
        const ScalarField b = ScalarField::sample(g, [](double x, double y) { return 1.5 * x + 0.2 * y * y; });
        const ScalarField f = ScalarField::sample(g, [](double x, double y) {
            return 20.0 * std::exp(-10.0 * (x * x + y * y));
        });
        const SolveReport rep = solve(b, f, prm);
        ASSERT_TRUE(rep.converged) << "p=" << p;
        EXPECT_LE(rep.final_residual(), SolveConfig{}.grad_tol);
        EXPECT_NEAR(residual(rep.solution, f, prm), rep.final_residual(), 1e-15);
        EXPECT_LE(rep.energy, energy(harmonic_extension(b, BoundaryMask::square(g)), f, prm));
        const BoundaryMask mask = BoundaryMask::square(g);
        for (std::size_t k = 0; k < b.values.size(); ++k) {
            if (!mask.is_interior(k)) {
                EXPECT_EQ(rep.solution.values[k], b.values[k]);
            }
        }
        EXPECT_EQ(rep.residual_history.size(), static_cast<std::size_t>(rep.iterations) + 1);
        const auto j = rep.to_json();
        for (const char* key : {"energy", "iterations", "converged", "residual_history"}) {
            EXPECT_TRUE(j.contains(key)) << key;
        }
    }
}

TEST(Solve, MonotoneResidualModeKeepsHistoryNonIncreasing)
{
    const GridSpec g = GridSpec::make(1.0, 16);
    const Params prm = Params::make(2, 3.0, 1.0, 0.01);
    const ScalarField b = ScalarField::zeros(g);
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return 20.0 * std::exp(-10.0 * (x * x + y * y)); });
    SolveConfig cfg;
    cfg.line_search.monotone_residual = true;
    const SolveReport rep = solve(b, f, prm, cfg);
    EXPECT_TRUE(rep.converged);
    if (rep.residual_increases == 0) {
        for (std::size_t k = 1; k < rep.residual_history.size(); ++k) {
            EXPECT_LE(rep.residual_history[k], rep.residual_history[k - 1]);
        }
    }
}

TEST(Solve, IterationCapYieldsNonConvergedReport)
{
    const GridSpec g = GridSpec::make(1.0, 16);
    const Params prm = Params::make(2, 3.0, 1.0, 0.001);
    SolveConfig cfg;
    cfg.max_iters = 1;
    const ScalarField f = ScalarField::constant(g, 30.0);
    SolveReport rep;
    ASSERT_NO_THROW(rep = solve(ScalarField::zeros(g), f, prm, cfg));
    EXPECT_FALSE(rep.converged);
    EXPECT_EQ(rep.iterations, 1);
    EXPECT_FALSE(rep.warnings.empty());
}

TEST(Solve, UniqueForPositiveEps)
{
    const GridSpec g = GridSpec::make(1.0, 16);
    const BoundaryMask mask = BoundaryMask::square(g);
    const Params prm = Params::make(2, 3.0, 1.0, 0.01);
    const ScalarField b = ScalarField::sample(g, [](double x, double) { return 1.5 * x; });
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return 20.0 * std::exp(-10.0 * (x * x + y * y)); });
    SolveConfig cfg;
    const SolveReport a = solve(b, f, prm, cfg);
    Sampler rng(5);
    const ScalarField start = ScalarField::sample(g, [&](double, double) { return rng.uniform(-3, 3); });
    const SolveReport c = solve(b, f, prm, cfg, mask, start);
    ASSERT_TRUE(a.converged);
    ASSERT_TRUE(c.converged);
    EXPECT_LE(max_diff(a.solution, c.solution), 10.0 * cfg.grad_tol);
}

TEST(Solve, ComparisonMonotonicityAndVLambdaBound)
{
    const GridSpec g = GridSpec::make(1.0, 16);
    const double p = 3.0;
    const Params prm = Params::make(2, p, 1.0, 0.01);
    const ScalarField b = ScalarField::sample(g, [](double x, double) { return 1.5 * x; });
    const ScalarField f = ScalarField::sample(g, [](double x, double y) { return 20.0 * std::exp(-10.0 * (x * x + y * y)); });
    const SolveReport rep = solve(b, f, prm);
    ASSERT_TRUE(rep.converged);
    const double c_v = kernel::calibrate_constants(2, p).v_lambda_upper;
    const BoundaryMask mask = BoundaryMask::square(g);
    Sampler rng(6);
    for (int trial = 0; trial < 5; ++trial) {
        ScalarField other = b;
        for (std::size_t k = 0; k < other.values.size(); ++k) {
            if (mask.is_interior(k)) {
                other.values[k] += rng.uniform(-0.5, 0.5);
            }
        }
        EXPECT_GE(regularized_pairing(rep.solution, other, prm), 0.0);
        const double pairing = monotonicity_pairing(rep.solution, other, prm);
        EXPECT_GE(pairing, 0.0);
        EXPECT_LE(v_lambda_distance_sq(rep.solution, other, prm), c_v * pairing);
    }
}

TEST(Solve, ManufacturedResidualIsFirstOrder)
{
    const double a = 2.0;
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    std::vector<double> log_h;
    std::vector<double> log_r;
    double first = 0.0;
    for (int cells : {16, 32, 64, 128, 256}) {
        const GridSpec g = GridSpec::make(1.0, cells);
        const double h = g.spacing();
        // Entries are tested against basis functions of mass h^2.
        const double r = residual(paraboloid(g, a), manufactured_datum(g, a, prm), prm) / (h * h);
        if (cells == 16) {
            first = r / h;
        }
        EXPECT_LE(r, 1.5 * first * h) << cells;
        log_h.push_back(std::log(h));
        log_r.push_back(std::log(r));
    }
    const double mh = std::accumulate(log_h.begin(), log_h.end(), 0.0) / log_h.size();
    const double mr = std::accumulate(log_r.begin(), log_r.end(), 0.0) / log_r.size();
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < log_h.size(); ++k) {
        num += (log_h[k] - mh) * (log_r[k] - mr);
        den += (log_h[k] - mh) * (log_h[k] - mh);
    }
    EXPECT_GE(num / den, 0.9);
}

TEST(Solve, ManufacturedSolutionIsRecovered)
{
    const double a = 2.0;
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    std::vector<double> errors;
    for (int cells : {16, 32}) {
        const GridSpec g = GridSpec::make(1.0, cells);
        const ScalarField exact = paraboloid(g, a);
        const SolveReport rep = solve(exact, manufactured_datum(g, a, prm), prm);
        ASSERT_TRUE(rep.converged);
        const auto v = v_lambda_field(rep.solution, prm);
        double sum = 0.0;
        for (int j = 0; j < cells; ++j) {
            for (int i = 0; i < cells; ++i) {
                kernel::VecN z(2);
                z << a * g.cell_coord(i), a * g.cell_coord(j);
                const kernel::VecN vz = kernel::v_lambda(z, prm);
                const auto& vh = v.at(i, j);
                sum += std::pow(vh[0] - vz[0], 2) + std::pow(vh[1] - vz[1], 2);
            }
        }
        errors.push_back(std::sqrt(sum) * g.spacing());
    }
    EXPECT_LT(errors[1], 0.6 * errors[0]);
}

TEST(SobolevConjugateNorms, Examples)
{
    const GridSpec g = GridSpec::make(1.0, 8);
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    const ScalarField u = ScalarField::sample(g, [](double x, double y) { return 3 * x + 4 * y; });
    const ConjugateNorms n = sobolev_conjugate_norms(u, ScalarField::zeros(g), prm);
    EXPECT_NEAR(n.du_p, 5.0 * std::cbrt(4.0), 1e-12);
    EXPECT_EQ(n.f_conjugate, 0.0);
    EXPECT_EQ(n.f_sobolev_dual, 0.0);
    EXPECT_EQ(n.f_subquadratic, 0.0);
    EXPECT_DOUBLE_EQ(n.p_star, 6.0);
    const ConjugateNorms c = sobolev_conjugate_norms(u, ScalarField::constant(g, 2.0), prm);
    EXPECT_NEAR(c.f_conjugate, 2.0 * std::pow(4.0, 2.0 / 3.0), 1e-12);
}

TEST(SobolevConjugateNorms, ConvergeToContinuousNorm)
{
    const Params prm = Params::make(2, 3.0, 1.0, 0.0);
    // Refined-quadrature oracle for ||x^2 + y^2||_{3/2}.
    const GridSpec fine = GridSpec::make(1.0, 512);
    const ScalarField ref_u = ScalarField::zeros(fine);
    auto fn = [](double x, double y) { return x * x + y * y; };
    const double fine_value = sobolev_conjugate_norms(ref_u, ScalarField::sample(fine, fn), prm).f_conjugate;
    const GridSpec g = GridSpec::make(1.0, 64);
    const double coarse = sobolev_conjugate_norms(ScalarField::zeros(g), ScalarField::sample(g, fn), prm).f_conjugate;
    EXPECT_NEAR(coarse, fine_value, 1e-3 * fine_value);
}
