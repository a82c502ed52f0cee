#include "wdl/solver/solver.hpp"

#include "wdl/errors.hpp"
#include "wdl/kernel/kernel.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace wdl::solver {

namespace {

using grid::GridSpec;
using grid::Vec2;
using grid::VectorField;
using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// Corner order (0,0), (1,0), (0,1), (1,1); Q1 basis gradients at the cell
// center are these signs times 1 / (2h).
constexpr double kSx[4] = {-1.0, 1.0, -1.0, 1.0};
constexpr double kSy[4] = {-1.0, -1.0, 1.0, 1.0};

std::array<std::size_t, 4> corners(const GridSpec& g, int i, int j)
{
    return {g.node(i, j), g.node(i + 1, j), g.node(i, j + 1), g.node(i + 1, j + 1)};
}

constexpr double kShellUlps = 16.0;

Vec2 cell_gradient(const ScalarField& u, int i, int j)
{
    const double inv = 1.0 / (2.0 * u.grid.spacing());
    const double u00 = u.at(i, j);
    const double u10 = u.at(i + 1, j);
    const double u01 = u.at(i, j + 1);
    const double u11 = u.at(i + 1, j + 1);
    return {((u10 - u00) + (u11 - u01)) * inv, ((u01 - u00) + (u11 - u10)) * inv};
}

// |z| for a cell gradient, with values within the rounding error of the
// difference quotients of lambda set to lambda. For p < 2 the flux is only
// Hoelder at the shell, so a one-ulp overshoot would otherwise leave a
// residual near sqrt(ulp).
double cell_norm(const ScalarField& u, int i, int j, const Vec2& z, double lambda)
{
    const double t = std::hypot(z[0], z[1]);
    if (lambda == 0.0) {
        return t;
    }
    const double scale = std::max({std::abs(u.at(i, j)), std::abs(u.at(i + 1, j)), std::abs(u.at(i, j + 1)),
                                   std::abs(u.at(i + 1, j + 1))});
    const double band = kShellUlps * std::numeric_limits<double>::epsilon() * (scale / u.grid.spacing() + lambda);
    return std::abs(t - lambda) <= band ? lambda : t;
}

struct Dofs {
    std::vector<int> index;          // node -> dof or -1
    std::vector<std::size_t> nodes;  // dof -> node
};

Dofs make_dofs(const BoundaryMask& mask)
{
    Dofs d;
    d.index.assign(mask.interior.size(), -1);
    for (std::size_t k = 0; k < mask.interior.size(); ++k) {
        if (mask.is_interior(k)) {
            d.index[k] = static_cast<int>(d.nodes.size());
            d.nodes.push_back(k);
        }
    }
    return d;
}

double density_integral(const ScalarField& u, const Params& prm)
{
    const GridSpec& g = u.grid;
    std::vector<double> cells(g.cell_count());
    for (int j = 0; j < g.cells; ++j) {
        for (int i = 0; i < g.cells; ++i) {
            const auto z = cell_gradient(u, i, j);
            cells[g.cell(i, j)] = kernel::radial::g_eps(cell_norm(u, i, j, z, prm.lambda), prm);
        }
    }
    return grid::integrate(g, cells);
}

double load_sum(const ScalarField& u, const ScalarField& f, const std::vector<double>& w)
{
    double s = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        s += w[k] * f.values[k] * u.values[k];
    }
    return s;
}

// Full nodal gradient of J (all nodes, including non-interior ones).
std::vector<double> nodal_gradient(const ScalarField& u, const ScalarField& f, const Params& prm,
                                   const std::vector<double>& w)
{
    const GridSpec& g = u.grid;
    const double half = 0.5 * g.spacing();
    std::vector<double> out(g.node_count(), 0.0);
    for (int j = 0; j < g.cells; ++j) {
        for (int i = 0; i < g.cells; ++i) {
            const auto z = cell_gradient(u, i, j);
            const double c = kernel::radial::flux_coefficient(cell_norm(u, i, j, z, prm.lambda), prm);
            const double fx = c * z[0];
            const double fy = c * z[1];
            const auto nd = corners(g, i, j);
            for (int k = 0; k < 4; ++k) {
                out[nd[k]] += half * (kSx[k] * fx + kSy[k] * fy);
            }
        }
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] -= w[k] * f.values[k];
    }
    return out;
}

Vec reduce(const std::vector<double>& nodal, const Dofs& dofs)
{
    Vec r(static_cast<Eigen::Index>(dofs.nodes.size()));
    for (std::size_t k = 0; k < dofs.nodes.size(); ++k) {
        r[static_cast<Eigen::Index>(k)] = nodal[dofs.nodes[k]];
    }
    return r;
}

double max_abs(const Vec& v)
{
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

// Radial coefficient beta of the Newton matrix alpha I + beta z (x) z / |z|.
// For p >= 2 this is the exact Hessian. For p < 2 the flux (t - lambda)^{p-1}
// is concave with unbounded slope at the shell, and Newton steps from outside
// overshoot across it; the radial curvature is replaced by the secant slope
// from the shell, (t - lambda)^{p-2}, which dominates the true slope.
double newton_beta(double t, double alpha_h, const Params& prm)
{
    double beta = 0.0;
    if (t > prm.lambda) {
        if (prm.p >= 2.0) {
            beta = kernel::radial::h_prime(t, prm);
        } else {
            const double d = std::max(t - prm.lambda, 1e-14 * std::max(prm.lambda, 1.0));
            beta = (std::pow(d, prm.p - 2.0) - alpha_h) / t;
        }
    }
    if (prm.eps > 0.0) {
        beta += prm.eps * kernel::radial::a_prime(t, prm);
    }
    return beta;
}

SpMat assemble_hessian(const ScalarField& u, const Params& prm, const Dofs& dofs)
{
    const GridSpec& g = u.grid;
    // h^2 * (1 / 2h)^2 = 1/4
    constexpr double scale = 0.25;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(g.cell_count() * 16);
    for (int j = 0; j < g.cells; ++j) {
        for (int i = 0; i < g.cells; ++i) {
            const auto z = cell_gradient(u, i, j);
            const double t = std::max(cell_norm(u, i, j, z, prm.lambda), kernel::kHessianOriginFloor);
            const double alpha_h = kernel::radial::h(t, prm);
            const double alpha = alpha_h + (prm.eps > 0.0 ? prm.eps * kernel::radial::a(t, prm) : 0.0);
            const double beta = newton_beta(t, alpha_h, prm);
            const double bt = beta / t;
            const double a00 = alpha + bt * z[0] * z[0];
            const double a01 = bt * z[0] * z[1];
            const double a11 = alpha + bt * z[1] * z[1];
            const auto nd = corners(g, i, j);
            for (int k = 0; k < 4; ++k) {
                const int rk = dofs.index[nd[k]];
                if (rk < 0) {
                    continue;
                }
                const double ax = a00 * kSx[k] + a01 * kSy[k];
                const double ay = a01 * kSx[k] + a11 * kSy[k];
                for (int l = 0; l < 4; ++l) {
                    const int cl = dofs.index[nd[l]];
                    if (cl < 0) {
                        continue;
                    }
                    trip.emplace_back(rk, cl, scale * (ax * kSx[l] + ay * kSy[l]));
                }
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(dofs.nodes.size());
    SpMat H(n, n);
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

void add_step(ScalarField& u, const ScalarField& base, const Vec& d, double alpha, const Dofs& dofs)
{
    u.values = base.values;
    for (std::size_t k = 0; k < dofs.nodes.size(); ++k) {
        u.values[dofs.nodes[k]] += alpha * d[static_cast<Eigen::Index>(k)];
    }
}

void require_finite(double v, const char* what)
{
    if (!std::isfinite(v)) {
        throw SolverFailure(std::string("solve: non-finite ") + what);
    }
}

template <typename Fn>
double cell_sum(const ScalarField& u, const ScalarField& w, Fn&& fn)
{
    grid::require_same_grid(u.grid, w.grid, "cell pairing");
    const GridSpec& g = u.grid;
    std::vector<double> cells(g.cell_count());
    for (int j = 0; j < g.cells; ++j) {
        for (int i = 0; i < g.cells; ++i) {
            cells[g.cell(i, j)] = fn(cell_gradient(u, i, j), cell_gradient(w, i, j));
        }
    }
    return grid::integrate(g, cells);
}

} // namespace

void SolveConfig::validate() const
{
    WDL_REQUIRE(grad_tol > 0.0, InvalidArgument, "SolveConfig: grad_tol must be > 0");
    WDL_REQUIRE(max_iters >= 0, InvalidArgument, "SolveConfig: max_iters must be >= 0");
    WDL_REQUIRE(hessian_floor >= 0.0, InvalidArgument, "SolveConfig: hessian_floor must be >= 0");
    WDL_REQUIRE(line_search.backtrack > 0.0 && line_search.backtrack < 1.0, InvalidArgument,
                "SolveConfig: backtrack factor must lie in (0, 1)");
    WDL_REQUIRE(line_search.slope_fraction > 0.0 && line_search.slope_fraction < 0.5,
                InvalidArgument, "SolveConfig: slope fraction must lie in (0, 1/2)");
    WDL_REQUIRE(line_search.max_backtracks >= 1, InvalidArgument,
                "SolveConfig: need at least one backtracking step");
}

nlohmann::json SolveReport::to_json() const
{
    return {{"energy", energy},
            {"iterations", iterations},
            {"converged", converged},
            {"residual_history", residual_history},
            {"newton_steps", newton_steps},
            {"gradient_steps", gradient_steps},
            {"residual_increases", residual_increases},
            {"warnings", warnings}};
}

nlohmann::json ConjugateNorms::to_json() const
{
    return {{"du_p", du_p},
            {"f_conjugate", f_conjugate},
            {"f_sobolev_dual", f_sobolev_dual},
            {"f_subquadratic", f_subquadratic},
            {"p_star", p_star}};
}

EnergyParts energy_parts(const ScalarField& v, const ScalarField& f, const Params& prm)
{
    grid::require_same_grid(v.grid, f.grid, "energy");
    prm.validate();
    return {density_integral(v, prm), load_sum(v, f, grid::node_weights(v.grid))};
}

double energy(const ScalarField& v, const ScalarField& f, const Params& prm)
{
    return energy_parts(v, f, prm).total();
}

ScalarField energy_gradient(const ScalarField& v, const ScalarField& f, const Params& prm,
                            const BoundaryMask& mask)
{
    grid::require_same_grid(v.grid, f.grid, "energy_gradient");
    grid::require_same_grid(v.grid, mask.grid, "energy_gradient");
    prm.validate();
    ScalarField out{v.grid, nodal_gradient(v, f, prm, grid::node_weights(v.grid))};
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        if (!mask.is_interior(k)) {
            out.values[k] = 0.0;
        }
    }
    return out;
}

double residual(const ScalarField& v, const ScalarField& f, const Params& prm)
{
    return residual(v, f, prm, BoundaryMask::square(v.grid));
}

double residual(const ScalarField& v, const ScalarField& f, const Params& prm,
                const BoundaryMask& mask)
{
    const auto g = energy_gradient(v, f, prm, mask);
    double r = 0.0;
    for (double x : g.values) {
        r = std::max(r, std::abs(x));
    }
    return r;
}

ScalarField harmonic_extension(const ScalarField& u_boundary, const BoundaryMask& mask)
{
    grid::require_same_grid(u_boundary.grid, mask.grid, "harmonic_extension");
    const Params laplace = Params::make(2, 2.0, 0.0, 0.0);
    const Dofs dofs = make_dofs(mask);
    ScalarField u = u_boundary;
    for (std::size_t node : dofs.nodes) {
        u.values[node] = 0.0;
    }
    if (dofs.nodes.empty()) {
        return u;
    }
    const ScalarField zero = ScalarField::zeros(u.grid);
    const Vec g = reduce(nodal_gradient(u, zero, laplace, grid::node_weights(u.grid)), dofs);
    Eigen::SimplicialLDLT<SpMat> ldlt(assemble_hessian(u, laplace, dofs));
    if (ldlt.info() != Eigen::Success) {
        throw SolverFailure("harmonic_extension: factorization failed");
    }
    const Vec d = ldlt.solve(-g);
    const ScalarField base = u;
    add_step(u, base, d, 1.0, dofs);
    return u;
}

SolveReport solve(const ScalarField& u_boundary, const ScalarField& f, const Params& prm,
                  const SolveConfig& cfg)
{
    return solve(u_boundary, f, prm, cfg, BoundaryMask::square(u_boundary.grid));
}

SolveReport solve(const ScalarField& u_boundary, const ScalarField& f, const Params& prm,
                  const SolveConfig& cfg, const BoundaryMask& mask,
                  const std::optional<ScalarField>& initial)
{
    prm.validate();
    cfg.validate();
    u_boundary.validate();
    f.validate();
    grid::require_same_grid(u_boundary.grid, f.grid, "solve");
    grid::require_same_grid(u_boundary.grid, mask.grid, "solve");

    SolveReport report;
    if (prm.eps == 0.0) {
        report.warnings.emplace_back(
            "eps = 0: the minimizer need not be unique (degenerate energy)");
    }

    const Dofs dofs = make_dofs(mask);
    const auto w = grid::node_weights(u_boundary.grid);

    ScalarField u = u_boundary;
    if (initial) {
        grid::require_same_grid(u_boundary.grid, initial->grid, "solve");
        initial->validate();
        for (std::size_t node : dofs.nodes) {
            u.values[node] = initial->values[node];
        }
    } else {
        u = harmonic_extension(u_boundary, mask);
    }

    auto eval_energy = [&](const ScalarField& v) {
        return density_integral(v, prm) - load_sum(v, f, w);
    };
    auto eval_gradient = [&](const ScalarField& v) { return reduce(nodal_gradient(v, f, prm, w), dofs); };

    double J = eval_energy(u);
    require_finite(J, "energy of the initial iterate");
    Vec g = eval_gradient(u);
    double r = max_abs(g);
    require_finite(r, "initial residual");
    report.residual_history.push_back(r);

    const auto& ls = cfg.line_search;
    double shift = cfg.hessian_floor;  // carried between iterations
    double mu = shift;                 // shift used for the current direction
    bool force_gradient = false;
    Vec d_prev;
    Vec pg_prev;
    Vec g_prev;
    bool prev_was_gradient = false;
    ScalarField trial = u;

    while (r > cfg.grad_tol && report.iterations < cfg.max_iters) {
        // --- search direction ---
        Vec d;
        bool newton = false;
        SpMat H;
        if (!force_gradient) {
            H = assemble_hessian(u, prm, dofs);
            const double diag_scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1.0);
            mu = shift;
            for (int attempt = 0; attempt < 12; ++attempt) {
                SpMat Hs = H;
                for (Eigen::Index k = 0; k < Hs.rows(); ++k) {
                    Hs.coeffRef(k, k) += mu;
                }
                Eigen::SimplicialLDLT<SpMat> ldlt(Hs);
                if (ldlt.info() == Eigen::Success) {
                    Vec cand = ldlt.solve(-g);
                    if (cand.allFinite() && g.dot(cand) < 0.0) {
                        d = std::move(cand);
                        newton = true;
                        break;
                    }
                }
                mu = std::max(10.0 * mu, 1e-10 * diag_scale);
            }
        }
        if (!newton) {
            if (H.rows() == 0) {
                H = assemble_hessian(u, prm, dofs);
            }
            Vec precond = H.diagonal().cwiseMax(1e-12).cwiseInverse();
            Vec pg = precond.cwiseProduct(g);
            d = -pg;
            if (prev_was_gradient && d_prev.size() == d.size()) {
                const double denom = g_prev.dot(pg_prev);
                const double beta = denom > 0.0 ? std::max(0.0, pg.dot(g - g_prev) / denom) : 0.0;
                Vec cand = -pg + beta * d_prev;
                if (g.dot(cand) < 0.0) {
                    d = std::move(cand);
                }
            }
            pg_prev = pg;
            g_prev = g;
        }

        // --- backtracking line search ---
        const double slope = g.dot(d);
        const EnergyParts parts{density_integral(u, prm), load_sum(u, f, w)};
        // Energy differences below this level are rounding noise.
        const double noise = 64.0 * std::numeric_limits<double>::epsilon()
                             * (std::abs(parts.density) + std::abs(parts.load) + 1e-300);
        double alpha = 1.0;
        double fallback_alpha = -1.0;
        bool accepted = false;
        double J_new = J;
        Vec g_new;
        for (int b = 0; b < ls.max_backtracks; ++b, alpha *= ls.backtrack) {
            add_step(trial, u, d, alpha, dofs);
            const double Jt = eval_energy(trial);
            if (std::isnan(Jt)) {
                throw SolverFailure("solve: NaN energy in line search");
            }
            const double decrease = ls.slope_fraction * alpha * slope;
            const bool energy_ok = Jt <= J + decrease || (-alpha * slope <= noise && Jt <= J + noise);
            if (!energy_ok) {
                continue;
            }
            Vec gt = eval_gradient(trial);
            const double rt = max_abs(gt);
            if (std::isnan(rt)) {
                throw SolverFailure("solve: NaN residual in line search");
            }
            if (!ls.monotone_residual || rt <= r) {
                accepted = true;
                J_new = Jt;
                g_new = std::move(gt);
                break;
            }
            if (fallback_alpha < 0.0 && Jt < J) {
                fallback_alpha = alpha;
            }
        }
        if (!accepted && fallback_alpha > 0.0) {
            alpha = fallback_alpha;
            add_step(trial, u, d, alpha, dofs);
            J_new = eval_energy(trial);
            g_new = eval_gradient(trial);
            accepted = true;
            ++report.residual_increases;
        }
        if (!accepted) {
            if (newton) {
                // Retry from the same point with a gradient-type direction.
                force_gradient = true;
                shift = std::max(10.0 * shift, cfg.hessian_floor);
                prev_was_gradient = false;
                continue;
            }
            report.warnings.emplace_back("line search stalled; stopping early");
            break;
        }

        std::swap(u.values, trial.values);
        J = J_new;
        g = std::move(g_new);
        r = max_abs(g);
        report.residual_history.push_back(r);
        ++report.iterations;
        if (newton) {
            ++report.newton_steps;
            shift = alpha == 1.0 ? std::max(cfg.hessian_floor, 0.1 * mu)
                                 : (alpha < 0.25 ? 10.0 * mu + cfg.hessian_floor : mu);
        } else {
            ++report.gradient_steps;
            d_prev = d * alpha;
        }
        prev_was_gradient = !newton;
        force_gradient = false;
    }

    report.converged = r <= cfg.grad_tol;
    if (!report.converged) {
        std::ostringstream os;
        os << "not converged: residual " << r << " after " << report.iterations << " iterations";
        report.warnings.push_back(os.str());
    }
    report.energy = J;
    report.solution = std::move(u);
    return report;
}

ConjugateNorms sobolev_conjugate_norms(const SolveReport& report, const ScalarField& f,
                                       const Params& prm, std::optional<double> large_p_choice)
{
    return sobolev_conjugate_norms(report.solution, f, prm, large_p_choice);
}

ConjugateNorms sobolev_conjugate_norms(const ScalarField& u, const ScalarField& f,
                                       const Params& prm, std::optional<double> large_p_choice)
{
    grid::require_same_grid(u.grid, f.grid, "sobolev_conjugate_norms");
    ConjugateNorms out;
    out.p_star = kernel::sobolev_conjugate(prm, large_p_choice);
    out.du_p = grid::lq_norm(grid::gradient(u), prm.p);
    out.f_conjugate = grid::lq_norm(f, prm.conjugate());
    out.f_sobolev_dual = grid::lq_norm(f, out.p_star / (out.p_star - 1.0));
    out.f_subquadratic = grid::lq_norm(f, prm.subquadratic_exponent());
    return out;
}

double regularized_pairing(const ScalarField& u, const ScalarField& w, const Params& prm)
{
    return cell_sum(u, w, [&](const Vec2& a, const Vec2& b) {
        const double ca = kernel::radial::flux_coefficient(std::hypot(a[0], a[1]), prm);
        const double cb = kernel::radial::flux_coefficient(std::hypot(b[0], b[1]), prm);
        return (ca * a[0] - cb * b[0]) * (a[0] - b[0]) + (ca * a[1] - cb * b[1]) * (a[1] - b[1]);
    });
}

double monotonicity_pairing(const ScalarField& u, const ScalarField& w, const Params& prm)
{
    return cell_sum(u, w, [&](const Vec2& a, const Vec2& b) {
        const double ca = kernel::radial::h(std::hypot(a[0], a[1]), prm);
        const double cb = kernel::radial::h(std::hypot(b[0], b[1]), prm);
        return (ca * a[0] - cb * b[0]) * (a[0] - b[0]) + (ca * a[1] - cb * b[1]) * (a[1] - b[1]);
    });
}

double v_lambda_distance_sq(const ScalarField& u, const ScalarField& w, const Params& prm)
{
    return cell_sum(u, w, [&](const Vec2& a, const Vec2& b) {
        const double ca = kernel::radial::v_lambda_factor(std::hypot(a[0], a[1]), prm);
        const double cb = kernel::radial::v_lambda_factor(std::hypot(b[0], b[1]), prm);
        const double dx = ca * a[0] - cb * b[0];
        const double dy = ca * a[1] - cb * b[1];
        return dx * dx + dy * dy;
    });
}

VectorField v_lambda_field(const ScalarField& u, const Params& prm)
{
    VectorField F = grid::gradient(u);
    for (auto& z : F.values) {
        const double c = kernel::radial::v_lambda_factor(std::hypot(z[0], z[1]), prm);
        z = {c * z[0], c * z[1]};
    }
    return F;
}

VectorField flux_field(const ScalarField& u, const Params& prm)
{
    VectorField F = grid::gradient(u);
    for (auto& z : F.values) {
        const double c = kernel::radial::flux_coefficient(std::hypot(z[0], z[1]), prm);
        z = {c * z[0], c * z[1]};
    }
    return F;
}

} // namespace wdl::solver
