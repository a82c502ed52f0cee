#pragma once

#include "wdl/grid/grid.hpp"
#include "wdl/kernel/params.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wdl::solver {

using grid::BoundaryMask;
using grid::ScalarField;
using kernel::Params;

struct LineSearch {
    double slope_fraction = 1e-4;  ///< Armijo constant c in J(u + a d) <= J(u) + c a <g, d>
    double backtrack = 0.5;        ///< step reduction factor in (0, 1)
    int max_backtracks = 50;
    /// Also require that a trial step does not increase the max-norm
    /// residual. Falls back to the largest energy-decreasing trial when no
    /// trial qualifies. Off by default: for p < 2 it stalls the iteration.
    bool monotone_residual = false;
};

struct SolveConfig {
    double grad_tol = 1e-10;       ///< bound on the max-norm of the reduced gradient
    int max_iters = 1000;         ///< the secant model for p < 2 converges linearly near eps = 0
    double hessian_floor = 1e-12;  ///< minimal diagonal shift of the Newton matrix
    LineSearch line_search;

    void validate() const;
};

struct SolveReport {
    ScalarField solution;
    double energy = 0.0;
    std::vector<double> residual_history;
    int iterations = 0;
    bool converged = false;
    int newton_steps = 0;
    int gradient_steps = 0;
    /// Steps accepted in monotone_residual mode on energy decrease alone
    /// because no trial step also kept the residual from increasing.
    int residual_increases = 0;
    std::vector<std::string> warnings;

    [[nodiscard]] double final_residual() const
    {
        return residual_history.empty() ? 0.0 : residual_history.back();
    }

    /// {energy, iterations, converged, residual_history, ...}
    [[nodiscard]] nlohmann::json to_json() const;
};

/// J(v) = integral of G_eps(Dv) minus the lumped load sum_i w_i f_i v_i.
struct EnergyParts {
    double density = 0.0;
    double load = 0.0;
    [[nodiscard]] double total() const { return density - load; }
};

EnergyParts energy_parts(const ScalarField& v, const ScalarField& f, const Params& prm);
double energy(const ScalarField& v, const ScalarField& f, const Params& prm);

/// Gradient of J with respect to the nodal values; zero on non-interior nodes.
/// Entry i is int <DG_eps(Dv), D phi_i> - w_i f_i.
ScalarField energy_gradient(const ScalarField& v, const ScalarField& f, const Params& prm,
                            const BoundaryMask& mask);

/// Max-norm of energy_gradient over interior nodes (square mask by default).
double residual(const ScalarField& v, const ScalarField& f, const Params& prm);
double residual(const ScalarField& v, const ScalarField& f, const Params& prm,
                const BoundaryMask& mask);

/// Minimizes J over nodal fields equal to u_boundary on non-interior nodes.
/// The default initial iterate is the harmonic extension of the boundary data.
/// Throws SolverFailure when the iteration produces non-finite values.
SolveReport solve(const ScalarField& u_boundary, const ScalarField& f, const Params& prm,
                  const SolveConfig& cfg = {});
SolveReport solve(const ScalarField& u_boundary, const ScalarField& f, const Params& prm,
                  const SolveConfig& cfg, const BoundaryMask& mask,
                  const std::optional<ScalarField>& initial = std::nullopt);

/// Discrete harmonic extension of the non-interior values of u_boundary.
ScalarField harmonic_extension(const ScalarField& u_boundary, const BoundaryMask& mask);

/// Norms entering the uniform energy and Sobolev estimates.
struct ConjugateNorms {
    double du_p = 0.0;             ///< ||Du||_p
    double f_conjugate = 0.0;      ///< ||f||_{p'}
    double f_sobolev_dual = 0.0;   ///< ||f||_{(p*)'}
    double f_subquadratic = 0.0;   ///< ||f||_{np/(n(p-1)+2-p)}
    double p_star = 0.0;

    [[nodiscard]] nlohmann::json to_json() const;
};

ConjugateNorms sobolev_conjugate_norms(const SolveReport& report, const ScalarField& f,
                                       const Params& prm,
                                       std::optional<double> large_p_choice = std::nullopt);
ConjugateNorms sobolev_conjugate_norms(const ScalarField& u, const ScalarField& f,
                                       const Params& prm,
                                       std::optional<double> large_p_choice = std::nullopt);

/// int <DG_eps(Du) - DG_eps(Dw), D(u - w)>.
double regularized_pairing(const ScalarField& u, const ScalarField& w, const Params& prm);

/// int <H_{p-1}(Du) - H_{p-1}(Dw), D(u - w)>.
double monotonicity_pairing(const ScalarField& u, const ScalarField& w, const Params& prm);

/// int |V_lambda(Du) - V_lambda(Dw)|^2.
double v_lambda_distance_sq(const ScalarField& u, const ScalarField& w, const Params& prm);

/// Cell field V_lambda(Du).
grid::VectorField v_lambda_field(const ScalarField& u, const Params& prm);

/// Cell field DG_eps(Du).
grid::VectorField flux_field(const ScalarField& u, const Params& prm);

} // namespace wdl::solver
