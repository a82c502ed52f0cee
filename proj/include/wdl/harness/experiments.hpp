#pragma once

#include "wdl/harness/config.hpp"
#include "wdl/harness/table.hpp"
#include "wdl/solver/solver.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace wdl::harness {

/// A named pass/fail property with the measured value and its threshold.
struct Assertion {
    std::string name;
    bool passed = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Result of one experiment: the per-row table, fitted quantities and the
/// asserted properties. Estimate experiments hold one row per (grid, eps).
struct ExperimentReport {
    std::string experiment;
    Table table;
    std::vector<std::string> key_columns;  ///< identify a row in the long format
    nlohmann::json fitted = nlohmann::json::object();
    std::vector<Assertion> assertions;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] nlohmann::json to_json() const;
    [[nodiscard]] Table long_table() const { return table.long_format(experiment, key_columns); }
};

/// Writes <dir>/<experiment>.csv, <dir>/<experiment>_long.csv and
/// <dir>/<experiment>.json (the latter with the configuration attached).
void write_report(const ExperimentReport& report, const ExperimentConfig& cfg, const std::string& dir);

/// One regularized solve of the eps sweep.
struct SweepRow {
    int cells = 0;
    double eps = 0.0;
    bool mollified = false;        ///< f_eps = f * bump_eps; otherwise f_eps = f
    grid::ScalarField f;           ///< unmollified datum on this grid
    grid::ScalarField f_eps;
    std::optional<solver::SolveReport> solve;
    std::string status = "ok";     ///< "ok", "not converged" or the failure message

    [[nodiscard]] bool ok() const { return solve.has_value() && solve->converged; }
};

/// Solves the regularized problem for every eps of the config on a grid
/// with `cells` cells. The datum is mollified at radius eps when eps is at
/// least twice the spacing and used as is otherwise. Rows run on the
/// config's thread count and come back in eps order.
std::vector<SweepRow> run_eps_sweep(const ExperimentConfig& cfg, int cells);

/// Uniform energy estimate: int |Du_eps|^p, int (|Du_eps| - lambda)_+^p and
/// the bracket 1 + lambda^p + ||Du||_p^p + ||f||_{(p*)'}^{p'} per eps; fitted
/// constants max ratio to the bracket; asserts their stability (<= 1.1)
/// under one extra solve at half the smallest eps.
ExperimentReport run_energy_sweep(const ExperimentConfig& cfg);
ExperimentReport run_energy_sweep(const ExperimentConfig& cfg, const std::vector<SweepRow>& sweep);

/// Comparison estimate against the smallest-eps solve: D(eps) =
/// int |V_lambda(Du_eps) - V_lambda(Du_ref)|^2 versus ||f_eps - f||_{(p*)'} + eps,
/// the log-log slope over the rows with eps > eps_ref, and the cellwise
/// bound D <= C * int <H_{p-1}(Du_eps) - H_{p-1}(Du_ref), D(u_eps - u_ref)>.
ExperimentReport run_comparison(const ExperimentConfig& cfg);
ExperimentReport run_comparison(const ExperimentConfig& cfg, const std::vector<SweepRow>& sweep);

/// Difference-quotient size of V_lambda(Du_eps) on Q_{r/4} over every eps
/// and every grid of cfg.refinements, against the bracket of the estimate
/// (Besov datum norm for p > 2, Lebesgue datum norm for p <= 2). Asserts
/// finiteness and drift max/min - 1 <= 0.25 of both the quotient value and
/// the ratio of its square to the bracket.
ExperimentReport run_sobolev_estimate(const ExperimentConfig& cfg);

/// ||Du_eps||_{L^q(Q_{r/4})} at the smallest eps on every grid of
/// cfg.refinements; asserts max/min <= 1.25.
ExperimentReport run_higher_integrability(const ExperimentConfig& cfg);

/// Error ||V_lambda(Du_h) - V_lambda(Du*)||_2 on every grid of
/// cfg.refinements, with u* the boundary function and the datum of the
/// config, at the smallest eps. Each grid starts from the interpolated
/// solution of the previous one. Asserts a least-squares rate >= 0.7, or an
/// error at round-off level on every grid.
ExperimentReport run_manufactured(const ExperimentConfig& cfg);

/// Solves at every eps on cfg.cells and reports energy, residual and
/// iteration counts; `field_dir`, when set, receives the solutions as CSV.
ExperimentReport run_solve(const ExperimentConfig& cfg, const std::optional<std::string>& field_dir);

/// Least-squares slope of log y against log x.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

/// L^q norm of |F| over Q_rho = [-rho, rho]^2 (midpoint rule; cells cut by
/// the boundary of Q_rho count with their overlapping area).
double lq_norm_inner(const grid::VectorField& F, double q, double rho);

} // namespace wdl::harness
