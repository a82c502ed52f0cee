#pragma once

#include "wdl/grid/grid.hpp"
#include "wdl/harness/expression.hpp"
#include "wdl/kernel/params.hpp"
#include "wdl/solver/solver.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wdl::harness {

/// Right-hand side f of the equation.
struct DatumSpec {
    /// zero | gaussian | rough_radial | expression | file | manufactured_radial
    std::string kind = "gaussian";
    double amplitude = 20.0;           ///< gaussian, rough_radial
    double width = 10.0;               ///< gaussian: amplitude * exp(-width |x - center|^2)
    std::array<double, 2> center{0.0, 0.0};
    double beta = 0.5;                 ///< rough_radial: amplitude * min(|x|^-beta, cap)
    double cap = 100.0;
    double a = 2.0;                    ///< manufactured_radial: -div H_{p-1}(D(a|x|^2/2))
    std::optional<Expression> expression;
    std::string path;

    /// Nodal samples of f on g. File data must live on a grid of the same
    /// extent and cell count.
    [[nodiscard]] grid::ScalarField sample(const grid::GridSpec& g, const kernel::Params& prm) const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Function u whose values on the boundary are imposed, extended to the
/// whole domain (it is also the comparison function of the estimates).
struct BoundarySpec {
    /// zero | affine | expression | manufactured_radial
    std::string kind = "zero";
    std::array<double, 2> slope{0.0, 0.0};  ///< affine: offset + slope . x
    double offset = 0.0;
    double a = 2.0;                         ///< manufactured_radial: a |x|^2 / 2
    std::optional<Expression> expression;

    [[nodiscard]] double value(double x, double y) const;
    /// Exact gradient; central differences with step 1e-6 for expressions.
    [[nodiscard]] grid::Vec2 gradient(double x, double y) const;
    [[nodiscard]] grid::ScalarField sample(const grid::GridSpec& g) const;
    [[nodiscard]] nlohmann::json to_json() const;
};

struct SeminormConfig {
    double r = 0.8;   ///< outer radius of the estimate; the inner region is Q_{r/4}
    double R = 1.0;   ///< radius of the ambient ball, R <= extent
    std::vector<double> h{1.0 / 32.0, 1.0 / 16.0};  ///< physical difference steps
    std::optional<double> besov_r_cut;               ///< default: domain diameter

    [[nodiscard]] double inner_radius() const { return 0.25 * r; }
};

struct ExperimentConfig {
    std::string name = "default";
    double extent = 1.0;
    int cells = 128;
    std::vector<int> refinements{64, 128};
    int n = 2;
    double p = 3.0;
    double lambda = 1.0;
    std::vector<double> eps{1e-1, 1e-2, 1e-3, 1e-4};
    DatumSpec datum;
    BoundarySpec boundary;
    solver::SolveConfig solver;
    SeminormConfig seminorm;
    double integrability_q = 8.0;
    std::optional<double> p_star;
    std::uint64_t seed = 20250530;
    int threads = 1;
    std::string output = "out";

    /// Throws InvalidArgument on any violated invariant: eps sorted strictly
    /// descending within [0, 1]; r/4 < r/2 < r < R <= extent; every h an
    /// integer multiple of the spacing of every grid used; h < (R - r/4) / 2.
    void validate() const;

    [[nodiscard]] grid::GridSpec grid() const { return grid::GridSpec::make(extent, cells); }
    [[nodiscard]] grid::GridSpec grid(int c) const { return grid::GridSpec::make(extent, c); }
    [[nodiscard]] kernel::Params params(double e) const
    {
        return kernel::Params::make(n, p, lambda, e);
    }

    /// Difference steps in units of the spacing of g.
    [[nodiscard]] std::vector<int> steps(const grid::GridSpec& g) const;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

} // namespace wdl::harness
