#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace wdl::grid {

using Vec2 = std::array<double, 2>;

/// Uniform grid of the square [-R, R]^2 with `cells` cells per axis.
/// Nodes are numbered row-major (x fastest), as are cells.
struct GridSpec {
    double extent = 1.0;
    int cells = 16;

    /// Validating constructor: extent > 0, cells >= 4.
    static GridSpec make(double extent, int cells);
    void validate() const;

    [[nodiscard]] double spacing() const { return 2.0 * extent / cells; }
    [[nodiscard]] int nodes_per_axis() const { return cells + 1; }
    [[nodiscard]] std::size_t node_count() const
    {
        return static_cast<std::size_t>(nodes_per_axis()) * nodes_per_axis();
    }
    [[nodiscard]] std::size_t cell_count() const
    {
        return static_cast<std::size_t>(cells) * cells;
    }
    [[nodiscard]] std::size_t node(int i, int j) const
    {
        return static_cast<std::size_t>(j) * nodes_per_axis() + i;
    }
    [[nodiscard]] std::size_t cell(int i, int j) const
    {
        return static_cast<std::size_t>(j) * cells + i;
    }
    [[nodiscard]] double node_coord(int i) const { return -extent + i * spacing(); }
    [[nodiscard]] double cell_coord(int i) const { return -extent + (i + 0.5) * spacing(); }
    [[nodiscard]] double area() const { return 4.0 * extent * extent; }

    bool operator==(const GridSpec& other) const = default;
};

/// Nodal scalar field (Q1 coefficients).
struct ScalarField {
    GridSpec grid;
    std::vector<double> values;

    static ScalarField zeros(const GridSpec& g);
    static ScalarField constant(const GridSpec& g, double c);
    static ScalarField sample(const GridSpec& g, const std::function<double(double, double)>& fn);

    void validate() const;

    double& at(int i, int j) { return values[grid.node(i, j)]; }
    [[nodiscard]] double at(int i, int j) const { return values[grid.node(i, j)]; }
};

/// Cell-centered 2-vector field.
struct VectorField {
    GridSpec grid;
    std::vector<Vec2> values;

    static VectorField zeros(const GridSpec& g);
    static VectorField sample(const GridSpec& g, const std::function<Vec2(double, double)>& fn);

    void validate() const;

    Vec2& at(int i, int j) { return values[grid.cell(i, j)]; }
    [[nodiscard]] const Vec2& at(int i, int j) const { return values[grid.cell(i, j)]; }
};

/// Interior flag per node. Non-interior nodes carry Dirichlet values.
struct BoundaryMask {
    GridSpec grid;
    std::vector<unsigned char> interior;

    /// Every node on the boundary of the square is non-interior.
    static BoundaryMask square(const GridSpec& g);

    /// Additionally marks nodes with |x| >= radius as non-interior.
    static BoundaryMask ball(const GridSpec& g, double radius);

    [[nodiscard]] bool is_interior(std::size_t node) const { return interior[node] != 0; }
    [[nodiscard]] std::size_t interior_count() const;
};

/// Q1 gradient at cell centers (one-point quadrature).
VectorField gradient(const ScalarField& u);

/// Weak negative divergence against the Q1 basis: entry i is
/// int <F, D phi_i> dx for interior nodes and 0 elsewhere.
ScalarField divergence_weak(const VectorField& F, const BoundaryMask& mask);

/// Midpoint rule on cell-wise values: spacing^2 * sum(q). Summation is
/// pairwise so the result does not depend on evaluation order.
double integrate(const GridSpec& g, std::span<const double> cellwise);

/// Value of the Q1 interpolant at each cell center (mean of the 4 corners).
std::vector<double> cell_average(const ScalarField& u);

/// Cell-wise mean of the corner values of fn(u), i.e. the trapezoid rule
/// integrand for nonlinear functions of a nodal field.
std::vector<double> cell_trapezoid(const ScalarField& u, const std::function<double(double)>& fn);

/// Discrete L^q norm of a nodal field via the per-cell trapezoid rule.
double lq_norm(const ScalarField& u, double q);

/// Discrete L^q norm of |F| for a cell field (midpoint rule).
double lq_norm(const VectorField& F, double q);

/// Lumped-mass (trapezoid) node weights: spacing^2 times 1, 1/2 or 1/4.
std::vector<double> node_weights(const GridSpec& g);

/// Convolution with the normalized bump C exp(-1/(1 - |x/eps|^2)), truncated
/// to the domain and renormalized per node so constants are reproduced
/// exactly. Throws InvalidArgument if eps < 2 * spacing.
ScalarField mollify(const ScalarField& f, double eps);

/// Radial cut-off: 1 on |x| <= r/2, 0 on |x| >= r, cubic smoothstep between.
struct Cutoff {
    ScalarField eta;
    double max_gradient = 0.0;  ///< max over cells of |D eta| from the Q1 gradient
};
Cutoff cutoff_eta(const GridSpec& g, double r);

/// Q1 interpolant of u evaluated at the nodes of `fine` (same extent).
ScalarField prolongate(const ScalarField& u, const GridSpec& fine);

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what);

} // namespace wdl::grid
