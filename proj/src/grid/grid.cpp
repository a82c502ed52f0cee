#include "wdl/grid/grid.hpp"

#include "wdl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace wdl::grid {

GridSpec GridSpec::make(double extent, int cells)
{
    GridSpec g{extent, cells};
    g.validate();
    return g;
}

void GridSpec::validate() const
{
    WDL_REQUIRE(std::isfinite(extent) && extent > 0.0, InvalidArgument,
                "GridSpec: extent must be > 0");
    WDL_REQUIRE(cells >= 4, InvalidArgument, "GridSpec: need at least 4 cells per axis");
}

void require_same_grid(const GridSpec& a, const GridSpec& b, const char* what)
{
    if (!(a == b)) {
        std::ostringstream os;
        os << what << ": grid mismatch (" << a.cells << " cells / extent " << a.extent << " vs "
           << b.cells << " cells / extent " << b.extent << ")";
        throw InvalidArgument(os.str());
    }
}

ScalarField ScalarField::zeros(const GridSpec& g)
{
    return constant(g, 0.0);
}

ScalarField ScalarField::constant(const GridSpec& g, double c)
{
    g.validate();
    return ScalarField{g, std::vector<double>(g.node_count(), c)};
}

ScalarField ScalarField::sample(const GridSpec& g, const std::function<double(double, double)>& fn)
{
    ScalarField u = zeros(g);
    const int m = g.nodes_per_axis();
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            u.at(i, j) = fn(g.node_coord(i), g.node_coord(j));
        }
    }
    return u;
}

void ScalarField::validate() const
{
    grid.validate();
    WDL_REQUIRE(values.size() == grid.node_count(), InvalidArgument,
                "ScalarField: value count does not match node count");
    for (double v : values) {
        WDL_REQUIRE(std::isfinite(v), InvalidArgument, "ScalarField: non-finite entry");
    }
}

VectorField VectorField::zeros(const GridSpec& g)
{
    g.validate();
    return VectorField{g, std::vector<Vec2>(g.cell_count(), Vec2{0.0, 0.0})};
}

VectorField VectorField::sample(const GridSpec& g, const std::function<Vec2(double, double)>& fn)
{
    VectorField F = zeros(g);
    for (int j = 0; j < g.cells; ++j) {
        for (int i = 0; i < g.cells; ++i) {
            F.at(i, j) = fn(g.cell_coord(i), g.cell_coord(j));
        }
    }
    return F;
}

void VectorField::validate() const
{
    grid.validate();
    WDL_REQUIRE(values.size() == grid.cell_count(), InvalidArgument,
                "VectorField: value count does not match cell count");
    for (const auto& v : values) {
        WDL_REQUIRE(std::isfinite(v[0]) && std::isfinite(v[1]), InvalidArgument,
                    "VectorField: non-finite entry");
    }
}

BoundaryMask BoundaryMask::square(const GridSpec& g)
{
    g.validate();
    BoundaryMask mask{g, std::vector<unsigned char>(g.node_count(), 1)};
    const int m = g.nodes_per_axis();
    for (int k = 0; k < m; ++k) {
        mask.interior[g.node(k, 0)] = 0;
        mask.interior[g.node(k, m - 1)] = 0;
        mask.interior[g.node(0, k)] = 0;
        mask.interior[g.node(m - 1, k)] = 0;
    }
    return mask;
}

BoundaryMask BoundaryMask::ball(const GridSpec& g, double radius)
{
    WDL_REQUIRE(radius > 0.0 && radius <= g.extent, InvalidArgument,
                "BoundaryMask::ball: radius must lie in (0, extent]");
    BoundaryMask mask = square(g);
    const int m = g.nodes_per_axis();
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            if (std::hypot(g.node_coord(i), g.node_coord(j)) >= radius) {
                mask.interior[g.node(i, j)] = 0;
            }
        }
    }
    return mask;
}

std::size_t BoundaryMask::interior_count() const
{
    return static_cast<std::size_t>(std::count(interior.begin(), interior.end(), 1));
}

VectorField gradient(const ScalarField& u)
{
    const GridSpec& g = u.grid;
    VectorField F = VectorField::zeros(g);
    const double inv = 1.0 / (2.0 * g.spacing());
    for (int j = 0; j < g.cells; ++j) {
        for (int i = 0; i < g.cells; ++i) {
            const double u00 = u.at(i, j);
            const double u10 = u.at(i + 1, j);
            const double u01 = u.at(i, j + 1);
            const double u11 = u.at(i + 1, j + 1);
            F.at(i, j) = {((u10 - u00) + (u11 - u01)) * inv, ((u01 - u00) + (u11 - u10)) * inv};
        }
    }
    return F;
}

ScalarField divergence_weak(const VectorField& F, const BoundaryMask& mask)
{
    const GridSpec& g = F.grid;
    require_same_grid(g, mask.grid, "divergence_weak");
    ScalarField b = ScalarField::zeros(g);
    const double half = 0.5 * g.spacing();
    for (int j = 0; j < g.cells; ++j) {
        for (int i = 0; i < g.cells; ++i) {
            const auto [fx, fy] = F.at(i, j);
            b.at(i, j) += half * (-fx - fy);
            b.at(i + 1, j) += half * (fx - fy);
            b.at(i, j + 1) += half * (-fx + fy);
            b.at(i + 1, j + 1) += half * (fx + fy);
        }
    }
    for (std::size_t k = 0; k < b.values.size(); ++k) {
        if (!mask.is_interior(k)) {
            b.values[k] = 0.0;
        }
    }
    return b;
}

namespace {

double pairwise_sum(std::span<const double> v)
{
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) {
            s += x;
        }
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

} // namespace

double integrate(const GridSpec& g, std::span<const double> cellwise)
{
    WDL_REQUIRE(cellwise.size() == g.cell_count(), InvalidArgument,
                "integrate: expected one value per cell");
    const double h = g.spacing();
    return h * h * pairwise_sum(cellwise);
}

std::vector<double> cell_average(const ScalarField& u)
{
    return cell_trapezoid(u, [](double x) { return x; });
}

std::vector<double> cell_trapezoid(const ScalarField& u, const std::function<double(double)>& fn)
{
    const GridSpec& g = u.grid;
    std::vector<double> nodal(u.values.size());
    std::transform(u.values.begin(), u.values.end(), nodal.begin(), fn);
    std::vector<double> out(g.cell_count());
    const int m = g.nodes_per_axis();
    for (int j = 0; j < g.cells; ++j) {
        for (int i = 0; i < g.cells; ++i) {
            const std::size_t n00 = static_cast<std::size_t>(j) * m + i;
            out[g.cell(i, j)] =
                0.25 * ((nodal[n00] + nodal[n00 + 1]) + (nodal[n00 + m] + nodal[n00 + m + 1]));
        }
    }
    return out;
}

double lq_norm(const ScalarField& u, double q)
{
    WDL_REQUIRE(q >= 1.0, InvalidArgument, "lq_norm: q must be >= 1");
    const auto cells = cell_trapezoid(u, [q](double x) { return std::pow(std::abs(x), q); });
    return std::pow(integrate(u.grid, cells), 1.0 / q);
}

double lq_norm(const VectorField& F, double q)
{
    WDL_REQUIRE(q >= 1.0, InvalidArgument, "lq_norm: q must be >= 1");
    std::vector<double> cells(F.values.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
        cells[k] = std::pow(std::hypot(F.values[k][0], F.values[k][1]), q);
    }
    return std::pow(integrate(F.grid, cells), 1.0 / q);
}

std::vector<double> node_weights(const GridSpec& g)
{
    const int m = g.nodes_per_axis();
    const double h2 = g.spacing() * g.spacing();
    std::vector<double> w(g.node_count());
    for (int j = 0; j < m; ++j) {
        const double wy = (j == 0 || j == m - 1) ? 0.5 : 1.0;
        for (int i = 0; i < m; ++i) {
            const double wx = (i == 0 || i == m - 1) ? 0.5 : 1.0;
            w[g.node(i, j)] = h2 * wx * wy;
        }
    }
    return w;
}

ScalarField mollify(const ScalarField& f, double eps)
{
    const GridSpec& g = f.grid;
    const double h = g.spacing();
    if (!(eps >= 2.0 * h)) {
        std::ostringstream os;
        os << "mollify: eps = " << eps << " is below twice the grid spacing " << h;
        throw InvalidArgument(os.str());
    }
    const int reach = static_cast<int>(std::ceil(eps / h));
    struct Tap {
        int di;
        int dj;
        double w;
    };
    std::vector<Tap> taps;
    for (int dj = -reach; dj <= reach; ++dj) {
        for (int di = -reach; di <= reach; ++di) {
            const double rho2 = (di * di + dj * dj) * h * h / (eps * eps);
            if (rho2 >= 1.0) {
                continue;
            }
            const double w = std::exp(-1.0 / (1.0 - rho2));
            if (w > 0.0) {
                taps.push_back({di, dj, w});
            }
        }
    }
    ScalarField out = ScalarField::zeros(g);
    const int m = g.nodes_per_axis();
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            double acc = 0.0;
            double norm = 0.0;
            for (const auto& t : taps) {
                const int ii = i + t.di;
                const int jj = j + t.dj;
                if (ii < 0 || jj < 0 || ii >= m || jj >= m) {
                    continue;
                }
                acc += t.w * f.at(ii, jj);
                norm += t.w;
            }
            out.at(i, j) = acc / norm;
        }
    }
    return out;
}

Cutoff cutoff_eta(const GridSpec& g, double r)
{
    WDL_REQUIRE(r > 0.0 && r <= g.extent, InvalidArgument, "cutoff_eta: r must lie in (0, extent]");
    auto profile = [r](double x, double y) {
        const double rho = std::hypot(x, y);
        if (rho <= 0.5 * r) {
            return 1.0;
        }
        if (rho >= r) {
            return 0.0;
        }
        const double s = (rho - 0.5 * r) / (0.5 * r);
        return 1.0 - s * s * (3.0 - 2.0 * s);
    };
    Cutoff c{ScalarField::sample(g, profile), 0.0};
    for (const auto& d : gradient(c.eta).values) {
        c.max_gradient = std::max(c.max_gradient, std::hypot(d[0], d[1]));
    }
    return c;
}

ScalarField prolongate(const ScalarField& u, const GridSpec& fine)
{
    const GridSpec& g = u.grid;
    fine.validate();
    WDL_REQUIRE(fine.extent == g.extent, InvalidArgument, "prolongate: extents differ");
    const double h = g.spacing();
    auto locate = [&](double x, int& i, double& t) {
        const double s = (x + g.extent) / h;
        i = std::clamp(static_cast<int>(std::floor(s)), 0, g.cells - 1);
        t = s - i;
    };
    ScalarField out = ScalarField::zeros(fine);
    for (int j = 0; j < fine.nodes_per_axis(); ++j) {
        int cj = 0;
        double ty = 0.0;
        locate(fine.node_coord(j), cj, ty);
        for (int i = 0; i < fine.nodes_per_axis(); ++i) {
            int ci = 0;
            double tx = 0.0;
            locate(fine.node_coord(i), ci, tx);
            const double bottom = (1.0 - tx) * u.at(ci, cj) + tx * u.at(ci + 1, cj);
            const double top = (1.0 - tx) * u.at(ci, cj + 1) + tx * u.at(ci + 1, cj + 1);
            out.at(i, j) = (1.0 - ty) * bottom + ty * top;
        }
    }
    return out;
}

} // namespace wdl::grid
