#include "wdl/seminorms/seminorms.hpp"

#include "wdl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace wdl::seminorms {

namespace {

double sq_diff(const SampledField& F, std::size_t a, std::size_t b)
{
    const double* x = F.values.data() + a * F.components;
    const double* y = F.values.data() + b * F.components;
    double s = 0.0;
    for (int c = 0; c < F.components; ++c) {
        const double d = x[c] - y[c];
        s += d * d;
    }
    return s;
}

double abs_pow(double sq, double p)
{
    if (sq == 0.0) {
        return 0.0;
    }
    return p == 2.0 ? sq : std::pow(sq, 0.5 * p);
}

double tol(const SampledField& F)
{
    return 1e-9 * F.spacing;
}

void check_field(const SampledField& F)
{
    WDL_REQUIRE(F.points >= 2 && F.components >= 1 && F.spacing > 0.0, InvalidArgument,
                "SampledField: empty field");
    const std::size_t n = static_cast<std::size_t>(F.points) * F.points;
    WDL_REQUIRE(F.values.size() == n * F.components && F.weights.size() == n, InvalidArgument,
                "SampledField: inconsistent sizes");
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

SampledField SampledField::from_nodes(const grid::ScalarField& u)
{
    u.validate();
    SampledField F;
    F.extent = u.grid.extent;
    F.spacing = u.grid.spacing();
    F.origin = -u.grid.extent;
    F.points = u.grid.nodes_per_axis();
    F.components = 1;
    F.values = u.values;
    F.weights = grid::node_weights(u.grid);
    return F;
}

SampledField SampledField::from_cells(const grid::VectorField& V)
{
    V.validate();
    SampledField F;
    F.extent = V.grid.extent;
    F.spacing = V.grid.spacing();
    F.origin = -V.grid.extent + 0.5 * F.spacing;
    F.points = V.grid.cells;
    F.components = 2;
    F.cell_centered = true;
    F.values.reserve(2 * V.values.size());
    for (const auto& v : V.values) {
        F.values.push_back(v[0]);
        F.values.push_back(v[1]);
    }
    F.weights.assign(V.values.size(), F.spacing * F.spacing);
    return F;
}

SampledField SampledField::from_cells(const grid::GridSpec& g, const std::vector<double>& cellwise)
{
    WDL_REQUIRE(cellwise.size() == g.cell_count(), InvalidArgument,
                "SampledField::from_cells: expected one value per cell");
    SampledField F;
    F.extent = g.extent;
    F.spacing = g.spacing();
    F.origin = -g.extent + 0.5 * F.spacing;
    F.points = g.cells;
    F.components = 1;
    F.cell_centered = true;
    F.values = cellwise;
    F.weights.assign(cellwise.size(), F.spacing * F.spacing);
    return F;
}

ShiftedField tau_shift(const SampledField& F, const ShiftStencil& st)
{
    check_field(F);
    WDL_REQUIRE(st.direction == 0 || st.direction == 1, InvalidArgument,
                "tau_shift: direction must be 0 or 1");
    const double h = std::abs(st.step) * F.spacing;
    WDL_REQUIRE(st.step != 0 && h < F.extent, InvalidArgument,
                "tau_shift: step must be nonzero with |h| < extent");
    ShiftedField out{F, std::vector<unsigned char>(F.weights.size(), 0)};
    std::fill(out.delta.values.begin(), out.delta.values.end(), 0.0);
    const double limit = F.extent - h - tol(F);
    for (int j = 0; j < F.points; ++j) {
        for (int i = 0; i < F.points; ++i) {
            if (std::max(std::abs(F.coord(i)), std::abs(F.coord(j))) >= limit) {
                continue;
            }
            const int si = i + (st.direction == 0 ? st.step : 0);
            const int sj = j + (st.direction == 1 ? st.step : 0);
            const std::size_t k = F.index(i, j);
            const std::size_t ks = F.index(si, sj);
            out.valid[k] = 1;
            for (int c = 0; c < F.components; ++c) {
                out.delta.values[k * F.components + c] =
                    F.values[ks * F.components + c] - F.values[k * F.components + c];
            }
        }
    }
    return out;
}

nlohmann::json SeminormReport::to_json() const
{
    nlohmann::json j = {{"kind", kind}, {"s", s}, {"p", p},
                        {"value", value}, {"h_set", h_set}, {"per_h", per_h},
                        {"attaining_h", attaining_h}};
    j["q"] = std::isinf(q) ? nlohmann::json("inf") : nlohmann::json(q);
    return j;
}

void SeminormReport::write_csv(std::ostream& os, bool header) const
{
    if (header) {
        os << "kind,s,p,q,h,value\n";
    }
    for (std::size_t k = 0; k < h_set.size(); ++k) {
        os << kind << ',' << fmt(s) << ',' << fmt(p) << ',' << (std::isinf(q) ? "inf" : fmt(q))
           << ',' << fmt(h_set[k]) << ',' << fmt(per_h[k]) << '\n';
    }
}

SeminormReport quotient_l2(const SampledField& F, double rho, const std::vector<int>& steps)
{
    check_field(F);
    WDL_REQUIRE(!steps.empty(), InvalidArgument, "quotient_l2: empty step set");
    WDL_REQUIRE(rho > 0.0 && rho < F.extent, InvalidArgument,
                "quotient_l2: rho must lie in (0, extent)");

    // Quadrature over Q_rho: cells lying inside it, or the trapezoid rule on
    // the nodes of the sub-square.
    const double eps = tol(F);
    std::vector<double> w(F.weights.size(), 0.0);
    const double h2 = F.spacing * F.spacing;
    for (int j = 0; j < F.points; ++j) {
        for (int i = 0; i < F.points; ++i) {
            double wi = 1.0;
            for (double x : {F.coord(i), F.coord(j)}) {
                const double ax = std::abs(x);
                if (F.cell_centered) {
                    wi *= ax + 0.5 * F.spacing <= rho + eps ? 1.0 : 0.0;
                } else {
                    wi *= ax > rho + eps ? 0.0 : (std::abs(ax - rho) <= eps ? 0.5 : 1.0);
                }
            }
            w[F.index(i, j)] = wi * h2;
        }
    }

    SeminormReport rep;
    rep.kind = "quotient_l2";
    rep.s = 1.0;
    rep.p = 2.0;
    rep.q = kInfinity;
    for (int step : steps) {
        WDL_REQUIRE(step != 0, InvalidArgument, "quotient_l2: zero step");
        const int k = std::abs(step);
        const double h = k * F.spacing;
        WDL_REQUIRE(h < 0.5 * (F.extent - rho), InvalidArgument,
                    "quotient_l2: step violates |h| < (R - rho) / 2");
        double best = 0.0;
        for (int sign : {1, -1}) {
            double acc = 0.0;
            for (int dir = 0; dir < 2; ++dir) {
                for (int j = 0; j < F.points; ++j) {
                    for (int i = 0; i < F.points; ++i) {
                        const double wi = w[F.index(i, j)];
                        if (wi == 0.0) {
                            continue;
                        }
                        const int si = i + (dir == 0 ? sign * k : 0);
                        const int sj = j + (dir == 1 ? sign * k : 0);
                        acc += wi * sq_diff(F, F.index(si, sj), F.index(i, j));
                    }
                }
            }
            best = std::max(best, std::sqrt(acc) / h);
        }
        rep.h_set.push_back(h);
        rep.per_h.push_back(best);
        if (best > rep.value || rep.h_set.size() == 1) {
            rep.value = best;
            rep.attaining_h = h;
        }
    }
    return rep;
}

SeminormReport besov_seminorm(const SampledField& v, double s, double p, double q, double r_cut)
{
    check_field(v);
    WDL_REQUIRE(s > 0.0 && s < 1.0, InvalidArgument, "besov_seminorm: s must lie in (0, 1)");
    WDL_REQUIRE(p >= 1.0, InvalidArgument, "besov_seminorm: p must be >= 1");
    WDL_REQUIRE(q >= 1.0, InvalidArgument, "besov_seminorm: q must be >= 1 or infinite");
    const double diameter = 2.0 * std::sqrt(2.0) * v.extent;
    WDL_REQUIRE(r_cut > 0.0 && r_cut <= diameter * (1.0 + 1e-12), InvalidArgument,
                "besov_seminorm: r_cut must lie in (0, domain diameter]");

    const double sp = v.spacing;
    const int K = std::min(v.points - 1, static_cast<int>(std::floor(r_cut / sp + 1e-9)));
    const bool sup = std::isinf(q);
    const int shells = static_cast<int>(std::ceil(r_cut / sp - 1e-9));
    std::vector<double> shell(static_cast<std::size_t>(std::max(shells, 1)), 0.0);

    SeminormReport rep;
    rep.kind = "besov";
    rep.s = s;
    rep.p = p;
    rep.q = q;
    double total = 0.0;
    const double inv_sp2 = 1.0 / (sp * sp);

    // h and -h give the same inner integral, so only a half-plane is visited.
    for (int b = 0; b <= K; ++b) {
        for (int a = -K; a <= K; ++a) {
            if (b == 0 && a <= 0) {
                continue;
            }
            const double hn = sp * std::hypot(static_cast<double>(a), static_cast<double>(b));
            if (hn > r_cut * (1.0 + 1e-12)) {
                continue;
            }
            double inner = 0.0;
            const int i0 = std::max(0, -a);
            const int i1 = std::min(v.points, v.points - a);
            for (int j = 0; j + b < v.points; ++j) {
                for (int i = i0; i < i1; ++i) {
                    const std::size_t x = v.index(i, j);
                    const std::size_t y = v.index(i + a, j + b);
                    inner += v.weights[x] * v.weights[y] * abs_pow(sq_diff(v, x, y), p);
                }
            }
            inner *= inv_sp2;
            if (sup) {
                const double val = std::pow(inner, 1.0 / p) / std::pow(hn, s);
                if (val > rep.value) {
                    rep.value = val;
                    rep.attaining_h = hn;
                }
            } else {
                const double c = 2.0 * sp * sp * std::pow(inner, q / p) * std::pow(hn, -s * q - 2.0);
                total += c;
                const int k = std::max(1, static_cast<int>(std::ceil(hn / sp - 1e-9)));
                shell[static_cast<std::size_t>(k - 1)] += c;
            }
        }
    }
    if (!sup) {
        rep.value = std::pow(total, 1.0 / q);
        for (std::size_t k = 0; k < shell.size(); ++k) {
            rep.h_set.push_back(static_cast<double>(k + 1) * sp);
            rep.per_h.push_back(shell[k]);
        }
    } else {
        rep.h_set.push_back(rep.attaining_h);
        rep.per_h.push_back(rep.value);
    }
    return rep;
}

double gagliardo_seminorm(const SampledField& v, double s, double q)
{
    check_field(v);
    WDL_REQUIRE(s > 0.0 && s < 1.0, InvalidArgument, "gagliardo_seminorm: s must lie in (0, 1)");
    WDL_REQUIRE(q >= 1.0 && std::isfinite(q), InvalidArgument,
                "gagliardo_seminorm: q must be finite and >= 1");
    const std::size_t n = v.weights.size();
    WDL_REQUIRE(n <= kGagliardoMaxSamples, InvalidArgument,
                "gagliardo_seminorm: field too large for the double sum");
    const double expo = -0.5 * (2.0 + s * q);
    double total = 0.0;
    for (std::size_t x = 0; x < n; ++x) {
        const double xi = v.coord(static_cast<int>(x % v.points));
        const double xj = v.coord(static_cast<int>(x / v.points));
        double row = 0.0;
        for (std::size_t y = 0; y < n; ++y) {
            if (y == x) {
                continue;
            }
            const double dx = v.coord(static_cast<int>(y % v.points)) - xi;
            const double dy = v.coord(static_cast<int>(y / v.points)) - xj;
            row += v.weights[y] * abs_pow(sq_diff(v, x, y), q) * std::pow(dx * dx + dy * dy, expo);
        }
        total += v.weights[x] * row;
    }
    return std::pow(total, 1.0 / q);
}

nlohmann::json NikolskiiReport::to_json() const
{
    return {{"besov", besov.to_json()}, {"quotient", quotient.to_json()}, {"ratio", ratio}};
}

NikolskiiReport nikolskii_check(const SampledField& g, double p, double rho,
                                const std::vector<int>& steps, double r_cut)
{
    WDL_REQUIRE(p > 2.0, InvalidArgument, "nikolskii_check: requires p > 2");
    check_field(g);
    SampledField vg = g;
    for (std::size_t k = 0; k < g.weights.size(); ++k) {
        double sq = 0.0;
        for (int c = 0; c < g.components; ++c) {
            sq += g.values[k * g.components + c] * g.values[k * g.components + c];
        }
        const double f = sq == 0.0 ? 0.0 : std::pow(sq, 0.25 * (p - 2.0));
        for (int c = 0; c < g.components; ++c) {
            vg.values[k * g.components + c] *= f;
        }
    }
    NikolskiiReport rep;
    rep.besov = besov_seminorm(g, 2.0 / p, p, kInfinity, r_cut);
    rep.quotient = quotient_l2(vg, rho, steps);
    if (rep.quotient.value > 0.0) {
        rep.ratio = std::pow(rep.besov.value, 0.5 * p) / rep.quotient.value;
    }
    return rep;
}

} // namespace wdl::seminorms
