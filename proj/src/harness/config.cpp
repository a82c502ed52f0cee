#include "wdl/harness/config.hpp"

#include "wdl/errors.hpp"
#include "wdl/grid/field_io.hpp"
#include "wdl/kernel/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

namespace wdl::harness {

using nlohmann::json;

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    WDL_REQUIRE(j.is_object(), InvalidArgument, "config: " + where + " must be an object");
    const std::set<std::string> known(allowed.begin(), allowed.end());
    for (const auto& item : j.items()) {
        WDL_REQUIRE(known.count(item.key()) != 0, InvalidArgument,
                    "config: unknown key '" + item.key() + "' in " + where);
    }
}

template <typename T>
void read(const json& j, const char* key, T& out)
{
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

std::array<double, 2> read_pair(const json& j, const char* key, std::array<double, 2> fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    const auto v = j.at(key).get<std::vector<double>>();
    WDL_REQUIRE(v.size() == 2, InvalidArgument, std::string("config: ") + key + " needs 2 entries");
    return {v[0], v[1]};
}

bool is_integer_multiple(double h, double spacing)
{
    const double k = h / spacing;
    return std::round(k) >= 1.0 && std::abs(k - std::round(k)) <= 1e-9 * k;
}

} // namespace

grid::ScalarField DatumSpec::sample(const grid::GridSpec& g, const kernel::Params& prm) const
{
    if (kind == "zero") {
        return grid::ScalarField::zeros(g);
    }
    if (kind == "gaussian") {
        return grid::ScalarField::sample(g, [this](double x, double y) {
            const double dx = x - center[0];
            const double dy = y - center[1];
            return amplitude * std::exp(-width * (dx * dx + dy * dy));
        });
    }
    if (kind == "rough_radial") {
        return grid::ScalarField::sample(g, [this](double x, double y) {
            const double r = std::hypot(x, y);
            if (r == 0.0) {
                return amplitude * cap;
            }
            return amplitude * std::min(std::pow(r, -beta), cap);
        });
    }
    if (kind == "expression") {
        WDL_REQUIRE(expression.has_value(), InvalidArgument, "datum: missing expression");
        return grid::ScalarField::sample(g, *expression);
    }
    if (kind == "file") {
        grid::ScalarField f = grid::read_scalar_field(path);
        WDL_REQUIRE(f.grid == g, InvalidArgument,
                    "datum: file '" + path + "' does not live on the experiment grid");
        return f;
    }
    if (kind == "manufactured_radial") {
        // For u = a|x|^2/2 the flux is c(a r) a x with c the flux coefficient,
        // so -div = -a (2 c(a r) + a r c'(a r)) in two dimensions.
        return grid::ScalarField::sample(g, [this, prm](double x, double y) {
            const double t = a * std::hypot(x, y);
            const double c = kernel::radial::flux_coefficient(t, prm);
            const double dc = kernel::radial::h_prime(t, prm) + prm.eps * kernel::radial::a_prime(t, prm);
            return -a * (2.0 * c + t * dc);
        });
    }
    throw InvalidArgument("datum: unknown kind '" + kind + "'");
}

json DatumSpec::to_json() const
{
    json j{{"kind", kind}};
    if (kind == "gaussian") {
        j["amplitude"] = amplitude;
        j["width"] = width;
        j["center"] = {center[0], center[1]};
    } else if (kind == "rough_radial") {
        j["amplitude"] = amplitude;
        j["beta"] = beta;
        j["cap"] = cap;
    } else if (kind == "expression") {
        j["expression"] = expression ? expression->text() : std::string();
    } else if (kind == "file") {
        j["path"] = path;
    } else if (kind == "manufactured_radial") {
        j["a"] = a;
    }
    return j;
}

double BoundarySpec::value(double x, double y) const
{
    if (kind == "zero") {
        return 0.0;
    }
    if (kind == "affine") {
        return offset + slope[0] * x + slope[1] * y;
    }
    if (kind == "manufactured_radial") {
        return 0.5 * a * (x * x + y * y);
    }
    if (kind == "expression") {
        WDL_REQUIRE(expression.has_value(), InvalidArgument, "boundary: missing expression");
        return (*expression)(x, y);
    }
    throw InvalidArgument("boundary: unknown kind '" + kind + "'");
}

grid::Vec2 BoundarySpec::gradient(double x, double y) const
{
    if (kind == "zero") {
        return {0.0, 0.0};
    }
    if (kind == "affine") {
        return slope;
    }
    if (kind == "manufactured_radial") {
        return {a * x, a * y};
    }
    constexpr double step = 1e-6;
    return {(value(x + step, y) - value(x - step, y)) / (2.0 * step),
            (value(x, y + step) - value(x, y - step)) / (2.0 * step)};
}

grid::ScalarField BoundarySpec::sample(const grid::GridSpec& g) const
{
    return grid::ScalarField::sample(g, [this](double x, double y) { return value(x, y); });
}

json BoundarySpec::to_json() const
{
    json j{{"kind", kind}};
    if (kind == "affine") {
        j["slope"] = {slope[0], slope[1]};
        j["offset"] = offset;
    } else if (kind == "manufactured_radial") {
        j["a"] = a;
    } else if (kind == "expression") {
        j["expression"] = expression ? expression->text() : std::string();
    }
    return j;
}

void ExperimentConfig::validate() const
{
    WDL_REQUIRE(n == 2, InvalidArgument, "config: the discrete experiments are two-dimensional");
    (void)params(0.0);
    WDL_REQUIRE(!eps.empty(), InvalidArgument, "config: eps list is empty");
    for (std::size_t k = 0; k < eps.size(); ++k) {
        WDL_REQUIRE(eps[k] >= 0.0 && eps[k] <= 1.0, InvalidArgument, "config: eps outside [0, 1]");
        WDL_REQUIRE(k == 0 || eps[k] < eps[k - 1], InvalidArgument,
                    "config: eps list must be sorted strictly descending");
    }
    WDL_REQUIRE(extent > 0.0 && std::isfinite(extent), InvalidArgument, "config: extent must be > 0");
    (void)grid();
    WDL_REQUIRE(!refinements.empty(), InvalidArgument, "config: refinements is empty");
    for (std::size_t k = 0; k < refinements.size(); ++k) {
        (void)grid(refinements[k]);
        WDL_REQUIRE(k == 0 || refinements[k] > refinements[k - 1], InvalidArgument,
                    "config: refinements must be strictly ascending");
    }
    const auto& s = seminorm;
    WDL_REQUIRE(s.r > 0.0 && s.r < s.R && s.R <= extent, InvalidArgument,
                "config: seminorm radii must satisfy 0 < r < R <= extent");
    WDL_REQUIRE(!s.h.empty(), InvalidArgument, "config: seminorm h set is empty");
    std::vector<int> all_cells = refinements;
    all_cells.push_back(cells);
    for (double h : s.h) {
        WDL_REQUIRE(h > 0.0 && h < 0.5 * (s.R - s.inner_radius()), InvalidArgument,
                    "config: seminorm steps must satisfy 0 < h < (R - r/4) / 2");
        for (int c : all_cells) {
            WDL_REQUIRE(is_integer_multiple(h, grid(c).spacing()), InvalidArgument,
                        "config: seminorm step is not a multiple of the spacing of every grid");
        }
    }
    if (s.besov_r_cut) {
        WDL_REQUIRE(*s.besov_r_cut > 0.0, InvalidArgument, "config: besov_r_cut must be > 0");
    }
    solver.validate();
    WDL_REQUIRE(integrability_q >= 1.0, InvalidArgument, "config: integrability_q must be >= 1");
    if (p_star) {
        WDL_REQUIRE(*p_star > p, InvalidArgument, "config: p_star must exceed p");
    }
    WDL_REQUIRE(threads >= 1, InvalidArgument, "config: threads must be >= 1");
    static const std::set<std::string> datum_kinds = {"zero", "gaussian", "rough_radial",
                                                      "expression", "file", "manufactured_radial"};
    WDL_REQUIRE(datum_kinds.count(datum.kind) != 0, InvalidArgument,
                "config: unknown datum kind '" + datum.kind + "'");
    WDL_REQUIRE(datum.kind != "expression" || datum.expression, InvalidArgument,
                "config: datum expression missing");
    WDL_REQUIRE(datum.kind != "file" || !datum.path.empty(), InvalidArgument,
                "config: datum path missing");
    WDL_REQUIRE(datum.kind != "rough_radial" || (datum.beta >= 0.0 && datum.cap > 0.0),
                InvalidArgument, "config: rough_radial needs beta >= 0 and cap > 0");
    static const std::set<std::string> boundary_kinds = {"zero", "affine", "expression",
                                                         "manufactured_radial"};
    WDL_REQUIRE(boundary_kinds.count(boundary.kind) != 0, InvalidArgument,
                "config: unknown boundary kind '" + boundary.kind + "'");
    WDL_REQUIRE(boundary.kind != "expression" || boundary.expression, InvalidArgument,
                "config: boundary expression missing");
}

std::vector<int> ExperimentConfig::steps(const grid::GridSpec& g) const
{
    std::vector<int> out;
    for (double h : seminorm.h) {
        WDL_REQUIRE(is_integer_multiple(h, g.spacing()), InvalidArgument,
                    "config: seminorm step is not a multiple of the spacing");
        out.push_back(static_cast<int>(std::lround(h / g.spacing())));
    }
    return out;
}

json ExperimentConfig::to_json() const
{
    const auto& ls = solver.line_search;
    json sem{{"r", seminorm.r}, {"R", seminorm.R}, {"h", seminorm.h}};
    sem["besov_r_cut"] = seminorm.besov_r_cut ? json(*seminorm.besov_r_cut) : json(nullptr);
    return json{
        {"name", name},
        {"grid", {{"extent", extent}, {"cells", cells}, {"refinements", refinements}}},
        {"params", {{"n", n}, {"p", p}, {"lambda", lambda}, {"eps", eps}}},
        {"datum", datum.to_json()},
        {"boundary", boundary.to_json()},
        {"solver",
         {{"grad_tol", solver.grad_tol},
          {"max_iters", solver.max_iters},
          {"hessian_floor", solver.hessian_floor},
          {"line_search",
           {{"slope_fraction", ls.slope_fraction},
            {"backtrack", ls.backtrack},
            {"max_backtracks", ls.max_backtracks},
            {"monotone_residual", ls.monotone_residual}}}}},
        {"seminorm", sem},
        {"integrability_q", integrability_q},
        {"p_star", p_star ? json(*p_star) : json(nullptr)},
        {"seed", seed},
        {"threads", threads},
        {"output", output},
    };
}

namespace {

ExperimentConfig parse_config(const json& j)
{
    ExperimentConfig cfg;
    check_keys(j, {"name", "grid", "params", "datum", "boundary", "solver", "seminorm",
                   "integrability_q", "p_star", "seed", "threads", "output"},
               "config");
    read(j, "name", cfg.name);
    if (j.contains("grid")) {
        const json& g = j.at("grid");
        check_keys(g, {"extent", "cells", "refinements"}, "grid");
        read(g, "extent", cfg.extent);
        read(g, "cells", cfg.cells);
        read(g, "refinements", cfg.refinements);
    }
    if (j.contains("params")) {
        const json& p = j.at("params");
        check_keys(p, {"n", "p", "lambda", "eps"}, "params");
        read(p, "n", cfg.n);
        read(p, "p", cfg.p);
        read(p, "lambda", cfg.lambda);
        read(p, "eps", cfg.eps);
    }
    if (j.contains("datum")) {
        const json& d = j.at("datum");
        check_keys(d, {"kind", "amplitude", "width", "center", "beta", "cap", "a", "expression", "path"},
                   "datum");
        auto& ds = cfg.datum;
        read(d, "kind", ds.kind);
        read(d, "amplitude", ds.amplitude);
        read(d, "width", ds.width);
        ds.center = read_pair(d, "center", ds.center);
        read(d, "beta", ds.beta);
        read(d, "cap", ds.cap);
        read(d, "a", ds.a);
        read(d, "path", ds.path);
        if (d.contains("expression")) {
            ds.expression = Expression::parse(d.at("expression").get<std::string>());
        }
    }
    if (j.contains("boundary")) {
        const json& b = j.at("boundary");
        check_keys(b, {"kind", "slope", "offset", "a", "expression"}, "boundary");
        auto& bs = cfg.boundary;
        read(b, "kind", bs.kind);
        bs.slope = read_pair(b, "slope", bs.slope);
        read(b, "offset", bs.offset);
        read(b, "a", bs.a);
        if (b.contains("expression")) {
            bs.expression = Expression::parse(b.at("expression").get<std::string>());
        }
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        check_keys(s, {"grad_tol", "max_iters", "hessian_floor", "line_search"}, "solver");
        read(s, "grad_tol", cfg.solver.grad_tol);
        read(s, "max_iters", cfg.solver.max_iters);
        read(s, "hessian_floor", cfg.solver.hessian_floor);
        if (s.contains("line_search")) {
            const json& l = s.at("line_search");
            check_keys(l, {"slope_fraction", "backtrack", "max_backtracks", "monotone_residual"},
                       "line_search");
            auto& ls = cfg.solver.line_search;
            read(l, "slope_fraction", ls.slope_fraction);
            read(l, "backtrack", ls.backtrack);
            read(l, "max_backtracks", ls.max_backtracks);
            read(l, "monotone_residual", ls.monotone_residual);
        }
    }
    if (j.contains("seminorm")) {
        const json& s = j.at("seminorm");
        check_keys(s, {"r", "R", "h", "besov_r_cut"}, "seminorm");
        read(s, "r", cfg.seminorm.r);
        read(s, "R", cfg.seminorm.R);
        read(s, "h", cfg.seminorm.h);
        if (s.contains("besov_r_cut") && !s.at("besov_r_cut").is_null()) {
            cfg.seminorm.besov_r_cut = s.at("besov_r_cut").get<double>();
        }
    }
    read(j, "integrability_q", cfg.integrability_q);
    if (j.contains("p_star") && !j.at("p_star").is_null()) {
        cfg.p_star = j.at("p_star").get<double>();
    }
    read(j, "seed", cfg.seed);
    read(j, "threads", cfg.threads);
    read(j, "output", cfg.output);
    return cfg;
}

} // namespace

ExperimentConfig config_from_json(const json& j)
{
    ExperimentConfig cfg;
    try {
        cfg = parse_config(j);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    WDL_REQUIRE(in.good(), InvalidArgument, "config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw InvalidArgument("config: " + path + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace wdl::harness
