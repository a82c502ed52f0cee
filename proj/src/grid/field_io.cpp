#include "wdl/grid/field_io.hpp"

#include "wdl/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace wdl::grid {

namespace {

static_assert(std::endian::native == std::endian::little,
              "binary field dumps assume a little-endian host");

constexpr char kMagic[4] = {'W', 'D', 'L', '1'};

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out)
{
    std::ofstream os(path, mode);
    WDL_REQUIRE(os.good(), InvalidArgument, "cannot open for writing: " + path);
    return os;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = std::ios::in)
{
    std::ifstream is(path, mode);
    WDL_REQUIRE(is.good(), InvalidArgument, "cannot open for reading: " + path);
    return is;
}

template <typename T>
void put(std::ostream& os, T v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    WDL_REQUIRE(is.good(), InvalidArgument, "binary field: truncated input");
    return v;
}

void write_header(std::ostream& os, std::uint32_t kind, const GridSpec& g, std::uint32_t comps)
{
    os.write(kMagic, 4);
    put<std::uint32_t>(os, kind);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(g.cells));
    put<std::uint32_t>(os, comps);
    put<double>(os, g.extent);
}

GridSpec read_header(std::istream& is, std::uint32_t expected_kind, std::uint32_t expected_comps)
{
    char magic[4];
    is.read(magic, 4);
    WDL_REQUIRE(is.good() && std::memcmp(magic, kMagic, 4) == 0, InvalidArgument,
                "binary field: bad magic");
    const auto kind = get<std::uint32_t>(is);
    const auto cells = get<std::uint32_t>(is);
    const auto comps = get<std::uint32_t>(is);
    const auto extent = get<double>(is);
    WDL_REQUIRE(kind == expected_kind && comps == expected_comps, InvalidArgument,
                "binary field: unexpected field kind");
    return GridSpec::make(extent, static_cast<int>(cells));
}

} // namespace

void write_csv(std::ostream& os, const ScalarField& u)
{
    const GridSpec& g = u.grid;
    os << "x,y,value\n";
    const int m = g.nodes_per_axis();
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            os << fmt(g.node_coord(i)) << ',' << fmt(g.node_coord(j)) << ',' << fmt(u.at(i, j))
               << '\n';
        }
    }
}

void write_csv(std::ostream& os, const VectorField& F)
{
    const GridSpec& g = F.grid;
    os << "x,y,vx,vy\n";
    for (int j = 0; j < g.cells; ++j) {
        for (int i = 0; i < g.cells; ++i) {
            const auto& v = F.at(i, j);
            os << fmt(g.cell_coord(i)) << ',' << fmt(g.cell_coord(j)) << ',' << fmt(v[0]) << ','
               << fmt(v[1]) << '\n';
        }
    }
}

void write_csv(const std::string& path, const ScalarField& u)
{
    auto os = open_out(path);
    write_csv(os, u);
}

void write_csv(const std::string& path, const VectorField& F)
{
    auto os = open_out(path);
    write_csv(os, F);
}

ScalarField read_scalar_csv(std::istream& is)
{
    std::string line;
    WDL_REQUIRE(static_cast<bool>(std::getline(is, line)), InvalidArgument, "csv: empty input");
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> vs;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream row(line);
        double x = 0.0;
        double y = 0.0;
        double v = 0.0;
        WDL_REQUIRE(static_cast<bool>(row >> x >> y >> v), InvalidArgument,
                    "csv: malformed row '" + line + "'");
        xs.push_back(x);
        ys.push_back(y);
        vs.push_back(v);
    }
    const auto m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(vs.size()))));
    WDL_REQUIRE(m >= 5 && static_cast<std::size_t>(m) * m == vs.size(), InvalidArgument,
                "csv: row count is not a square node count");
    const double extent = std::max(std::abs(xs.front()), std::abs(xs.back()));
    ScalarField u = ScalarField::zeros(GridSpec::make(extent, m - 1));
    const double tol = 1e-9 * extent;
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < m; ++i) {
            const std::size_t k = u.grid.node(i, j);
            WDL_REQUIRE(std::abs(xs[k] - u.grid.node_coord(i)) <= tol
                            && std::abs(ys[k] - u.grid.node_coord(j)) <= tol,
                        InvalidArgument, "csv: coordinates do not match a uniform grid");
            u.values[k] = vs[k];
        }
    }
    u.validate();
    return u;
}

ScalarField read_scalar_csv(const std::string& path)
{
    auto is = open_in(path);
    return read_scalar_csv(is);
}

void write_binary(std::ostream& os, const ScalarField& u)
{
    write_header(os, 0, u.grid, 1);
    for (double v : u.values) {
        put<double>(os, v);
    }
}

void write_binary(std::ostream& os, const VectorField& F)
{
    write_header(os, 1, F.grid, 2);
    for (const auto& v : F.values) {
        put<double>(os, v[0]);
        put<double>(os, v[1]);
    }
}

void write_binary(const std::string& path, const ScalarField& u)
{
    auto os = open_out(path, std::ios::out | std::ios::binary);
    write_binary(os, u);
}

ScalarField read_scalar_binary(std::istream& is)
{
    ScalarField u = ScalarField::zeros(read_header(is, 0, 1));
    for (double& v : u.values) {
        v = get<double>(is);
    }
    return u;
}

VectorField read_vector_binary(std::istream& is)
{
    VectorField F = VectorField::zeros(read_header(is, 1, 2));
    for (auto& v : F.values) {
        v[0] = get<double>(is);
        v[1] = get<double>(is);
    }
    return F;
}

ScalarField read_scalar_binary(const std::string& path)
{
    auto is = open_in(path, std::ios::in | std::ios::binary);
    return read_scalar_binary(is);
}

ScalarField read_scalar_field(const std::string& path)
{
    const auto dot = path.rfind('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    if (ext == ".csv") {
        return read_scalar_csv(path);
    }
    return read_scalar_binary(path);
}

} // namespace wdl::grid
