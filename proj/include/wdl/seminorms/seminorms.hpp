#pragma once

#include "wdl/grid/grid.hpp"

#include "json.hpp"

#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

namespace wdl::seminorms {

/// A field sampled on a square lattice of [-R, R]^2 together with the
/// quadrature weight of each sample: nodal scalar fields carry trapezoid
/// weights, cell fields the midpoint weight spacing^2.
struct SampledField {
    double extent = 1.0;
    double spacing = 0.0;
    double origin = 0.0;  ///< coordinate of index 0 along either axis
    int points = 0;       ///< samples per axis
    int components = 1;
    bool cell_centered = false;
    std::vector<double> values;   ///< sample-major, components interleaved
    std::vector<double> weights;  ///< one per sample

    static SampledField from_nodes(const grid::ScalarField& u);
    static SampledField from_cells(const grid::VectorField& F);
    static SampledField from_cells(const grid::GridSpec& g, const std::vector<double>& cellwise);

    [[nodiscard]] double coord(int i) const { return origin + i * spacing; }
    [[nodiscard]] std::size_t index(int i, int j) const
    {
        return static_cast<std::size_t>(j) * points + i;
    }
    [[nodiscard]] const double* at(int i, int j) const
    {
        return values.data() + index(i, j) * components;
    }
};

/// Finite difference in direction `direction` (0 = x, 1 = y) with step
/// h = step * spacing.
struct ShiftStencil {
    int direction = 0;
    int step = 1;
};

/// tau_{j,h} F(x) = F(x + h e_j) - F(x) on the inner region
/// {x : dist(x, boundary) > |h|}; `valid` flags the samples of that region,
/// `delta` is zero elsewhere.
struct ShiftedField {
    SampledField delta;
    std::vector<unsigned char> valid;
};

/// Throws InvalidArgument when the step is zero, |h| >= extent or the
/// direction is not 0 or 1.
ShiftedField tau_shift(const SampledField& F, const ShiftStencil& stencil);

struct SeminormReport {
    std::string kind;
    double s = 0.0;
    double p = 0.0;
    double q = 0.0;
    double value = 0.0;
    std::vector<double> h_set;     ///< step lengths (or shell radii) used
    std::vector<double> per_h;     ///< value (or contribution) per entry of h_set
    double attaining_h = 0.0;      ///< maximizing step for sup-type quantities

    [[nodiscard]] nlohmann::json to_json() const;
    /// Rows "kind,s,p,q,h,value", one per entry of h_set.
    void write_csv(std::ostream& os, bool header = true) const;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// max over h of (sum_j int_{Q_rho} |tau_{j,h} F|^2)^{1/2} / |h|, with
/// Q_rho = [-rho, rho]^2 and both signs of every step in `steps` (given in
/// units of the spacing). Requires |h| < (R - rho) / 2.
SeminormReport quotient_l2(const SampledField& F, double rho, const std::vector<int>& steps);

/// Difference form of the Besov seminorm
///   ( int_{0<|h|<=r_cut} ( int |v(x+h) - v(x)|^p dx )^{q/p} |h|^{-sq-2} dh )^{1/q},
/// with the h-integral summed over lattice shifts (weight spacing^2) and the
/// inner integral over the samples with x and x+h in the domain, weighted by
/// w(x) w(x+h) / spacing^2. q = kInfinity takes the max over the shifts of
/// (int |v(x+h) - v(x)|^p)^{1/p} / |h|^s. per_h holds the contribution of each
/// lattice shell k - 1 < |h| / spacing <= k.
/// r_cut may range up to the domain diameter 2 sqrt(2) R.
SeminormReport besov_seminorm(const SampledField& v, double s, double p, double q, double r_cut);

/// Brute-force double sum for (int int |v(x) - v(y)|^q / |x-y|^{2+sq} dx dy)^{1/q}
/// over sample pairs x != y with weights w(x) w(y). Refuses fields with more
/// than kGagliardoMaxSamples samples.
inline constexpr std::size_t kGagliardoMaxSamples = 128 * 128;
double gagliardo_seminorm(const SampledField& v, double s, double q);

struct NikolskiiReport {
    SeminormReport besov;     ///< [g]_{B^{2/p}_{p,infinity}}
    SeminormReport quotient;  ///< difference-quotient bound of |g|^{(p-2)/2} g
    double ratio = 0.0;       ///< besov.value^{p/2} / quotient.value, 0 when both vanish

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Evaluates both sides of the implication
/// |g|^{(p-2)/2} g in W^{1,2} => g in B^{2/p}_{p,infinity}. Requires p > 2.
NikolskiiReport nikolskii_check(const SampledField& g, double p, double rho,
                                const std::vector<int>& steps, double r_cut);

} // namespace wdl::seminorms
