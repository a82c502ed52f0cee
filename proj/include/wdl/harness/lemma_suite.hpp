#pragma once

#include "wdl/harness/table.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace wdl::harness {

struct LemmaSuiteOptions {
    std::uint64_t seed = 20250530;
    long long samples = 100000;  ///< random samples per (p, lambda, eps) cell
    std::vector<double> p_values{1.5, 2.0, 3.0, 4.5};
    std::vector<double> lambda_values{0.0, 0.5, 2.0};
    std::vector<double> eps_values{0.0, 0.5, 1.0};
    double tolerance = 1e-12;  ///< relative to the magnitude of the compared terms
    int threads = 1;

    void validate() const;
};

/// Outcome of one inequality over all cells.
struct LemmaCheck {
    std::string name;
    long long checked = 0;
    long long violations = 0;
    /// max over samples of (lhs - rhs) / scale; negative when every sample
    /// holds with room to spare.
    double worst_excess = -1.0;
    nlohmann::json first_violation;  ///< null when there is none

    [[nodiscard]] bool passed() const { return violations == 0 && checked > 0; }
};

struct LemmaSuiteReport {
    LemmaSuiteOptions options;
    std::vector<LemmaCheck> checks;
    /// Rows "p,lambda,eps,check,checked,violations,worst_excess".
    Table cells;

    [[nodiscard]] bool passed() const;
    [[nodiscard]] nlohmann::json to_json() const;
};

/// Samples every pointwise inequality of the kernel on each (p, lambda, eps)
/// cell: unit-vector difference bound, monotonicity with the explicit
/// constant and the calibrated one, convexity of G_eps, the two bounds on
/// G_lambda, the bound chain for V_lambda, the elementary power inequality,
/// the Hessian eigenvalue sandwich, the V_p bounds, the Phi weight bound and
/// continuity of V_lambda across the degeneracy shell. Sampling mixes wide
/// magnitudes, near-shell and near-parallel pairs and the shell
/// |eta| = lambda (1 + 1e-6). Throws InvalidArgument when samples < 1.
LemmaSuiteReport run_lemma_suite(const LemmaSuiteOptions& options);
LemmaSuiteReport run_lemma_suite(std::uint64_t seed, long long samples);

/// Finite-difference check of dg_eps against g_eps and d2g_eps against dg_eps
/// on samples with |z| in [0.1, 4] and | |z| - lambda | >= 0.1.
struct GradientConsistency {
    long long samples = 0;
    double max_gradient_error = 0.0;  ///< max |fd - exact| / max(1, |exact|)
    double max_hessian_error = 0.0;
    nlohmann::json worst_gradient_case;
    nlohmann::json worst_hessian_case;

    [[nodiscard]] nlohmann::json to_json() const;
};

GradientConsistency run_gradient_consistency(std::uint64_t seed, long long samples,
                                             double step = 1e-5);

} // namespace wdl::harness
