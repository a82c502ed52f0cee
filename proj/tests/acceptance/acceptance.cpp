// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include "wdl/grid/grid.hpp"
#include "wdl/harness/config.hpp"
#include "wdl/harness/experiments.hpp"
#include "wdl/harness/lemma_suite.hpp"
#include "wdl/kernel/kernel.hpp"
#include "wdl/seminorms/seminorms.hpp"
#include "wdl/solver/solver.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <string>
#include <vector>

using namespace wdl;
namespace fs = std::filesystem;

namespace {

// Pinned thresholds.
constexpr long long kLemmaSamples = 100000;
constexpr double kLemmaSeconds = 60.0;
constexpr long long kGradientSamples = 10000;
constexpr double kGradientTol = 1e-5;
constexpr double kClosedFormRelTol = 1e-9;
constexpr double kPowerLawRelTol = 1e-12;
constexpr double kLipschitzResidualTol = 1e-13;
constexpr double kManufacturedRate = 0.7;
constexpr double kManufacturedSeconds = 300.0;
constexpr double kUniformity = 1.5;
constexpr double kSlopeLow = 0.8;
constexpr double kSlopeHigh = 1.5;
constexpr double kQuotientDrift = 0.25;
constexpr double kBesovGagliardoRelTol = 0.02;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail)
{
    if (!pass) {
        ++failures;
    }
    std::printf("%s [%d] %s: %s\n", pass ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

harness::ExperimentConfig config(const std::string& name)
{
    return harness::load_config(std::string(WDL_CONFIG_DIR) + "/" + name + ".json");
}

template <class F>
void guarded(int id, const std::string& what, F&& body)
{
    try {
        body();
    } catch (const std::exception& e) {
        report(id, false, what, std::string("exception: ") + e.what());
    }
}

void lemma_suite()
{
    const auto t0 = std::chrono::steady_clock::now();
    const harness::LemmaSuiteReport rep = harness::run_lemma_suite(20250530, kLemmaSamples);
    const double secs = seconds_since(t0);
    long long violations = 0;
    long long checked = 0;
    for (const auto& c : rep.checks) {
        violations += c.violations;
        checked += c.checked;
    }
    const bool pass = rep.passed() && secs < kLemmaSeconds;
    report(1, pass, "pointwise inequality suite",
           std::to_string(rep.checks.size()) + " checks, " + std::to_string(checked) + " evaluations, " +
               std::to_string(violations) + " violations, " + fmt("%.1f s", secs) +
               fmt(" (limit %.0f s)", kLemmaSeconds));
}

void gradient_consistency()
{
    const harness::GradientConsistency g = harness::run_gradient_consistency(20250530, kGradientSamples);
    const bool pass = g.max_gradient_error <= kGradientTol && g.max_hessian_error <= kGradientTol;
    report(2, pass, "finite-difference gradient and Hessian consistency",
           fmt("max gradient error %.3g", g.max_gradient_error) +
               fmt(", max Hessian error %.3g", g.max_hessian_error) + fmt(" (limit %.0e)", kGradientTol));
}

void g_lambda_closed_forms()
{
    using mp = boost::multiprecision::cpp_bin_float_50;
    const double lambda = 1.0;
    const kernel::Params prm = kernel::Params::make(2, 2.0, lambda, 0.0);
    double worst = 0.0;
    for (int k = 1; k <= 1000; ++k) {
        const double t = 10.0 * k / 1000.0;
        const mp tt = t;
        const mp l = lambda;
        const mp exact = tt + l - l * l / (tt + l) - 2 * l * boost::multiprecision::log1p(tt / l);
        const double ref = exact.convert_to<double>();
        for (double got : {kernel::g_lambda(t, prm), kernel::g_lambda_quadrature(t, 2.0, lambda)}) {
            worst = std::max(worst, std::abs(got - ref) / ref);
        }
    }
    const bool zero_ok = kernel::g_lambda(0.0, prm) == 0.0 && kernel::g_lambda_quadrature(0.0, 2.0, lambda) == 0.0;
    double worst_power = 0.0;
    for (double p : {1.5, 2.0, 3.0, 4.5}) {
        const kernel::Params pz = kernel::Params::make(2, p, 0.0, 0.0);
        for (double t : {1e-6, 1e-3, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
            const double ref = 2.0 / p * std::pow(t, p / 2.0);
            for (double got : {kernel::g_lambda(t, pz), kernel::g_lambda_quadrature(t, p, 0.0)}) {
                worst_power = std::max(worst_power, std::abs(got - ref) / ref);
            }
        }
    }
    const bool pass = zero_ok && worst <= kClosedFormRelTol && worst_power <= kPowerLawRelTol;
    report(3, pass, "G_lambda against closed forms",
           fmt("p=2 lambda=1 on (0,10] max rel error %.3g", worst) + fmt(" (limit %.0e)", kClosedFormRelTol) +
               fmt(", lambda=0 power law max rel error %.3g", worst_power) +
               fmt(" (limit %.0e)", kPowerLawRelTol) + (zero_ok ? "" : ", nonzero at t=0"));
}

void lipschitz_exactness()
{
    const grid::GridSpec g = grid::GridSpec::make(1.0, 64);
    const grid::ScalarField f0 = grid::ScalarField::sample(g, [](double, double) { return 0.0; });
    double worst = 0.0;
    int cases = 0;
    for (double p : {1.5, 2.0, 3.0, 4.5}) {
        for (double lambda : {0.5, 1.0, 2.0}) {
            const kernel::Params prm = kernel::Params::make(2, p, lambda, 0.0);
            const double c = lambda / std::sqrt(2.0);
            const std::vector<std::function<double(double, double)>> fields{
                [=](double x, double) { return lambda * x; },
                [=](double x, double y) { return c * (x - y) + 0.3; },
                [=](double x, double y) { return 0.5 * lambda * (0.6 * x + 0.8 * y); },
                [=](double x, double y) { return 0.5 * lambda * (std::sin(x) + std::sin(y)); },
                [=](double x, double y) { return 0.5 * lambda * std::sqrt(1.0 + x * x + y * y); },
            };
            for (const auto& fn : fields) {
                const grid::ScalarField u = grid::ScalarField::sample(g, fn);
                worst = std::max(worst, solver::residual(u, f0, prm));
                ++cases;
            }
            const solver::SolveReport s = solver::solve(grid::ScalarField::sample(g, fields[0]), f0, prm);
            worst = std::max(worst, s.final_residual());
            ++cases;
        }
    }
    report(4, worst <= kLipschitzResidualTol, "lambda-Lipschitz data with f = 0 and eps = 0",
           std::to_string(cases) + " cases, max residual " + fmt("%.3g", worst) +
               fmt(" (limit %.0e)", kLipschitzResidualTol));
}

void manufactured()
{
    const harness::ExperimentConfig cfg = config("manufactured");
    const auto t0 = std::chrono::steady_clock::now();
    const harness::ExperimentReport rep = harness::run_manufactured(cfg);
    const double secs = seconds_since(t0);
    const auto& r = rep.fitted["rate"];
    const double rate = r.is_number() ? r.get<double>() : std::numeric_limits<double>::quiet_NaN();
    const bool pass = r.is_number() && rate >= kManufacturedRate && secs < kManufacturedSeconds;
    report(5, pass, "manufactured solution convergence",
           fmt("rate %.4f", rate) + fmt(" (min %.1f)", kManufacturedRate) + fmt(", %.1f s", secs) +
               fmt(" (limit %.0f s)", kManufacturedSeconds));
}

void energy_and_comparison()
{
    const harness::ExperimentConfig cfg = config("default");
    const std::vector<harness::SweepRow> sweep = harness::run_eps_sweep(cfg, cfg.cells);
    guarded(6, "uniform energy bound", [&] {
        const harness::ExperimentReport rep = harness::run_energy_sweep(cfg, sweep);
        const auto& u = rep.fitted["uniformity_ratio"];
        const double ratio = u.is_number() ? u.get<double>() : std::numeric_limits<double>::infinity();
        report(6, ratio <= kUniformity, "uniform energy bound",
               fmt("max/min of energy-to-bracket ratio %.4f", ratio) + fmt(" (limit %.2f)", kUniformity));
    });
    guarded(7, "comparison estimate slope", [&] {
        const harness::ExperimentReport rep = harness::run_comparison(cfg, sweep);
        const auto& s = rep.fitted["slope"];
        const double slope = s.is_number() ? s.get<double>() : std::numeric_limits<double>::quiet_NaN();
        const bool pass = s.is_number() && slope >= kSlopeLow && slope <= kSlopeHigh;
        report(7, pass, "comparison estimate slope",
               fmt("log-log slope %.4f", slope) + fmt(" (range [%.1f,", kSlopeLow) + fmt(" %.1f])", kSlopeHigh));
    });
}

void sobolev()
{
    std::string detail;
    bool pass = true;
    for (const char* name : {"default", "subquadratic"}) {
        const harness::ExperimentConfig cfg = config(name);
        const harness::ExperimentReport rep = harness::run_sobolev_estimate(cfg);
        bool finite = true;
        for (std::size_t row = 0; row < rep.table.rows().size(); ++row) {
            finite = finite && std::isfinite(rep.table.number(row, "quotient"));
        }
        const double d = rep.fitted["quotient_drift"].get<double>();
        pass = pass && finite && d <= kQuotientDrift;
        detail += std::string(detail.empty() ? "" : "; ") + name + fmt(" (p=%g)", cfg.p) +
                  fmt(" quotient drift %.4f", d) +
                  fmt(", ratio drift %.4f", rep.fitted["ratio_drift"].get<double>()) +
                  fmt(", refinement drift %.4f", rep.fitted["refinement_drift"].get<double>()) +
                  (finite ? "" : ", non-finite values");
    }
    report(8, pass, "difference-quotient estimate", detail + fmt(" (limit %.2f)", kQuotientDrift));
}

void besov_vs_gagliardo()
{
    const grid::GridSpec g = grid::GridSpec::make(1.0, 32);
    const double diameter = 2.0 * std::sqrt(2.0);
    const std::vector<std::function<double(double, double)>> fields{
        [](double x, double) { return x; },
        [](double x, double y) { return std::exp(-2.0 * (x * x + y * y)); },
        [](double x, double y) { return std::sin(3.0 * x) * std::cos(2.0 * y); },
    };
    double worst = 0.0;
    bool constants_zero = true;
    const auto constant = seminorms::SampledField::from_nodes(
        grid::ScalarField::sample(g, [](double, double) { return 1.7; }));
    for (double s : {0.25, 0.5, 0.75}) {
        for (double q : {2.0, 3.0}) {
            for (const auto& fn : fields) {
                const auto v = seminorms::SampledField::from_nodes(grid::ScalarField::sample(g, fn));
                const double b = seminorms::besov_seminorm(v, s, q, q, diameter).value;
                const double w = seminorms::gagliardo_seminorm(v, s, q);
                worst = std::max(worst, std::abs(b / w - 1.0));
            }
            constants_zero = constants_zero && seminorms::besov_seminorm(constant, s, q, q, diameter).value == 0.0 &&
                             seminorms::gagliardo_seminorm(constant, s, q) == 0.0;
        }
    }
    report(9, worst <= kBesovGagliardoRelTol && constants_zero, "Besov against Gagliardo on a 32x32 grid",
           fmt("max rel difference %.3g", worst) + fmt(" (limit %.2f)", kBesovGagliardoRelTol) +
               (constants_zero ? ", constants give exactly 0" : ", constants nonzero"));
}

std::string slurp(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(const fs::path& out)
{
    harness::ExperimentConfig cfg = config("default");
    std::vector<fs::path> dirs{out / "run_a", out / "run_b"};
    for (const auto& d : dirs) {
        fs::remove_all(d);
        harness::write_report(harness::run_energy_sweep(cfg), cfg, d.string());
    }
    bool same = true;
    int files = 0;
    for (const char* name : {"energy_sweep.csv", "energy_sweep_long.csv"}) {
        const std::string a = slurp(dirs[0] / name);
        const std::string b = slurp(dirs[1] / name);
        same = same && !a.empty() && a == b;
        ++files;
    }
    report(10, same, "deterministic output",
           std::to_string(files) + " CSV files from two energy sweep runs " +
               (same ? "are byte-identical" : "differ or are missing"));
}

} // namespace

int main(int argc, char** argv)
{
    const fs::path out = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
    fs::create_directories(out);
    guarded(1, "pointwise inequality suite", lemma_suite);
    guarded(2, "finite-difference gradient and Hessian consistency", gradient_consistency);
    guarded(3, "G_lambda against closed forms", g_lambda_closed_forms);
    guarded(4, "lambda-Lipschitz data with f = 0 and eps = 0", lipschitz_exactness);
    guarded(5, "manufactured solution convergence", manufactured);
    energy_and_comparison();
    guarded(8, "difference-quotient estimate", sobolev);
    guarded(9, "Besov against Gagliardo on a 32x32 grid", besov_vs_gagliardo);
    guarded(10, "deterministic output", [&] { determinism(out); });
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
