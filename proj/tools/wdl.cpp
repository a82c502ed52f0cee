// Command-line front end for the experiment harness.

#include "wdl/errors.hpp"
#include "wdl/harness/config.hpp"
#include "wdl/harness/experiments.hpp"
#include "wdl/harness/lemma_suite.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace wdl::harness;

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<int> threads;
};

ExperimentConfig resolve_config(const GlobalOptions& g)
{
    ExperimentConfig cfg = g.config.empty() ? ExperimentConfig{} : load_config(g.config);
    if (g.seed) {
        cfg.seed = *g.seed;
    }
    if (g.out) {
        cfg.output = *g.out;
    }
    if (g.threads) {
        cfg.threads = *g.threads;
    }
    cfg.validate();
    return cfg;
}

int finish(const ExperimentReport& rep, const ExperimentConfig& cfg, double seconds)
{
    write_report(rep, cfg, cfg.output);
    for (const auto& a : rep.assertions) {
        std::cout << (a.passed ? "PASS " : "FAIL ") << rep.experiment << ": " << a.name << " (value "
                  << format_real(a.value) << ", threshold " << format_real(a.threshold) << ")";
        if (!a.detail.empty()) {
            std::cout << " [" << a.detail << "]";
        }
        std::cout << '\n';
    }
    std::cout << rep.experiment << ": " << rep.fitted.dump() << '\n';
    std::cerr << rep.experiment << " finished in " << seconds << " s; outputs in " << cfg.output << '\n';
    return rep.passed() ? 0 : 1;
}

template <typename Fn>
int timed(const ExperimentConfig& cfg, Fn fn)
{
    const auto t0 = std::chrono::steady_clock::now();
    const ExperimentReport rep = fn(cfg);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return finish(rep, cfg, dt);
}

int run_lemmas(const GlobalOptions& g, long long samples)
{
    LemmaSuiteOptions opt;
    opt.samples = samples;
    if (g.seed) {
        opt.seed = *g.seed;
    }
    if (g.threads) {
        opt.threads = *g.threads;
    }
    const std::string out = g.out.value_or("out");
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = run_lemma_suite(opt);
    const auto grad = run_gradient_consistency(opt.seed, 10000);
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::filesystem::create_directories(out);
    const auto base = std::filesystem::path(out);
    rep.cells.write_csv((base / "lemmas.csv").string());
    rep.cells.long_format("lemmas", {"p", "lambda", "eps", "check"}).write_csv((base / "lemmas_long.csv").string());
    nlohmann::json j = rep.to_json();
    j["gradient_consistency"] = grad.to_json();
    std::ofstream((base / "lemmas.json").string(), std::ios::binary) << j.dump(2) << '\n';

    bool ok = rep.passed();
    for (const auto& c : rep.checks) {
        std::cout << (c.passed() ? "PASS " : "FAIL ") << c.name << ": " << c.violations << " violations in "
                  << c.checked << " checks, worst excess " << format_real(c.worst_excess) << '\n';
        if (!c.first_violation.is_null()) {
            std::cout << "  first violation " << c.first_violation.dump() << '\n';
        }
    }
    const bool grad_ok = grad.max_gradient_error <= 1e-5 && grad.max_hessian_error <= 1e-5;
    std::cout << (grad_ok ? "PASS " : "FAIL ") << "gradient consistency: max errors "
              << format_real(grad.max_gradient_error) << " / " << format_real(grad.max_hessian_error) << '\n';
    std::cerr << "lemmas finished in " << dt << " s; outputs in " << out << '\n';
    return ok && grad_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Experiments for the widely degenerate p-Laplace type equation"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    std::uint64_t seed = 0;
    std::string out;
    int threads = 0;
    app.add_option("--config", g.config, "JSON experiment configuration")->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    auto* out_opt = app.add_option("--out", out, "output directory");
    auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    long long samples = 100000;
    auto* lemmas = app.add_subcommand("lemmas", "sample the pointwise inequality suite");
    lemmas->add_option("--samples", samples, "samples per (p, lambda, eps) cell")->check(CLI::PositiveNumber);
    std::string fields;
    auto* solve = app.add_subcommand("solve", "solve at every eps of the configuration");
    solve->add_option("--fields", fields, "directory for the solution fields (CSV)");
    auto* sweep = app.add_subcommand("sweep-eps", "uniform energy estimate over the eps list");
    auto* compare = app.add_subcommand("compare", "comparison estimate against the smallest eps");
    auto* sobolev = app.add_subcommand("sobolev", "difference quotients of V_lambda(Du) against the bracket");
    auto* integrability = app.add_subcommand("integrability", "L^q norm of Du across refinements");
    auto* manufactured = app.add_subcommand("manufactured", "convergence against a known solution");
    CLI11_PARSE(app, argc, argv);
    if (*seed_opt) {
        g.seed = seed;
    }
    if (*out_opt) {
        g.out = out;
    }
    if (*threads_opt) {
        g.threads = threads;
    }

    try {
        if (lemmas->parsed()) {
            return run_lemmas(g, samples);
        }
        const ExperimentConfig cfg = resolve_config(g);
        if (solve->parsed()) {
            std::optional<std::string> dir;
            if (!fields.empty()) {
                dir = fields;
            }
            return timed(cfg, [&](const ExperimentConfig& c) { return run_solve(c, dir); });
        }
        if (sweep->parsed()) {
            return timed(cfg, [](const ExperimentConfig& c) { return run_energy_sweep(c); });
        }
        if (compare->parsed()) {
            return timed(cfg, [](const ExperimentConfig& c) { return run_comparison(c); });
        }
        if (sobolev->parsed()) {
            return timed(cfg, [](const ExperimentConfig& c) { return run_sobolev_estimate(c); });
        }
        if (integrability->parsed()) {
            return timed(cfg, [](const ExperimentConfig& c) { return run_higher_integrability(c); });
        }
        if (manufactured->parsed()) {
            return timed(cfg, [](const ExperimentConfig& c) { return run_manufactured(c); });
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 2;
}
