#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "stfde/config.hpp"
#include "stfde/inverse.hpp"
#include "stfde/mlf.hpp"
#include "stfde/verify.hpp"

namespace fs = std::filesystem;
using namespace stfde;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericalFailure = 3;

int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : (int)hw;
}

// Staged output: everything lands in a temp dir next to the target and is
// renamed into place only after the run finishes.
class OutputDir {
public:
    explicit OutputDir(const std::string& target) : target_(target) {
        if (target_.empty()) throw domain_error("output directory not set (--out)");
        if (fs::exists(target_)) throw domain_error("output directory already exists: " + target_);
        tmp_ = target_ + ".partial-" + std::to_string(::getpid());
        fs::create_directories(tmp_);
    }
    ~OutputDir() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(tmp_, ec);
        }
    }
    std::string path(const std::string& name) const { return (fs::path(tmp_) / name).string(); }
    void commit() {
        fs::rename(tmp_, target_);
        committed_ = true;
    }

private:
    std::string target_, tmp_;
    bool committed_ = false;
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw numerical_error("cannot open " + path);
    f << text;
}

int run_forward(const config::RunConfig& rc) {
    auto sc = config::ScenarioConfig::load(rc.scenario_path);
    rc.apply_overrides(sc);
    const forward::Scenario s = sc.build();
    const int workers = resolve_workers(rc.workers);

    const char* regime_time = s.wave() ? "wave" : "subdiffusion";
    const bool stochastic = s.has_stochastic_source();

    forward::FieldEnsemble e;
    if (s.has_initial()) {
        if (s.has_deterministic_source() || stochastic)
            throw domain_error("scenario mixes initial data with a source; pick one regime");
        e = s.wave() ? forward::solve_initial_wave(s) : forward::solve_initial_subdiffusion(s);
    } else {
        e = forward::solve_source(s, workers);
    }
    std::vector<double> lambdas(s.n_modes());
    for (int n = 1; n <= s.n_modes(); ++n) lambdas[n - 1] = s.eig->lambda(n);
    const auto st = forward::ensemble_stats(e, lambdas);

    OutputDir out(rc.out_dir);
    {
        std::ostringstream csv;
        forward::write_summary_csv(csv, st);
        write_text(out.path("summary.csv"), csv.str());
    }
    {
        std::ostringstream norms;
        norms << "name,value\n";
        norms << "sup_t_l2," << st.sup_t_l2 << "\n";
        norms << "l2_d_t_omega," << st.l2_d_t_omega << "\n";
        norms << "l2_h2gamma_0.5," << st.l2_h2gamma << "\n";
        if (s.T >= 20.0) {
            try {
                norms << "decay_exponent,"
                      << forward::decay_exponent(st, lambdas, 10.0, std::min(s.T, 1000.0)) << "\n";
            } catch (const std::exception&) {
            }
        }
        write_text(out.path("norms.csv"), norms.str());
    }
    if (rc.dump_paths) forward::write_ensemble_binary(out.path("ensemble.bin"), e);
    out.commit();

    std::printf("regime: %s, %s; modes=%d steps=%d paths=%d seed=%llu\n", regime_time,
                stochastic ? "stochastic" : "deterministic", s.n_modes(), s.time_grid.n_steps,
                e.n_paths(), (unsigned long long)s.seed);
    return kExitOk;
}

int run_inverse(const config::RunConfig& rc) {
    auto sc = config::ScenarioConfig::load(rc.scenario_path);
    rc.apply_overrides(sc);
    const forward::Scenario s = sc.build();
    const int workers = resolve_workers(rc.workers);

    inverse::MomentData moments;
    if (rc.simulate_moments) {
        const auto mode = rc.moment_mode == "mc" ? inverse::MomentMode::mc
                                                 : inverse::MomentMode::semi_analytic;
        moments = inverse::simulate_moments(s, sc.gamma_pts, mode, workers);
    } else {
        if (rc.moments_path.empty())
            throw domain_error("inverse needs --moments <csv> or --simulate-moments");
        moments = inverse::read_moments_csv(rc.moments_path);
    }

    // the scenario's own f1/f2 play no role in recovery; they seed simulation only
    inverse::RecoveryOptions opt;
    opt.n_rec = rc.n_rec;
    opt.reg = rc.reg;
    opt.truncated_svd = rc.truncated_svd;
    opt.smoothing_window = rc.smoothing_window;
    const auto result = inverse::recover_sources(moments, s, opt);

    OutputDir out(rc.out_dir);
    write_text(out.path("recovery.json"), inverse::recovery_to_json(result));
    if (rc.simulate_moments) inverse::write_moments_csv(out.path("moments.csv"), moments);
    {
        std::ostringstream rep;
        rep << "source recovery report\n";
        rep << "  data: " << moments.provenance << ", boundary points:";
        for (double x : moments.boundary_points) rep << " " << x;
        rep << "\n  regularization: " << result.regularization << "\n";
        rep << "  f1 coefficients:";
        for (double c : result.f1_coeffs) rep << " " << c;
        rep << "\n  f2 coefficients:";
        for (double c : result.f2_coeffs) rep << " " << c;
        rep << "\n  f2 sign ambiguity: " << (result.f2_sign_ambiguous ? "yes" : "no") << "\n";
        rep << "  per-stage residuals:\n";
        for (const auto& r : result.residuals)
            rep << "    " << r.stage << ": " << r.value << "\n";
        write_text(out.path("report.txt"), rep.str());
    }
    out.commit();
    std::printf("recovery written to %s\n", rc.out_dir.c_str());
    return kExitOk;
}

int run_verify(const config::RunConfig& rc) {
    const auto results = verify::run_suite(rc.quick, resolve_workers(rc.workers));
    const std::string json = verify::to_json(results);
    if (!rc.out_dir.empty()) {
        OutputDir out(rc.out_dir);
        write_text(out.path("verify.json"), json);
        out.commit();
    }
    for (const auto& r : results)
        std::printf("%-34s %s  measured=%.3e tol=%.3e (%.2fs)\n", r.name.c_str(),
                    r.passed ? "PASS" : "FAIL", r.measured, r.tolerance, r.seconds);
    if (rc.out_dir.empty()) std::printf("%s\n", json.c_str());
    return verify::all_passed(results) ? kExitOk : kExitPropertyFailure;
}

int run_ml_table(const std::vector<double>& alphas, const std::vector<double>& betas,
                 const std::vector<double>& xs, const std::string& out_path) {
    std::ostringstream csv;
    csv << "alpha,beta,x,value\n";
    char line[160];
    for (double a : alphas)
        for (double b : betas)
            for (double x : xs) {
                std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", a, b, x,
                              mlf::eval_ml({a, b}, x));
                csv << line;
            }
    if (out_path.empty())
        std::fputs(csv.str().c_str(), stdout);
    else
        write_text(out_path, csv.str());
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic time-fractional diffusion-wave laboratory"};
    app.require_subcommand(1);

    config::RunConfig rc;
    std::vector<double> ml_alphas{1.0}, ml_betas{1.0}, ml_xs{0.0, 1.0, 10.0};
    std::string ml_out;

    auto add_common = [&](CLI::App* cmd, bool needs_scenario) {
        if (needs_scenario)
            cmd->add_option("--scenario", rc.scenario_path, "scenario file")->required();
        cmd->add_option("--out", rc.out_dir, "output directory (created by the run)");
        cmd->add_option("--seed", rc.seed, "override scenario seed");
        cmd->add_option("--paths", rc.paths, "override Monte Carlo path count");
        cmd->add_option("--steps", rc.steps, "override time steps");
        cmd->add_option("--modes", rc.modes, "override mode count");
        cmd->add_option("--workers", rc.workers, "worker threads (default: machine parallelism)");
    };

    CLI::App* fwd = app.add_subcommand("forward", "run a forward scenario");
    add_common(fwd, true);
    fwd->add_flag("--dump-paths", rc.dump_paths, "also write the binary path dump");

    CLI::App* inv = app.add_subcommand("inverse", "recover sources from flux moments");
    add_common(inv, true);
    inv->add_option("--moments", rc.moments_path, "moments CSV (x,t,mean,variance)");
    inv->add_flag("--simulate-moments", rc.simulate_moments, "synthesize moments from the scenario");
    inv->add_option("--moment-mode", rc.moment_mode, "semi | mc")
        ->check(CLI::IsMember({"semi", "mc"}));
    inv->add_option("--nrec", rc.n_rec, "modes to recover");
    inv->add_option("--reg", rc.reg, "Tikhonov parameter (default: 1e-6 sigma_max^2)");
    inv->add_flag("--svd", rc.truncated_svd, "truncated SVD instead of Tikhonov");
    inv->add_option("--window", rc.smoothing_window, "pre-smoothing window for MC moments");

    CLI::App* ver = app.add_subcommand("verify", "run the property suite");
    add_common(ver, false);
    ver->add_flag("--quick", rc.quick, "fast subset");

    CLI::App* mlt = app.add_subcommand("ml-table", "Mittag-Leffler regression table");
    mlt->group(""); // hidden
    mlt->add_option("--alpha", ml_alphas, "alpha values");
    mlt->add_option("--beta", ml_betas, "beta values");
    mlt->add_option("--x", ml_xs, "arguments (E_{a,b}(-x))");
    mlt->add_option("--out", ml_out, "output CSV path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (fwd->parsed()) {
            rc.subcommand = "forward";
            if (rc.out_dir.empty()) throw domain_error("forward requires --out");
            return run_forward(rc);
        }
        if (inv->parsed()) {
            rc.subcommand = "inverse";
            if (rc.out_dir.empty()) throw domain_error("inverse requires --out");
            return run_inverse(rc);
        }
        if (ver->parsed()) {
            rc.subcommand = "verify";
            return run_verify(rc);
        }
        if (mlt->parsed()) return run_ml_table(ml_alphas, ml_betas, ml_xs, ml_out);
    } catch (const domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumericalFailure;
    }
    return kExitConfigError;
}
