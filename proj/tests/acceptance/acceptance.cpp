// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.
// argv[1] (optional) is the CLI binary, used by the determinism criterion.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "../helpers.hpp"
#include "../oracles.hpp"
#include "stfde/forward.hpp"
#include "stfde/inverse.hpp"
#include "stfde/mlf.hpp"
#include "stfde/quadrature.hpp"

using namespace stfde;
using helpers::scenario;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, double measured, double tol, double secs) {
    std::printf("[%s] criterion %2d: %-34s measured=%.4e tol=%.4e (%.1fs)\n",
                pass ? "PASS" : "FAIL", id, name, measured, tol, secs);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double secs() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

double rel_l2_coeffs(const std::vector<double>& got, const std::vector<double>& truth) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double t = i < truth.size() ? truth[i] : 0.0;
        num += (got[i] - t) * (got[i] - t);
        den += t * t;
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---- 1: Mittag-Leffler correctness -------------------------------------
void criterion_1() {
    Timer tm;
    double worst_exp = 0.0, worst_cos = 0.0, worst_erfc = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double x = 50.0 * i / 999;
        worst_exp = std::max(worst_exp, std::abs(mlf::eval_ml({1, 1}, x) - std::exp(-x)));
        worst_cos =
            std::max(worst_cos, std::abs(mlf::eval_ml({2, 1}, x) - std::cos(std::sqrt(x))));
    }
    for (int i = 0; i <= 250; ++i) {
        const double x = 5.0 * i / 250;
        worst_erfc = std::max(
            worst_erfc, std::abs(mlf::eval_ml({0.5, 1}, x) - oracles::ml_reference(0.5, 1.0, x)));
    }
    const double secs = tm.secs();
    const bool pass = worst_exp <= 1e-10 && worst_cos <= 1e-8 && worst_erfc <= 1e-8 && secs <= 5.0;
    report(1, "mittag-leffler correctness", pass,
           std::max({worst_exp, worst_cos * 1e-2, worst_erfc * 1e-2}), 1e-10, secs);
}

// ---- 2: integral identity + derivative ----------------------------------
void criterion_2() {
    Timer tm;
    double worst_id = 0.0;
    for (double a : {0.6, 1.1, 1.7})
        for (double b : {0.5, 1.0, 2.2})
            for (double t : {0.4, 1.0, 2.0}) {
                const auto c = mlf::ml_integral_identity_check(a, b, -5.0, t);
                worst_id = std::max(worst_id, std::abs(c.lhs - c.rhs) / (1.0 + std::abs(c.rhs)));
            }
    double worst_d = 0.0;
    std::mt19937_64 rng(20240809);
    std::uniform_real_distribution<double> ua(0.3, 1.9), ul(0.5, 5.0), ut(0.2, 3.0);
    for (int i = 0; i < 20; ++i) {
        const double a = ua(rng), lam = ul(rng), t = ut(rng);
        const double d = mlf::ml_derivative(a, lam, t);
        const double fd = oracles::fd_derivative(
            [&](double s) { return mlf::eval_ml({a, 1.0}, lam * std::pow(s, a)); }, t,
            2e-4 * std::max(1.0, t));
        worst_d = std::max(worst_d, std::abs(d - fd) / std::max(1e-12, std::abs(d)));
    }
    const double secs = tm.secs();
    const bool pass = worst_id <= 1e-6 && worst_d <= 1e-5 && secs <= 10.0;
    report(2, "lemma 2.4 identity + lemma 2.5", pass, std::max(worst_id, worst_d * 0.1), 1e-6,
           secs);
}

// ---- 3: complete monotonicity -------------------------------------------
void criterion_3() {
    Timer tm;
    long violations = 0;
    const double pairs[3][2] = {{0.4, 0.4}, {0.6, 1.0}, {0.9, 1.5}};
    for (const auto& p : pairs) {
        const int n = 5001;
        std::vector<double> d(n);
        for (int i = 0; i < n; ++i) d[i] = mlf::eval_ml({p[0], p[1]}, i * 0.01);
        for (int ord = 0; ord <= 3; ++ord) {
            const double sgn = (ord % 2 == 0) ? 1.0 : -1.0;
            for (double v : d)
                if (sgn * v < 0.0) ++violations;
            for (int i = 0; i + 1 < (int)d.size(); ++i) d[i] = d[i + 1] - d[i];
            d.pop_back();
        }
    }
    report(3, "complete monotonicity", violations == 0, (double)violations, 0.0, tm.secs());
}

// ---- 4: Ito isometry ------------------------------------------------------
void criterion_4() {
    Timer tm;
    const double alpha = 0.7, delta = 0.2;
    const auto eig = spectral::laplace_1d(1, 64);
    const double lam = eig.lambda(1);
    const fracops::TimeGrid g(1.0, 512);
    const auto mk = forward::build_mode_kernel(alpha, delta, lam, g);
    const int M = 100000;
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    for (int p = 0; p < M; ++p) {
        const auto incs = fracops::BrownianIncrements::generate(g, 8888, (std::uint64_t)p);
        double v = 0.0;
        for (int k = 0; k < g.n_steps; ++k) v += mk.kbar[g.n_steps - k] * incs.db[k];
        sum += v;
        sum2 += v * v;
        sum4 += v * v * v * v;
    }
    const double m2 = sum2 / M;
    const double se_m2 = std::sqrt((sum4 / M - m2 * m2) / M);
    const double mean = sum / M;
    const double se_mean = std::sqrt(m2 / M);
    const double mu = alpha + delta;
    const auto q = quad::integrate_power_weighted(
        [&](double tau) {
            const double ml = mlf::eval_ml({alpha, mu}, lam * std::pow(tau, alpha));
            return ml * ml;
        },
        2.0 * mu - 2.0, 1.0, 1e-14, 1e-11);
    const double secs = tm.secs();
    const bool pass = q.converged && std::abs(m2 - q.value) <= 3.0 * se_m2 &&
                      std::abs(mean) <= 3.0 * se_mean && secs <= 60.0;
    report(4, "ito isometry, M=1e5", pass, std::abs(m2 - q.value), 3.0 * se_m2, secs);
}

// ---- 5: oracle equivalence ------------------------------------------------
void criterion_5() {
    Timer tm;
    double worst = 0.0;
    for (double alpha : {0.4, 0.8, 1.5}) {
        auto s = scenario(alpha, alpha < 0.5 ? 0.2 : 0.0, 1.0, 1000, 8);
        s.u0_coeffs = {1.0, -0.6, 0.4, -0.25, 0.15, -0.1, 0.06, -0.03};
        const auto e = alpha < 1.0 ? forward::solve_initial_subdiffusion(s)
                                   : forward::solve_initial_wave(s);
        const auto ref = forward::reference_timestep(s);
        const int sz = s.time_grid.size();
        for (int n = 0; n < 8; ++n) {
            std::vector<double> a(sz), b(sz);
            for (int k = 0; k < sz; ++k) {
                a[k] = e.value(0, n, k);
                b[k] = ref[(std::size_t)n * sz + k];
            }
            worst = std::max(worst, oracles::rel_l2(b, a));
        }
    }
    report(5, "oracle equivalence (eq 1.5 vs ode)", worst <= 1e-3, worst, 1e-3, tm.secs());
}

// ---- 6: weak-solution residual --------------------------------------------
void criterion_6() {
    Timer tm;
    // deterministic part
    auto sd = scenario(0.6, 0.2, 1.0, 1000, 4);
    sd.u0_coeffs = {1.0, -0.5, 0.25, -0.1};
    const auto ed = forward::solve_initial_subdiffusion(sd);
    const auto rd = forward::weak_residual(ed, sd);
    double worst_det = 0.0;
    for (int n = 0; n < 4; ++n) {
        fracops::GridFunction v(ed.grid);
        for (int k = 0; k < ed.grid.size(); ++k) v.values[k] = ed.value(0, n, k);
        if (v.l2_norm() > 0.0) worst_det = std::max(worst_det, rd[n] / v.l2_norm());
    }
    // stochastic refinement
    double res_coarse = 0.0, res_fine = 0.0;
    for (int level = 0; level < 2; ++level) {
        auto s = scenario(0.7, 0.2, 1.0, level == 0 ? 128 : 256, 2, 1000, 606);
        s.f2_coeffs = {1.0, -0.5};
        const auto e = forward::solve_source(s, 2);
        const auto res = forward::weak_residual(e, s);
        const double mean_res = 0.5 * (res[0] + res[1]);
        (level == 0 ? res_coarse : res_fine) = mean_res;
    }
    const double factor = res_coarse / res_fine;
    const bool pass = worst_det <= 1e-3 && factor >= 1.5;
    report(6, "weak residual (det + refinement)", pass, worst_det, 1e-3, tm.secs());
    std::printf("       refinement factor %.2f (needs >= 1.5)\n", factor);
}

// ---- 7: decay exponent ------------------------------------------------------
void criterion_7() {
    Timer tm;
    double worst = 0.0;
    for (double alpha : {0.3, 0.6, 0.9}) {
        auto s = scenario(alpha, 0.3, 1000.0, 4000, 1);
        s.u0_coeffs = {1.0};
        const auto e = forward::solve_initial_subdiffusion(s);
        std::vector<double> lam = {s.eig->lambda(1)};
        const auto st = forward::ensemble_stats(e, lam);
        const double slope = forward::decay_exponent(st, lam, 10.0, 1000.0);
        worst = std::max(worst, std::abs(slope + alpha));
    }
    report(7, "long-time decay exponent", worst <= 0.05, worst, 0.05, tm.secs());
}

// ---- 8: regularity scaling ---------------------------------------------------
void criterion_8() {
    Timer tm;
    double worst_growth = 0.0;
    for (double alpha : {0.4, 0.8}) {
        double prev = 1e300;
        for (double T : {1.0, 4.0, 16.0, 64.0}) {
            auto s = scenario(alpha, 0.2, T, 16384, 1);
            s.u0_coeffs = {1.0};
            const auto e = forward::solve_initial_subdiffusion(s);
            std::vector<double> lam = {s.eig->lambda(1)};
            const auto st = forward::ensemble_stats(e, lam);
            const double ratio = st.l2_d_t_omega / std::pow(T, (1.0 - alpha) / 2.0);
            if (prev < 1e299) worst_growth = std::max(worst_growth, ratio / prev - 1.0);
            prev = ratio;
        }
    }
    report(8, "regularity scaling T^((1-a)/2)", worst_growth <= 0.10, worst_growth, 0.10,
           tm.secs());
}

// ---- 9: Duhamel consistency ---------------------------------------------------
void criterion_9() {
    Timer tm;
    const double alpha = 0.9, delta = 0.3;
    auto s = scenario(alpha, delta, 1.0, 1000, 3);
    s.f1_coeffs = {1.0, 0.4, -0.3};
    for (int k = 0; k < s.time_grid.size(); ++k)
        s.g1.values[k] = 1.0 + 0.5 * s.time_grid.node(k);
    const double x0 = 1.0;
    const auto path = forward::solve_source_path(s, 0);
    const int sz = s.time_grid.size();
    std::vector<double> direct(sz, 0.0);
    for (int n = 0; n < 3; ++n)
        for (int k = 0; k < sz; ++k)
            direct[k] += path[(std::size_t)n * sz + k] * s.eig->dphi_trace(n + 1, x0);
    fracops::GridFunction w(s.time_grid);
    for (int n = 0; n < 3; ++n) {
        const auto v = forward::subdiffusion_mode(
            alpha, s.eig->lambda(n + 1), s.f1_coeffs[n] * s.eig->dphi_trace(n + 1, x0),
            s.time_grid);
        for (int k = 0; k < sz; ++k) w.values[k] += v[k];
    }
    const auto iw = fracops::rl_integral(w, alpha + delta - 1.0);
    const auto duh = oracles::convolve(s.g1.values, iw.values, s.time_grid.h());
    const double err = oracles::rel_l2(duh, direct);
    report(9, "duhamel consistency (eq 5.4)", err <= 1e-3, err, 1e-3, tm.secs());
}

// ---- 10: inverse recovery -------------------------------------------------------
void criterion_10() {
    Timer tm;
    const std::vector<double> truth_f1 = {1.0, 0.0, 0.0, 0.0};
    const std::vector<double> truth_f2 = {0.0, 1.0, 0.0, 0.0};
    auto make = [&](int steps, int paths, std::uint64_t seed) {
        auto s = scenario(0.7, 0.2, 1.0, steps, 6, paths, seed);
        s.f1_coeffs = {1.0, 0, 0, 0, 0, 0};
        s.f2_coeffs = {0, 1.0, 0, 0, 0, 0};
        for (int k = 0; k < s.time_grid.size(); ++k)
            s.g1.values[k] = 1.0 + 0.5 * s.time_grid.node(k);
        return s;
    };
    inverse::RecoveryOptions opt;
    opt.n_rec = 4;

    // noiseless semi-analytic
    auto s = make(1024, 1, 0);
    const auto clean = inverse::simulate_moments(s, {0.0, 1.0}, inverse::MomentMode::semi_analytic);
    const auto r0 = inverse::recover_sources(clean, s, opt);
    const double err_f1 = rel_l2_coeffs(r0.f1_coeffs, truth_f1);
    const double err_f2 = rel_l2_coeffs(r0.f2_coeffs, truth_f2);

    // Monte Carlo trend
    double errs[3] = {0, 0, 0};
    int idx = 0;
    for (int paths : {1000, 10000, 100000}) {
        auto sm = make(512, paths, 13371337);
        const auto mm = inverse::simulate_moments(sm, {0.0, 1.0}, inverse::MomentMode::mc, 2);
        const auto rm = inverse::recover_sources(mm, sm, opt);
        errs[idx++] = 0.5 * (rel_l2_coeffs(rm.f1_coeffs, truth_f1) +
                             rel_l2_coeffs(rm.f2_coeffs, truth_f2));
    }

    // zero data
    inverse::MomentData zero;
    zero.boundary_points = {0.0, 1.0};
    zero.grid = s.time_grid;
    zero.mean_flux.assign(2, std::vector<double>(s.time_grid.size(), 0.0));
    zero.var_flux.assign(2, std::vector<double>(s.time_grid.size(), 0.0));
    zero.provenance = "semi-analytic";
    const auto rz = inverse::recover_sources(zero, s, opt);
    double zn = 0.0;
    for (double c : rz.f1_coeffs) zn += c * c;
    for (double c : rz.f2_coeffs) zn += c * c;
    zn = std::sqrt(zn);

    const double secs = tm.secs();
    const bool pass = err_f1 <= 0.05 && err_f2 <= 0.05 && errs[2] <= 0.25 && errs[0] >= errs[1] &&
                      errs[1] >= errs[2] && zn <= 1e-10 && secs <= 300.0;
    report(10, "inverse source recovery", pass, std::max(err_f1, err_f2), 0.05, secs);
    std::printf("       mc errors M=1e3,1e4,1e5: %.3f %.3f %.3f ; zero-data norm %.2e\n", errs[0],
                errs[1], errs[2], zn);
}

// ---- 11: determinism via the CLI ------------------------------------------------
void criterion_11(const char* cli) {
    Timer tm;
    namespace fs = std::filesystem;
    if (!cli) {
        report(11, "determinism (cli byte-identical)", false, 1.0, 0.0, tm.secs());
        std::printf("       cli binary path not supplied\n");
        return;
    }
    const fs::path dir = fs::temp_directory_path() / "stfde_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path scen = dir / "scenario.txt";
    {
        std::ofstream f(scen);
        f << "alpha = 0.7\ndelta = 0.2\nT = 1.0\nsteps = 128\nmodes = 3\npaths = 64\n"
          << "seed = 2718\nf2 = [1.0, -0.5, 0.25]\ng2 = \"1 + t/4\"\n";
    }
    auto run = [&](const std::string& out, int workers) {
        std::ostringstream cmd;
        cmd << cli << " forward --scenario " << scen << " --out " << (dir / out) << " --workers "
            << workers << " >/dev/null 2>&1";
        return std::system(cmd.str().c_str());
    };
    bool pass = run("a", 1) == 0 && run("b", 2) == 0;
    if (pass) {
        auto slurp = [](const fs::path& p) {
            std::ifstream f(p, std::ios::binary);
            std::ostringstream ss;
            ss << f.rdbuf();
            return ss.str();
        };
        const std::string a = slurp(dir / "a" / "summary.csv");
        const std::string b = slurp(dir / "b" / "summary.csv");
        pass = !a.empty() && a == b;
    }
    fs::remove_all(dir);
    report(11, "determinism (cli byte-identical)", pass, pass ? 0.0 : 1.0, 0.0, tm.secs());
}

} // namespace

int main(int argc, char** argv) {
    std::printf("stfde acceptance suite\n");
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11(argc > 1 ? argv[1] : nullptr);
    std::printf("%d criterion(s) failed\n", g_failures);
    return g_failures == 0 ? 0 : 1;
}
