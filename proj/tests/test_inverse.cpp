#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "helpers.hpp"
#include "oracles.hpp"
#include "stfde/inverse.hpp"
#include "stfde/mlf.hpp"
#include "stfde/quadrature.hpp"

using namespace stfde;
using fracops::GridFunction;
using fracops::TimeGrid;
using helpers::scenario;

namespace {

double rel_l2_coeffs(const std::vector<double>& got, const std::vector<double>& truth) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double t = i < truth.size() ? truth[i] : 0.0;
        num += (got[i] - t) * (got[i] - t);
        den += t * t;
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

} // namespace

TEST_CASE("simulate_moments: zero sources give zero moments") {
    auto s = scenario(0.7, 0.2, 1.0, 64, 2);
    const auto m = inverse::simulate_moments(s, {0.0, 1.0}, inverse::MomentMode::semi_analytic);
    for (const auto& v : m.mean_flux)
        for (double x : v) CHECK(x == 0.0);
    for (const auto& v : m.var_flux)
        for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("simulate_moments: deterministic single-mode closed form") {
    auto s = scenario(0.7, 0.2, 1.0, 512, 2);
    s.f1_coeffs = {1.0, 0.0};
    const auto m = inverse::simulate_moments(s, {0.0}, inverse::MomentMode::semi_analytic);
    const double lam = s.eig->lambda(1);
    const double mu = s.alpha + s.delta;
    const double tr = s.eig->dphi_trace(1, 0.0);
    double worst = 0.0;
    for (int k = 1; k < m.grid.size(); ++k) {
        const double t = m.grid.node(k);
        const double ref =
            tr * std::pow(t, mu) * mlf::eval_ml({s.alpha, mu + 1.0}, lam * std::pow(t, s.alpha));
        worst = std::max(worst, std::abs(m.mean_flux[0][k] - ref));
    }
    CHECK(worst < 1e-4 * std::abs(tr));
    for (double v : m.var_flux[0]) CHECK(v == 0.0);
}

TEST_CASE("simulate_moments: stochastic variance against the quadrature oracle") {
    auto s = scenario(0.7, 0.2, 1.0, 1024, 2);
    s.f2_coeffs = {1.0, 0.0};
    const auto m = inverse::simulate_moments(s, {1.0}, inverse::MomentMode::semi_analytic);
    const double lam = s.eig->lambda(1);
    const double mu = s.alpha + s.delta;
    const double tr = s.eig->dphi_trace(1, 1.0);
    // Var(T) = tr^2 int_0^T tau^(2mu-2) E^2 dtau  (g2 = 1)
    const auto q = quad::integrate_power_weighted(
        [&](double tau) {
            const double ml = mlf::eval_ml({s.alpha, mu}, lam * std::pow(tau, s.alpha));
            return ml * ml;
        },
        2.0 * mu - 2.0, 1.0, 1e-13, 1e-10);
    REQUIRE(q.converged);
    const double ref = tr * tr * q.value;
    CHECK(std::abs(m.var_flux[0][m.grid.n_steps] - ref) / ref < 2e-3);
}

TEST_CASE("simulate_moments: MC agrees with semi-analytic within 3 standard errors") {
    auto s = scenario(0.7, 0.2, 1.0, 256, 2, 20000, 4242);
    s.f2_coeffs = {1.0, -0.5};
    const auto sa = inverse::simulate_moments(s, {1.0}, inverse::MomentMode::semi_analytic);
    const auto mc = inverse::simulate_moments(s, {1.0}, inverse::MomentMode::mc, 2);
    const int K = s.time_grid.n_steps;
    const double var = sa.var_flux[0][K];
    const double se_var = var * std::sqrt(2.0 / (s.n_paths - 1));
    CHECK(std::abs(mc.var_flux[0][K] - var) < 3.0 * se_var);
    const double se_mean = std::sqrt(var / s.n_paths);
    CHECK(std::abs(mc.mean_flux[0][K] - sa.mean_flux[0][K]) < 3.0 * se_mean);
}

TEST_CASE("deconvolve_volterra: g = 1 recovers m'") {
    const TimeGrid grid(1.0, 256);
    const auto m = GridFunction::sample(grid, [](double t) { return t * t; });
    const auto g = GridFunction::sample(grid, [](double) { return 1.0; });
    const auto h = inverse::deconvolve_volterra(m, g);
    double worst = 0.0;
    for (int k = 0; k < grid.size(); ++k)
        worst = std::max(worst, std::abs(h.values[k] - 2.0 * grid.node(k)));
    CHECK(worst < 1e-6);
}

TEST_CASE("deconvolve_volterra: exponential kernel, closed-form data") {
    // m(t) = int_0^t e^{-tau} sin(t - tau) dtau = (sin t - cos t + e^{-t}) / 2
    const TimeGrid grid(1.0, 1000);
    const auto m = GridFunction::sample(grid, [](double t) {
        return 0.5 * (std::sin(t) - std::cos(t) + std::exp(-t));
    });
    const auto g = GridFunction::sample(grid, [](double t) { return std::exp(-t); });
    const auto h = inverse::deconvolve_volterra(m, g);
    std::vector<double> truth(grid.size());
    for (int k = 0; k < grid.size(); ++k) truth[k] = std::sin(grid.node(k));
    CHECK(oracles::rel_l2(h.values, truth) < 1e-3);
}

TEST_CASE("deconvolve_volterra: zero data, Gronwall uniqueness") {
    const TimeGrid grid(1.0, 128);
    const GridFunction m(grid);
    const auto g = GridFunction::sample(grid, [](double t) { return 1.0 + t; });
    const auto h = inverse::deconvolve_volterra(m, g);
    for (double v : h.values) CHECK(v == 0.0);
}

TEST_CASE("deconvolve_volterra: rejects vanishing g(0)") {
    const TimeGrid grid(1.0, 64);
    const auto m = GridFunction::sample(grid, [](double t) { return t; });
    const auto g = GridFunction::sample(grid, [](double t) { return t; });
    CHECK_THROWS_AS(inverse::deconvolve_volterra(m, g), domain_error);
}

TEST_CASE("deconvolve_variance: g2 = 1 recovers v'") {
    const TimeGrid grid(1.0, 256);
    const auto v = GridFunction::sample(grid, [](double t) { return t * t * t; });
    const auto g2 = GridFunction::sample(grid, [](double) { return 1.0; });
    double clamp = 0.0;
    const auto q = inverse::deconvolve_variance(v, g2, &clamp);
    double worst = 0.0;
    for (int k = 0; k < grid.size(); ++k)
        worst = std::max(worst, std::abs(q.values[k] - 3.0 * grid.node(k) * grid.node(k)));
    CHECK(worst < 1e-5);
    CHECK(clamp < 1e-12);

    SUBCASE("zero variance gives zero q") {
        const GridFunction z(grid);
        const auto qz = inverse::deconvolve_variance(z, g2);
        for (double x : qz.values) CHECK(x == 0.0);
    }
}

TEST_CASE("deconvolve_variance: single-mode exact data reproduces the squared trace") {
    auto s = scenario(0.7, 0.2, 1.0, 1024, 1);
    s.f2_coeffs = {1.0};
    const auto m = inverse::simulate_moments(s, {0.0}, inverse::MomentMode::semi_analytic);
    const GridFunction var(m.grid, m.var_flux[0]);
    const auto q = inverse::deconvolve_variance(var, s.g2);
    const double lam = s.eig->lambda(1);
    const double mu = s.alpha + s.delta;
    const double tr = s.eig->dphi_trace(1, 0.0);
    double num = 0.0, den = 0.0;
    for (int k = 1; k < m.grid.size(); ++k) {
        const double t = m.grid.node(k);
        const double w =
            tr * std::pow(t, mu - 1.0) * mlf::eval_ml({s.alpha, mu}, lam * std::pow(t, s.alpha));
        const double ref = w * w;
        if (m.grid.node(k) < 0.05) continue; // singular corner excluded
        num += (q.values[k] - ref) * (q.values[k] - ref);
        den += ref * ref;
    }
    CHECK(std::sqrt(num / den) < 1e-2);
}

TEST_CASE("invert_fractional_smoothing: identity and round trips") {
    const TimeGrid grid(1.0, 1000);
    const auto w = GridFunction::sample(grid, [](double t) { return std::sin(3.0 * t); });

    SUBCASE("alpha + delta = 1 is the identity") {
        const auto out = inverse::invert_fractional_smoothing(w, 0.8, 0.2);
        for (int k = 0; k < grid.size(); ++k) CHECK(out.values[k] == w.values[k]);
    }
    SUBCASE("positive exponent: invert I^(alpha+delta-1)") {
        const auto h = fracops::rl_integral(w, 0.2);
        const auto back = inverse::invert_fractional_smoothing(h, 0.9, 0.3);
        double worst = 0.0;
        for (int k = 0; k < grid.size(); ++k) {
            if (grid.node(k) < 0.1) continue;
            worst = std::max(worst, std::abs(back.values[k] - w.values[k]));
        }
        CHECK(worst < 1e-2);
    }
    SUBCASE("negative exponent: apply I^(1-alpha-delta)") {
        const auto out = inverse::invert_fractional_smoothing(w, 0.7, 0.2);
        const auto ref = fracops::rl_integral(w, 0.1);
        for (int k = 0; k < grid.size(); ++k)
            CHECK(out.values[k] == doctest::Approx(ref.values[k]).epsilon(1e-12));
    }
    SUBCASE("zero input") {
        const GridFunction z(grid);
        const auto out = inverse::invert_fractional_smoothing(z, 0.9, 0.3);
        for (double v : out.values) CHECK(std::abs(v) < 1e-14);
    }
}

TEST_CASE("recover_modes: exact synthetic traces") {
    const auto eig = spectral::laplace_1d(4, 256);
    const TimeGrid grid(1.0, 256);
    const double alpha = 0.7;

    SUBCASE("single mode, single endpoint") {
        std::vector<GridFunction> traces{GridFunction(grid)};
        for (int k = 0; k < grid.size(); ++k)
            traces[0].values[k] = eig.dphi_trace(1, 0.0) *
                                  mlf::eval_ml({alpha, 1.0}, eig.lambda(1) *
                                                                 std::pow(grid.node(k), alpha));
        const auto fit = inverse::recover_modes(traces, {0.0}, eig, alpha, 3, 0.0);
        CHECK(std::abs(fit.coeffs[0] - 1.0) < 1e-6);
        CHECK(std::abs(fit.coeffs[1]) < 1e-6);
        CHECK(std::abs(fit.coeffs[2]) < 1e-6);
    }
    SUBCASE("zero trace gives zero coefficients") {
        std::vector<GridFunction> traces{GridFunction(grid)};
        const auto fit = inverse::recover_modes(traces, {0.0}, eig, alpha, 3, 1e-8);
        for (double c : fit.coeffs) CHECK(std::abs(c) < 1e-14);
    }
    SUBCASE("two modes, both endpoints, noiseless") {
        std::vector<GridFunction> traces{GridFunction(grid), GridFunction(grid)};
        const std::vector<double> pts{0.0, 1.0};
        const std::vector<double> truth{1.0, 0.5, 0.0, 0.0};
        for (int i = 0; i < 2; ++i)
            for (int k = 0; k < grid.size(); ++k) {
                double v = 0.0;
                for (int n = 1; n <= 2; ++n)
                    v += truth[n - 1] * eig.dphi_trace(n, pts[i]) *
                         mlf::eval_ml({alpha, 1.0},
                                      eig.lambda(n) * std::pow(grid.node(k), alpha));
                traces[i].values[k] = v;
            }
        const auto fit = inverse::recover_modes(traces, pts, eig, alpha, 4, 0.0);
        CHECK(rel_l2_coeffs(fit.coeffs, truth) < 1e-4);
    }
}

TEST_CASE("recover_sources: noiseless semi-analytic end-to-end") {
    auto s = scenario(0.7, 0.2, 1.0, 1024, 6);
    s.f1_coeffs = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    s.f2_coeffs = {0.0, 1.0, 0.0, 0.0, 0.0, 0.0};
    for (int k = 0; k < s.time_grid.size(); ++k)
        s.g1.values[k] = 1.0 + 0.5 * s.time_grid.node(k);
    const auto m = inverse::simulate_moments(s, {0.0, 1.0}, inverse::MomentMode::semi_analytic);
    inverse::RecoveryOptions opt;
    opt.n_rec = 4;
    const auto r = inverse::recover_sources(m, s, opt);
    CHECK(rel_l2_coeffs(r.f1_coeffs, {1.0, 0.0, 0.0, 0.0}) < 0.05);
    CHECK(rel_l2_coeffs(r.f2_coeffs, {0.0, 1.0, 0.0, 0.0}) < 0.05);
}

TEST_CASE("recover_sources: zero moments give zero sources (uniqueness)") {
    auto s = scenario(0.7, 0.2, 1.0, 128, 4);
    inverse::MomentData m;
    m.boundary_points = {0.0, 1.0};
    m.grid = s.time_grid;
    m.mean_flux.assign(2, std::vector<double>(s.time_grid.size(), 0.0));
    m.var_flux.assign(2, std::vector<double>(s.time_grid.size(), 0.0));
    m.provenance = "semi-analytic";
    const auto r = inverse::recover_sources(m, s, {});
    double nrm = 0.0;
    for (double c : r.f1_coeffs) nrm += c * c;
    for (double c : r.f2_coeffs) nrm += c * c;
    CHECK(std::sqrt(nrm) <= 1e-10);
}

TEST_CASE("recover_sources: f1 stage is linear in the mean data") {
    auto s = scenario(0.7, 0.2, 1.0, 512, 4);
    auto sa = s, sb = s;
    sa.f1_coeffs = {1.0, 0.0, 0.0, 0.0};
    sb.f1_coeffs = {0.0, 0.6, 0.0, 0.0};
    const auto ma = inverse::simulate_moments(sa, {0.0, 1.0}, inverse::MomentMode::semi_analytic);
    const auto mb = inverse::simulate_moments(sb, {0.0, 1.0}, inverse::MomentMode::semi_analytic);
    inverse::MomentData msum = ma;
    for (std::size_t i = 0; i < msum.mean_flux.size(); ++i)
        for (std::size_t k = 0; k < msum.mean_flux[i].size(); ++k)
            msum.mean_flux[i][k] += mb.mean_flux[i][k];
    inverse::RecoveryOptions opt;
    opt.reg = 1e-8;
    const auto ra = inverse::recover_sources(ma, s, opt);
    const auto rb = inverse::recover_sources(mb, s, opt);
    const auto rs = inverse::recover_sources(msum, s, opt);
    for (int n = 0; n < 4; ++n)
        CHECK(rs.f1_coeffs[n] ==
              doctest::Approx(ra.f1_coeffs[n] + rb.f1_coeffs[n]).epsilon(1e-8).scale(1.0));
}

TEST_CASE("recover_sources: noise robustness trend") {
    auto s = scenario(0.7, 0.2, 1.0, 512, 4);
    s.f1_coeffs = {1.0, 0.0, 0.0, 0.0};
    s.f2_coeffs = {0.0, 1.0, 0.0, 0.0};
    for (int k = 0; k < s.time_grid.size(); ++k)
        s.g1.values[k] = 1.0 + 0.5 * s.time_grid.node(k);
    const auto clean = inverse::simulate_moments(s, {0.0, 1.0}, inverse::MomentMode::semi_analytic);

    inverse::RecoveryOptions opt;
    opt.n_rec = 4;
    opt.reg = -1.0;
    // reg tuned at sigma = 1e-3 via the discrepancy principle
    {
        auto probe = clean;
        probe.noise_estimate = 1e-3;
        std::mt19937_64 rng(5150);
        std::normal_distribution<double> nd(0.0, 1e-3);
        for (auto& v : probe.mean_flux)
            for (std::size_t k = 1; k < v.size(); ++k) v[k] += nd(rng);
        const auto r = inverse::recover_sources(probe, s, opt);
        opt.reg = r.regularization;
    }

    double prev_err = -1.0;
    for (double sigma : {0.0, 1e-4, 1e-3, 1e-2}) {
        double err_avg = 0.0;
        const int trials = 3;
        for (int trial = 0; trial < trials; ++trial) {
            auto noisy = clean;
            noisy.provenance = "mc:synthetic"; // engages pre-smoothing
            std::mt19937_64 rng(1000 + trial);
            std::normal_distribution<double> nd(0.0, sigma);
            for (auto& v : noisy.mean_flux)
                for (std::size_t k = 1; k < v.size(); ++k) v[k] += nd(rng);
            for (auto& v : noisy.var_flux)
                for (std::size_t k = 1; k < v.size(); ++k) v[k] = std::max(0.0, v[k] + nd(rng));
            const auto r = inverse::recover_sources(noisy, s, opt);
            err_avg += rel_l2_coeffs(r.f1_coeffs, {1.0, 0.0, 0.0, 0.0});
        }
        err_avg /= trials;
        CHECK(err_avg >= prev_err * 0.999);
        prev_err = err_avg;
    }
}

TEST_CASE("moments CSV round trip") {
    auto s = scenario(0.7, 0.2, 1.0, 64, 2);
    s.f1_coeffs = {1.0, -0.5};
    const auto m = inverse::simulate_moments(s, {0.0, 1.0}, inverse::MomentMode::semi_analytic);
    const std::string path = "test_moments_roundtrip.csv";
    inverse::write_moments_csv(path, m);
    const auto back = inverse::read_moments_csv(path);
    std::remove(path.c_str());
    REQUIRE(back.boundary_points.size() == 2);
    REQUIRE(back.grid.n_steps == m.grid.n_steps);
    for (std::size_t i = 0; i < 2; ++i)
        for (int k = 0; k < m.grid.size(); ++k) {
            CHECK(back.mean_flux[i][k] == doctest::Approx(m.mean_flux[i][k]).epsilon(1e-15));
            CHECK(back.var_flux[i][k] == doctest::Approx(m.var_flux[i][k]).epsilon(1e-15));
        }
}

TEST_CASE("moment data validation") {
    inverse::MomentData m;
    m.boundary_points = {0.0};
    m.grid = TimeGrid(1.0, 8);
    m.mean_flux.assign(1, std::vector<double>(9, 0.0));
    m.var_flux.assign(1, std::vector<double>(9, 0.0));
    m.provenance = "semi-analytic";
    CHECK_NOTHROW(m.validate());
    m.var_flux[0][3] = -1.0;
    CHECK_THROWS_AS(m.validate(), domain_error);
    m.var_flux[0][3] = 0.0;
    m.mean_flux[0][0] = 0.5;
    CHECK_THROWS_AS(m.validate(), domain_error);
}
