#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "stfde/mlf.hpp"

using namespace stfde;
using mlf::eval_ml;

namespace {
constexpr double kPi = 3.141592653589793238462643;
}

TEST_CASE("gamma function: Lanczos against known values") {
    CHECK(mlf::gamma_fn(0.5) == doctest::Approx(std::sqrt(kPi)).epsilon(1e-13));
    CHECK(mlf::gamma_fn(1.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(mlf::gamma_fn(5.0) == doctest::Approx(24.0).epsilon(1e-13));
    CHECK(mlf::gamma_fn(-0.5) == doctest::Approx(-2.0 * std::sqrt(kPi)).epsilon(1e-12));
    // poles of Gamma are exact zeros of 1/Gamma
    CHECK(mlf::rgamma(0.0) == 0.0);
    CHECK(mlf::rgamma(-3.0) == 0.0);
    CHECK(mlf::rgamma(2.0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(mlf::rgamma(-2.5) == doctest::Approx(1.0 / mlf::gamma_fn(-2.5)).epsilon(1e-12));
}

TEST_CASE("eval_ml: exponential case E_{1,1}(-x) = exp(-x)") {
    CHECK(eval_ml({1.0, 1.0}, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
    double worst = 0.0;
    for (int i = 0; i <= 500; ++i) {
        const double x = 50.0 * i / 500;
        worst = std::max(worst, std::abs(eval_ml({1.0, 1.0}, x) - std::exp(-x)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("eval_ml: x = 0 gives 1/Gamma(beta)") {
    CHECK(eval_ml({0.7, 1.2}, 0.0) ==
          doctest::Approx(1.0 / mlf::gamma_fn(1.2)).epsilon(1e-14));
}

TEST_CASE("eval_ml: E_{1/2,1}(-x) against the extended-precision series oracle") {
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double x = 5.0 * i / 100;
        worst = std::max(worst, std::abs(eval_ml({0.5, 1.0}, x) - oracles::ml_reference(0.5, 1.0, x)));
    }
    CHECK(worst < 1e-10);
    // and the erfc closed form E_{1/2,1}(-x) = e^{x^2} erfc(x)
    CHECK(eval_ml({0.5, 1.0}, 1.0) ==
          doctest::Approx(std::exp(1.0) * std::erfc(1.0)).epsilon(1e-11));
}

TEST_CASE("eval_ml: cosine consistency at alpha = 2") {
    double worst = 0.0;
    for (int i = 0; i <= 300; ++i) {
        const double x = 100.0 * i / 300;
        worst = std::max(worst, std::abs(eval_ml({2.0, 1.0}, x) - std::cos(std::sqrt(x))));
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("eval_ml: lattice agreement with the MPFR oracle") {
    double worst = 0.0;
    for (double a : {0.3, 0.5, 0.8, 1.0, 1.2, 1.6, 2.0})
        for (double b : {0.3, 1.0, 1.7, 3.0})
            for (double x : {0.05, 0.7, 3.0, 9.0, 25.0, 80.0}) {
                if (oracles::ml_series_peak_ln(a, b, x) > 220.0) continue;
                worst = std::max(worst, std::abs(eval_ml({a, b}, x) - oracles::ml_reference(a, b, x)));
            }
    CHECK(worst < 5e-13);
}

TEST_CASE("eval_ml: domain errors") {
    CHECK_THROWS_AS(eval_ml({-0.5, 1.0}, 1.0), domain_error);
    CHECK_THROWS_AS(eval_ml({0.0, 1.0}, 1.0), domain_error);
    CHECK_THROWS_AS(eval_ml({0.5, 1.0}, -1.0), domain_error);
    CHECK_THROWS_AS(eval_ml({2.5, 1.0}, 1.0), domain_error);
}

TEST_CASE("ml_derivative: reduces to d/dt exp(-lam t) at alpha = 1") {
    CHECK(mlf::ml_derivative(1.0, 3.0, 0.5) ==
          doctest::Approx(-3.0 * std::exp(-1.5)).epsilon(1e-12));
}

TEST_CASE("ml_derivative: matches Richardson finite differences") {
    for (auto [a, lam, t] : std::initializer_list<std::array<double, 3>>{
             {0.6, 2.0, 1.0}, {1.5, 1.0, 2.0}, {0.9, 4.0, 0.7}}) {
        const double d = mlf::ml_derivative(a, lam, t);
        const double fd = oracles::fd_derivative(
            [&](double s) { return eval_ml({a, 1.0}, lam * std::pow(s, a)); }, t, 2e-4);
        CHECK(std::abs(d - fd) / std::abs(d) < 1e-5);
    }
}

TEST_CASE("ml_derivative: singular at t = 0 for alpha < 1") {
    CHECK_THROWS_AS(mlf::ml_derivative(0.7, 1.0, 0.0), domain_error);
    CHECK(mlf::ml_derivative(1.5, 1.0, 0.0) == 0.0);
}

TEST_CASE("ml_integral_identity_check: exponential case") {
    const auto c = mlf::ml_integral_identity_check(1.0, 1.0, -1.0, 1.0);
    CHECK(c.lhs == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-10));
    CHECK(std::abs(c.lhs - c.rhs) <= 1e-6 * (1.0 + std::abs(c.rhs)));
}

TEST_CASE("ml_integral_identity_check: fractional cases") {
    for (auto [a, b, t] : std::initializer_list<std::array<double, 3>>{
             {0.8, 0.9, 2.0}, {1.4, 1.4, 0.5}}) {
        const auto c = mlf::ml_integral_identity_check(a, b, -5.0, t);
        CHECK(std::abs(c.lhs - c.rhs) <= 1e-6 * (1.0 + std::abs(c.rhs)));
    }
    CHECK_THROWS_AS(mlf::ml_integral_identity_check(0.8, 0.9, 2.0, 1.0), domain_error);
}

TEST_CASE("bound: sup (1+x)|E_{a,b}(-x)| finite and refinement-stable") {
    for (double a : {0.4, 1.2, 1.9})
        for (double b : {0.5, 1.5}) {
            auto sup_on = [&](int pts) {
                double s = 0.0;
                for (int i = 0; i <= pts; ++i) {
                    const double x = std::pow(10.0, -2.0 + 6.0 * i / pts);
                    s = std::max(s, (1.0 + x) * std::abs(eval_ml({a, b}, x)));
                }
                return s;
            };
            const double coarse = sup_on(150), fine = sup_on(300);
            REQUIRE(std::isfinite(fine));
            CHECK(fine <= coarse * 1.05);
        }
}

TEST_CASE("complete monotonicity: difference signs alternate for alpha<1, alpha<=beta") {
    // coarser probe than the acceptance run, orders 0..3 on x in [0,20]
    for (auto [a, b] :
         std::initializer_list<std::pair<double, double>>{{0.4, 0.4}, {0.9, 1.5}}) {
        const int n = 2001;
        const double h = 0.01;
        std::vector<double> d(n);
        for (int i = 0; i < n; ++i) d[i] = eval_ml({a, b}, i * h);
        for (int ord = 0; ord <= 3; ++ord) {
            const double sgn = (ord % 2 == 0) ? 1.0 : -1.0;
            for (int i = 0; i < (int)d.size(); ++i) {
                INFO("order ", ord, " index ", i);
                REQUIRE(sgn * d[i] >= 0.0);
            }
            for (int i = 0; i + 1 < (int)d.size(); ++i) d[i] = d[i + 1] - d[i];
            d.pop_back();
        }
    }
}

TEST_CASE("asymptotics: p = 1 remainder is O(x^-2) with stable constant") {
    for (auto [a, b] : std::initializer_list<std::pair<double, double>>{{0.4, 1.0}, {1.3, 2.0}}) {
        auto fit_c = [&, a = a, b = b](double lo, double hi) {
            double c = 0.0;
            for (int i = 0; i <= 30; ++i) {
                const double x = lo * std::pow(hi / lo, i / 30.0);
                const double lead = mlf::rgamma(b - a) / x;
                c = std::max(c, std::abs(eval_ml({a, b}, x) - lead) * x * x);
            }
            return c;
        };
        const double c1 = fit_c(1e3, 1e4), c2 = fit_c(1e4, 1e5);
        REQUIRE(std::isfinite(c1));
        REQUIRE(std::isfinite(c2));
        CHECK(std::max(c1, c2) / std::min(c1, c2) < 2.5);
    }
}
