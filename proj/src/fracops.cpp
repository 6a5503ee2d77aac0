#include "stfde/fracops.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "stfde/mlf.hpp"

namespace stfde::fracops {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559006;

bool log_enabled() {
    static const bool on = [] {
        const char* v = std::getenv("STFDE_LOG");
        return v != nullptr && v[0] != '\0' && v[0] != '0';
    }();
    return on;
}

void warn(const char* msg) {
    if (log_enabled()) std::fprintf(stderr, "[stfde] warning: %s\n", msg);
}

} // namespace

void GridFunction::validate() const {
    grid.validate();
    if ((int)values.size() != grid.size())
        throw domain_error("GridFunction: values length does not match grid");
    for (double v : values)
        if (!std::isfinite(v)) throw domain_error("GridFunction: non-finite value");
}

double GridFunction::l2_norm() const {
    const double h = grid.h();
    double s = 0.0;
    for (int k = 0; k < grid.size(); ++k) {
        const double w = (k == 0 || k == grid.n_steps) ? 0.5 : 1.0;
        s += w * values[k] * values[k];
    }
    return std::sqrt(s * h);
}

double GridFunction::max_norm() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
}

namespace detail {

double power_moment(double p, double s1, double s2) {
    // int_{s1}^{s2} s^p ds, p != -1
    const double q = p + 1.0;
    return (std::pow(s2, q) - std::pow(s1, q)) / q;
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

} // namespace detail

BrownianIncrements BrownianIncrements::generate(const TimeGrid& grid, std::uint64_t seed,
                                                std::uint64_t path_id) {
    grid.validate();
    BrownianIncrements b;
    b.grid = grid;
    b.seed = seed;
    b.path_id = path_id;
    b.db.resize(grid.n_steps);

    std::uint64_t state = seed ^ (0x9E3779B97F4A7C15ull * (path_id + 0x632BE59BD9B4E019ull));
    // burn-in decorrelates nearby path ids
    detail::splitmix64(state);
    detail::splitmix64(state);

    const double sqrt_h = std::sqrt(grid.h());
    auto uniform = [&]() {
        // (0,1], never 0, so log() below is safe
        return ((detail::splitmix64(state) >> 11) + 1.0) * 0x1.0p-53;
    };
    int k = 0;
    while (k < grid.n_steps) {
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        b.db[k++] = r * std::cos(kTwoPi * u2) * sqrt_h;
        if (k < grid.n_steps) b.db[k++] = r * std::sin(kTwoPi * u2) * sqrt_h;
    }
    return b;
}

GridFunction rl_integral(const GridFunction& f, double order) {
    f.validate();
    if (!(order > 0.0)) throw domain_error("rl_integral: order must be positive");
    const int n = f.grid.n_steps;
    const double h = f.grid.h();
    const double rg = mlf::rgamma(order);

    // Lag weights: subinterval at lag d spans s in [(d-1)h, dh], s = t_n - tau.
    // With f piecewise linear, the left node gets (M1 - s1 M0)/h and the right
    // node (s2 M0 - M1)/h, M0/M1 the exact kernel moments.
    std::vector<double> wl(n + 1, 0.0), wr(n + 1, 0.0);
    for (int d = 1; d <= n; ++d) {
        const double s1 = (d - 1) * h, s2 = d * h;
        const double m0 = detail::power_moment(order - 1.0, s1, s2);
        const double m1 = detail::power_moment(order, s1, s2);
        wl[d] = (m1 - s1 * m0) / h;
        wr[d] = (s2 * m0 - m1) / h;
    }

    GridFunction out(f.grid);
    for (int m = 1; m <= n; ++m) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j)
            acc += f.values[j] * wl[m - j] + f.values[j + 1] * wr[m - j];
        out.values[m] = rg * acc;
    }
    return out;
}

GridFunction rl_derivative(const GridFunction& f, double order) {
    f.validate();
    if (!(order > 0.0) || !(order < 1.0))
        throw domain_error("rl_derivative: order must lie in (0,1)");
    if (std::abs(f.values[0]) > 1e-12 * (1.0 + f.max_norm()))
        warn("rl_derivative: f(0) != 0, expect a t^(-order) boundary artifact");

    const GridFunction g = rl_integral(f, 1.0 - order);
    const int n = f.grid.n_steps;
    const double h = f.grid.h();
    GridFunction out(f.grid);
    out.values[0] = (-3.0 * g.values[0] + 4.0 * g.values[1] - g.values[2]) / (2.0 * h);
    for (int k = 1; k < n; ++k)
        out.values[k] = (g.values[k + 1] - g.values[k - 1]) / (2.0 * h);
    out.values[n] = (3.0 * g.values[n] - 4.0 * g.values[n - 1] + g.values[n - 2]) / (2.0 * h);
    return out;
}

GridFunction caputo_derivative(const GridFunction& f, double order) {
    f.validate();
    if (f.grid.n_steps < 4) throw domain_error("caputo_derivative: need n_steps >= 4");
    const int n = f.grid.n_steps;
    const double h = f.grid.h();

    if (order > 0.0 && order < 1.0) {
        // L1 scheme
        const double c = mlf::rgamma(2.0 - order);
        std::vector<double> w(n + 1, 0.0);
        for (int d = 1; d <= n; ++d)
            w[d] = std::pow((double)d, 1.0 - order) - std::pow((double)d - 1.0, 1.0 - order);
        GridFunction out(f.grid);
        const double hma = std::pow(h, -order);
        for (int m = 1; m <= n; ++m) {
            double acc = 0.0;
            for (int j = 0; j < m; ++j)
                acc += w[m - j] * (f.values[j + 1] - f.values[j]);
            out.values[m] = c * hma * acc;
        }
        return out;
    }
    if (order > 1.0 && order < 2.0) {
        // discrete second derivative, then I^(2-order)
        GridFunction d2(f.grid);
        const double h2 = h * h;
        d2.values[0] =
            (2.0 * f.values[0] - 5.0 * f.values[1] + 4.0 * f.values[2] - f.values[3]) / h2;
        for (int k = 1; k < n; ++k)
            d2.values[k] = (f.values[k + 1] - 2.0 * f.values[k] + f.values[k - 1]) / h2;
        d2.values[n] = (2.0 * f.values[n] - 5.0 * f.values[n - 1] + 4.0 * f.values[n - 2] -
                        f.values[n - 3]) /
                       h2;
        return rl_integral(d2, 2.0 - order);
    }
    throw domain_error("caputo_derivative: order must lie in (0,1) or (1,2)");
}

GridFunction rl_integral_ito(const GridFunction& f, double order,
                             const BrownianIncrements& increments) {
    f.validate();
    if (!(increments.grid == f.grid))
        throw domain_error("rl_integral_ito: increments grid mismatch");
    if ((int)increments.db.size() != f.grid.n_steps)
        throw domain_error("rl_integral_ito: increments length mismatch");
    if (!(order > 0.5))
        throw domain_error("rl_integral_ito: order must exceed 1/2 (kernel not square-integrable)");

    const int n = f.grid.n_steps;
    const double h = f.grid.h();
    const double rg = mlf::rgamma(order);

    // Kbar[d] = exact L2-average of the kernel over the lag-d subinterval.
    std::vector<double> kbar(n + 1, 0.0);
    for (int d = 1; d <= n; ++d) {
        const double s1 = (d - 1) * h, s2 = d * h;
        const double msq = detail::power_moment(2.0 * order - 2.0, s1, s2);
        kbar[d] = rg * std::sqrt(msq / h);
    }

    GridFunction out(f.grid);
    for (int m = 1; m <= n; ++m) {
        double acc = 0.0;
        for (int k = 0; k < m; ++k)
            acc += f.values[k] * kbar[m - k] * increments.db[k];
        out.values[m] = acc;
    }
    return out;
}

} // namespace stfde::fracops
