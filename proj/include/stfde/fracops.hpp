#ifndef STFDE_FRACOPS_HPP
#define STFDE_FRACOPS_HPP

#include <cstdint>
#include <vector>

#include "stfde/errors.hpp"

namespace stfde::fracops {

/// Uniform grid on [0, T], nodes t_k = k T / n_steps, k = 0..n_steps.
struct TimeGrid {
    double t_max = 1.0;
    int n_steps = 2;

    TimeGrid() = default;
    TimeGrid(double T, int n) : t_max(T), n_steps(n) { validate(); }

    void validate() const {
        if (!(t_max > 0.0)) throw domain_error("TimeGrid: t_max must be positive");
        if (n_steps < 2) throw domain_error("TimeGrid: need n_steps >= 2");
    }
    double h() const { return t_max / n_steps; }
    double node(int k) const { return k * t_max / n_steps; }
    int size() const { return n_steps + 1; }
    bool operator==(const TimeGrid& o) const {
        return t_max == o.t_max && n_steps == o.n_steps;
    }
};

/// Nodal values aligned with a TimeGrid.
struct GridFunction {
    TimeGrid grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const TimeGrid& g) : grid(g), values(g.size(), 0.0) {}
    GridFunction(const TimeGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        validate();
    }
    template <class F>
    static GridFunction sample(const TimeGrid& g, F&& f) {
        GridFunction out(g);
        for (int k = 0; k < g.size(); ++k) out.values[k] = f(g.node(k));
        return out;
    }
    void validate() const;
    double l2_norm() const;   // trapezoid-in-time L2(0,T) norm
    double max_norm() const;
};

/// One path of i.i.d. N(0, h) Brownian increments with reproducible
/// (seed, path_id) lineage: identical inputs give bit-identical draws.
struct BrownianIncrements {
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::uint64_t path_id = 0;
    std::vector<double> db; // length n_steps

    static BrownianIncrements generate(const TimeGrid& grid, std::uint64_t seed,
                                       std::uint64_t path_id);
};

/// Riemann-Liouville integral I^order: product-trapezoid convolution with the
/// kernel's subinterval moments integrated exactly. O(h^2) for smooth input.
GridFunction rl_integral(const GridFunction& f, double order);

/// d/dt I^(1-order) f, order in (0,1). Centered differences in the interior,
/// one-sided second-order stencils at the endpoints. Warns (STFDE_LOG) when
/// f(0) != 0: the inversion then carries a t^(-order) boundary artifact.
GridFunction rl_derivative(const GridFunction& f, double order);

/// Caputo derivative: L1 scheme for order in (0,1), L2-type (discrete second
/// derivative fed through I^(2-order)) for order in (1,2).
GridFunction caputo_derivative(const GridFunction& f, double order);

/// Stochastic convolution Gamma(order)^-1 int_0^t (t-tau)^(order-1) f(tau) dB(tau).
/// Each subinterval contributes f(left) * Kbar * dB with Kbar the kernel's exact
/// subinterval L2-average, so the Ito isometry holds exactly per subinterval.
/// Requires order > 1/2 (square-integrable kernel near the endpoint).
GridFunction rl_integral_ito(const GridFunction& f, double order,
                             const BrownianIncrements& increments);

namespace detail {
// Exact moments of s^p over [s1,s2]: int s^p ds and int s^(p+1) ds.
double power_moment(double p, double s1, double s2);
// splitmix64 step, used for seed derivation.
std::uint64_t splitmix64(std::uint64_t& state);
} // namespace detail

} // namespace stfde::fracops

#endif
