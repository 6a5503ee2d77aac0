#ifndef STFDE_TESTS_HELPERS_HPP
#define STFDE_TESTS_HELPERS_HPP

#include <memory>

#include "stfde/forward.hpp"

namespace helpers {

inline stfde::forward::Scenario scenario(double alpha, double delta, double T, int steps,
                                         int modes, int paths = 1, std::uint64_t seed = 0) {
    stfde::forward::Scenario s;
    s.alpha = alpha;
    s.delta = delta;
    s.T = T;
    s.time_grid = stfde::fracops::TimeGrid(T, steps);
    s.eig = std::make_shared<stfde::spectral::EigenSystem>(
        stfde::spectral::laplace_1d(modes, std::max(64, 8 * modes)));
    s.n_paths = paths;
    s.seed = seed;
    s.u0_coeffs.assign(modes, 0.0);
    s.u1_coeffs.assign(modes, 0.0);
    s.f1_coeffs.assign(modes, 0.0);
    s.f2_coeffs.assign(modes, 0.0);
    s.g1 = stfde::fracops::GridFunction::sample(s.time_grid, [](double) { return 1.0; });
    s.g2 = stfde::fracops::GridFunction::sample(s.time_grid, [](double) { return 1.0; });
    return s;
}

} // namespace helpers

#endif
