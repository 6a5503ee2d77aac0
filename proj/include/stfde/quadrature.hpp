#ifndef STFDE_QUADRATURE_HPP
#define STFDE_QUADRATURE_HPP

#include <functional>

namespace stfde::quad {

struct QuadResult {
    double value;
    double error;    // error estimate
    bool converged;
    int evaluations;
};

/// Adaptive Gauss-Kronrod (7,15) on [a,b]. Splits the worst subinterval
/// until the summed error estimate meets abs_tol + rel_tol*|value|.
QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol = 1e-12, double rel_tol = 1e-10,
                     int max_intervals = 2000);

/// Integral of x^p * f(x) on [0,b) with an integrable endpoint singularity
/// at 0 (p > -1): substitutes x = s^(1/(p+1)) so the weight becomes constant.
QuadResult integrate_power_weighted(const std::function<double(double)>& f, double p,
                                    double b, double abs_tol = 1e-12,
                                    double rel_tol = 1e-10);

} // namespace stfde::quad

#endif
