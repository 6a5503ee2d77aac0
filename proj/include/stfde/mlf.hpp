#ifndef STFDE_MLF_HPP
#define STFDE_MLF_HPP

#include <utility>

#include "stfde/errors.hpp"

namespace stfde::mlf {

/// Parameters of the two-parameter Mittag-Leffler function E_{alpha,beta}.
struct MLParams {
    double alpha;
    double beta;

    void validate() const;
};

/// Gamma function, Lanczos approximation (g = 7, 9 coefficients),
/// reflected for negative arguments.
double gamma_fn(double z);

/// 1/Gamma(z); poles of Gamma map to exact zeros.
double rgamma(double z);

/// log|Gamma(z)| and the sign of Gamma(z). sign = 0 at a pole.
std::pair<double, int> lgamma_sign(double z);

/// E_{alpha,beta}(-x) for x >= 0, alpha in (0, 2].
///
/// Three evaluation regimes, blended smoothly where they hand over:
/// a compensated extended-precision power series for small x, a fixed
/// 80-node trapezoid quadrature of the inverse-Laplace (Hankel-type)
/// contour integral in the mid range, and the p = 5 large-argument
/// expansion (with the conjugate saddle pair added for alpha > 1) once
/// its own error estimate certifies the target accuracy.
double eval_ml(const MLParams& params, double x);

/// d/dt E_{alpha,1}(-lam t^alpha) = -lam t^(alpha-1) E_{alpha,alpha}(-lam t^alpha).
double ml_derivative(double alpha, double lam, double t);

struct IdentityCheck {
    double lhs; // adaptive quadrature of the integral side
    double rhs; // t^beta E_{alpha,beta+1}(lam t^alpha)
};

/// Integral identity int_0^t E_{alpha,beta}(lam tau^alpha) tau^(beta-1) dtau
/// = t^beta E_{alpha,beta+1}(lam t^alpha), evaluated both ways.
/// Requires lam <= 0 (only the negative real axis is supported).
IdentityCheck ml_integral_identity_check(double alpha, double beta, double lam, double t);

} // namespace stfde::mlf

#endif
