#ifndef STFDE_INVERSE_HPP
#define STFDE_INVERSE_HPP

#include <string>
#include <vector>

#include "stfde/forward.hpp"

namespace stfde::inverse {

using fracops::GridFunction;
using fracops::TimeGrid;

/// Expectation and variance of the conormal boundary flux on Gamma x (0,T).
struct MomentData {
    std::vector<double> boundary_points; // subset of {0, 1}
    TimeGrid grid;
    std::vector<std::vector<double>> mean_flux; // per boundary point, grid-aligned
    std::vector<std::vector<double>> var_flux;
    std::string provenance; // "semi-analytic" or "mc:<M>"
    double noise_estimate = 0.0; // optional std of additive noise, 0 = none

    void validate() const; // clamps tiny negative variances, rejects real ones
    bool is_mc() const { return provenance.rfind("mc", 0) == 0; }
};

struct StageResidual {
    std::string stage;
    double value;
};

struct RecoveryResult {
    std::vector<double> f1_coeffs;
    std::vector<double> f2_coeffs;
    bool f2_sign_ambiguous = false; // both sign patterns fit within 1%
    std::vector<StageResidual> residuals;
    double regularization = 0.0;
    std::vector<int> excluded_modes; // untraceable from the observed endpoints
    double f2_clamp_magnitude = 0.0; // total negativity clamped in variance deconvolution
};

/// Moments of the boundary flux for a separable-source scenario.
/// mode "mc": flux per path via sum_n v_n dphi_n, then ensemble statistics.
/// mode "semi_analytic": mean by deterministic quadrature of the forced
/// solution, variance by the Ito isometry formula
///   Var(x,t) = int_0^t g2(tau)^2 [ sum_n <f2>_n K_n(t-tau) dphi_n(x) ]^2 dtau.
enum class MomentMode { mc, semi_analytic };
MomentData simulate_moments(const forward::Scenario& s, const std::vector<double>& gamma_pts,
                            MomentMode mode, int workers = 1);

/// Solve m(t) = int_0^t g(tau) h(t-tau) dtau for h, given g(0) != 0:
/// differentiate m (4th-order stencils) and march the second-kind equation
/// m'(t) = g(0) h(t) + int_0^t g'(t-tau) h(tau) dtau by product trapezoid.
GridFunction deconvolve_volterra(const GridFunction& m, const GridFunction& g,
                                 double g_min = 1e-8);

/// Recover q >= 0 from v(t) = int_0^t g2(tau)^2 q(t-tau) dtau. Output clamped
/// at 0; clamp magnitude reported through *clamped if non-null.
GridFunction deconvolve_variance(const GridFunction& v, const GridFunction& g2,
                                 double* clamped = nullptr, double g_min = 1e-8);

/// Normalize the deconvolved trace to plain d_nu v_i: applies the fractional
/// derivative of order alpha+delta-1 when positive, the fractional integral
/// of order 1-alpha-delta when negative, identity when alpha+delta = 1.
GridFunction invert_fractional_smoothing(const GridFunction& h, double alpha, double delta);

struct ModeFit {
    std::vector<double> coeffs;
    double residual;          // least-squares residual norm
    double smallest_singular; // smallest retained singular value
    double sigma_max = 0.0;   // largest singular value of the design matrix
    std::vector<int> excluded; // 1-based mode indices with no usable trace
};

/// Tikhonov-regularized least squares for the homogeneous-problem expansion
/// d_nu v(x0, t) = sum_n c_n dphi_n(x0) E_{alpha,1}(-lambda_n t^alpha).
/// traces: one GridFunction per observed boundary point. Rows with
/// t < t_min_nodes*h are excluded (early-time deconvolution artifact).
ModeFit recover_modes(const std::vector<GridFunction>& traces,
                      const std::vector<double>& boundary_points,
                      const spectral::EigenSystem& eig, double alpha, int n_rec, double reg,
                      bool truncated_svd = false, int t_min_nodes = 0);

struct RecoveryOptions {
    int n_rec = 4;
    double reg = -1.0;        // < 0: default 1e-6 * sigma_max^2; discrepancy tuning if noise given
    bool truncated_svd = false;
    int smoothing_window = 7; // local quadratic pre-smoothing for MC data (odd)
    int t_min_nodes = 8;      // fit rows dropped near t = 0
};

/// Full pipeline of the two-step source recovery: mean -> f1, variance -> f2.
RecoveryResult recover_sources(const MomentData& m, const forward::Scenario& known,
                               const RecoveryOptions& opt);

/// Savitzky-Golay style local quadratic regression smoother.
GridFunction smooth_local_quadratic(const GridFunction& f, int window);

// --- external interfaces -----------------------------------------------

/// CSV rows `x,t,mean,variance`.
MomentData read_moments_csv(const std::string& path);
void write_moments_csv(const std::string& path, const MomentData& m);
std::string recovery_to_json(const RecoveryResult& r);

} // namespace stfde::inverse

#endif
