#ifndef STFDE_FORWARD_HPP
#define STFDE_FORWARD_HPP

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "stfde/fracops.hpp"
#include "stfde/spectral.hpp"

namespace stfde::forward {

using fracops::BrownianIncrements;
using fracops::GridFunction;
using fracops::TimeGrid;

/// Full problem description: order, source lift, horizon, eigensystem,
/// mode coefficients of data and source factors, grids, ensemble size, seed.
struct Scenario {
    double alpha = 0.7;
    double delta = 0.2;
    double T = 1.0;
    std::shared_ptr<const spectral::EigenSystem> eig;
    std::vector<double> u0_coeffs, u1_coeffs; // initial data (u1 used for alpha > 1)
    std::vector<double> f1_coeffs, f2_coeffs; // spatial source factors
    GridFunction g1, g2;                      // temporal source factors on time_grid
    // optional general-form source: per-mode time tables <f_i(.,t),phi_n>,
    // each of length time_grid.size(); overrides the separable form when set
    std::vector<std::vector<double>> f1_table, f2_table;
    TimeGrid time_grid;
    int n_paths = 1;
    std::uint64_t seed = 0;

    void validate() const;
    bool wave() const { return alpha > 1.0; }
    bool has_initial() const;
    bool has_deterministic_source() const;
    bool has_stochastic_source() const;
    int n_modes() const;
};

std::uint64_t scenario_hash(const Scenario& s);

/// Monte Carlo sample paths of the solution's mode coefficients.
/// paths[p] stores mode-major trajectories: value(p, n, k) with n modes, k time.
struct FieldEnsemble {
    TimeGrid grid;
    int n_modes = 0;
    std::vector<std::vector<double>> paths; // each of size n_modes * grid.size()
    std::uint64_t seed = 0;
    bool has_increments = false; // seed lineage available to regenerate dB
    std::uint64_t scenario_id = 0;

    int n_paths() const { return (int)paths.size(); }
    double value(int p, int n, int k) const { return paths[p][n * grid.size() + k]; }
    double& value(int p, int n, int k) { return paths[p][n * grid.size() + k]; }
    void check() const;
};

/// Per-mode convolution tables for the kernel s^(alpha+delta-1) E_{alpha,alpha+delta}(-lam s^alpha)
/// on a uniform grid: the power factor integrated exactly over each subinterval,
/// the Mittag-Leffler factor frozen at the subinterval midpoint.
struct ModeKernel {
    std::vector<double> p, q; // product-trapezoid weights of the lagged factor, index d=1..K
    std::vector<double> kbar; // L2-averaged kernel for the Ito sum, index d=1..K
};
ModeKernel build_mode_kernel(double alpha, double delta, double lambda, const TimeGrid& g);

/// coeff * E_{alpha,1}(-lam t^alpha) sampled on the grid.
std::vector<double> subdiffusion_mode(double alpha, double lambda, double coeff,
                                      const TimeGrid& g);
/// u0c E_{alpha,1}(-lam t^alpha) + u1c t E_{alpha,2}(-lam t^alpha).
std::vector<double> wave_mode(double alpha, double lambda, double u0c, double u1c,
                              const TimeGrid& g);

/// Theorem-form solvers.
FieldEnsemble solve_initial_subdiffusion(const Scenario& s); // alpha in (0,1), F = 0
FieldEnsemble solve_initial_wave(const Scenario& s);         // alpha in (1,2), F = 0
/// One sample path of the forced problem (u0 = u1 = 0).
std::vector<double> solve_source_path(const Scenario& s, std::uint64_t path_id);
FieldEnsemble solve_source(const Scenario& s, int workers = 1);

/// Implicit product-quadrature stepping of the mode equation
/// v_n + lam_n I^alpha v_n = <u0>_n + t <u1>_n + I^(alpha+delta)(f1 g1)_n.
/// Deterministic oracle; requires f2 = 0.
std::vector<double> reference_timestep(const Scenario& s);

struct EnsembleStats {
    TimeGrid grid;
    int n_modes = 0;
    int m_paths = 0;
    std::vector<double> mean;     // n_modes * grid.size()
    std::vector<double> variance; // unbiased; zeros when m_paths < 2
    double sup_t_l2 = 0.0;        // sup_t ||u||_{L2(D x Omega)}
    double l2_d_t_omega = 0.0;    // ||u||_{L2(D x (0,T) x Omega)}
    double l2_h2gamma = 0.0;      // ||u||_{L2((0,T) x Omega; H^{2 gamma})}
    double gamma = 0.5;

    double mean_at(int n, int k) const { return mean[n * grid.size() + k]; }
    double var_at(int n, int k) const { return variance[n * grid.size() + k]; }
};
EnsembleStats ensemble_stats(const FieldEnsemble& e, const std::vector<double>& lambdas,
                             double gamma = 0.5);

/// L2(0,T) norm of the weak-form residual per mode, averaged over paths.
/// The stochastic part reuses the ensemble's originating Brownian increments
/// (regenerated from the seed lineage); refuses ensembles without one.
std::vector<double> weak_residual(const FieldEnsemble& e, const Scenario& s);

/// Least-squares slope of log||u(.,t)||_{L2(D)} vs log t over [t_lo, t_hi],
/// from the ensemble mean trajectories.
double decay_exponent(const EnsembleStats& st, const std::vector<double>& lambdas,
                      double t_lo, double t_hi);

// --- external interfaces -----------------------------------------------

/// CSV rows `mode,t,mean,variance,M`.
void write_summary_csv(std::ostream& os, const EnsembleStats& st);
/// Flat binary path dump: magic "STFDBIN1", u32 version, u64 M, N, n_steps,
/// f64 T, then little-endian f64 path-major / mode-major / time-minor.
void write_ensemble_binary(const std::string& path, const FieldEnsemble& e);
FieldEnsemble read_ensemble_binary(const std::string& path);

/// Deterministic block partition helper used for path-parallel loops:
/// blocks are assigned by index and merged in index order, so results do
/// not depend on the worker count.
void parallel_blocks(int n_items, int block, int workers,
                     const std::function<void(int, int)>& body);

} // namespace stfde::forward

#endif
