#include "stfde/inverse.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "stfde/mlf.hpp"

namespace stfde::inverse {

namespace {

bool log_enabled() {
    static const bool on = [] {
        const char* v = std::getenv("STFDE_LOG");
        return v != nullptr && v[0] != '\0' && v[0] != '0';
    }();
    return on;
}

void warn(const std::string& msg) {
    if (log_enabled()) std::fprintf(stderr, "[stfde] warning: %s\n", msg.c_str());
}

// 4th-order first derivative on a uniform grid
std::vector<double> derivative4(const std::vector<double>& f, double h) {
    const int n = (int)f.size() - 1;
    std::vector<double> d(n + 1);
    if (n < 4) throw domain_error("derivative4: need at least 5 nodes");
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h);
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h);
    for (int i = 2; i <= n - 2; ++i)
        d[i] = (-f[i + 2] + 8 * f[i + 1] - 8 * f[i - 1] + f[i - 2]) / (12 * h);
    d[n - 1] = (3 * f[n] + 10 * f[n - 1] - 18 * f[n - 2] + 6 * f[n - 3] - f[n - 4]) / (12 * h);
    d[n] = (25 * f[n] - 48 * f[n - 1] + 36 * f[n - 2] - 16 * f[n - 3] + 3 * f[n - 4]) / (12 * h);
    return d;
}

std::vector<double> derivative2(const std::vector<double>& f, double h) {
    const int n = (int)f.size() - 1;
    std::vector<double> d(n + 1);
    d[0] = (-3 * f[0] + 4 * f[1] - f[2]) / (2 * h);
    for (int i = 1; i < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2 * h);
    d[n] = (3 * f[n] - 4 * f[n - 1] + f[n - 2]) / (2 * h);
    return d;
}

} // namespace

void MomentData::validate() const {
    grid.validate();
    if (boundary_points.empty()) throw domain_error("MomentData: no boundary points");
    for (double x : boundary_points)
        if (x != 0.0 && x != 1.0)
            throw domain_error("MomentData: boundary points must be 0 or 1");
    if (mean_flux.size() != boundary_points.size() || var_flux.size() != boundary_points.size())
        throw domain_error("MomentData: per-point array count mismatch");
    for (std::size_t i = 0; i < boundary_points.size(); ++i) {
        if ((int)mean_flux[i].size() != grid.size() || (int)var_flux[i].size() != grid.size())
            throw domain_error("MomentData: series length does not match grid");
        double scale = 0.0;
        for (double v : var_flux[i]) scale = std::max(scale, std::abs(v));
        for (double v : var_flux[i])
            if (v < -1e-12 * (1.0 + scale))
                throw domain_error("MomentData: negative variance beyond tolerance");
        if (std::abs(mean_flux[i][0]) > 1e-9 * (1.0 + std::abs(mean_flux[i][0])) &&
            std::abs(mean_flux[i][0]) > 1e-9)
            throw domain_error("MomentData: mean_flux(.,0) must vanish (zero initial data)");
        if (std::abs(var_flux[i][0]) > 1e-9)
            throw domain_error("MomentData: var_flux(.,0) must vanish");
    }
}

MomentData simulate_moments(const forward::Scenario& s, const std::vector<double>& gamma_pts,
                            MomentMode mode, int workers) {
    s.validate();
    if (s.has_initial()) throw domain_error("simulate_moments: initial data must be zero");
    if (gamma_pts.empty()) throw domain_error("simulate_moments: no observation points");
    const int K = s.time_grid.n_steps;
    const int sz = s.time_grid.size();
    const int nm = s.n_modes();
    const int np = (int)gamma_pts.size();
    const double h = s.time_grid.h();

    MomentData out;
    out.boundary_points = gamma_pts;
    out.grid = s.time_grid;
    out.mean_flux.assign(np, std::vector<double>(sz, 0.0));
    out.var_flux.assign(np, std::vector<double>(sz, 0.0));

    // deterministic flux (shared by both modes)
    {
        forward::Scenario det = s;
        det.f2_coeffs.assign(nm, 0.0);
        det.f2_table.clear();
        det.n_paths = 1;
        if (det.has_deterministic_source()) {
            const auto path = forward::solve_source_path(det, 0);
            for (int i = 0; i < np; ++i)
                for (int k = 0; k < sz; ++k) {
                    double flux = 0.0;
                    for (int n = 0; n < nm; ++n)
                        flux += path[(std::size_t)n * sz + k] *
                                s.eig->dphi_trace(n + 1, gamma_pts[i]);
                    out.mean_flux[i][k] = flux;
                }
        }
    }

    if (!s.has_stochastic_source()) {
        out.provenance = mode == MomentMode::semi_analytic
                             ? "semi-analytic"
                             : ("mc:" + std::to_string(s.n_paths));
        return out;
    }

    // stochastic flux weights V[x][d] = sum_n dphi_n(x) G2_n[d] Kbar_n[d]
    std::vector<std::vector<double>> V(np, std::vector<double>(K + 1, 0.0));
    {
        const bool table = !s.f2_table.empty();
        if (table && mode == MomentMode::semi_analytic)
            throw domain_error("simulate_moments: semi_analytic mode requires a separable source");
        for (int n = 0; n < nm; ++n) {
            const double c = table ? 1.0 : (s.f2_coeffs.empty() ? 0.0 : s.f2_coeffs[n]);
            if (c == 0.0 && !table) continue;
            const forward::ModeKernel mk =
                forward::build_mode_kernel(s.alpha, s.delta, s.eig->lambda(n + 1), s.time_grid);
            for (int i = 0; i < np; ++i) {
                const double tr = s.eig->dphi_trace(n + 1, gamma_pts[i]);
                for (int d = 1; d <= K; ++d) {
                    const double g2d = table ? s.f2_table[n][d] : c * s.g2.values[d];
                    V[i][d] += tr * g2d * mk.kbar[d];
                }
            }
        }
    }

    if (mode == MomentMode::semi_analytic) {
        // exact second moment of the discrete stochastic convolution
        out.provenance = "semi-analytic";
        for (int i = 0; i < np; ++i)
            for (int m = 1; m <= K; ++m) {
                double acc = 0.0;
                for (int d = 1; d <= m; ++d) acc += V[i][d] * V[i][d];
                out.var_flux[i][m] = acc * h;
            }
        return out;
    }

    // Monte Carlo: accumulate per-block partial sums, merge in block order
    const int M = s.n_paths;
    const int block = 256;
    const int n_blocks = (M + block - 1) / block;
    struct Partial {
        std::vector<double> sum, sumsq; // np * sz
    };
    std::vector<Partial> partials(n_blocks);
    forward::parallel_blocks(M, block, workers, [&](int lo, int hi) {
        const int b = lo / block;
        Partial& pa = partials[b];
        pa.sum.assign((std::size_t)np * sz, 0.0);
        pa.sumsq.assign((std::size_t)np * sz, 0.0);
        std::vector<double> flux(sz);
        for (int p = lo; p < hi; ++p) {
            const auto incs =
                fracops::BrownianIncrements::generate(s.time_grid, s.seed, (std::uint64_t)p);
            for (int i = 0; i < np; ++i) {
                flux[0] = 0.0;
                for (int m = 1; m <= K; ++m) {
                    double acc = 0.0;
                    const double* vi = V[i].data();
                    const double* db = incs.db.data();
                    for (int k = 0; k < m; ++k) acc += vi[m - k] * db[k];
                    flux[m] = out.mean_flux[i][m] + acc;
                }
                for (int k = 0; k < sz; ++k) {
                    pa.sum[(std::size_t)i * sz + k] += flux[k];
                    pa.sumsq[(std::size_t)i * sz + k] += flux[k] * flux[k];
                }
            }
        }
    });
    for (int i = 0; i < np; ++i)
        for (int k = 0; k < sz; ++k) {
            double sum = 0.0, sumsq = 0.0;
            for (int b = 0; b < n_blocks; ++b) {
                sum += partials[b].sum[(std::size_t)i * sz + k];
                sumsq += partials[b].sumsq[(std::size_t)i * sz + k];
            }
            const double mean = sum / M;
            out.mean_flux[i][k] = mean;
            out.var_flux[i][k] = M >= 2 ? std::max(0.0, (sumsq - sum * mean) / (M - 1)) : 0.0;
        }
    out.provenance = "mc:" + std::to_string(M);
    return out;
}

GridFunction deconvolve_volterra(const GridFunction& m, const GridFunction& g, double g_min) {
    m.validate();
    g.validate();
    if (!(m.grid == g.grid)) throw domain_error("deconvolve_volterra: grid mismatch");
    const double g0 = g.values[0];
    if (std::abs(g0) < g_min)
        throw domain_error("deconvolve_volterra: |g(0)| below threshold, first-kind problem ill-posed");
    if (std::abs(m.values[0]) > 1e-6 * (1.0 + m.max_norm()))
        warn("deconvolve_volterra: m(0) != 0");

    const int n = m.grid.n_steps;
    const double h = m.grid.h();
    const std::vector<double> md = derivative4(m.values, h);
    const std::vector<double> gd = derivative4(g.values, h);

    double gd_l1 = 0.0;
    for (int k = 0; k <= n; ++k) gd_l1 += std::abs(gd[k]) * h;
    if (gd_l1 > 50.0 * std::abs(g0))
        warn("deconvolve_volterra: poorly conditioned, ||g'||_1 / |g(0)| = " +
             std::to_string(gd_l1 / std::abs(g0)));

    GridFunction out(m.grid);
    out.values[0] = md[0] / g0;
    for (int i = 1; i <= n; ++i) {
        double hist = 0.0;
        for (int j = 0; j < i; ++j) {
            const double w = (j == 0) ? 0.5 * h : h;
            hist += w * gd[i - j] * out.values[j];
        }
        out.values[i] = (md[i] - hist) / (g0 + 0.5 * h * gd[0]);
    }
    return out;
}

GridFunction deconvolve_variance(const GridFunction& v, const GridFunction& g2, double* clamped,
                                 double g_min) {
    v.validate();
    g2.validate();
    if (std::abs(g2.values[0]) < g_min)
        throw domain_error("deconvolve_variance: |g2(0)| below threshold");
    double scale = v.max_norm();
    for (double x : v.values)
        if (x < -1e-9 * (1.0 + scale))
            throw domain_error("deconvolve_variance: variance data negative beyond noise floor");

    GridFunction gsq(g2.grid);
    for (int k = 0; k < g2.grid.size(); ++k) gsq.values[k] = g2.values[k] * g2.values[k];
    GridFunction q = deconvolve_volterra(v, gsq, g_min * g_min);

    double clamp_mag = 0.0;
    for (double& x : q.values)
        if (x < 0.0) {
            clamp_mag += -x * q.grid.h();
            x = 0.0;
        }
    if (clamped) *clamped = clamp_mag;
    if (clamp_mag > 1e-3 * (1.0 + q.max_norm()))
        warn("deconvolve_variance: clamped negativity " + std::to_string(clamp_mag));
    return q;
}

GridFunction invert_fractional_smoothing(const GridFunction& hh, double alpha, double delta) {
    hh.validate();
    if (!(delta >= 0.0 && delta < 0.5) || !(alpha + delta > 0.5))
        throw domain_error("invert_fractional_smoothing: condition on (alpha, delta) violated");
    const double e = alpha + delta - 1.0;
    if (std::abs(e) < 1e-12) return hh;
    if (e < 0.0) return fracops::rl_integral(hh, -e);
    if (e < 1.0) return fracops::rl_derivative(hh, e);
    // e in [1, 1.5): one plain derivative after the fractional part
    GridFunction base = (e == 1.0) ? hh : fracops::rl_derivative(hh, e - 1.0);
    GridFunction out(hh.grid);
    out.values = derivative2(base.values, hh.grid.h());
    return out;
}

ModeFit recover_modes(const std::vector<GridFunction>& traces,
                      const std::vector<double>& boundary_points,
                      const spectral::EigenSystem& eig, double alpha, int n_rec, double reg,
                      bool truncated_svd, int t_min_nodes) {
    if (traces.empty() || traces.size() != boundary_points.size())
        throw domain_error("recover_modes: traces/boundary points mismatch");
    if (n_rec < 1 || n_rec > eig.count())
        throw domain_error("recover_modes: n_rec out of range");
    const int sz = traces[0].grid.size();
    const int k0 = std::max(1, t_min_nodes);

    // modes with no usable trace at any observed endpoint are unrecoverable
    std::vector<int> usable, excluded;
    double tr_scale = 0.0;
    for (int n = 1; n <= n_rec; ++n)
        for (double x : boundary_points) tr_scale = std::max(tr_scale, std::abs(eig.dphi_trace(n, x)));
    for (int n = 1; n <= n_rec; ++n) {
        bool ok = false;
        for (double x : boundary_points)
            if (std::abs(eig.dphi_trace(n, x)) > 1e-12 * tr_scale) ok = true;
        (ok ? usable : excluded).push_back(n);
    }
    if (!excluded.empty())
        warn("recover_modes: excluded " + std::to_string(excluded.size()) +
             " modes with vanishing boundary trace");
    const int nu = (int)usable.size();
    const int rows_per = sz - k0;
    const long rows = (long)rows_per * (long)traces.size();
    if (rows < 4L * n_rec) throw domain_error("recover_modes: need time samples >= 4*n_rec");

    Eigen::MatrixXd A(rows, nu);
    Eigen::VectorXd b(rows);
    long r = 0;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const auto& g = traces[i].grid;
        for (int k = k0; k < sz; ++k, ++r) {
            b[r] = traces[i].values[k];
            const double ta = std::pow(g.node(k), alpha);
            for (int c = 0; c < nu; ++c) {
                const int n = usable[c];
                A(r, c) = eig.dphi_trace(n, boundary_points[i]) *
                          mlf::eval_ml({alpha, 1.0}, eig.lambda(n) * ta);
            }
        }
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv.size() ? sv[0] : 0.0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nu);
    double smallest = 0.0;
    if (smax > 0.0) {
        Eigen::VectorXd utb = svd.matrixU().transpose() * b;
        Eigen::VectorXd y(sv.size());
        for (int i = 0; i < sv.size(); ++i) {
            if (truncated_svd) {
                const double cut = reg > 0.0 ? reg * smax : 1e-10 * smax;
                y[i] = sv[i] >= cut ? utb[i] / sv[i] : 0.0;
                if (sv[i] >= cut) smallest = sv[i];
            } else {
                y[i] = sv[i] * utb[i] / (sv[i] * sv[i] + std::max(reg, 0.0));
                smallest = sv[sv.size() - 1];
            }
        }
        c = svd.matrixV() * y;
    }

    ModeFit fit;
    fit.coeffs.assign(n_rec, 0.0);
    for (int i = 0; i < nu; ++i) fit.coeffs[usable[i] - 1] = c[i];
    fit.residual = (A * c - b).norm();
    fit.smallest_singular = smallest;
    fit.sigma_max = smax;
    fit.excluded = excluded;
    if (smallest > 0.0 && smallest < 1e-12 * smax)
        warn("recover_modes: rank-deficient design matrix, smallest retained sigma = " +
             std::to_string(smallest));
    return fit;
}

GridFunction smooth_local_quadratic(const GridFunction& f, int window) {
    f.validate();
    if (window < 5 || window % 2 == 0)
        throw domain_error("smooth_local_quadratic: window must be odd and >= 5");
    const int n = (int)f.values.size();
    if (window > n) return f;
    GridFunction out(f.grid);
    const int hw = window / 2;
    for (int i = 0; i < n; ++i) {
        const int lo = std::clamp(i - hw, 0, n - window);
        Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
        Eigen::Vector3d atb = Eigen::Vector3d::Zero();
        for (int j = lo; j < lo + window; ++j) {
            const double u = (double)(j - i);
            const Eigen::Vector3d row(1.0, u, u * u);
            ata += row * row.transpose();
            atb += row * f.values[j];
        }
        out.values[i] = ata.ldlt().solve(atb)[0];
    }
    return out;
}

namespace {

struct SignedFit {
    ModeFit fit;
    std::vector<int> pattern;
};

// contiguous segments where the deconvolved square is meaningfully nonzero
std::vector<std::pair<int, int>> segments_of(const std::vector<double>& q, double thresh) {
    std::vector<std::pair<int, int>> seg;
    int start = -1;
    for (int k = 0; k < (int)q.size(); ++k) {
        if (q[k] > thresh) {
            if (start < 0) start = k;
        } else if (start >= 0) {
            seg.emplace_back(start, k);
            start = -1;
        }
    }
    if (start >= 0) seg.emplace_back(start, (int)q.size());
    return seg;
}

} // namespace

RecoveryResult recover_sources(const MomentData& m, const forward::Scenario& known,
                               const RecoveryOptions& opt) {
    m.validate();
    known.validate();
    if (!(m.grid == known.time_grid))
        throw domain_error("recover_sources: moment grid differs from scenario grid");
    if ((int)known.g1.values.size() != m.grid.size() ||
        (int)known.g2.values.size() != m.grid.size())
        throw domain_error("recover_sources: g1/g2 not sampled on the data grid");
    if (std::abs(known.g1.values[0]) < 1e-8 || std::abs(known.g2.values[0]) < 1e-8)
        throw domain_error("recover_sources: g1(0) and g2(0) must be nonzero");

    const auto& eig = *known.eig;
    const double alpha = known.alpha, delta = known.delta;
    const int np = (int)m.boundary_points.size();
    RecoveryResult out;

    auto run_stage = [&](const char* stage, auto&& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            throw numerical_error(std::string("recover_sources[") + stage + "]: " + e.what());
        }
    };

    // ---- Step 1: expectation data -> f1 --------------------------------
    std::vector<GridFunction> w1(np, GridFunction(m.grid));
    double mean_scale = 0.0;
    for (int i = 0; i < np; ++i) {
        GridFunction mean(m.grid, m.mean_flux[i]);
        if (m.is_mc()) mean = smooth_local_quadratic(mean, opt.smoothing_window);
        mean_scale = std::max(mean_scale, mean.max_norm());
        const GridFunction h = run_stage("mean_deconvolution", [&] {
            return deconvolve_volterra(mean, known.g1);
        });
        // stage residual: re-convolve and compare
        {
            GridFunction recon(m.grid);
            const double dt = m.grid.h();
            for (int t = 1; t < m.grid.size(); ++t) {
                double acc = 0.0;
                for (int j = 0; j <= t; ++j) {
                    const double w = (j == 0 || j == t) ? 0.5 : 1.0;
                    acc += w * known.g1.values[j] * h.values[t - j];
                }
                recon.values[t] = acc * dt;
            }
            double num = 0.0, den = 0.0;
            for (int t = 0; t < m.grid.size(); ++t) {
                num += (recon.values[t] - mean.values[t]) * (recon.values[t] - mean.values[t]);
                den += mean.values[t] * mean.values[t];
            }
            out.residuals.push_back(
                {"mean_deconvolution", den > 0 ? std::sqrt(num / den) : std::sqrt(num)});
        }
        w1[i] = run_stage("mean_smoothing_inversion",
                          [&] { return invert_fractional_smoothing(h, alpha, delta); });
    }
    const ModeFit probe = run_stage("f1_mode_fit", [&] {
        return recover_modes(w1, m.boundary_points, eig, alpha, opt.n_rec, 0.0,
                             opt.truncated_svd, opt.t_min_nodes);
    });
    double reg = opt.reg;
    if (reg < 0.0) {
        if (m.noise_estimate > 0.0) {
            // discrepancy principle over a log grid
            const long rows = (long)(m.grid.size() - std::max(1, opt.t_min_nodes)) * np;
            const double target = m.noise_estimate * std::sqrt((double)rows);
            double best_gap = 1e300;
            for (double r = 1e-12; r <= 1.0; r *= 10.0) {
                const double rr = r * probe.sigma_max * probe.sigma_max;
                const ModeFit trial = recover_modes(w1, m.boundary_points, eig, alpha, opt.n_rec,
                                                    rr, opt.truncated_svd, opt.t_min_nodes);
                const double gap = std::abs(trial.residual - target);
                if (gap < best_gap) {
                    best_gap = gap;
                    reg = rr;
                }
            }
        } else {
            reg = 1e-6 * probe.sigma_max * probe.sigma_max;
        }
    }
    const ModeFit f1 = recover_modes(w1, m.boundary_points, eig, alpha, opt.n_rec, reg,
                                     opt.truncated_svd, opt.t_min_nodes);
    out.f1_coeffs = f1.coeffs;
    out.residuals.push_back({"f1_mode_fit", f1.residual});
    out.excluded_modes = f1.excluded;
    out.regularization = reg;

    // ---- Step 2: variance data -> f2 ------------------------------------
    std::vector<GridFunction> wabs(np, GridFunction(m.grid));
    std::vector<std::vector<std::pair<int, int>>> segs(np);
    double clamp_total = 0.0;
    for (int i = 0; i < np; ++i) {
        GridFunction var(m.grid, m.var_flux[i]);
        if (m.is_mc()) {
            var = smooth_local_quadratic(var, opt.smoothing_window);
            for (double& v : var.values) v = std::max(v, 0.0);
        }
        double clamp = 0.0;
        const GridFunction q = run_stage("variance_deconvolution", [&] {
            return deconvolve_variance(var, known.g2, &clamp);
        });
        clamp_total += clamp;
        double qmax = 0.0;
        for (double v : q.values) qmax = std::max(qmax, v);
        for (int k = 0; k < m.grid.size(); ++k) wabs[i].values[k] = std::sqrt(q.values[k]);
        segs[i] = segments_of(q.values, 1e-3 * qmax);
        out.residuals.push_back({"variance_deconvolution", clamp});
    }
    out.f2_clamp_magnitude = clamp_total;

    // Sign assignment: enumerate per-segment sign patterns (canonical class:
    // the first segment of the first endpoint is +), fit each, keep the best.
    int total_segs = 0;
    for (const auto& sg : segs) total_segs += (int)sg.size();
    total_segs = std::max(total_segs, 1);
    const int enum_segs = std::min(total_segs, 6);
    const int n_patterns = 1 << (enum_segs - 1 >= 0 ? enum_segs - 1 : 0);

    ModeFit best;
    double best_res = 1e300, second_res = 1e300;
    for (int pat = 0; pat < n_patterns; ++pat) {
        std::vector<GridFunction> w2(np, GridFunction(m.grid));
        int bit = 0;
        for (int i = 0; i < np; ++i) {
            w2[i] = wabs[i];
            for (const auto& [lo, hi] : segs[i]) {
                int sign = 1;
                if (bit > 0 && bit <= enum_segs - 1) sign = (pat >> (bit - 1)) & 1 ? -1 : 1;
                ++bit;
                if (sign < 0)
                    for (int k = lo; k < hi; ++k) w2[i].values[k] = -w2[i].values[k];
            }
        }
        std::vector<GridFunction> tr2(np, GridFunction(m.grid));
        bool ok = true;
        for (int i = 0; i < np; ++i) {
            try {
                tr2[i] = invert_fractional_smoothing(w2[i], alpha, delta);
            } catch (const std::exception&) {
                ok = false;
            }
        }
        if (!ok) continue;
        const ModeFit fit = recover_modes(tr2, m.boundary_points, eig, alpha, opt.n_rec, reg,
                                          opt.truncated_svd, opt.t_min_nodes);
        if (fit.residual < best_res) {
            second_res = best_res;
            best_res = fit.residual;
            best = fit;
        } else if (fit.residual < second_res) {
            second_res = fit.residual;
        }
    }
    if (n_patterns > 1 && second_res < 1e300 && second_res <= 1.01 * best_res)
        out.f2_sign_ambiguous = true;

    // canonical global sign: the largest-magnitude coefficient is positive
    {
        double big = 0.0;
        for (double c : best.coeffs)
            if (std::abs(c) > std::abs(big)) big = c;
        if (big < 0.0)
            for (double& c : best.coeffs) c = -c;
    }
    out.f2_coeffs = best.coeffs;
    out.residuals.push_back({"f2_mode_fit", best.residual});
    return out;
}

MomentData read_moments_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw domain_error("read_moments_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw domain_error("read_moments_csv: empty file");
    // header: x,t,mean,variance
    std::map<double, std::map<double, std::pair<double, double>>> table;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        double x, t, mean, var;
        if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &x, &t, &mean, &var) != 4)
            throw domain_error("read_moments_csv: bad row: " + line);
        table[x][t] = {mean, var};
    }
    if (table.empty()) throw domain_error("read_moments_csv: no data rows");
    MomentData m;
    const auto& first = table.begin()->second;
    const int n = (int)first.size() - 1;
    double T = first.rbegin()->first;
    m.grid = TimeGrid(T, n);
    for (const auto& [x, series] : table) {
        if ((int)series.size() != n + 1)
            throw domain_error("read_moments_csv: ragged time series");
        m.boundary_points.push_back(x);
        std::vector<double> mean, var;
        for (const auto& [t, mv] : series) {
            mean.push_back(mv.first);
            var.push_back(mv.second);
        }
        m.mean_flux.push_back(std::move(mean));
        m.var_flux.push_back(std::move(var));
    }
    m.provenance = "csv";
    m.validate();
    return m;
}

void write_moments_csv(const std::string& path, const MomentData& m) {
    std::ofstream f(path);
    if (!f) throw numerical_error("write_moments_csv: cannot open " + path);
    f << "x,t,mean,variance\n";
    char line[160];
    for (std::size_t i = 0; i < m.boundary_points.size(); ++i)
        for (int k = 0; k < m.grid.size(); ++k) {
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", m.boundary_points[i],
                          m.grid.node(k), m.mean_flux[i][k], m.var_flux[i][k]);
            f << line;
        }
}

std::string recovery_to_json(const RecoveryResult& r) {
    nlohmann::json j;
    j["f1_coeffs"] = r.f1_coeffs;
    j["f2_coeffs"] = r.f2_coeffs;
    j["f2_sign_ambiguous"] = r.f2_sign_ambiguous;
    j["f2_sign_convention"] = "largest-magnitude coefficient positive";
    j["regularization"] = r.regularization;
    j["excluded_modes"] = r.excluded_modes;
    j["f2_clamp_magnitude"] = r.f2_clamp_magnitude;
    nlohmann::json res = nlohmann::json::array();
    for (const auto& s : r.residuals) res.push_back({{"stage", s.stage}, {"value", s.value}});
    j["residuals"] = res;
    return j.dump(2);
}

} // namespace stfde::inverse
