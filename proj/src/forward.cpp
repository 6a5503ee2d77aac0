#include "stfde/forward.hpp"

#include <algorithm>
#include <cmath>
#include <atomic>
#include <cstring>
#include <mutex>
#include <fstream>
#include <functional>
#include <ostream>
#include <thread>

#include "stfde/mlf.hpp"

namespace stfde::forward {

namespace {

// pairwise sum over [lo, hi): reduction order fixed by the index range only
double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
    const std::size_t n = hi - lo;
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += v[i];
        return s;
    }
    const std::size_t mid = lo + n / 2;
    return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return h;
}

std::uint64_t hash_double(double d) {
    std::uint64_t u;
    std::memcpy(&u, &d, sizeof u);
    return u;
}

} // namespace

bool Scenario::has_initial() const {
    auto nz = [](const std::vector<double>& v) {
        for (double x : v)
            if (x != 0.0) return true;
        return false;
    };
    return nz(u0_coeffs) || nz(u1_coeffs);
}

bool Scenario::has_deterministic_source() const {
    if (!f1_table.empty()) return true;
    for (double x : f1_coeffs)
        if (x != 0.0) return true;
    return false;
}

bool Scenario::has_stochastic_source() const {
    if (!f2_table.empty()) return true;
    for (double x : f2_coeffs)
        if (x != 0.0) return true;
    return false;
}

int Scenario::n_modes() const { return eig ? eig->count() : 0; }

void Scenario::validate() const {
    if (!eig) throw domain_error("Scenario: missing eigensystem");
    if (!(alpha > 0.0 && alpha < 2.0) || alpha == 1.0)
        throw domain_error("Scenario: alpha must lie in (0,1) or (1,2)");
    if (!(delta >= 0.0 && delta < 0.5)) throw domain_error("Scenario: delta must lie in [0,1/2)");
    if (!(alpha + delta > 0.5)) throw domain_error("Scenario: condition alpha + delta > 1/2 violated");
    if (!(T > 0.0)) throw domain_error("Scenario: T must be positive");
    time_grid.validate();
    if (time_grid.t_max != T) throw domain_error("Scenario: time_grid horizon differs from T");
    if (n_paths < 1) throw domain_error("Scenario: n_paths must be >= 1");
    const std::size_t n = (std::size_t)eig->count();
    auto chk = [&](const std::vector<double>& v, const char* name) {
        if (!v.empty() && v.size() != n)
            throw domain_error(std::string("Scenario: ") + name + " length must match mode count");
        for (double x : v)
            if (!std::isfinite(x)) throw domain_error("Scenario: non-finite coefficient");
    };
    chk(u0_coeffs, "u0_coeffs");
    chk(u1_coeffs, "u1_coeffs");
    chk(f1_coeffs, "f1_coeffs");
    chk(f2_coeffs, "f2_coeffs");
    auto chk_table = [&](const std::vector<std::vector<double>>& t, const char* name) {
        if (t.empty()) return;
        if (t.size() != n) throw domain_error(std::string("Scenario: ") + name + " mode count");
        for (const auto& row : t)
            if ((int)row.size() != time_grid.size())
                throw domain_error(std::string("Scenario: ") + name + " row length");
    };
    chk_table(f1_table, "f1_table");
    chk_table(f2_table, "f2_table");
    if (has_deterministic_source() && f1_table.empty() &&
        (int)g1.values.size() != time_grid.size())
        throw domain_error("Scenario: g1 not sampled on time_grid");
    if (has_stochastic_source() && f2_table.empty() &&
        (int)g2.values.size() != time_grid.size())
        throw domain_error("Scenario: g2 not sampled on time_grid");
}

std::uint64_t scenario_hash(const Scenario& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    h = hash_mix(h, hash_double(s.alpha));
    h = hash_mix(h, hash_double(s.delta));
    h = hash_mix(h, hash_double(s.T));
    h = hash_mix(h, (std::uint64_t)s.time_grid.n_steps);
    h = hash_mix(h, (std::uint64_t)s.n_paths);
    h = hash_mix(h, s.seed);
    for (const auto* v : {&s.u0_coeffs, &s.u1_coeffs, &s.f1_coeffs, &s.f2_coeffs})
        for (double x : *v) h = hash_mix(h, hash_double(x));
    for (double x : s.g1.values) h = hash_mix(h, hash_double(x));
    for (double x : s.g2.values) h = hash_mix(h, hash_double(x));
    return h;
}

void FieldEnsemble::check() const {
    for (const auto& p : paths) {
        if ((int)p.size() != n_modes * grid.size())
            throw numerical_error("FieldEnsemble: inconsistent dimensions");
        for (double v : p)
            if (!std::isfinite(v)) throw numerical_error("FieldEnsemble: non-finite entry");
    }
}

ModeKernel build_mode_kernel(double alpha, double delta, double lambda, const TimeGrid& g) {
    if (!(lambda > 0.0)) throw domain_error("build_mode_kernel: lambda must be positive");
    const int n = g.n_steps;
    const double h = g.h();
    const double mu = alpha + delta; // kernel exponent + 1
    ModeKernel mk;
    mk.p.assign(n + 1, 0.0);
    mk.q.assign(n + 1, 0.0);
    mk.kbar.assign(n + 1, 0.0);
    for (int d = 1; d <= n; ++d) {
        const double s1 = (d - 1) * h, s2 = d * h;
        const double mid = (d - 0.5) * h;
        const double e_mid = mlf::eval_ml({alpha, mu}, lambda * std::pow(mid, alpha));
        const double m0 = fracops::detail::power_moment(mu - 1.0, s1, s2);
        const double m1 = fracops::detail::power_moment(mu, s1, s2);
        mk.p[d] = e_mid * (s2 * m0 - m1) / h;
        mk.q[d] = e_mid * (m1 - s1 * m0) / h;
        const double msq = fracops::detail::power_moment(2.0 * mu - 2.0, s1, s2);
        mk.kbar[d] = e_mid * std::sqrt(msq / h);
    }
    return mk;
}

std::vector<double> subdiffusion_mode(double alpha, double lambda, double coeff,
                                      const TimeGrid& g) {
    if (!(lambda > 0.0)) throw domain_error("subdiffusion_mode: lambda must be positive");
    std::vector<double> v(g.size());
    for (int k = 0; k < g.size(); ++k)
        v[k] = coeff == 0.0
                   ? 0.0
                   : coeff * mlf::eval_ml({alpha, 1.0}, lambda * std::pow(g.node(k), alpha));
    return v;
}

std::vector<double> wave_mode(double alpha, double lambda, double u0c, double u1c,
                              const TimeGrid& g) {
    if (!(lambda > 0.0)) throw domain_error("wave_mode: lambda must be positive");
    std::vector<double> v(g.size(), 0.0);
    for (int k = 0; k < g.size(); ++k) {
        const double t = g.node(k);
        const double x = lambda * std::pow(t, alpha);
        if (u0c != 0.0) v[k] += u0c * mlf::eval_ml({alpha, 1.0}, x);
        if (u1c != 0.0) v[k] += u1c * t * mlf::eval_ml({alpha, 2.0}, x);
    }
    return v;
}

FieldEnsemble solve_initial_subdiffusion(const Scenario& s) {
    s.validate();
    if (s.alpha >= 1.0) throw domain_error("solve_initial_subdiffusion: needs alpha in (0,1)");
    if (s.has_deterministic_source() || s.has_stochastic_source())
        throw domain_error("solve_initial_subdiffusion: source coefficients must be zero");
    FieldEnsemble e;
    e.grid = s.time_grid;
    e.n_modes = s.n_modes();
    e.seed = s.seed;
    e.has_increments = true;
    e.scenario_id = scenario_hash(s);
    e.paths.assign(1, std::vector<double>(e.n_modes * e.grid.size(), 0.0));
    for (int n = 0; n < e.n_modes; ++n) {
        const double c = s.u0_coeffs.empty() ? 0.0 : s.u0_coeffs[n];
        const auto v = subdiffusion_mode(s.alpha, s.eig->lambda(n + 1), c, e.grid);
        std::copy(v.begin(), v.end(), e.paths[0].begin() + n * e.grid.size());
    }
    return e;
}

FieldEnsemble solve_initial_wave(const Scenario& s) {
    s.validate();
    if (s.alpha <= 1.0) throw domain_error("solve_initial_wave: needs alpha in (1,2)");
    if (s.has_deterministic_source() || s.has_stochastic_source())
        throw domain_error("solve_initial_wave: source coefficients must be zero");
    FieldEnsemble e;
    e.grid = s.time_grid;
    e.n_modes = s.n_modes();
    e.seed = s.seed;
    e.has_increments = true;
    e.scenario_id = scenario_hash(s);
    e.paths.assign(1, std::vector<double>(e.n_modes * e.grid.size(), 0.0));
    for (int n = 0; n < e.n_modes; ++n) {
        const double c0 = s.u0_coeffs.empty() ? 0.0 : s.u0_coeffs[n];
        const double c1 = s.u1_coeffs.empty() ? 0.0 : s.u1_coeffs[n];
        const auto v = wave_mode(s.alpha, s.eig->lambda(n + 1), c0, c1, e.grid);
        std::copy(v.begin(), v.end(), e.paths[0].begin() + n * e.grid.size());
    }
    return e;
}

namespace {

// G values of the lagged temporal factor for mode n (separable or table form)
std::vector<double> temporal_factor(const Scenario& s, int n, bool stochastic) {
    const auto& table = stochastic ? s.f2_table : s.f1_table;
    if (!table.empty()) return table[n];
    const auto& coeffs = stochastic ? s.f2_coeffs : s.f1_coeffs;
    const auto& g = stochastic ? s.g2 : s.g1;
    const double c = coeffs.empty() ? 0.0 : coeffs[n];
    std::vector<double> out(s.time_grid.size(), 0.0);
    if (c != 0.0)
        for (int k = 0; k < s.time_grid.size(); ++k) out[k] = c * g.values[k];
    return out;
}

bool all_zero(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

} // namespace

namespace {

// kernel tables and deterministic mode parts, shared across the whole ensemble
struct PreparedSource {
    std::vector<ModeKernel> kernels;          // per mode
    std::vector<std::vector<double>> det;     // deterministic v_{n,1}, per mode
    std::vector<double> f2_scale;             // factored stochastic coefficient
    std::vector<const std::vector<double>*> g2n; // lagged stochastic temporal factor
    std::vector<std::vector<double>> g2n_storage;
    bool stochastic = false;
};

PreparedSource prepare_source(const Scenario& s) {
    const int nm = s.n_modes();
    const int K = s.time_grid.n_steps;
    const int sz = s.time_grid.size();
    PreparedSource ps;
    ps.kernels.reserve(nm);
    ps.det.assign(nm, {});
    ps.f2_scale.assign(nm, 0.0);
    ps.g2n_storage.resize(nm);
    ps.g2n.assign(nm, nullptr);
    ps.stochastic = s.has_stochastic_source();
    for (int n = 0; n < nm; ++n) {
        ps.kernels.push_back(
            build_mode_kernel(s.alpha, s.delta, s.eig->lambda(n + 1), s.time_grid));
        const ModeKernel& mk = ps.kernels.back();

        std::vector<double> v(sz, 0.0);
        const std::vector<double> g1n = temporal_factor(s, n, false);
        if (!all_zero(g1n)) {
            for (int m = 1; m <= K; ++m) {
                double acc = 0.0;
                for (int d = 1; d <= m; ++d)
                    acc += g1n[m - d + 1] * mk.p[d] + g1n[m - d] * mk.q[d];
                v[m] = acc;
            }
        }
        ps.det[n] = std::move(v);

        if (ps.stochastic) {
            // separable: factor the mode coefficient out of the convolution so
            // scaling f2 scales the path contribution bit-exactly
            if (s.f2_table.empty()) {
                ps.f2_scale[n] = s.f2_coeffs.empty() ? 0.0 : s.f2_coeffs[n];
                ps.g2n[n] = &s.g2.values;
            } else {
                ps.f2_scale[n] = 1.0;
                ps.g2n_storage[n] = s.f2_table[n];
                ps.g2n[n] = &ps.g2n_storage[n];
            }
        }
    }
    return ps;
}

std::vector<double> source_path(const Scenario& s, const PreparedSource& ps,
                                std::uint64_t path_id) {
    const int nm = s.n_modes();
    const int K = s.time_grid.n_steps;
    const int sz = s.time_grid.size();
    std::vector<double> out((std::size_t)nm * sz, 0.0);

    BrownianIncrements incs;
    if (ps.stochastic) incs = BrownianIncrements::generate(s.time_grid, s.seed, path_id);

    for (int n = 0; n < nm; ++n) {
        double* v = out.data() + (std::size_t)n * sz;
        for (int k = 0; k < sz; ++k) v[k] = ps.det[n][k];
        if (ps.stochastic && ps.f2_scale[n] != 0.0) {
            const ModeKernel& mk = ps.kernels[n];
            const std::vector<double>& g2n = *ps.g2n[n];
            const double c2 = ps.f2_scale[n];
            for (int m = 1; m <= K; ++m) {
                double acc = 0.0;
                for (int k = 0; k < m; ++k) acc += g2n[m - k] * mk.kbar[m - k] * incs.db[k];
                v[m] += c2 * acc;
            }
        }
    }
    return out;
}

} // namespace

std::vector<double> solve_source_path(const Scenario& s, std::uint64_t path_id) {
    s.validate();
    if (s.has_initial()) throw domain_error("solve_source: initial coefficients must be zero");
    return source_path(s, prepare_source(s), path_id);
}

void parallel_blocks(int n_items, int block, int workers,
                     const std::function<void(int, int)>& body) {
    if (workers <= 1 || n_items <= block) {
        for (int lo = 0; lo < n_items; lo += block) body(lo, std::min(lo + block, n_items));
        return;
    }
    std::atomic<int> next{0};
    const int n_blocks = (n_items + block - 1) / block;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto run = [&]() {
        try {
            for (;;) {
                const int b = next.fetch_add(1);
                if (b >= n_blocks) return;
                const int lo = b * block;
                body(lo, std::min(lo + block, n_items));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    const int nw = std::min(workers, n_blocks);
    pool.reserve(nw);
    for (int w = 0; w < nw; ++w) pool.emplace_back(run);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

FieldEnsemble solve_source(const Scenario& s, int workers) {
    s.validate();
    if (s.has_initial()) throw domain_error("solve_source: initial coefficients must be zero");
    FieldEnsemble e;
    e.grid = s.time_grid;
    e.n_modes = s.n_modes();
    e.seed = s.seed;
    e.has_increments = true;
    e.scenario_id = scenario_hash(s);
    e.paths.resize(s.n_paths);
    const PreparedSource ps = prepare_source(s);
    // each path writes its own slot: result independent of scheduling
    parallel_blocks(s.n_paths, 16, workers, [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) e.paths[p] = source_path(s, ps, (std::uint64_t)p);
    });
    return e;
}

std::vector<double> reference_timestep(const Scenario& s) {
    s.validate();
    if (s.has_stochastic_source()) throw domain_error("reference_timestep: requires f2 = 0");
    const int nm = s.n_modes();
    const int K = s.time_grid.n_steps;
    const int sz = s.time_grid.size();
    const double h = s.time_grid.h();
    const double rg = mlf::rgamma(s.alpha);

    // product-trapezoid weights of I^alpha on the uniform grid, by lag
    std::vector<double> wl(K + 1, 0.0), wr(K + 1, 0.0);
    for (int d = 1; d <= K; ++d) {
        const double s1 = (d - 1) * h, s2 = d * h;
        const double m0 = fracops::detail::power_moment(s.alpha - 1.0, s1, s2);
        const double m1 = fracops::detail::power_moment(s.alpha, s1, s2);
        wl[d] = rg * (m1 - s1 * m0) / h;
        wr[d] = rg * (s2 * m0 - m1) / h;
    }

    std::vector<double> out((std::size_t)nm * sz, 0.0);
    for (int n = 0; n < nm; ++n) {
        const double lam = s.eig->lambda(n + 1);
        double* v = out.data() + (std::size_t)n * sz;

        // right-hand side <u0>_n + t <u1>_n + I^(alpha+delta)(f1 g1)_n
        std::vector<double> rhs(sz, 0.0);
        const double u0c = s.u0_coeffs.empty() ? 0.0 : s.u0_coeffs[n];
        const double u1c = (s.wave() && !s.u1_coeffs.empty()) ? s.u1_coeffs[n] : 0.0;
        for (int k = 0; k < sz; ++k) rhs[k] = u0c + s.time_grid.node(k) * u1c;
        const std::vector<double> g1n = temporal_factor(s, n, false);
        if (!all_zero(g1n)) {
            GridFunction f(s.time_grid, g1n);
            const GridFunction ia = fracops::rl_integral(f, s.alpha + s.delta);
            for (int k = 0; k < sz; ++k) rhs[k] += ia.values[k];
        }

        v[0] = rhs[0];
        const double diag = 1.0 + lam * wr[1];
        for (int m = 1; m <= K; ++m) {
            double hist = 0.0;
            for (int i = 0; i < m; ++i) {
                double w = wl[m - i];
                if (i >= 1) w += wr[m - i + 1];
                hist += v[i] * w;
            }
            v[m] = (rhs[m] - lam * hist) / diag;
        }
    }
    return out;
}

EnsembleStats ensemble_stats(const FieldEnsemble& e, const std::vector<double>& lambdas,
                             double gamma) {
    e.check();
    const int M = e.n_paths();
    if (M < 1) throw domain_error("ensemble_stats: empty ensemble");
    if ((int)lambdas.size() < e.n_modes) throw domain_error("ensemble_stats: missing eigenvalues");
    const int sz = e.grid.size();
    EnsembleStats st;
    st.grid = e.grid;
    st.n_modes = e.n_modes;
    st.m_paths = M;
    st.gamma = gamma;
    st.mean.assign((std::size_t)e.n_modes * sz, 0.0);
    st.variance.assign((std::size_t)e.n_modes * sz, 0.0);

    std::vector<double> buf(M);
    for (int n = 0; n < e.n_modes; ++n) {
        for (int k = 0; k < sz; ++k) {
            for (int p = 0; p < M; ++p) buf[p] = e.value(p, n, k);
            const double mean = pairwise_sum(buf, 0, M) / M;
            st.mean[n * sz + k] = mean;
            if (M >= 2) {
                for (int p = 0; p < M; ++p) {
                    const double d = buf[p] - mean;
                    buf[p] = d * d;
                }
                st.variance[n * sz + k] = pairwise_sum(buf, 0, M) / (M - 1);
            }
        }
    }

    // norm functionals: E_omega sum_n w_n v_n^2 per time node, then sup / integral
    auto time_norms = [&](double expo, double* sup_out, double* int_out) {
        double sup = 0.0, integral = 0.0;
        const double h = e.grid.h();
        for (int k = 0; k < sz; ++k) {
            double s = 0.0;
            for (int n = 0; n < e.n_modes; ++n) {
                const double w = expo == 0.0 ? 1.0 : std::pow(lambdas[n], expo);
                // E[v^2] = mean^2 + (M-1)/M * var ... use direct second moment
                double m2 = 0.0;
                for (int p = 0; p < M; ++p) {
                    const double v = e.value(p, n, k);
                    m2 += v * v;
                }
                s += w * m2 / M;
            }
            sup = std::max(sup, s);
            integral += ((k == 0 || k == sz - 1) ? 0.5 : 1.0) * s * h;
        }
        *sup_out = std::sqrt(sup);
        *int_out = std::sqrt(integral);
    };
    double sup, l2;
    time_norms(0.0, &sup, &l2);
    st.sup_t_l2 = sup;
    st.l2_d_t_omega = l2;
    double sup_g, l2_g;
    time_norms(2.0 * gamma, &sup_g, &l2_g);
    st.l2_h2gamma = l2_g;
    return st;
}

std::vector<double> weak_residual(const FieldEnsemble& e, const Scenario& s) {
    s.validate();
    e.check();
    const bool stoch = s.has_stochastic_source();
    if (stoch && !e.has_increments)
        throw domain_error("weak_residual: ensemble lacks the originating increments");
    const int sz = e.grid.size();
    std::vector<double> res(e.n_modes, 0.0);

    for (int p = 0; p < e.n_paths(); ++p) {
        BrownianIncrements incs;
        if (stoch) incs = BrownianIncrements::generate(e.grid, e.seed, (std::uint64_t)p);
        for (int n = 0; n < e.n_modes; ++n) {
            const double lam = s.eig->lambda(n + 1);
            GridFunction v(e.grid);
            for (int k = 0; k < sz; ++k) v.values[k] = e.value(p, n, k);
            const GridFunction iav = fracops::rl_integral(v, s.alpha);

            std::vector<double> rhs(sz, 0.0);
            const double u0c = s.u0_coeffs.empty() ? 0.0 : s.u0_coeffs[n];
            const double u1c = (s.wave() && !s.u1_coeffs.empty()) ? s.u1_coeffs[n] : 0.0;
            for (int k = 0; k < sz; ++k) rhs[k] = u0c + e.grid.node(k) * u1c;
            const std::vector<double> g1n = temporal_factor(s, n, false);
            if (!all_zero(g1n)) {
                const GridFunction ia =
                    fracops::rl_integral(GridFunction(e.grid, g1n), s.alpha + s.delta);
                for (int k = 0; k < sz; ++k) rhs[k] += ia.values[k];
            }
            if (stoch) {
                const std::vector<double> g2n = temporal_factor(s, n, true);
                if (!all_zero(g2n)) {
                    const GridFunction ito = fracops::rl_integral_ito(
                        GridFunction(e.grid, g2n), s.alpha + s.delta, incs);
                    for (int k = 0; k < sz; ++k) rhs[k] += ito.values[k];
                }
            }

            GridFunction r(e.grid);
            for (int k = 0; k < sz; ++k) r.values[k] = v.values[k] + lam * iav.values[k] - rhs[k];
            res[n] += r.l2_norm();
        }
    }
    for (double& r : res) r /= e.n_paths();
    return res;
}

double decay_exponent(const EnsembleStats& st, const std::vector<double>& lambdas,
                      double t_lo, double t_hi) {
    (void)lambdas;
    std::vector<double> xs, ys;
    for (int k = 1; k < st.grid.size(); ++k) {
        const double t = st.grid.node(k);
        if (t < t_lo || t > t_hi) continue;
        double s = 0.0;
        for (int n = 0; n < st.n_modes; ++n) {
            const double m = st.mean_at(n, k);
            s += m * m + (st.m_paths >= 2 ? st.var_at(n, k) : 0.0);
        }
        if (s <= 0.0) continue;
        xs.push_back(std::log(t));
        ys.push_back(0.5 * std::log(s));
    }
    if (xs.size() < 4) throw domain_error("decay_exponent: too few samples in [t_lo, t_hi]");
    const double n = (double)xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void write_summary_csv(std::ostream& os, const EnsembleStats& st) {
    os << "mode,t,mean,variance,M\n";
    char line[160];
    for (int n = 0; n < st.n_modes; ++n)
        for (int k = 0; k < st.grid.size(); ++k) {
            std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%d\n", n + 1,
                          st.grid.node(k), st.mean_at(n, k), st.var_at(n, k), st.m_paths);
            os << line;
        }
}

namespace {
constexpr char kMagic[8] = {'S', 'T', 'F', 'D', 'B', 'I', 'N', '1'};
}

void write_ensemble_binary(const std::string& path, const FieldEnsemble& e) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw numerical_error("write_ensemble_binary: cannot open " + path);
    f.write(kMagic, 8);
    const std::uint32_t version = 1;
    const std::uint64_t M = (std::uint64_t)e.n_paths(), N = (std::uint64_t)e.n_modes,
                        S = (std::uint64_t)e.grid.n_steps;
    const double T = e.grid.t_max;
    f.write(reinterpret_cast<const char*>(&version), 4);
    f.write(reinterpret_cast<const char*>(&M), 8);
    f.write(reinterpret_cast<const char*>(&N), 8);
    f.write(reinterpret_cast<const char*>(&S), 8);
    f.write(reinterpret_cast<const char*>(&T), 8);
    for (const auto& p : e.paths)
        f.write(reinterpret_cast<const char*>(p.data()), (std::streamsize)(p.size() * 8));
    if (!f) throw numerical_error("write_ensemble_binary: write failed");
}

FieldEnsemble read_ensemble_binary(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw numerical_error("read_ensemble_binary: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0)
        throw numerical_error("read_ensemble_binary: bad magic");
    std::uint32_t version = 0;
    std::uint64_t M = 0, N = 0, S = 0;
    double T = 0.0;
    f.read(reinterpret_cast<char*>(&version), 4);
    f.read(reinterpret_cast<char*>(&M), 8);
    f.read(reinterpret_cast<char*>(&N), 8);
    f.read(reinterpret_cast<char*>(&S), 8);
    f.read(reinterpret_cast<char*>(&T), 8);
    if (version != 1) throw numerical_error("read_ensemble_binary: unsupported version");
    FieldEnsemble e;
    e.grid = TimeGrid(T, (int)S);
    e.n_modes = (int)N;
    e.has_increments = false; // seed lineage is not serialized
    e.paths.assign(M, std::vector<double>(N * (S + 1)));
    for (auto& p : e.paths)
        f.read(reinterpret_cast<char*>(p.data()), (std::streamsize)(p.size() * 8));
    if (!f) throw numerical_error("read_ensemble_binary: truncated file");
    return e;
}

} // namespace stfde::forward
