#ifndef STFDE_SPECTRAL_HPP
#define STFDE_SPECTRAL_HPP

#include <functional>
#include <vector>

#include "stfde/errors.hpp"

namespace stfde::spectral {

/// Function on D = (0,1) sampled on a uniform grid (endpoints included).
struct SpatialField {
    std::vector<double> samples; // m+1 nodes, x_i = i/m
    bool dirichlet = false;      // endpoint values expected to vanish

    SpatialField() = default;
    explicit SpatialField(std::vector<double> s, bool dir = false)
        : samples(std::move(s)), dirichlet(dir) {
        validate();
    }
    template <class F>
    static SpatialField sample(int m, F&& f, bool dir = false) {
        std::vector<double> v(m + 1);
        for (int i = 0; i <= m; ++i) v[i] = f((double)i / m);
        return SpatialField(std::move(v), dir);
    }
    void validate() const;
    int intervals() const { return (int)samples.size() - 1; }
};

/// Dirichlet eigensystem of the elliptic operator on (0,1): eigenvalues,
/// eigenfunction evaluation, outward conormal traces a(x) nu u'(x) at the
/// endpoints, and L2(D) projections under the module's quadrature.
///
/// Trace sign convention (outward normal: nu = -1 at x=0, +1 at x=1):
///   dphi_trace(n, 0) = -a(0) phi_n'(0),   dphi_trace(n, 1) = a(1) phi_n'(1).
class EigenSystem {
public:
    int count() const { return (int)lambdas_.size(); }
    double lambda(int n) const { return lambdas_.at(n - 1); } // 1-based mode index
    double phi(int n, double x) const { return phi_(n, x); }
    /// boundary point must be 0.0 or 1.0
    double dphi_trace(int n, double boundary_x) const;
    /// trapezoid L2(0,1) projection <field, phi_n>
    double inner(const SpatialField& field, int n) const;
    int grid_points() const { return grid_m_; }

    EigenSystem(std::vector<double> lambdas, std::function<double(int, double)> phi,
                std::function<double(int, int)> trace, int grid_m); // trace(n, side)

private:
    std::vector<double> lambdas_;
    std::function<double(int, double)> phi_;
    std::function<double(int, int)> trace_; // side: 0 -> x=0, 1 -> x=1
    int grid_m_;
};

/// Analytic backend: lambda_n = (n pi)^2, phi_n = sqrt(2) sin(n pi x).
EigenSystem laplace_1d(int count, int grid_points);

/// Matrix backend: -(a u')' + c u with Dirichlet rows eliminated, symmetric
/// tridiagonal eigenproblem, eigenvectors normalized under the trapezoid
/// inner product, boundary derivatives by one-sided 4-point stencils.
EigenSystem elliptic_1d(const SpatialField& a, const SpatialField& c, int count,
                        int grid_points);

/// Truncated D(A^gamma) norm: ( sum_n |lambda_n^gamma <field, phi_n>|^2 )^(1/2).
double fractional_norm(const SpatialField& field, const EigenSystem& eig, double gamma);

} // namespace stfde::spectral

#endif
