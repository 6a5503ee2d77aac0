#include "stfde/spectral.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <memory>

namespace stfde::spectral {

namespace {
constexpr double kPi = 3.141592653589793238462643383279503;
constexpr double kSqrt2 = 1.414213562373095048801688724209698;
} // namespace

void SpatialField::validate() const {
    if (samples.size() < 2) throw domain_error("SpatialField: need at least 2 samples");
    for (double v : samples)
        if (!std::isfinite(v)) throw domain_error("SpatialField: non-finite sample");
    if (dirichlet) {
        const double scale = 1.0;
        if (std::abs(samples.front()) > 1e-10 * scale || std::abs(samples.back()) > 1e-10 * scale)
            throw domain_error("SpatialField: Dirichlet-flagged field has nonzero endpoints");
    }
}

EigenSystem::EigenSystem(std::vector<double> lambdas, std::function<double(int, double)> phi,
                         std::function<double(int, int)> trace, int grid_m)
    : lambdas_(std::move(lambdas)), phi_(std::move(phi)), trace_(std::move(trace)),
      grid_m_(grid_m) {
    for (std::size_t i = 0; i < lambdas_.size(); ++i) {
        if (!(lambdas_[i] > 0.0)) throw numerical_error("EigenSystem: nonpositive eigenvalue");
        if (i > 0 && lambdas_[i] < lambdas_[i - 1])
            throw numerical_error("EigenSystem: eigenvalues not nondecreasing");
    }
}

double EigenSystem::dphi_trace(int n, double boundary_x) const {
    if (boundary_x == 0.0) return trace_(n, 0);
    if (boundary_x == 1.0) return trace_(n, 1);
    throw domain_error("dphi_trace: boundary point must be 0 or 1");
}

double EigenSystem::inner(const SpatialField& field, int n) const {
    field.validate();
    const int m = field.intervals();
    const double h = 1.0 / m;
    double s = 0.0;
    for (int i = 0; i <= m; ++i) {
        const double w = (i == 0 || i == m) ? 0.5 : 1.0;
        s += w * field.samples[i] * phi_(n, i * h);
    }
    return s * h;
}

EigenSystem laplace_1d(int count, int grid_points) {
    if (count < 1) throw domain_error("laplace_1d: count must be >= 1");
    if (grid_points < 4 * count) throw domain_error("laplace_1d: need grid_points >= 4*count");
    std::vector<double> lam(count);
    for (int n = 1; n <= count; ++n) lam[n - 1] = (n * kPi) * (n * kPi);
    auto phi = [](int n, double x) { return kSqrt2 * std::sin(n * kPi * x); };
    auto trace = [](int n, int side) {
        // phi_n'(x) = sqrt(2) n pi cos(n pi x)
        return side == 0 ? -kSqrt2 * n * kPi : kSqrt2 * n * kPi * std::cos(n * kPi);
    };
    return EigenSystem(std::move(lam), phi, trace, grid_points);
}

EigenSystem elliptic_1d(const SpatialField& a, const SpatialField& c, int count,
                        int grid_points) {
    if (count < 1) throw domain_error("elliptic_1d: count must be >= 1");
    const int m = grid_points;
    if (m < 8 * count) throw domain_error("elliptic_1d: need grid_points >= 8*count");
    if (a.intervals() != m || c.intervals() != m)
        throw domain_error("elliptic_1d: coefficient fields must be sampled on the same grid");
    for (double v : a.samples)
        if (!(v > 0.0)) throw domain_error("elliptic_1d: ellipticity violated (a <= 0)");
    for (double v : c.samples)
        if (v < 0.0) throw domain_error("elliptic_1d: c must be >= 0");

    const double h = 1.0 / m;
    // interior nodes 1..m-1; a at half nodes by midpoint average
    const int ni = m - 1;
    Eigen::VectorXd diag(ni), sub(ni - 1);
    auto a_half = [&](int i) { return 0.5 * (a.samples[i] + a.samples[i + 1]); }; // a_{i+1/2}
    for (int i = 1; i <= ni; ++i) {
        diag[i - 1] = (a_half(i - 1) + a_half(i)) / (h * h) + c.samples[i];
        if (i < ni) sub[i - 1] = -a_half(i) / (h * h);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success)
        throw numerical_error("elliptic_1d: tridiagonal eigensolver failed to converge");

    auto modes = std::make_shared<std::vector<std::vector<double>>>();
    std::vector<double> lam(count);
    for (int n = 0; n < count; ++n) {
        lam[n] = solver.eigenvalues()[n];
        std::vector<double> v(m + 1, 0.0);
        for (int i = 1; i <= ni; ++i) v[i] = solver.eigenvectors()(i - 1, n);
        // trapezoid normalization (endpoints are zero)
        double nrm = 0.0;
        for (int i = 1; i <= ni; ++i) nrm += v[i] * v[i];
        nrm = std::sqrt(nrm * h);
        // sign: positive slope at x = 0, matching sqrt(2) sin(n pi x)
        double s = (v[1] >= 0.0 ? 1.0 : -1.0) / nrm;
        for (double& vi : v) vi *= s;
        modes->push_back(std::move(v));
    }

    auto phi = [modes, m](int n, double x) {
        const auto& v = (*modes)[n - 1];
        double xi = x * m;
        int i = (int)xi;
        if (i >= m) return v[m];
        if (i < 0) return v[0];
        const double w = xi - i;
        return (1.0 - w) * v[i] + w * v[i + 1];
    };
    const double a0 = a.samples.front(), a1 = a.samples.back();
    auto trace = [modes, m, h, a0, a1](int n, int side) {
        const auto& v = (*modes)[n - 1];
        if (side == 0) {
            const double d = (-11.0 * v[0] + 18.0 * v[1] - 9.0 * v[2] + 2.0 * v[3]) / (6.0 * h);
            return -a0 * d;
        }
        const double d =
            (11.0 * v[m] - 18.0 * v[m - 1] + 9.0 * v[m - 2] - 2.0 * v[m - 3]) / (6.0 * h);
        return a1 * d;
    };
    return EigenSystem(std::move(lam), phi, trace, m);
}

double fractional_norm(const SpatialField& field, const EigenSystem& eig, double gamma) {
    if (gamma < -1.0 || gamma > 2.0) throw domain_error("fractional_norm: gamma out of [-1,2]");
    double s = 0.0;
    for (int n = 1; n <= eig.count(); ++n) {
        const double t = std::pow(eig.lambda(n), gamma) * eig.inner(field, n);
        s += t * t;
    }
    return std::sqrt(s);
}

} // namespace stfde::spectral
