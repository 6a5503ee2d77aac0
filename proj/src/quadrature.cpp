#include "stfde/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace stfde::quad {

namespace {

// Gauss-Kronrod (7,15) nodes/weights on [-1,1], positive half (QUADPACK values).
const double xgk[8] = {0.991455371120812639206854697526329,
                       0.949107912342758524526189684047851,
                       0.864864423359769072789712788640926,
                       0.741531185599394439863864773280788,
                       0.586087235467691130294144838258730,
                       0.405845151377397166906606412076961,
                       0.207784955007898467600689403773245, 0.0};
const double wgk[8] = {0.022935322010529224963732008058970,
                       0.063092092629978553290700663189204,
                       0.104790010322250183839876322541518,
                       0.140653259715525918745189590510238,
                       0.169004726639267902826583426598550,
                       0.190350578064785409913256402421014,
                       0.204432940075298892414161999234649,
                       0.209482141084727828012999174891714};
const double wg[4] = {0.129484966168869693270611432679082,
                      0.279705391489276667901467771423780,
                      0.381830050505118944950369775488975,
                      0.417959183673469387755102040816327};

struct Interval {
    double a, b, value, error;
};

Interval gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double hl = 0.5 * (b - a);
    const double fc = f(c);
    double resk = wgk[7] * fc;
    double resg = wg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = hl * xgk[j];
        const double f1 = f(c - x);
        const double f2 = f(c + x);
        resk += wgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += wg[j / 2] * (f1 + f2);
    }
    Interval iv;
    iv.a = a;
    iv.b = b;
    iv.value = resk * hl;
    iv.error = std::abs((resk - resg) * hl);
    return iv;
}

} // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b,
                     double abs_tol, double rel_tol, int max_intervals) {
    std::vector<Interval> ivs;
    ivs.push_back(gk15(f, a, b));
    int evals = 15;
    for (;;) {
        double total = 0.0, err = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < ivs.size(); ++i) {
            total += ivs[i].value;
            err += ivs[i].error;
            if (ivs[i].error > ivs[worst].error) worst = i;
        }
        const double tol = abs_tol + rel_tol * std::abs(total);
        if (err <= tol || (int)ivs.size() >= max_intervals) {
            QuadResult r;
            r.value = total;
            r.error = err;
            r.converged = err <= tol;
            r.evaluations = evals;
            return r;
        }
        Interval iv = ivs[worst];
        const double mid = 0.5 * (iv.a + iv.b);
        ivs[worst] = gk15(f, iv.a, mid);
        ivs.push_back(gk15(f, mid, iv.b));
        evals += 30;
    }
}

QuadResult integrate_power_weighted(const std::function<double(double)>& f, double p,
                                    double b, double abs_tol, double rel_tol) {
    // x = s^(1/(p+1)):  int_0^b x^p f(x) dx = 1/(p+1) int_0^{b^(p+1)} f(s^(1/(p+1))) ds
    const double q = p + 1.0;
    const double s_max = std::pow(b, q);
    auto g = [&](double s) { return f(std::pow(s, 1.0 / q)); };
    QuadResult r = integrate(g, 0.0, s_max, abs_tol * q, rel_tol);
    r.value /= q;
    r.error /= q;
    return r;
}

} // namespace stfde::quad
