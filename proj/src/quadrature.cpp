#include "turbsim/quadrature.hpp"

#include <stdexcept>

namespace turbsim {

namespace {

double simpson(double fa, double fm, double fb, double h) { return h / 6.0 * (fa + 4.0 * fm + fb); }

double adapt(const std::function<double(double)>& f, double a, double b, double fa, double fm,
             double fb, double whole, double eps, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(fa, flm, fm, m - a);
    const double right = simpson(fm, frm, fb, b - m);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return adapt(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1) +
           adapt(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol, int max_depth) {
    if (a == b) return 0.0;
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = simpson(fa, fm, fb, b - a);
    // Scale the absolute tolerance off a coarse magnitude estimate; retry once
    // with the refined estimate so nearly-cancelling integrands stay accurate.
    double scale = std::abs(whole);
    if (scale == 0.0) scale = 1e-300;
    double result = adapt(f, a, b, fa, fm, fb, whole, rel_tol * scale, max_depth);
    if (std::abs(result) < 0.1 * scale && result != 0.0) {
        result = adapt(f, a, b, fa, fm, fb, whole, rel_tol * std::abs(result), max_depth);
    }
    return result;
}

double integrate_segmented(const std::function<double(double)>& f,
                           const std::vector<double>& breakpoints, double rel_tol) {
    if (breakpoints.size() < 2) throw std::invalid_argument("integrate_segmented: need >= 2 points");
    double total = 0;
    for (size_t i = 0; i + 1 < breakpoints.size(); ++i)
        total += integrate_adaptive(f, breakpoints[i], breakpoints[i + 1], rel_tol);
    return total;
}

void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    const double eps = 1e-14;
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Newton iteration from the Chebyshev estimate.
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p0 / pp;
            if (std::abs(z - z1) < eps) break;
        }
        const double xm = 0.5 * (b + a), xl = 0.5 * (b - a);
        x[i] = xm - xl * z;
        x[n - 1 - i] = xm + xl * z;
        w[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

}  // namespace turbsim
