#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace turbsim {

/// Adaptive Simpson integration on [a, b] to a relative tolerance.
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-8, int max_depth = 40);

/// Same, but the interval is pre-split at the given interior breakpoints
/// (useful for oscillatory or piecewise integrands).
double integrate_segmented(const std::function<double(double)>& f,
                           const std::vector<double>& breakpoints, double rel_tol = 1e-8);

/// Gauss-Legendre nodes/weights on [a, b].
void gauss_legendre(int n, double a, double b, std::vector<double>& x, std::vector<double>& w);

}  // namespace turbsim
