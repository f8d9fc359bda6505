#pragma once

#include <cmath>

namespace turbsim::bessel {

/// Fast J0/J1/J2 (rational fits below |x| = 8, asymptotic beyond; absolute
/// error a few 1e-8).  The tilt-kernel quadratures evaluate these millions
/// of times, which rules out the (accurate but slow) library routines; the
/// unit tests pin these against the library on a dense grid.

inline double j0(double x) {
    const double ax = std::fabs(x);
    if (ax < 8.0) {
        const double y = x * x;
        const double p1 = 57568490574.0 +
                          y * (-13362590354.0 +
                               y * (651619640.7 +
                                    y * (-11214424.18 + y * (77392.33017 + y * -184.9052456))));
        const double p2 = 57568490411.0 +
                          y * (1029532985.0 +
                               y * (9494680.718 + y * (59272.64853 + y * (267.8532712 + y))));
        return p1 / p2;
    }
    const double z = 8.0 / ax;
    const double y = z * z;
    const double xx = ax - 0.785398164;
    const double p0 =
        1.0 + y * (-0.1098628627e-2 +
                   y * (0.2734510407e-4 + y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
    const double q0 = -0.1562499995e-1 +
                      y * (0.1430488765e-3 +
                           y * (-0.6911147651e-5 + y * (0.7621095161e-6 + y * -0.934935152e-7)));
    return std::sqrt(0.636619772 / ax) * (std::cos(xx) * p0 - z * std::sin(xx) * q0);
}

inline double j1(double x) {
    const double ax = std::fabs(x);
    double out;
    if (ax < 8.0) {
        const double y = x * x;
        const double p1 =
            x * (72362614232.0 +
                 y * (-7895059235.0 +
                      y * (242396853.1 +
                           y * (-2972611.439 + y * (15704.48260 + y * -30.16036606)))));
        const double p2 = 144725228442.0 +
                          y * (2300535178.0 +
                               y * (18583304.74 + y * (99447.43394 + y * (376.9991397 + y))));
        return p1 / p2;
    }
    const double z = 8.0 / ax;
    const double y = z * z;
    const double xx = ax - 2.356194491;
    const double p0 = 1.0 + y * (0.183105e-2 +
                                 y * (-0.3516396496e-4 +
                                      y * (0.2457520174e-5 + y * -0.240337019e-6)));
    const double q0 = 0.04687499995 +
                      y * (-0.2002690873e-3 +
                           y * (0.8449199096e-5 + y * (-0.88228987e-6 + y * 0.105787412e-6)));
    out = std::sqrt(0.636619772 / ax) * (std::cos(xx) * p0 - z * std::sin(xx) * q0);
    return x < 0.0 ? -out : out;
}

inline double j2(double x) {
    const double ax = std::fabs(x);
    if (ax < 0.75) {
        // series; the 2 J1/x - J0 recurrence loses digits to cancellation here
        const double h = 0.5 * x;
        const double h2 = h * h;
        return h2 / 2.0 *
               (1.0 - h2 / 3.0 + h2 * h2 / 24.0 - h2 * h2 * h2 / 360.0 +
                h2 * h2 * h2 * h2 / 8640.0);
    }
    return 2.0 * j1(x) / x - j0(x);
}

}  // namespace turbsim::bessel
