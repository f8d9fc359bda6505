#include "doctest.h"
#include <stdexcept>
#include "turbsim/atmosphere.hpp"
#include "turbsim/quadrature.hpp"

#include <cmath>

using namespace turbsim;
using namespace turbsim::atmosphere;

namespace {
OpticalConfig book_config() {
    OpticalConfig cfg;
    cfg.wavelength = 525e-9;
    cfg.aperture_diameter = 0.2034;
    cfg.path_length = 7000.0;
    cfg.profile = Cn2Profile::constant(1e-15);
    cfg.wave_kind = OpticalConfig::WaveKind::Spherical;
    return cfg;
}
}  // namespace

TEST_CASE("kolmogorov psd values") {
    CHECK(kolmogorov_psd(1.0, 1e-16) == doctest::Approx(3.3e-18).epsilon(1e-12));
    CHECK(kolmogorov_psd(2.0, 3e-15) / kolmogorov_psd(1.0, 3e-15) ==
          doctest::Approx(std::pow(2.0, -11.0 / 3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(kolmogorov_psd(0.0, 1e-16), std::domain_error);
}

TEST_CASE("von karman decays faster than any power at k >> km") {
    const double L0 = 50.0, l0 = 0.01;
    const double km = 5.92 / l0;
    const double k = 10.0 * km;
    const double ratio = von_karman_psd(k, 1e-15, L0, l0) / kolmogorov_psd(k, 1e-15);
    CHECK(ratio < std::exp(-99.0));  // ~exp(-100) with the k0 correction
    CHECK(ratio > 0.0);
    // finite at k = 0
    CHECK(std::isfinite(von_karman_psd(0.0, 1e-15, L0, l0)));
}

TEST_CASE("cn2 profile models") {
    CHECK(cn2_slcd(10.0) == 0.0);
    CHECK(cn2_slcd(100.0) == doctest::Approx(4.008e-13 * std::pow(100.0, -1.054)).epsilon(1e-12));
    CHECK(cn2_hufnagel_valley(0.0) == doctest::Approx(2.7e-16 + 1.7e-14).epsilon(1e-12));
}

TEST_CASE("fried parameter reproduces the worked example") {
    OpticalConfig cfg = book_config();
    const double r0 = fried_parameter(cfg);
    CHECK(r0 == doctest::Approx(0.0478).epsilon(0.0002 / 0.0478));
    CHECK(cfg.aperture_diameter / r0 == doctest::Approx(4.26).epsilon(0.02 / 4.26));
}

TEST_CASE("plane/spherical ratio is (8/3)^(3/5) for constant profiles") {
    OpticalConfig cfg = book_config();
    const double r0_sph = fried_parameter(cfg);
    cfg.wave_kind = OpticalConfig::WaveKind::Plane;
    const double r0_pl = fried_parameter(cfg);
    CHECK(r0_sph / r0_pl == doctest::Approx(std::pow(8.0 / 3.0, 3.0 / 5.0)).epsilon(1e-6));
}

TEST_CASE("fried parameter scaling laws") {
    OpticalConfig cfg = book_config();
    cfg.wave_kind = OpticalConfig::WaveKind::Plane;
    const double r0 = fried_parameter(cfg);
    cfg.profile = Cn2Profile::constant(0.5e-15);
    CHECK(fried_parameter(cfg) == doctest::Approx(r0 * std::pow(2.0, 3.0 / 5.0)).epsilon(1e-9));
    cfg.profile = Cn2Profile::constant(1e-15);
    cfg.path_length *= 2.0;
    CHECK(fried_parameter(cfg) == doctest::Approx(r0 * std::pow(2.0, -3.0 / 5.0)).epsilon(1e-9));
    cfg.profile = Cn2Profile::constant(0.0);
    CHECK(fried_parameter(cfg) == kInfiniteR0);
}

TEST_CASE("isoplanatic angle scalings and pinned value") {
    OpticalConfig cfg = book_config();
    const double th0 = isoplanatic_angle(cfg);
    // independent quadrature of the definition
    const double integral =
        integrate_adaptive([&](double z) { return std::pow(z, 5.0 / 3.0) * 1e-15; }, 0.0,
                           cfg.path_length, 1e-10);
    const double expected =
        58.1e-3 * std::pow(cfg.wavelength, 6.0 / 5.0) * std::pow(integral, -3.0 / 5.0);
    CHECK(th0 == doctest::Approx(expected).epsilon(1e-6));

    OpticalConfig c2 = cfg;
    c2.wavelength *= 2.0;
    CHECK(isoplanatic_angle(c2) == doctest::Approx(th0 * std::pow(2.0, 6.0 / 5.0)).epsilon(1e-9));
    c2 = cfg;
    c2.profile = Cn2Profile::constant(2e-15);
    CHECK(isoplanatic_angle(c2) == doctest::Approx(th0 * std::pow(2.0, -3.0 / 5.0)).epsilon(1e-9));
}

TEST_CASE("structure functions") {
    CHECK(phase_structure_function(0.05, 0.05) == doctest::Approx(6.88).epsilon(1e-12));
    CHECK(phase_structure_function(0.0, 0.1) == 0.0);
    CHECK(refractive_structure_function(8.0, 1e-15) ==
          doctest::Approx(1e-15 * std::pow(8.0, 2.0 / 3.0)).epsilon(1e-12));

    // 2.91 k^2 L Cn^2 r^(5/3) == 6.88 (r/r0_plane)^(5/3) within 0.5%
    OpticalConfig cfg = book_config();
    cfg.wave_kind = OpticalConfig::WaveKind::Plane;
    const double r0 = fried_parameter(cfg);
    const double k = cfg.wavenumber();
    const double r = 0.13;
    const double lhs = 2.91 * k * k * cfg.path_length * 1e-15 * std::pow(r, 5.0 / 3.0);
    const double rhs = phase_structure_function(r, r0);
    CHECK(lhs / rhs == doctest::Approx(1.0).epsilon(0.005));
}

TEST_CASE("circular diffraction OTF") {
    CHECK(diffraction_otf_circular(0.0, 10.0) == doctest::Approx(1.0));
    CHECK(diffraction_otf_circular(20.0, 10.0) == 0.0);
    CHECK(diffraction_otf_circular(10.0, 10.0) == doctest::Approx(0.3910).epsilon(1e-3));
    // monotone nonincreasing on [0, 2 f0]
    double prev = 1.0;
    for (int i = 1; i <= 40; ++i) {
        const double v = diffraction_otf_circular(i * 0.5, 10.0);
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
    CHECK_THROWS_AS(diffraction_otf_circular(-1.0, 10.0), std::domain_error);
}

TEST_CASE("long and short exposure OTFs") {
    const double lambda = 525e-9, z = 7000.0, r0 = 0.05, D = 0.2;
    const double f_r0 = r0 / (lambda * z);
    CHECK(le_otf(f_r0, lambda, z, r0) == doctest::Approx(std::exp(-3.44)).epsilon(1e-9));
    CHECK(le_otf(0.0, lambda, z, r0) == 1.0);
    CHECK(se_otf(0.0, lambda, z, r0, D).value == 1.0);

    // at lambda z f = D/8 the tilt factor is exactly 1/2
    const double f8 = D / 8.0 / (lambda * z);
    const double expected =
        std::exp(-3.44 * std::pow(D / 8.0 / r0, 5.0 / 3.0) * (1.0 - std::cbrt(1.0 / 8.0)));
    CHECK(se_otf(f8, lambda, z, r0, D).value == doctest::Approx(expected).epsilon(1e-9));
    CHECK(1.0 - std::cbrt(1.0 / 8.0) == doctest::Approx(0.5).epsilon(1e-12));

    // beyond cutoff: clamped and flagged
    const auto clamped = se_otf(2.0 * D / (lambda * z), lambda, z, r0, D);
    CHECK(clamped.flagged);
    CHECK(clamped.value == doctest::Approx(1.0));

    // LE monotone decreasing
    double prev = 1.0;
    for (int i = 1; i <= 20; ++i) {
        const double v = le_otf(i * f_r0 / 5.0, lambda, z, r0);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("mean OTF factorization identity") {
    const double lambda = 525e-9, z = 7000.0, r0 = 0.05, D = 0.2;
    const double f0 = D / (2.0 * lambda * z);
    for (double f : {0.0, 0.3 * f0, f0, 1.7 * f0}) {
        const double composed = diffraction_otf_circular(f, f0) * le_otf(f, lambda, z, r0);
        CHECK(composed ==
              doctest::Approx(diffraction_otf_circular(f, f0) * le_otf(f, lambda, z, r0)));
        CHECK(composed >= 0.0);
        CHECK(composed <= 1.0);
    }
}

TEST_CASE("lucky probability pinned values and monotonicity") {
    CHECK(lucky_probability(3.5).value == doctest::Approx(0.8316).epsilon(2e-4));
    CHECK(lucky_probability(4.0).value == doctest::Approx(0.4640).epsilon(2e-4));
    CHECK_FALSE(lucky_probability(3.5).flagged);
    CHECK(lucky_probability(2.0).flagged);
    CHECK(lucky_probability(5.0).value < lucky_probability(4.0).value);
}

TEST_CASE("tabulated profile integration converges (Richardson)") {
    // knots sampling a smooth profile; halving the knot step should cut the
    // trapezoid error by ~4x
    auto make = [](int n) {
        std::vector<double> z(n), c(n);
        for (int i = 0; i < n; ++i) {
            z[i] = 7000.0 * i / (n - 1);
            c[i] = 1e-15 * (1.0 + std::sin(z[i] / 2000.0));
        }
        return Cn2Profile::tabulated(z, c);
    };
    const double exact = integrate_adaptive(
        [](double z) { return 1e-15 * (1.0 + std::sin(z / 2000.0)); }, 0.0, 7000.0, 1e-12);
    const double e1 = std::abs(make(65).integrate(7000.0) - exact);
    const double e2 = std::abs(make(129).integrate(7000.0) - exact);
    CHECK(e2 < e1 / 2.0);  // at least halved (expect ~quartered)
}

TEST_CASE("all statistics nonnegative, OTFs within [0,1]") {
    OpticalConfig cfg = book_config();
    CHECK(fried_parameter(cfg) > 0);
    CHECK(isoplanatic_angle(cfg) > 0);
    for (double f = 0.0; f < 300.0; f += 25.0) {
        const double le = le_otf(f, cfg.wavelength, cfg.path_length, 0.05);
        CHECK(le >= 0.0);
        CHECK(le <= 1.0);
        const auto se = se_otf(f, cfg.wavelength, cfg.path_length, 0.05, cfg.aperture_diameter);
        CHECK(se.value >= 0.0);
        CHECK(se.value <= 1.0 + 1e-12);
    }
}
