#include "doctest.h"
#include <stdexcept>

#include "turbsim/atmosphere.hpp"
#include "turbsim/fft.hpp"
#include "turbsim/optics.hpp"
#include "turbsim/rng.hpp"

#include <cmath>

using namespace turbsim;
using namespace turbsim::optics;

TEST_CASE("make_pupil inclusion rules") {
    const Pupil p1 = make_pupil(PupilShape::Circle, 4, 4);
    CHECK(p1.mask.sum() == doctest::Approx(12.0));  // center-of-sample inclusion

    const Pupil p2 = make_pupil(PupilShape::Square, 8, 8);
    CHECK(p2.mask.sum() == doctest::Approx(64.0));

    const Pupil p3 = make_pupil(PupilShape::Circle, 8, 1);
    CHECK(p3.mask.sum() == doctest::Approx(1.0));  // degenerate disk -> center sample

    CHECK_THROWS_AS(make_pupil(PupilShape::Circle, 8, 9), std::invalid_argument);
    CHECK_THROWS_AS(make_pupil(PupilShape::Circle, 8, 0), std::invalid_argument);

    // circular pupil radially symmetric within one sample: mirror symmetry
    const Pupil p4 = make_pupil(PupilShape::Circle, 32, 20);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c) CHECK(p4.mask(r, c) == p4.mask(31 - r, 31 - c));
}

TEST_CASE("psf_from_phase: airy pattern and first zero") {
    const int n = 64, d = 32;
    const Pupil pupil = make_pupil(PupilShape::Circle, n, d);
    const Image zero_phase(n, n, 0.0);
    const double ov = 2.0;
    const Image psf = psf_from_phase(pupil, zero_phase, ov);
    const int m = static_cast<int>(ov * n);

    CHECK(psf.sum() == doctest::Approx(1.0).epsilon(1e-9));
    // centered: peak at (m/2, m/2)
    int pr = 0, pc = 0;
    double peak = -1;
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c)
            if (psf(r, c) > peak) {
                peak = psf(r, c);
                pr = r;
                pc = c;
            }
    CHECK(pr == m / 2);
    CHECK(pc == m / 2);

    // first radial zero near 1.22 m / d grid units
    const std::vector<double> prof = radial_profile(psf, m / 2);
    int first_min = 1;
    while (first_min + 1 < static_cast<int>(prof.size()) &&
           prof[first_min + 1] < prof[first_min])
        ++first_min;
    const double expected = 1.22 * m / d;
    CHECK(std::abs(first_min - expected) <= 1.0);

    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) CHECK(psf(r, c) >= 0.0);
}

TEST_CASE("psf_from_phase: square pupil gives separable sinc^2") {
    const int n = 64, d = 16;
    const Pupil pupil = make_pupil(PupilShape::Square, n, d);
    const Image psf = psf_from_phase(pupil, Image(n, n, 0.0), 2.0);
    const int m = 128;
    // the discrete aperture is w samples wide; the central row must follow
    // the Dirichlet (periodic sinc) envelope squared
    const int cy = m / 2;
    const double w = std::sqrt(pupil.mask.sum());
    double max_err = 0;
    for (int c = cy - 20; c <= cy + 20; ++c) {
        const double fx = static_cast<double>(c - cy) / m;  // cycles per sample
        const double num = std::sin(M_PI * fx * w), den = std::sin(M_PI * fx);
        const double dirichlet = c == cy ? w : num / den;
        const double expected = sqr(dirichlet) / sqr(w);
        const double actual = psf(cy, c) / psf(cy, cy);
        max_err = std::max(max_err, std::abs(actual - expected));
    }
    CHECK(max_err < 1e-9);
}

TEST_CASE("psf_from_phase: linear ramp shifts the kernel") {
    const int n = 64, d = 32;
    const Pupil pupil = make_pupil(PupilShape::Circle, n, d);
    const Image base = psf_from_phase(pupil, Image(n, n, 0.0), 1.0);

    // phase ramp exp(-j 2 pi shift c / n) translates the FFT by `shift` bins
    const int shift = 5;
    Image ramp(n, n, 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) ramp(r, c) = 2.0 * M_PI * shift * c / n;
    const Image moved = psf_from_phase(pupil, ramp, 1.0);

    int pr = 0, pc = 0;
    double peak = -1;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (moved(r, c) > peak) {
                peak = moved(r, c);
                pr = r;
                pc = c;
            }
    CHECK(pr == n / 2);
    CHECK(pc == n / 2 + shift);

    // re-centered kernel matches the unshifted one
    double rms = 0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const int sc = (c + shift + n) % n;
            rms += sqr(moved(r, sc) - base(r, c));
        }
    rms = std::sqrt(rms / (n * n));
    CHECK(rms < 1e-6);

    CHECK_THROWS_AS(psf_from_phase(pupil, Image(n, n, 0.0), 0.5), std::invalid_argument);
}

TEST_CASE("fresnel kernel modulus and phase") {
    const double lambda = 525e-9, z = 500.0, dx = 1e-3;
    const ComplexField h = fresnel_kernel(32, dx, z, lambda);
    for (int r = 0; r < 32; ++r)
        for (int c = 0; c < 32; ++c)
            CHECK(std::abs(h(r, c)) == doctest::Approx(1.0 / (lambda * z)).epsilon(1e-12));
    // phase at xi = 0 equals kz - pi/2 (mod 2 pi)
    const double k = 2.0 * M_PI / lambda;
    const double expected = std::remainder(k * z - M_PI / 2.0, 2.0 * M_PI);
    CHECK(std::arg(h(16, 16)) == doctest::Approx(expected).epsilon(1e-6));

    const ComplexField h2 = fresnel_kernel(32, dx, 2.0 * z, lambda);
    CHECK(std::abs(h2(3, 7)) == doctest::Approx(std::abs(h(3, 7)) / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(fresnel_kernel(32, dx, -1.0, lambda), std::domain_error);
}

TEST_CASE("propagate: plane wave eigenfunction and round trip") {
    const int n = 64;
    const double lambda = 525e-9, dx = 1e-3;
    ComplexField u(n, dx, lambda);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) u(r, c) = cd(1.0, 0.0);

    const double z = 0.3;
    const auto prop = propagate(u, z, PropagationMethod::AngularSpectrum);
    // plane wave: output proportional to input up to a global phase
    const cd ratio = prop.field(0, 0) / u(0, 0);
    CHECK(std::abs(std::abs(ratio) - 1.0) < 1e-12);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            CHECK(std::abs(prop.field(r, c) - ratio * u(r, c)) < 1e-9);

    // energy conservation within 1e-6 relative
    RandomStream rs(3);
    ComplexField g(n, dx, lambda);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) g(r, c) = cd(rs.normal(), rs.normal());
    const auto fwd = propagate(g, z, PropagationMethod::AngularSpectrum);
    CHECK(fwd.field.energy() == doctest::Approx(g.energy()).epsilon(1e-6));

    // round trip via angular spectrum returns the field within 1e-8 RMS
    const auto back = propagate(fwd.field, -z, PropagationMethod::AngularSpectrum);
    double rms = 0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) rms += std::norm(back.field(r, c) - g(r, c));
    rms = std::sqrt(rms / (n * n));
    CHECK(rms < 1e-8);
}

TEST_CASE("propagate: point source matches the fresnel kernel") {
    const int n = 128;
    const double lambda = 525e-9;
    const double z = 2.0;
    const double dx = std::sqrt(lambda * z / n);  // critically sampled
    ComplexField u(n, dx, lambda);
    u(n / 2, n / 2) = cd(1.0 / (dx * dx), 0.0);  // unit-mass delta
    const auto prop = propagate(u, z, PropagationMethod::FresnelConv);
    CHECK_FALSE(prop.aliasing_warning);
    const ComplexField href = fresnel_kernel(n, dx, z, lambda);
    // compare within the central quarter (edges carry wraparound)
    double err = 0, ref = 0;
    for (int r = n / 2 - n / 8; r < n / 2 + n / 8; ++r)
        for (int c = n / 2 - n / 8; c < n / 2 + n / 8; ++c) {
            err += std::norm(prop.field(r, c) - href(r, c));
            ref += std::norm(href(r, c));
        }
    CHECK(std::sqrt(err / ref) < 0.05);

    // aliasing guard fires when the sampling bound is violated
    ComplexField bad(n, dx / 8.0, lambda);
    bad(n / 2, n / 2) = cd(1.0, 0.0);
    CHECK(propagate(bad, z, PropagationMethod::AngularSpectrum).aliasing_warning);
}

TEST_CASE("rs_oracle: spherical decay and paraxial limit") {
    const int n = 32;
    const double lambda = 525e-9, dx = 50e-6;
    ComplexField u(n, dx, lambda);
    u(n / 2, n / 2) = cd(1.0, 0.0);

    const double z1 = 0.5, z2 = 1.0;
    const auto v1 = rs_oracle(u, z1, {{0.0, 0.0}});
    const auto v2 = rs_oracle(u, z2, {{0.0, 0.0}});
    CHECK(std::abs(v1[0]) / std::abs(v2[0]) == doctest::Approx(2.0).epsilon(1e-4));

    // cos(theta) -> 1: off-axis point at large z approaches the fresnel form
    const double off = 2e-3;
    const auto far = rs_oracle(u, 4.0, {{off, 0.0}});
    const double k = 2.0 * M_PI / lambda;
    const cd fres =
        cd(0, -1.0) / (lambda * 4.0) * std::polar(1.0, k * (4.0 + off * off / 8.0)) * dx * dx;
    CHECK(std::abs(far[0] - fres) / std::abs(fres) < 0.01);

    CHECK_THROWS_AS(rs_oracle(ComplexField(512, dx, lambda), 1.0, {{0.0, 0.0}}),
                    std::invalid_argument);
}

TEST_CASE("rs_oracle: square aperture fraunhofer pattern") {
    const int n = 64;
    const double lambda = 525e-9;
    const double half_w = 0.4e-3;  // aperture half-width
    const double dx = 2.0e-5;
    ComplexField u(n, dx, lambda);
    const double c0 = n / 2.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (std::abs((r - c0) * dx) <= half_w && std::abs((c - c0) * dx) <= half_w)
                u(r, c) = cd(1.0, 0.0);
    // fraunhofer distance z >> w^2 / lambda = 0.3 m
    const double z = 10.0;
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 10; ++i) pts.push_back({i * 1.0e-3, 0.0});
    const auto vals = rs_oracle(u, z, pts);
    // |U| against the separable sinc envelope across the central lobe
    double err = 0, ref = 0;
    for (size_t i = 0; i < pts.size(); ++i) {
        const double fx = pts[i].first / (lambda * z);
        const double arg = 2.0 * M_PI * half_w * fx;
        const double sinc = arg == 0.0 ? 1.0 : std::sin(arg) / arg;
        const double expected = std::abs(sinc);
        const double actual = std::abs(vals[i]) / std::abs(vals[0]);
        err += sqr(actual - expected);
        ref += sqr(expected);
    }
    CHECK(std::sqrt(err / ref) < 0.03);
}

TEST_CASE("incoherent and coherent image formation") {
    Image delta(5, 5, 0.0);
    delta(2, 2) = 1.0;
    Image img(16, 16, 0.0);
    RandomStream rs(9);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) img(r, c) = rs.uniform();

    const Image out = incoherent_image(delta, img);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) CHECK(out(r, c) == doctest::Approx(img(r, c)));

    // unit-sum kernel preserves constants (replicate boundary)
    Image blur(3, 3, 1.0 / 9.0);
    const Image flat = incoherent_image(blur, Image(8, 8, 3.5), Boundary::Replicate);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) CHECK(flat(r, c) == doctest::Approx(3.5).epsilon(1e-12));

    // two-point field with pi offset: destructive interference only coherently
    const int n = 16;
    std::vector<cd> field(n * n, cd(0, 0));
    field[8 * n + 7] = cd(1, 0);
    field[8 * n + 9] = cd(-1, 0);  // pi phase offset
    std::vector<cd> asf(3 * 3, cd(1.0 / 3.0, 0));
    const Image coh = coherent_image(asf, 3, field, n);

    Image intensity(n, n, 0.0);
    intensity(8, 7) = 1.0;
    intensity(8, 9) = 1.0;
    Image ker(3, 3, 1.0 / 3.0);
    const Image incoh = incoherent_image(ker, intensity);
    // midpoint: coherent cancels, incoherent adds
    CHECK(coh(8, 8) == doctest::Approx(0.0));
    CHECK(incoh(8, 8) > 0.5);
}

TEST_CASE("otf_from_psf normalization and empirical circular OTF") {
    const int n = 64, d = 32;
    const Pupil pupil = make_pupil(PupilShape::Circle, n, d);
    const Image psf = psf_from_phase(pupil, Image(n, n, 0.0), 1.0);
    const auto otf = otf_from_psf(psf);
    CHECK(std::abs(otf[(n / 2) * n + n / 2] - cd(1, 0)) < 1e-12);

    // radial profile against the closed form with f0 = d/2 bins
    Image mag(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) mag(r, c) = std::abs(otf[static_cast<size_t>(r) * n + c]);
    const auto prof = radial_profile(mag, n / 2);
    double rms = 0;
    int count = 0;
    for (int b = 0; b < n / 2; ++b) {
        const double theory = atmosphere::diffraction_otf_circular(b, d / 2.0);
        rms += sqr(prof[b] - theory);
        ++count;
    }
    rms = std::sqrt(rms / count);
    CHECK(rms < 0.02);

    CHECK_THROWS_AS(otf_from_psf(Image(8, 8, 0.0)), std::invalid_argument);
}

TEST_CASE("scatter vs gather: delta input semantics") {
    const int n = 9;
    Image img(n, n, 0.0);
    img(4, 4) = 1.0;

    // kernels vary with position: column c picks kernels[c % 3]
    std::vector<Image> kernels;
    for (int i = 0; i < 3; ++i) {
        Image k(3, 3, 0.0);
        k(1, i) = 1.0;
        kernels.push_back(k);
    }
    auto provider = [&](int, int c) -> const Image& { return kernels[c % 3]; };

    const Image scat = sv_convolve_scatter(img, provider);
    const Image gath = sv_convolve_gather(img, provider);
    // scatter spreads by the source kernel (c=4 -> kernels[1], centered)
    CHECK(scat(4, 4) == doctest::Approx(1.0));
    // gather(x) integrates under the receiver kernel; kernels[0] at c=3 has
    // its mass one column left of center, i.e. it reads img(r, c+1)
    CHECK(gath(4, 3) == doctest::Approx(1.0));

    // spatially invariant provider: both equal plain convolution
    Image fixed(3, 3, 0.0);
    fixed(1, 1) = 0.5;
    fixed(0, 1) = 0.25;
    fixed(2, 1) = 0.25;
    auto inv_provider = [&](int, int) -> const Image& { return fixed; };
    Image rnd(n, n, 0.0);
    RandomStream rs(5);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) rnd(r, c) = rs.uniform();
    const Image s2 = sv_convolve_scatter(rnd, inv_provider);
    const Image g2 = sv_convolve_gather(rnd, inv_provider);
    const Image ref = incoherent_image(fixed, rnd);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            CHECK(s2(r, c) == doctest::Approx(g2(r, c)).epsilon(1e-12));
            CHECK(s2(r, c) == doctest::Approx(ref(r, c)).epsilon(1e-12));
        }
}

TEST_CASE("scatter matches brute-force superposition and is linear") {
    const int n = 8;
    Image two(n, n, 0.0);
    two(2, 3) = 1.3;
    two(5, 6) = -0.4;
    Image ka(3, 3, 0.0), kb(3, 3, 0.0);
    ka(0, 0) = 0.7;
    ka(2, 2) = 0.3;
    kb(1, 0) = 0.5;
    kb(1, 2) = 0.5;
    auto provider = [&](int r, int) -> const Image& { return r < 4 ? ka : kb; };
    const Image out = sv_convolve_scatter(two, provider);

    // independent superposition sum
    Image expect(n, n, 0.0);
    auto splat = [&](int r, int c, double v, const Image& k) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                const int tr = r + i - 1, tc = c + j - 1;
                if (tr >= 0 && tr < n && tc >= 0 && tc < n) expect(tr, tc) += v * k(i, j);
            }
    };
    splat(2, 3, 1.3, ka);
    splat(5, 6, -0.4, kb);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) CHECK(out(r, c) == doctest::Approx(expect(r, c)));

    // linearity: scatter(aJ1 + bJ2) = a scatter(J1) + b scatter(J2)
    Image j1(n, n, 0.0), j2(n, n, 0.0);
    RandomStream rs(11);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            j1(r, c) = rs.uniform();
            j2(r, c) = rs.uniform();
        }
    Image mix(n, n, 0.0);
    const double a = 1.7, b = -0.6;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) mix(r, c) = a * j1(r, c) + b * j2(r, c);
    const Image sj1 = sv_convolve_scatter(j1, provider);
    const Image sj2 = sv_convolve_scatter(j2, provider);
    const Image smix = sv_convolve_scatter(mix, provider);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            CHECK(smix(r, c) == doctest::Approx(a * sj1(r, c) + b * sj2(r, c)).epsilon(1e-12));
}
