#include "doctest.h"
#include <stdexcept>

#include "turbsim/optics.hpp"
#include "turbsim/psfbasis.hpp"
#include "turbsim/rng.hpp"

#include <cmath>

using namespace turbsim;
using namespace turbsim::psfbasis;

namespace {
std::vector<PsfSample> small_dataset(int count, uint64_t seed = 21, double lo = 1.0,
                                     double hi = 4.0) {
    return generate_psf_dataset(count, 21, lo, hi, 64, 21, seed);
}
}  // namespace

TEST_CASE("dataset generation: determinism, diffraction limit, width growth") {
    const auto a = small_dataset(8, 5);
    const auto b = small_dataset(8, 5);
    for (int i = 0; i < 8; ++i)
        for (int r = 0; r < 21; ++r)
            for (int c = 0; c < 21; ++c) CHECK(a[i].psf(r, c) == b[i].psf(r, c));
    for (const auto& s : a) {
        CHECK(s.coeffs[2] == 0.0);  // tilts zeroed
        CHECK(s.coeffs[3] == 0.0);
        CHECK(s.psf.sum() == doctest::Approx(1.0).epsilon(1e-9));
    }

    // all-zero coefficients -> diffraction PSF
    zernike::ZernikeVector zero(21);
    const Image diff = psf_from_coeffs(zero, 64, 21);
    const optics::Pupil pupil = optics::make_pupil(optics::PupilShape::Circle, 64, 32);
    const Image ref_full = optics::psf_from_phase(pupil, Image(64, 64, 0.0), 1.0);
    double ref_crop_sum = 0;
    for (int r = 0; r < 21; ++r)
        for (int c = 0; c < 21; ++c) ref_crop_sum += ref_full(32 - 10 + r, 32 - 10 + c);
    for (int r = 0; r < 21; ++r)
        for (int c = 0; c < 21; ++c)
            CHECK(diff(r, c) ==
                  doctest::Approx(ref_full(32 - 10 + r, 32 - 10 + c) / ref_crop_sum).epsilon(1e-9));

    // mean second-moment radius grows with the D/r0 upper bound
    auto mean_radius2 = [](const std::vector<PsfSample>& set) {
        double acc = 0;
        for (const auto& s : set) {
            double m = 0;
            for (int r = 0; r < s.psf.height(); ++r)
                for (int c = 0; c < s.psf.width(); ++c)
                    m += s.psf(r, c) * (sqr(r - s.psf.height() / 2) + sqr(c - s.psf.width() / 2));
            acc += m;
        }
        return acc / set.size();
    };
    const double w1 = mean_radius2(generate_psf_dataset(48, 21, 0.5, 1.0, 64, 21, 3));
    const double w2 = mean_radius2(generate_psf_dataset(48, 21, 0.5, 2.5, 64, 21, 3));
    const double w3 = mean_radius2(generate_psf_dataset(48, 21, 0.5, 4.0, 64, 21, 3));
    CHECK(w1 < w2);
    CHECK(w2 < w3);
}

TEST_CASE("choose_kernel_size covers the requested energy and is odd") {
    const int k = choose_kernel_size(21, 3.0, 64, 0.999, 16, 2);
    CHECK(k % 2 == 1);
    CHECK(k >= 9);
    CHECK(k <= 63);
    const int k_tight = choose_kernel_size(21, 3.0, 64, 0.9, 16, 2);
    CHECK(k_tight <= k);
}

TEST_CASE("pca basis: orthonormality, reconstruction, explained variance") {
    const auto dataset = small_dataset(96, 11);
    const PsfBasis basis = fit_pca(dataset, 24);

    // Gram deviation below 1e-8
    for (int i = 0; i < 24; ++i)
        for (int j = i; j < 24; ++j) {
            double dot = 0;
            for (size_t t = 0; t < basis.components[i].size(); ++t)
                dot += basis.components[i].data()[t] * basis.components[j].data()[t];
            CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) < 1e-8);
        }
    for (double s : basis.sigma) CHECK(s > 0.0);

    // complete basis reconstructs training PSFs exactly
    const PsfBasis full = fit_pca(dataset, 96);
    for (int idx : {0, 7, 55}) {
        const auto beta = project(dataset[idx].psf, full);
        const auto rec = reconstruct(beta, full, false);
        double rms = 0;
        for (int r = 0; r < 21; ++r)
            for (int c = 0; c < 21; ++c) rms += sqr(rec.kernel(r, c) - dataset[idx].psf(r, c));
        CHECK(std::sqrt(rms / (21 * 21)) < 1e-8);
    }

    // explained variance monotone, and reconstruction error decreases in M
    const auto ev = pca_explained_variance(dataset, 24);
    for (size_t i = 1; i < ev.size(); ++i) CHECK(ev[i] <= ev[i - 1] + 1e-12);

    const auto held_out = generate_psf_dataset(4, 21, 1.0, 4.0, 64, 21, 555);
    double prev_err = 1e300;
    for (int m : {4, 12, 24}) {
        PsfBasis sub = basis;
        sub.n_components = m;
        sub.components.resize(m);
        sub.sigma.resize(m);
        const auto beta = project(held_out[0].psf, sub);
        const auto rec = reconstruct(beta, sub, false);
        double err = 0;
        for (int r = 0; r < 21; ++r)
            for (int c = 0; c < 21; ++c) err += sqr(rec.kernel(r, c) - held_out[0].psf(r, c));
        CHECK(err <= prev_err + 1e-12);
        prev_err = err;
    }

    CHECK_THROWS_AS(fit_pca(dataset, 97), std::invalid_argument);
}

TEST_CASE("project returns unit vectors on shifted components") {
    const auto dataset = small_dataset(64, 13);
    const PsfBasis basis = fit_pca(dataset, 16);
    for (int k : {0, 5, 15}) {
        Image probe = basis.mean;
        for (size_t t = 0; t < probe.size(); ++t)
            probe.data()[t] += basis.components[k].data()[t];
        const auto beta = project(probe, basis);
        for (int m = 0; m < 16; ++m)
            CHECK(beta[m] == doctest::Approx(m == k ? 1.0 : 0.0).epsilon(1e-9).scale(1.0));
    }
    // round trip project(reconstruct(beta)) is idempotent
    const auto beta0 = project(dataset[3].psf, basis);
    const auto rec = reconstruct(beta0, basis, false);
    const auto beta1 = project(rec.kernel, basis);
    for (int m = 0; m < 16; ++m) CHECK(beta1[m] == doctest::Approx(beta0[m]).epsilon(1e-9));
}

TEST_CASE("approx_sv_convolve equals brute-force scattering on truncated kernels") {
    const auto dataset = small_dataset(64, 17);
    const int M = 12;
    const PsfBasis basis = fit_pca(dataset, M);

    const int n = 32;
    Image img(n, n, 0.0);
    RandomStream rs(31);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) img(r, c) = rs.uniform();

    // per-pixel beta field from a smooth deterministic pattern
    std::vector<double> beta_field(static_cast<size_t>(M) * n * n);
    for (int m = 0; m < M; ++m)
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c)
                beta_field[(static_cast<size_t>(m) * n + r) * n + c] =
                    0.02 * std::sin(0.3 * r + 0.2 * c + m) * basis.sigma[m];

    const Image fast = approx_sv_convolve(img, beta_field, basis);

    // brute force: reconstruct the kernel at each pixel (no clipping), scatter
    std::vector<Image> kernels(static_cast<size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            std::vector<double> beta(M);
            for (int m = 0; m < M; ++m)
                beta[m] = beta_field[(static_cast<size_t>(m) * n + r) * n + c];
            kernels[static_cast<size_t>(r) * n + c] = reconstruct(beta, basis, false).kernel;
        }
    const Image slow = optics::sv_convolve_scatter(
        img, [&](int r, int c) -> const Image& { return kernels[static_cast<size_t>(r) * n + c]; });

    double rms = 0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) rms += sqr(fast(r, c) - slow(r, c));
    rms = std::sqrt(rms / (n * n));
    CHECK(rms < 1e-10);

    // constant beta field: equals invariant convolution with the kernel
    std::vector<double> const_beta(static_cast<size_t>(M) * n * n);
    const auto beta_ref = project(dataset[0].psf, basis);
    for (int m = 0; m < M; ++m)
        for (int p = 0; p < n * n; ++p) const_beta[static_cast<size_t>(m) * n * n + p] = beta_ref[m];
    const Image fast2 = approx_sv_convolve(img, const_beta, basis);
    const Image ker = reconstruct(beta_ref, basis, false).kernel;
    const Image ref2 = optics::incoherent_image(ker, img);
    double rms2 = 0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) rms2 += sqr(fast2(r, c) - ref2(r, c));
    CHECK(std::sqrt(rms2 / (n * n)) < 1e-10);
}

TEST_CASE("clipping mass stays small on reconstructed kernels") {
    const auto dataset = small_dataset(128, 19);
    const PsfBasis basis = fit_pca(dataset, 24);
    const auto validation = generate_psf_dataset(32, 21, 1.0, 4.0, 64, 21, 999);
    double worst = 0;
    for (const auto& s : validation) {
        const auto beta = project(s.psf, basis);
        const auto rec = reconstruct(beta, basis, true);
        worst = std::max(worst, rec.clipped_mass);
        CHECK(rec.kernel.sum() == doctest::Approx(1.0).epsilon(1e-9));
        for (int r = 0; r < 21; ++r)
            for (int c = 0; c < 21; ++c) CHECK(rec.kernel(r, c) >= 0.0);
    }
    CHECK(worst < 0.02);
}

TEST_CASE("p2s training is deterministic for fixed seed and data order") {
    const auto dataset = generate_psf_dataset(600, 21, 0.8, 3.0, 64, 21, 77);
    const PsfBasis basis = fit_pca(dataset, 8);
    P2STrainConfig cfg;
    cfg.epochs = 3;
    const P2SModel model = p2s_train(dataset, basis, cfg);
    const P2SModel again = p2s_train(dataset, basis, cfg);
    CHECK(again.validation_rel_error == model.validation_rel_error);
    for (size_t l = 0; l < model.w.size(); ++l)
        for (size_t t = 0; t < model.w[l].size(); ++t) CHECK(model.w[l][t] == again.w[l][t]);
}

TEST_CASE("p2s training on 1e4 pairs reaches the 15% validation target") {
    const auto dataset = generate_psf_dataset(10000, 21, 0.5, 3.0, 64, 21, 2024);
    const PsfBasis basis = fit_pca(dataset, 16);
    const P2SModel model = p2s_train(dataset, basis, {});
    CHECK(model.validation_rel_error < 0.15);

    // zero aberrations: inferred beta close to the diffraction projection
    zernike::ZernikeVector zero(21);
    const Image diff = psf_from_coeffs(zero, 64, 21);
    const auto beta_ref = project(diff, basis);
    std::vector<double> input;
    for (int j = 4; j <= 21; ++j) input.push_back(0.0);
    input.push_back(0.5);  // weakest D/r0 in range
    const auto beta = model.infer(input);
    double err = 0, ref = 0;
    for (int m = 0; m < 16; ++m) {
        err += sqr(beta[m] - beta_ref[m]);
        ref += sqr(beta_ref[m]);
    }
    // within a few validation-error units of the target
    CHECK(std::sqrt(err / ref) < 4.0 * std::max(model.validation_rel_error, 0.05));
}
