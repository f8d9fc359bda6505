#pragma once

#include <cstdint>
#include <vector>

#include "turbsim/atmosphere.hpp"
#include "turbsim/grid.hpp"
#include "turbsim/zernike.hpp"

namespace turbsim::psfbasis {

/// PCA basis over tilt-free turbulent PSFs: mean kernel plus M orthonormal
/// component kernels (flat inner product) and the per-mode coefficient
/// standard deviations over the training set.
struct PsfBasis {
    int kernel_size = 0;
    int n_components = 0;
    Image mean;                      // mean kernel
    std::vector<Image> components;   // phi_m, orthonormal
    std::vector<double> sigma;       // per-mode coefficient std dev
    // provenance
    int n_modes = 0;
    double dr0_min = 0, dr0_max = 0;
    int sample_count = 0;
};

struct PsfSample {
    zernike::ZernikeVector coeffs;  // tilts zeroed
    Image psf;                      // kernel_size x kernel_size, unit sum
    double dr0 = 0;
};

/// Tilt-free PSF from high-order coefficients (modes 4..n) on the standard
/// pupil geometry (diameter grid_n/2 samples, PSF at the Nyquist pixel
/// pitch), cropped to kernel_size and renormalized.
Image psf_from_coeffs(const zernike::ZernikeVector& a, int grid_n, int kernel_size);

/// Draw count samples: D/r0 uniform over [dr0_min, dr0_max], coefficients
/// from the intermodal matrix with tilts zeroed.  Deterministic per seed.
std::vector<PsfSample> generate_psf_dataset(int count, int n_modes, double dr0_min,
                                            double dr0_max, int grid_n, int kernel_size,
                                            uint64_t seed);

/// Smallest odd kernel size containing the energy_fraction of the worst-case
/// (largest D/r0) mean PSF.
int choose_kernel_size(int n_modes, double dr0_max, int grid_n, double energy_fraction = 0.999,
                       int probe_count = 64, uint64_t seed = 1);

/// Top-M principal kernels of the mean-centered PSFs.
PsfBasis fit_pca(const std::vector<PsfSample>& dataset, int n_components);

/// Explained-variance fractions per component (for diagnostics/tests).
std::vector<double> pca_explained_variance(const std::vector<PsfSample>& dataset, int max_comp);

/// beta_m = <psf - mean, phi_m>.
std::vector<double> project(const Image& psf, const PsfBasis& basis);

/// mean + sum_m beta_m phi_m; optionally clipped at zero and renormalized.
struct Reconstruction {
    Image kernel;
    double clipped_mass = 0;  // fraction of absolute mass removed by clipping
};
Reconstruction reconstruct(const std::vector<double>& beta, const PsfBasis& basis,
                           bool clip_negative = true);

/// Scattering-form approximate spatially varying convolution:
/// out = mean (*) J + sum_m phi_m (*) (beta_m . J).  beta_field is
/// H x W x M, row-major by mode.
Image approx_sv_convolve(const Image& image, const std::vector<double>& beta_field,
                         const PsfBasis& basis);

/// Fully connected regressor mapping tilt-excluded Zernike coefficients to
/// basis coefficients; layer widths in -> 34 -> 100 -> out.  The input vector
/// is [a_4 .. a_n, D/r0], n_modes - 2 entries total (the D/r0 slot stands in
/// for the constant piston).
struct P2SModel {
    int in_dim = 0, out_dim = 0;
    std::vector<int> widths;             // hidden widths
    std::vector<std::vector<double>> w;  // per-layer row-major [out][in]
    std::vector<std::vector<double>> b;
    // input/output standardization
    std::vector<double> in_mu, in_sd, out_mu, out_sd;
    bool tanh_hidden = true;
    double validation_rel_error = 0;

    std::vector<double> infer(const std::vector<double>& a_highorder) const;
};

struct P2STrainConfig {
    int epochs = 400;
    int batch = 64;
    double lr = 2e-2;
    double momentum = 0.9;
    double lr_decay = 0.992;       // per epoch
    double validation_split = 0.1;
    bool tanh_hidden = true;       // tanh hidden units; false = ReLU
    uint64_t seed = 7;
};

/// Mini-batch SGD on mean squared beta error; deterministic for a fixed
/// seed and data order.  Aborts (throws) on a non-finite loss.
P2SModel p2s_train(const std::vector<PsfSample>& dataset, const PsfBasis& basis,
                   const P2STrainConfig& cfg);

}  // namespace turbsim::psfbasis
