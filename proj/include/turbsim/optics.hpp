#pragma once

#include <functional>
#include <map>
#include <vector>

#include "turbsim/grid.hpp"

namespace turbsim::optics {

enum class PupilShape { Circle, Square };

/// Binary aperture mask.  Samples count as inside when their center lies in
/// the support (center at (N-1)/2); a disk so small that it covers no sample
/// center degenerates to the single sample nearest the center.
struct Pupil {
    Image mask;
    int diameter_samples = 0;
};

Pupil make_pupil(PupilShape shape, int grid_n, int diameter_samples);

/// |FFT(P e^{j phi})|^2 on an (oversample * N) grid, shifted so the kernel is
/// centered, normalized to unit sum.  oversample >= 1 (need not be integer;
/// the padded size is round(oversample * N)).
Image psf_from_phase(const Pupil& pupil, const Image& phase, double oversample = 1.0);

/// Fresnel kernel h(xi; z) = e^{jkz}/(j lambda z) e^{jk|xi|^2 / 2z}, sampled
/// with the origin at the grid center.
ComplexField fresnel_kernel(int grid_n, double dx, double z, double lambda);

enum class PropagationMethod { FresnelConv, AngularSpectrum };

struct PropagationResult {
    ComplexField field;
    bool aliasing_warning = false;  // sampling below the dx^2 >= lambda z / N bound
};

/// Free-space propagation by spectral transfer function.  Angular-spectrum
/// conserves energy (unit-modulus transfer below the evanescent cutoff).
PropagationResult propagate(const ComplexField& field, double z, PropagationMethod method);

/// Direct Rayleigh-Sommerfeld quadrature at arbitrary observation points
/// (x, y, z); O(N^2) per point, intended as a small-scale test oracle.
/// Refuses N > 256 unless allow_large.
std::vector<cd> rs_oracle(const ComplexField& field, double z,
                          const std::vector<std::pair<double, double>>& obs_xy,
                          bool allow_large = false);

enum class Boundary { ZeroPad, Replicate };

/// Spatially invariant incoherent image formation: psf (unit-sum, centered
/// kernel) convolved with the intensity image.
Image incoherent_image(const Image& psf, const Image& ideal, Boundary bc = Boundary::ZeroPad);

/// Coherent formation: |asf convolved with the complex field|^2.
Image coherent_image(const std::vector<cd>& asf, int asf_n, const std::vector<cd>& field, int n);

/// OTF of a PSF: centered FFT normalized so H(0) = 1.  Returned row-major
/// with zero frequency at (n/2, n/2).
std::vector<cd> otf_from_psf(const Image& psf);
std::vector<cd> atf_from_asf(const std::vector<cd>& asf, int n);

/// Provider returns the (odd-sized, centered) kernel for a pixel index.
using KernelProvider = std::function<const Image&(int row, int col)>;

/// Scattering convolution: each input pixel's energy is spread by its own
/// kernel.  Gathering: each output pixel integrates the input under its own
/// flipped kernel.  Kernels falling over the edge follow the boundary policy.
Image sv_convolve_scatter(const Image& image, const KernelProvider& provider,
                          Boundary bc = Boundary::ZeroPad);
Image sv_convolve_gather(const Image& image, const KernelProvider& provider,
                         Boundary bc = Boundary::ZeroPad);

/// Radial average of a centered 2-D map around (n/2, n/2); bin width one
/// sample.  Returns per-bin means.
std::vector<double> radial_profile(const Image& map, int n_bins);

}  // namespace turbsim::optics
