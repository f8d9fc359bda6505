#pragma once

#include <vector>

#include "turbsim/grid.hpp"
#include "turbsim/optics.hpp"
#include "turbsim/psfbasis.hpp"
#include "turbsim/zernike.hpp"

namespace turbsim::restore {

/// Time-indexed stack of equally shaped intensity frames.
struct FrameStack {
    std::vector<Image> frames;

    int count() const { return static_cast<int>(frames.size()); }
    int height() const { return frames.front().height(); }
    int width() const { return frames.front().width(); }

    /// Patch of the given size centered at (row, col), replicate boundary.
    Image patch(int t, int row, int col, int size) const;
};

/// Per-pixel displacement map [pixels].
struct TiltMap {
    Image dx, dy;  // column / row displacement

    TiltMap() = default;
    TiltMap(int h, int w) : dx(h, w, 0.0), dy(h, w, 0.0) {}
};

/// Forward warp: every input pixel scatters its intensity to its displaced
/// location with bilinear splat weights (sum one); displacements landing
/// outside are clamped to the border so total intensity is preserved.
Image apply_tilt(const Image& image, const TiltMap& tilt);

/// Spatially varying blur, scattering form.
Image apply_blur(const Image& image, const optics::KernelProvider& kernels);

/// Dense operator builders for small-scale verification of the
/// tilt-then-blur algebra (N = h*w rows/cols, row-major pixel order).
std::vector<double> build_tilt_matrix(int h, int w, const TiltMap& tilt);
std::vector<double> build_blur_matrix(int h, int w, const optics::KernelProvider& kernels);

/// Anisotropic total variation (forward differences, replicate boundary).
double sharpness_tv(const Image& patch);
/// Local intensity variance.
double sharpness_var(const Image& patch);

enum class ReferenceMethod { TemporalMean, NonLocal };

struct NonLocalOptions {
    int patch = 16;
    int stride = 8;
    int search_radius = 4;  // spatial search window for the min-distance match
    double beta = -1;       // weight decay; < 0 = auto (unit sample variance)
};

/// Reference frame: plain temporal mean, or per-patch weighted temporal
/// average using best-spatial-match distances, overlap-averaged.
Image reference_frame(const FrameStack& stack, ReferenceMethod method,
                      const NonLocalOptions& opt = {});

struct LuckyOptions {
    int patch = 16;
    int stride = 8;
    double alpha1 = -1;  // geometric consistency weight; < 0 = auto
    double alpha2 = -1;  // sharpness weight; < 0 = auto
};

struct LuckyResult {
    Image image;
    int degenerate_patches = 0;  // patches that fell back to the temporal mean
};

/// Per-patch temporal fusion with w = exp(-a1 ||patch - ref||^2) *
/// exp(a2 ||patch||_TV1), overlap-averaged.
LuckyResult lucky_fuse(const FrameStack& stack, const Image& ref, const LuckyOptions& opt = {});

/// Lucky event: squared norm of modes 2..N below tau.
bool lucky_event(const zernike::ZernikeVector& a, double tau);

struct DeconvolveOptions {
    double lambda = -1;  // TV weight; < 0 = 1e-2 of the data-term scale
    double gamma = -1;   // kernel prior weight; < 0 = auto
    int outer_iters = 30;
    int j_iters = 12;
    int w_iters = 16;
};

struct DeconvolveResult {
    Image image;                  // J
    std::vector<double> weights;  // w over the basis
    Image kernel;                 // reconstructed h (clipped, renormalized)
    std::vector<double> objective_trace;
    bool aborted = false;
};

/// Alternating minimization for ||I - h (*) J||^2 + lambda TV(J) + gamma
/// sum |w_l| / sigma_l with h = mean + sum w_l phi_l.  J-step: gradient
/// descent with backtracking (objective non-increasing within 1e-9 slack);
/// w-step: proximal gradient with per-mode soft thresholds gamma / sigma_l.
DeconvolveResult blind_deconvolve(const Image& lucky, const psfbasis::PsfBasis& basis,
                                  const DeconvolveOptions& opt = {});

double psnr(const Image& a, const Image& b, double peak = 1.0);

}  // namespace turbsim::restore
