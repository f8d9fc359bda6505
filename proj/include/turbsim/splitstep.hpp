#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "turbsim/atmosphere.hpp"
#include "turbsim/grid.hpp"
#include "turbsim/optics.hpp"
#include "turbsim/screens.hpp"

namespace turbsim::splitstep {

/// Per-point-source numerical propagation through a stack of phase screens.
///
/// Geometry: path coordinate z runs from the aperture (z = 0) to the object
/// (z = L).  The propagation grid is referenced to the diverging spherical
/// carrier of each point source, so every plane is sampled on the source's
/// cone: spacing delta(z) = delta_pupil (L - z) / L with delta_pupil = 2D/N.
/// A free-space step between planes then reduces to a plain Fresnel
/// transfer-function step over the reduced distance dz d_a / d_b
/// (Sziklas-Siegman scaling), which keeps the carrier exact: in vacuum the
/// propagated perturbation stays identically 1.  The spherical-path
/// ((L-z)/L)^(5/3) weighting of the turbulence statistics emerges from this
/// cone geometry, so each master screen carries its slab's plane-wave r0.
///
/// Screens are master grids larger than the propagation window; each point
/// source reads a crop shifted by u z / L (rounded to the screen lattice),
/// which realizes the overlapping-cone correlation between neighboring
/// points.
struct SplitStepPlan {
    atmosphere::OpticalConfig cfg;
    int grid_n = 128;           // propagation grid N (power of two)
    double delta_pupil = 0;     // pupil-plane spacing 2D/N [m]
    int pupil_diameter_samples = 0;  // N/2
    double pixel_pitch = 0;     // object pixel pitch lambda L / (2D) [m]
    int window_px = 1;          // object window width [pixels]
    std::vector<double> z;      // screen positions, ascending, (0, L)
    std::vector<double> delta;  // per-screen grid spacing [m]
    std::vector<double> r0_slab;       // plane-wave slab r0 [m]
    std::vector<screens::PhaseScreen> masters;
    int subharmonic_levels = 3;
    bool lens_cancel = true;
    uint64_t seed = 0;
    bool voelz_violated = false;  // delta_pupil above the s = 4 bound
};

/// Screens at the midpoints of n_screens equal slabs.
SplitStepPlan make_plan(const atmosphere::OpticalConfig& cfg, int n_screens, int grid_n,
                        int window_px, uint64_t seed, int subharmonic_levels = 3);

/// Screens at caller-chosen positions (each with its own equal-slab share of
/// the profile integral split at the midpoints between screens).
SplitStepPlan make_plan_at(const atmosphere::OpticalConfig& cfg, const std::vector<double>& z,
                           int grid_n, int window_px, uint64_t seed, int subharmonic_levels = 3);

/// Complex pupil-plane field for the point source at object pixel (ux, uy)
/// relative to the window center.  With lens_cancel the quadratic Fresnel
/// carrier is removed (never introduced, by the carrier-referenced scheme);
/// the geometric image tilt -k xi . u / L is included.
struct PointField {
    ComplexField field;
    bool aliasing_warning = false;
};
PointField propagate_point(const SplitStepPlan& plan, double ux, double uy);

/// Turbulent PSF for the point source, sampled at the object pixel pitch on
/// the propagation grid, unit sum, centered at the geometric image point
/// (turbulent tilt retained, deterministic geometric tilt removed).
Image point_psf(const SplitStepPlan& plan, double ux, double uy);

/// One PSF per stride-spaced object grid point, each cropped to
/// kernel_size x kernel_size (odd) and renormalized.
struct PsfGrid {
    int window_px = 0;
    int stride = 1;
    int kernel_size = 0;
    std::map<std::pair<int, int>, Image> psfs;  // key: object pixel (row, col)

    const Image& nearest(int row, int col) const;
};

PsfGrid psf_grid(const SplitStepPlan& plan, int stride, int kernel_size);

/// Spatially varying (scattering) synthesis of the observed image from an
/// ideal image the size of the plan window, using nearest-PSF assignment
/// between grid points.
Image simulate_image(const SplitStepPlan& plan, const Image& ideal, int stride, int kernel_size);

/// Diffraction-limited PSF of the plan's pupil at the object pixel pitch.
Image diffraction_psf(const SplitStepPlan& plan);

}  // namespace turbsim::splitstep
