#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "turbsim/atmosphere.hpp"
#include "turbsim/grid.hpp"
#include "turbsim/zernike.hpp"

namespace turbsim::zfield {

/// I0(s) = Int zeta^(-14/3) J0(2 s zeta) J2(zeta)^2 dzeta and the J2 variant,
/// integrated over [1e-8, 1e3] to ~1e-6 relative tolerance.
std::pair<double, double> tilt_kernel_integrals(double s);

/// Spatial covariance of tilt coefficients j in {2, 3} at separation s = |u-u'|/D
/// and separation angle psi0:
///
///   E[a_j a_j'] = (c2 / 2^(5/3)) (D/r0)^(5/3) [I0(s) -/+ cos(2 psi0) I2(s)]
///
/// with c2 = 7.7554, minus for j=2, plus for j=3, and r0 the plane-wave Fried
/// parameter of the full path.  The 2^(-5/3) factor comes from the midpoint
/// mirroring of the path; at s=0 the value equals the intermodal variance at
/// the effective ratio D/(2 r0), i.e. the mirrored geometry behaves like a
/// single aperture with a doubled Fried parameter.
double tilt_correlation(int j, double s, double psi0, double D_over_r0);

/// Variance constant for tilt angles in Nyquist-pixel units:
/// kappa^2 = (16/pi^2) (c2 / 2^(5/3)) I0(0) (D/r0)^(5/3).
double tilt_pixel_variance(double D_over_r0);

/// Effective D/r0 of the mirrored two-aperture problem for a constant-profile
/// configuration: D / (2 r0_plane).  The multi-aperture integrals reproduce
/// noll_covariance at this argument.
double effective_mirror_dr0(const atmosphere::OpticalConfig& cfg);

enum class QuadratureMethod {
    TensorDisk,  // Gauss-Legendre radial x trapezoid angular tensor rule per disk
    GridFft      // gridded mode cross-correlation, then one 2-D lag sum per point
};

/// Configuration for the double-disk quadrature.
struct CorrOptions {
    QuadratureMethod method = QuadratureMethod::GridFft;
    int tensor_radial = 48;   // nodes per disk (radial); angular = same count
    int grid_n = 256;         // disk sampling for the GridFft path
    bool apply_odd_rule = true;
};

/// Two-aperture spatial correlation of Zernike coefficients i, j at object
/// separation u - u' = D * s_vec (constant-Cn2 profiles only):
///
///   E[a_i a_j'] = -2.91 k^2 Cn2 L / (2 pi^2 2^(5/3))
///                 IntInt P P' Z_i Z_j |R(rho - rho') + D s|^(5/3)
double spatial_corr_numeric(int i, int j, double sx, double sy,
                            const atmosphere::OpticalConfig& cfg,
                            const CorrOptions& opt = {});

/// Path-resolved correlation (any profile): outer quadrature over z of the
/// ((L-z)/L)^(5/3)-weighted inner disk-pair integral, with the separation
/// argument s z/(L-z) capped at |s| = 50 where the kernel is numerically zero.
double exact_path_corr(int i, int j, double sx, double sy,
                       const atmosphere::OpticalConfig& cfg, const CorrOptions& opt = {});

/// Normalized autocovariance kernel of one mode: C(0) = 1, radial x angular
/// table (s in aperture-diameter units), bilinear interpolation in between.
class CorrelationKernel {
public:
    /// Closed-form tilt kernel (modes 2, 3).
    static CorrelationKernel tilt(int j, double s_max = 4.0, int n_radial = 65);
    /// Higher-order kernel from the double-disk quadrature (mode i against
    /// itself); constant-profile normalized shape, configuration independent.
    static CorrelationKernel from_quadrature(int mode, double s_max, int n_radial, int n_angular,
                                             const CorrOptions& opt = {});

    double operator()(double s, double psi) const;
    int mode() const { return mode_; }
    double s_max() const { return s_max_; }

    /// Flat table access for serialization.
    const std::vector<double>& values() const { return values_; }
    int n_radial() const { return n_radial_; }
    int n_angular() const { return n_angular_; }
    static CorrelationKernel from_table(int mode, double s_max, int n_radial, int n_angular,
                                        std::vector<double> values);

private:
    CorrelationKernel() = default;
    int mode_ = 0;
    double s_max_ = 0;
    int n_radial_ = 0, n_angular_ = 0;
    std::vector<double> values_;  // [radial][angular]
};

struct FieldSample {
    Image field;
    double clipped_mass_fraction = 0;  // spectral mass clipped negative
    bool flagged = false;              // clipped fraction above 1%
};

/// Zero-mean unit-variance wide-sense-stationary Gaussian field with the
/// kernel's autocovariance, sampled spectrally on a 2x circulant embedding;
/// pitch_s is the pixel pitch in aperture-diameter units.  Deterministic per
/// seed.
FieldSample sample_field_wss(const CorrelationKernel& kernel, int height, int width,
                             double pitch_s, uint64_t seed);

/// H x W x N_modes coefficient field ("Zernike space"): per-mode unit WSS
/// fields from their autocovariance kernels, then per-pixel mixing by the
/// Noll factor so the marginal covariance equals the intermodal matrix.
struct ZernikeField {
    int height = 0, width = 0, n_modes = 0;
    double pitch_s = 0;     // pixel pitch, aperture-diameter units
    double D_over_r0 = 0;
    std::vector<double> a;  // [mode-1][row][col]

    double at(int j, int r, int c) const {
        return a[(static_cast<size_t>(j - 1) * height + r) * width + c];
    }
    double& at(int j, int r, int c) {
        return a[(static_cast<size_t>(j - 1) * height + r) * width + c];
    }
};

/// Kernels: tilts closed-form, higher orders supplied (e.g. cached tables).
/// kernels[m] is used for mode m + 4 (piston uses none, tilts closed form);
/// if the supplied list is shorter than needed the last kernel is reused.
ZernikeField sample_zernike_space(const atmosphere::OpticalConfig& cfg, int n_modes, int height,
                                  int width, uint64_t seed,
                                  const std::vector<CorrelationKernel>& high_order_kernels,
                                  bool apply_odd_rule = true);

/// Nyquist pixel pitch in aperture-diameter units for the configuration:
/// (lambda L / 2D) / D.
double nyquist_pitch_s(const atmosphere::OpticalConfig& cfg);

struct TiltStatCurve {
    std::vector<double> s;      // separation [pixels]
    std::vector<double> value;  // [pixel^2]
};

/// Empirical Z-tilt E[alpha alpha'] and D-tilt E[(alpha - alpha')^2] radial
/// curves in pixel units from a set of tilt field realizations (each H x W,
/// already in pixel units).  Radial binning averages the angular term away.
TiltStatCurve ztilt_stat(const std::vector<Image>& fields);
TiltStatCurve dtilt_stat(const std::vector<Image>& fields);

/// Theory curves under the same radial binning (angular term cancels):
/// Z(s) = kappa^2 I0(s)/I0(0), D(s) = 2(kappa^2 - Z(s)).
double ztilt_theory(double s_pixels, double pitch_s, double D_over_r0);
double dtilt_theory(double s_pixels, double pitch_s, double D_over_r0);

}  // namespace turbsim::zfield
