#pragma once

#include <cstdint>
#include <vector>

#include "turbsim/grid.hpp"

namespace turbsim::zernike {

enum class Parity { Cos, Sin, M0 };

/// Noll single index j with its (n, m) orders.  j=1 piston, j=2 x-tilt,
/// j=3 y-tilt, j=4 defocus.
struct NollIndex {
    int j = 1;
    int n = 0;
    int m = 0;
    Parity parity = Parity::M0;
};

NollIndex noll_unindex(int j);
int noll_index(int n, int m, Parity parity);

/// Z_j at polar coordinates (rho, theta), rho in [0, 1].
/// sqrt(2(n+1)) R_n^m cos/sin(m theta) for m != 0, sqrt(n+1) R_n^0 for m = 0.
double zernike_eval(int j, double rho, double theta);

/// Radial polynomial R_n^m by the factorial sum.
double zernike_radial(int n, int m, double rho);

/// Noll-indexed coefficient vector a_j [rad], j = 1..n_modes.  The piston
/// slot exists but is conventionally 0.
struct ZernikeVector {
    std::vector<double> a;  // a[0] is j=1

    explicit ZernikeVector(int n_modes = 3) : a(n_modes, 0.0) {}
    int n_modes() const { return static_cast<int>(a.size()); }
    double& operator[](int j) { return a[j - 1]; }
    double operator[](int j) const { return a[j - 1]; }
};

/// phi = sum_j a_j Z_j on the unit disk mapped to diameter_samples across an
/// N x N grid (disk center at (N-1)/2); zero outside the support.
Image phase_from_coeffs(const ZernikeVector& a, int grid_n, int diameter_samples);

/// Recover coefficients by least squares against the sampled basis (Riemann
/// sums over the pixel lattice assembled into the Gram system, so synthesis
/// followed by projection is exact for phases inside the span).
ZernikeVector project_phase(const Image& phase, int diameter_samples, int n_modes);

/// Intermodal (Noll) covariance entry E[a_i a_j] at the given D/r0.
/// Zero when m_i != m_j, when the trig parities differ, and (by the stated
/// selection rule) when i - j is odd; set apply_odd_rule = false to keep the
/// classically nonzero odd-pair couplings between m = 0 modes.
double noll_covariance(int i, int j, double D_over_r0, bool apply_odd_rule = true);

/// Covariance matrix for modes 1..n_modes (piston row/column zero) with its
/// cached Cholesky (or clipped-eigen) factor.
class NollMatrix {
public:
    NollMatrix(int n_modes, double D_over_r0, bool apply_odd_rule = true);

    int n_modes() const { return n_; }
    double cov(int i, int j) const { return sigma_[(i - 1) * n_ + (j - 1)]; }
    /// Mixing factor L with L L^T = Sigma (lower-triangular unless the
    /// eigen-clip fallback was taken).
    double chol(int i, int j) const { return chol_[(i - 1) * n_ + (j - 1)]; }
    bool used_eigen_fallback() const { return eigen_fallback_; }
    double min_eigenvalue() const { return min_eig_; }

private:
    int n_;
    std::vector<double> sigma_, chol_;
    bool eigen_fallback_ = false;
    double min_eig_ = 0;
};

/// Zero-mean Gaussian draw with covariance Sigma; deterministic per seed.
ZernikeVector sample_intermodal(const NollMatrix& sigma, uint64_t seed);

/// Tilt coefficient [rad] to object-plane displacement in Nyquist pixels.
double tilt_to_pixels(double a_tilt);

}  // namespace turbsim::zernike
