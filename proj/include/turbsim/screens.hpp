#pragma once

#include <cstdint>
#include <vector>

#include "turbsim/grid.hpp"

namespace turbsim::screens {

/// Phase power spectral density for screen synthesis, parameterized by the
/// screen's effective Fried parameter.  In cycles/m the Kolmogorov form is
/// 0.022883 r0^(-5/3) f^(-11/3); the constant is paired with the
/// 6.88 (r/r0)^(5/3) structure function (validated by test).
struct ScreenPsd {
    enum class Kind { Kolmogorov, VonKarman } kind = Kind::Kolmogorov;
    double r0 = 0.1;   // [m]
    double L0 = 100;   // outer scale [m] (von Karman)
    double l0 = 0.01;  // inner scale [m] (von Karman)

    /// Density at spatial frequency f [cycles/m].
    double operator()(double f) const;
};

struct PhaseScreen {
    Image phase;  // [rad]
    double dx = 0;
    double r0_effective = 0;
    uint64_t seed = 0;
};

/// Voelz sample-spacing rule dx = lambda L / (s D), s >= 4.
double voelz_spacing(double lambda, double L, double D, double s = 4.0);

/// Zero-mean Gaussian screen whose ensemble PSD matches the target on the
/// sampled frequency lattice (Hermitian-symmetric spectral draw, so the
/// inverse transform is exactly real).  The DC bin is zeroed.  N must be a
/// power of two.  Deterministic per seed.
PhaseScreen sample_screen_fft(int n, double dx, const ScreenPsd& psd, uint64_t seed);

/// Low-frequency augmentation: per level p = 1..levels a 3x3 sub-lattice at
/// frequencies (m, n) df / 3^p (DC excluded), PSD-weighted Gaussian
/// amplitudes, evaluated directly on the grid and mean-removed.
/// levels = 0 returns the input unchanged.  Draws from the stream derived
/// from (screen seed, "subharmonics").
PhaseScreen add_subharmonics(const PhaseScreen& screen, int levels = 3);

struct StructureFunctionCurve {
    std::vector<double> r;  // bin centers [m]
    std::vector<double> d;  // mean squared increment [rad^2]
};

/// Isotropic empirical structure function: D(dr) = 2(Gamma(0) - Gamma(dr))
/// estimated from zero-padded autocorrelations averaged over all pixels and
/// screens, then binned radially (bin width one sample over annuli).
StructureFunctionCurve empirical_structure_function(const std::vector<PhaseScreen>& screens);

/// Single-screen accumulation variant for large ensembles: call accumulate()
/// per screen, then finish().
class StructureFunctionEstimator {
public:
    explicit StructureFunctionEstimator(int n);
    void accumulate(const PhaseScreen& screen);
    StructureFunctionCurve finish() const;
    int count() const { return count_; }

private:
    int n_ = 0, m_ = 0, count_ = 0;
    double dx_ = 0;
    std::vector<double> mean_power_;  // accumulated |FFT(padded screen)|^2
    std::vector<cd> mean_cross_;      // accumulated FFT(phi^2) conj(FFT(mask))
    std::vector<cd> mask_fft_;
};

}  // namespace turbsim::screens
