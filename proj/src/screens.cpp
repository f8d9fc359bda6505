#include "turbsim/screens.hpp"

#include <cmath>
#include <stdexcept>

#include "turbsim/fft.hpp"
#include "turbsim/rng.hpp"

namespace turbsim::screens {

namespace {
constexpr double kPhasePsdConst = 0.022883;  // cycles/m pairing with 6.88
}

double ScreenPsd::operator()(double f) const {
    if (kind == Kind::Kolmogorov) {
        if (f <= 0) return 0.0;
        return kPhasePsdConst * std::pow(r0, -5.0 / 3.0) * std::pow(f, -11.0 / 3.0);
    }
    const double f0 = 1.0 / L0;
    const double fm = 5.92 / (2.0 * M_PI * l0);
    return kPhasePsdConst * std::pow(r0, -5.0 / 3.0) * std::exp(-f * f / (fm * fm)) *
           std::pow(f * f + f0 * f0, -11.0 / 6.0);
}

double voelz_spacing(double lambda, double L, double D, double s) {
    if (s < 4.0) throw std::invalid_argument("voelz_spacing: s must be >= 4");
    if (lambda <= 0 || L <= 0 || D <= 0)
        throw std::invalid_argument("voelz_spacing: lambda, L, D must be positive");
    return lambda * L / (s * D);
}

PhaseScreen sample_screen_fft(int n, double dx, const ScreenPsd& psd, uint64_t seed) {
    if (n < 2 || (n & (n - 1)) != 0)
        throw std::invalid_argument("sample_screen_fft: N must be a power of two");
    RandomStream rs(seed, "screen_fft", 0);
    const double df = 1.0 / (n * dx);

    // Fill the spectrum with Hermitian symmetry c(-k) = conj(c(k)) so the
    // inverse transform is exactly real.  Self-conjugate bins (DC and the
    // Nyquist row/column intersections) get real coefficients with full
    // variance; all others split variance between the real/imag parts.
    std::vector<cd> spec(static_cast<size_t>(n) * n, cd(0, 0));
    auto freq = [&](int idx) { return idx <= n / 2 ? idx : idx - n; };
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const int fr = freq(r), fc = freq(c);
            // take one representative of each conjugate pair
            if (fr < 0) continue;
            if (fr == 0 && fc < 0) continue;
            const bool self_conj = (fr == 0 || r == n / 2) && (fc == 0 || c == n / 2);
            if (fr == 0 && fc == 0) continue;  // DC zeroed (piston is irrelevant)
            const double f = std::hypot(fr * df, fc * df);
            const double sd = std::sqrt(psd(f)) * df;
            cd coef;
            if (self_conj) {
                coef = cd(sd * rs.normal(), 0.0);
            } else {
                const double h = sd / std::sqrt(2.0);
                coef = cd(h * rs.normal(), h * rs.normal());
            }
            spec[static_cast<size_t>(r) * n + c] = coef;
            const int mr = (n - r) % n, mc = (n - c) % n;
            if (!(mr == r && mc == c))
                spec[static_cast<size_t>(mr) * n + mc] = std::conj(coef);
        }
    }
    // phase(x) = sum_f coef(f) e^{j 2 pi f.x}: unnormalized inverse transform
    fft::inverse2d(spec.data(), n, n);
    PhaseScreen out;
    out.phase = Image(n, n);
    const double scale = static_cast<double>(n) * n;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out.phase(r, c) = spec[static_cast<size_t>(r) * n + c].real() * scale;
    out.dx = dx;
    out.r0_effective = psd.r0;
    out.seed = seed;
    return out;
}

PhaseScreen add_subharmonics(const PhaseScreen& screen, int levels) {
    if (levels < 0) throw std::invalid_argument("add_subharmonics: levels must be >= 0");
    if (levels == 0) return screen;
    const int n = screen.phase.height();
    const double dx = screen.dx;
    const double df = 1.0 / (n * dx);
    ScreenPsd psd;  // reconstruct the Kolmogorov density for this screen
    psd.r0 = screen.r0_effective;

    RandomStream rs(screen.seed, "subharmonics", 0);
    PhaseScreen out = screen;

    std::vector<cd> row_ph(n), col_ph(n);
    for (int p = 1; p <= levels; ++p) {
        const double dfp = df / std::pow(3.0, p);
        // Conjugate-pair the 8 non-DC lattice points: draw 4 independent
        // coefficients, their mirrors are conjugates (real field).
        static const int pts[4][2] = {{1, -1}, {1, 0}, {1, 1}, {0, 1}};
        for (const auto& pt : pts) {
            const double fy = pt[0] * dfp, fx = pt[1] * dfp;
            const double f = std::hypot(fx, fy);
            const double sd = std::sqrt(psd(f)) * dfp;
            const double re = sd / std::sqrt(2.0) * rs.normal();
            const double im = sd / std::sqrt(2.0) * rs.normal();
            // coef e^{j arg} + conj = 2 Re{(re + j im) e^{j arg}}, separable
            // into per-row and per-column phasors
            const cd coef(re, im);
            for (int r = 0; r < n; ++r)
                row_ph[r] = std::polar(1.0, 2.0 * M_PI * fy * r * dx);
            for (int c = 0; c < n; ++c)
                col_ph[c] = std::polar(1.0, 2.0 * M_PI * fx * c * dx);
            for (int r = 0; r < n; ++r) {
                const cd rc = coef * row_ph[r];
                for (int c = 0; c < n; ++c)
                    out.phase(r, c) += 2.0 * (rc * col_ph[c]).real();
            }
        }
    }
    // remove the mean so the augmentation stays piston-free on the grid
    const double mean = out.phase.sum() / out.phase.size();
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out.phase(r, c) -= mean;
    return out;
}

StructureFunctionEstimator::StructureFunctionEstimator(int n)
    : n_(n), m_(2 * n) {
    const size_t total = static_cast<size_t>(m_) * m_;
    mean_power_.assign(total, 0.0);
    mean_cross_.assign(total, cd(0, 0));
    // spectrum of the 0/1 support window, shared by every screen
    mask_fft_.assign(total, cd(0, 0));
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < n_; ++c) mask_fft_[static_cast<size_t>(r) * m_ + c] = 1.0;
    fft::forward2d(mask_fft_.data(), m_, m_);
}

void StructureFunctionEstimator::accumulate(const PhaseScreen& screen) {
    if (screen.phase.height() != n_) throw std::invalid_argument("structure fn: size mismatch");
    if (count_ == 0) dx_ = screen.dx;
    const size_t total = static_cast<size_t>(m_) * m_;
    std::vector<cd> buf(total, cd(0, 0)), sq(total, cd(0, 0));
    for (int r = 0; r < n_; ++r)
        for (int c = 0; c < n_; ++c) {
            const double v = screen.phase(r, c);
            buf[static_cast<size_t>(r) * m_ + c] = v;
            sq[static_cast<size_t>(r) * m_ + c] = v * v;
        }
    fft::forward2d(buf.data(), m_, m_);
    fft::forward2d(sq.data(), m_, m_);
    for (size_t i = 0; i < total; ++i) {
        mean_power_[i] += std::norm(buf[i]);
        mean_cross_[i] += sq[i] * std::conj(mask_fft_[i]);
    }
    ++count_;
}

StructureFunctionCurve StructureFunctionEstimator::finish() const {
    if (count_ == 0) throw std::logic_error("structure fn: no screens accumulated");
    // pair sums per lag: phi-phi correlation, and phi^2 against the window
    const size_t total = static_cast<size_t>(m_) * m_;
    std::vector<cd> corr(total), cross(total);
    for (size_t i = 0; i < total; ++i) {
        corr[i] = mean_power_[i] / count_;
        cross[i] = mean_cross_[i] / static_cast<double>(count_);
    }
    fft::inverse2d(corr.data(), m_, m_);
    fft::inverse2d(cross.data(), m_, m_);

    auto at = [&](const std::vector<cd>& v, int dr, int dc) {
        return v[static_cast<size_t>((dr + m_) % m_) * m_ + (dc + m_) % m_].real();
    };

    // D(lag) = (sum phi(x)^2 + sum phi(x+lag)^2 - 2 sum phi phi) / overlap,
    // all three sums restricted to the overlap window
    const int max_lag = n_ / 2;
    std::vector<double> sum(max_lag + 1, 0.0);
    std::vector<int> cnt(max_lag + 1, 0);
    for (int dr = -max_lag; dr <= max_lag; ++dr) {
        for (int dc = -max_lag; dc <= max_lag; ++dc) {
            const int bin = static_cast<int>(std::lround(std::hypot(dr, dc)));
            if (bin == 0 || bin > max_lag) continue;
            const double overlap = static_cast<double>(n_ - std::abs(dr)) * (n_ - std::abs(dc));
            const double d =
                (at(cross, dr, dc) + at(cross, -dr, -dc) - 2.0 * at(corr, dr, dc)) / overlap;
            sum[bin] += d;
            ++cnt[bin];
        }
    }
    StructureFunctionCurve out;
    for (int b = 1; b <= max_lag; ++b) {
        if (!cnt[b]) continue;
        out.r.push_back(b * dx_);
        out.d.push_back(sum[b] / cnt[b]);
    }
    return out;
}

StructureFunctionCurve empirical_structure_function(const std::vector<PhaseScreen>& screens) {
    if (screens.size() < 2)
        throw std::invalid_argument("empirical_structure_function: need >= 2 screens");
    StructureFunctionEstimator est(screens.front().phase.height());
    for (const auto& s : screens) est.accumulate(s);
    return est.finish();
}

}  // namespace turbsim::screens
