#include "turbsim/zfield.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "turbsim/bessel.hpp"
#include "turbsim/fft.hpp"
#include "turbsim/quadrature.hpp"
#include "turbsim/rng.hpp"
#include "turbsim/threadpool.hpp"

namespace turbsim::zfield {

namespace {

constexpr double kC2 = 7.7554;

// zeta^(-14/3) J_nu(2 s zeta) J2(zeta)^2 integrated over [0, inf).
//
// Small zeta: J2^2 ~ zeta^4/64 leaves an integrable zeta^(-2/3) branch;
// substituting zeta = u^3 flattens it, and a Gauss-Legendre panel handles
// the rest.  Above 1 the integrand oscillates at ~(2s + 2) rad per unit, so
// fixed-order panels are sized to half an oscillation period.  The truncated
// tail beyond 60 is ~1e-7 relative (envelope zeta^(-17/3)).
double tilt_integral(int nu, double s) {
    auto f = [&](double z) {
        const double j = nu == 0 ? (s == 0.0 ? 1.0 : bessel::j0(2.0 * s * z))
                                 : (s == 0.0 ? 0.0 : bessel::j2(2.0 * s * z));
        const double b = bessel::j2(z);
        return std::pow(z, -14.0 / 3.0) * j * b * b;
    };
    static thread_local std::vector<double> gx, gw;
    if (gx.empty()) gauss_legendre(24, 0.0, 1.0, gx, gw);

    double total = 0;
    // [0, 1] with zeta = u^3
    for (size_t i = 0; i < gx.size(); ++i) {
        const double u = gx[i];
        const double z = u * u * u;
        if (z > 0.0) total += gw[i] * 3.0 * u * u * f(z);
    }
    // [1, 60] in half-period panels
    const double freq = 2.0 * s + 2.0;
    const double width = M_PI / freq;
    double a = 1.0;
    while (a < 60.0) {
        const double b = std::min(a + width, 60.0);
        for (size_t i = 0; i < gx.size(); ++i) {
            const double z = a + (b - a) * gx[i];
            total += gw[i] * (b - a) * f(z);
        }
        a = b;
    }
    return total;
}

double i0_at_zero() {
    static const double v = tilt_integral(0, 0.0);
    return v;
}

}  // namespace

std::pair<double, double> tilt_kernel_integrals(double s) {
    if (s < 0) throw std::domain_error("tilt_kernel_integrals: s must be nonnegative");
    return {tilt_integral(0, s), s == 0.0 ? 0.0 : tilt_integral(2, s)};
}

double tilt_correlation(int j, double s, double psi0, double D_over_r0) {
    if (j != 2 && j != 3) throw std::domain_error("tilt_correlation: j must be 2 or 3");
    auto [i0, i2] = tilt_kernel_integrals(s);
    const double sign = j == 2 ? -1.0 : 1.0;
    return kC2 / std::pow(2.0, 5.0 / 3.0) * std::pow(D_over_r0, 5.0 / 3.0) *
           (i0 + sign * std::cos(2.0 * psi0) * i2);
}

double tilt_pixel_variance(double D_over_r0) {
    return 16.0 / (M_PI * M_PI) * kC2 / std::pow(2.0, 5.0 / 3.0) * i0_at_zero() *
           std::pow(D_over_r0, 5.0 / 3.0);
}

double effective_mirror_dr0(const atmosphere::OpticalConfig& cfg) {
    atmosphere::OpticalConfig plane = cfg;
    plane.wave_kind = atmosphere::OpticalConfig::WaveKind::Plane;
    const double r0 = atmosphere::fried_parameter(plane);
    if (r0 == atmosphere::kInfiniteR0) return 0.0;
    return cfg.aperture_diameter / (2.0 * r0);
}

// ---------------------------------------------------------------------------
// Double-disk quadrature
// ---------------------------------------------------------------------------

namespace {

// Q_ij(t) = IntInt_disk P P' Z_i(rho) Z_j(rho') |(rho - rho') + t|^(5/3),
// unit-disk coordinates, plain area elements.  The physical prefactors are
// applied by the callers.
struct DiskNodes {
    std::vector<double> x, y, wz;  // node position and weight * Z(node)
};

DiskNodes tensor_disk_nodes(int mode, int n_radial, int n_angular) {
    DiskNodes out;
    std::vector<double> rx, rw;
    gauss_legendre(n_radial, 0.0, 1.0, rx, rw);
    const double dth = 2.0 * M_PI / n_angular;
    out.x.reserve(static_cast<size_t>(n_radial) * n_angular);
    for (int ir = 0; ir < n_radial; ++ir) {
        for (int ia = 0; ia < n_angular; ++ia) {
            const double th = ia * dth;
            const double w = rw[ir] * rx[ir] * dth;  // rho drho dtheta
            out.x.push_back(rx[ir] * std::cos(th));
            out.y.push_back(rx[ir] * std::sin(th));
            out.wz.push_back(w * zernike::zernike_eval(mode, rx[ir], th));
        }
    }
    return out;
}

double q_tensor(const DiskNodes& a, const DiskNodes& b, double tx, double ty) {
    double acc = 0;
    const size_t na = a.x.size(), nb = b.x.size();
    for (size_t p = 0; p < na; ++p) {
        const double px = a.x[p] + tx, py = a.y[p] + ty, wa = a.wz[p];
        double inner = 0;
        for (size_t q = 0; q < nb; ++q) {
            const double dx = px - b.x[q], dy = py - b.y[q];
            inner += b.wz[q] * std::pow(dx * dx + dy * dy, 5.0 / 6.0);
        }
        acc += wa * inner;
    }
    return acc;
}

// Gridded cross-correlation X_ij(tau) = Int P(rho) P(rho - tau) Z_i(rho)
// Z_j(rho - tau) drho on a (2G-1)^2 lag lattice, via zero-padded FFTs.
// Q_ij(t) then reduces to a single 2-D sum over lags.
struct LagTable {
    int m = 0;          // lattice size (padded)
    double d = 0;       // lag pitch in unit-disk coordinates
    std::vector<double> x;  // correlation * area element^2, lag-centered
};

LagTable lag_table(int i, int j, int grid_n) {
    const int g = grid_n, m = 2 * g;
    const double d = 2.0 / g;  // disk spans [-1, 1]
    std::vector<cd> fa(static_cast<size_t>(m) * m, cd(0, 0)), fb = fa;
    for (int r = 0; r < g; ++r) {
        for (int c = 0; c < g; ++c) {
            const double y = -1.0 + (r + 0.5) * d, x = -1.0 + (c + 0.5) * d;
            const double rho = std::hypot(x, y);
            if (rho > 1.0) continue;
            const double th = std::atan2(y, x);
            fa[static_cast<size_t>(r) * m + c] = zernike::zernike_eval(i, rho, th);
            fb[static_cast<size_t>(r) * m + c] =
                i == j ? fa[static_cast<size_t>(r) * m + c] : cd(zernike::zernike_eval(j, rho, th), 0);
        }
    }
    fft::forward2d(fa.data(), m, m);
    fft::forward2d(fb.data(), m, m);
    for (size_t t = 0; t < fa.size(); ++t) fa[t] = fa[t] * std::conj(fb[t]);
    fft::inverse2d(fa.data(), m, m);
    LagTable out;
    out.m = m;
    out.d = d;
    out.x.assign(static_cast<size_t>(m) * m, 0.0);
    // center the lag origin at (m/2, m/2)
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            const int sr = (r - m / 2 + m) % m, sc = (c - m / 2 + m) % m;
            out.x[static_cast<size_t>(r) * m + c] =
                fa[static_cast<size_t>(sr) * m + sc].real() * d * d * d * d;
        }
    return out;
}

double q_from_lags(const LagTable& lt, double tx, double ty) {
    const int m = lt.m;
    double acc = 0;
    for (int r = 0; r < m; ++r) {
        const double ly = (r - m / 2) * lt.d + ty;
        for (int c = 0; c < m; ++c) {
            const double w = lt.x[static_cast<size_t>(r) * m + c];
            if (w == 0.0) continue;
            const double lx = (c - m / 2) * lt.d + tx;
            acc += w * std::pow(lx * lx + ly * ly, 5.0 / 6.0);
        }
    }
    return acc;
}

// Caches keyed by (mode pair, resolution).
std::mutex g_cache_mu;
std::map<std::tuple<int, int, int>, LagTable> g_lag_cache;
std::map<std::tuple<int, int, int>, DiskNodes> g_node_cache;

const LagTable& cached_lag_table(int i, int j, int grid_n) {
    std::lock_guard<std::mutex> lk(g_cache_mu);
    auto key = std::make_tuple(std::min(i, j), std::max(i, j), grid_n);
    auto it = g_lag_cache.find(key);
    if (it == g_lag_cache.end())
        it = g_lag_cache.emplace(key, lag_table(std::min(i, j), std::max(i, j), grid_n)).first;
    return it->second;
}

const DiskNodes& cached_nodes(int mode, int n_radial, int n_angular) {
    std::lock_guard<std::mutex> lk(g_cache_mu);
    auto key = std::make_tuple(mode, n_radial, n_angular);
    auto it = g_node_cache.find(key);
    if (it == g_node_cache.end())
        it = g_node_cache.emplace(key, tensor_disk_nodes(mode, n_radial, n_angular)).first;
    return it->second;
}

double q_ij(int i, int j, double tx, double ty, const CorrOptions& opt) {
    if (opt.method == QuadratureMethod::TensorDisk) {
        const DiskNodes& a = cached_nodes(i, opt.tensor_radial, opt.tensor_radial);
        const DiskNodes& b = cached_nodes(j, opt.tensor_radial, opt.tensor_radial);
        return q_tensor(a, b, tx, ty);
    }
    return q_from_lags(cached_lag_table(i, j, opt.grid_n), tx, ty);
}

bool parity_zero(int i, int j, bool apply_odd_rule) {
    const auto a = zernike::noll_unindex(i), b = zernike::noll_unindex(j);
    if (a.m != b.m) return true;
    if (a.m != 0 && a.parity != b.parity) return true;
    if (apply_odd_rule && (i - j) % 2 != 0) return true;
    return false;
}

}  // namespace

double spatial_corr_numeric(int i, int j, double sx, double sy,
                            const atmosphere::OpticalConfig& cfg, const CorrOptions& opt) {
    if (!cfg.profile.is_constant())
        throw std::invalid_argument("spatial_corr_numeric: constant profile only (use exact_path_corr)");
    if (parity_zero(i, j, opt.apply_odd_rule)) return 0.0;
    const double k = cfg.wavenumber();
    const double cn2 = cfg.profile.constant_value();
    const double R = cfg.aperture_diameter / 2.0;
    const double pref = -2.91 * k * k * cn2 * cfg.path_length /
                        (2.0 * M_PI * M_PI * std::pow(2.0, 5.0 / 3.0)) * std::pow(R, 5.0 / 3.0);
    // |R(rho-rho') + D s|^(5/3) = R^(5/3) |(rho-rho') + 2s|^(5/3)
    return pref * q_ij(i, j, 2.0 * sx, 2.0 * sy, opt);
}

double exact_path_corr(int i, int j, double sx, double sy, const atmosphere::OpticalConfig& cfg,
                       const CorrOptions& opt) {
    if (parity_zero(i, j, opt.apply_odd_rule)) return 0.0;
    const double k = cfg.wavenumber();
    const double L = cfg.path_length;
    const double R = cfg.aperture_diameter / 2.0;
    const double pref = -2.91 * k * k / (2.0 * M_PI * M_PI) * std::pow(R, 5.0 / 3.0);
    const double s_mag = std::hypot(sx, sy);
    auto integrand = [&](double z) {
        const double w = std::pow((L - z) / L, 5.0 / 3.0);
        if (w == 0.0) return 0.0;
        double scale = z / (L - z);
        if (s_mag * scale > 50.0) scale = 50.0 / std::max(s_mag, 1e-300);
        return w * cfg.profile(z) * q_ij(i, j, 2.0 * sx * scale, 2.0 * sy * scale, opt);
    };
    return pref * integrate_adaptive(integrand, 0.0, L, 1e-5, 18);
}

// ---------------------------------------------------------------------------
// Correlation kernels and WSS sampling
// ---------------------------------------------------------------------------

CorrelationKernel CorrelationKernel::tilt(int j, double s_max, int n_radial) {
    if (j != 2 && j != 3) throw std::domain_error("CorrelationKernel::tilt: j must be 2 or 3");
    CorrelationKernel k;
    k.mode_ = j;
    k.s_max_ = s_max;
    k.n_radial_ = n_radial;
    k.n_angular_ = 32;
    k.values_.resize(static_cast<size_t>(n_radial) * k.n_angular_);
    const double i00 = i0_at_zero();
    std::vector<std::pair<double, double>> integrals(n_radial);
    parallel_for(n_radial, [&](size_t ir) {
        integrals[ir] = tilt_kernel_integrals(ir * s_max / (n_radial - 1));
    });
    const double sign = j == 2 ? -1.0 : 1.0;
    for (int ir = 0; ir < n_radial; ++ir) {
        for (int ia = 0; ia < k.n_angular_; ++ia) {
            const double psi = 2.0 * M_PI * ia / k.n_angular_;
            k.values_[static_cast<size_t>(ir) * k.n_angular_ + ia] =
                (integrals[ir].first + sign * std::cos(2.0 * psi) * integrals[ir].second) / i00;
        }
    }
    return k;
}

CorrelationKernel CorrelationKernel::from_quadrature(int mode, double s_max, int n_radial,
                                                     int n_angular, const CorrOptions& opt) {
    CorrelationKernel k;
    k.mode_ = mode;
    k.s_max_ = s_max;
    k.n_radial_ = n_radial;
    k.n_angular_ = n_angular;
    k.values_.resize(static_cast<size_t>(n_radial) * n_angular);
    const double q0 = q_ij(mode, mode, 0.0, 0.0, opt);
    parallel_for(static_cast<size_t>(n_radial) * n_angular, [&](size_t idx) {
        const int ir = static_cast<int>(idx) / n_angular;
        const int ia = static_cast<int>(idx) % n_angular;
        const double s = ir * s_max / (n_radial - 1);
        const double psi = 2.0 * M_PI * ia / n_angular;
        k.values_[idx] =
            q_ij(mode, mode, 2.0 * s * std::cos(psi), 2.0 * s * std::sin(psi), opt) / q0;
    });
    return k;
}

CorrelationKernel CorrelationKernel::from_table(int mode, double s_max, int n_radial,
                                                int n_angular, std::vector<double> values) {
    if (values.size() != static_cast<size_t>(n_radial) * n_angular)
        throw std::invalid_argument("CorrelationKernel::from_table: size mismatch");
    CorrelationKernel k;
    k.mode_ = mode;
    k.s_max_ = s_max;
    k.n_radial_ = n_radial;
    k.n_angular_ = n_angular;
    k.values_ = std::move(values);
    return k;
}

double CorrelationKernel::operator()(double s, double psi) const {
    if (s < 0) s = -s;
    if (s >= s_max_) return 0.0;
    const double fr = s / s_max_ * (n_radial_ - 1);
    int ir = static_cast<int>(fr);
    if (ir >= n_radial_ - 1) ir = n_radial_ - 2;
    const double tr = fr - ir;
    double fa = psi / (2.0 * M_PI) * n_angular_;
    fa -= std::floor(fa / n_angular_) * n_angular_;
    int ia = static_cast<int>(fa) % n_angular_;
    const double ta = fa - std::floor(fa);
    const int ia1 = (ia + 1) % n_angular_;
    auto v = [&](int r, int a) { return values_[static_cast<size_t>(r) * n_angular_ + a]; };
    const double lo = v(ir, ia) * (1 - ta) + v(ir, ia1) * ta;
    const double hi = v(ir + 1, ia) * (1 - ta) + v(ir + 1, ia1) * ta;
    return lo * (1 - tr) + hi * tr;
}

FieldSample sample_field_wss(const CorrelationKernel& kernel, int height, int width,
                             double pitch_s, uint64_t seed) {
    // 2x circulant embedding: covariance evaluated at torus distances.
    const int mh = 2 * height, mw = 2 * width;
    std::vector<cd> spec(static_cast<size_t>(mh) * mw);
    for (int r = 0; r < mh; ++r) {
        const int dr = r < mh / 2 ? r : r - mh;
        for (int c = 0; c < mw; ++c) {
            const int dc = c < mw / 2 ? c : c - mw;
            const double sy = dr * pitch_s, sx = dc * pitch_s;
            const double s = std::hypot(sx, sy);
            spec[static_cast<size_t>(r) * mw + c] = kernel(s, std::atan2(sy, sx));
        }
    }
    fft::forward2d(spec.data(), mh, mw);

    double clipped = 0, total = 0, kept = 0;
    for (auto& v : spec) {
        double ev = v.real();
        total += std::abs(ev);
        if (ev < 0) {
            clipped += -ev;
            ev = 0;
        }
        kept += ev;
        v = ev;
    }
    // rescale the clipped spectrum so the sampled marginal variance equals
    // kernel(0) exactly (clipping otherwise bleeds variance)
    const double target = static_cast<double>(mh) * mw * kernel(0.0, 0.0);
    const double gain = kept > 0 ? target / kept : 0.0;
    for (auto& v : spec) v = std::sqrt(v.real() * gain);

    // y = F^-1(S^(1/2) F(e)) with white real e reproduces the circulant
    // covariance exactly: E[y y'] = (1/M) sum_k S_k w^(k d) = C(d).
    RandomStream rs(seed, "wss_field", 0);
    std::vector<cd> noise(static_cast<size_t>(mh) * mw);
    for (auto& v : noise) v = rs.normal();
    fft::forward2d(noise.data(), mh, mw);
    for (size_t i = 0; i < noise.size(); ++i) noise[i] *= spec[i];
    fft::inverse2d(noise.data(), mh, mw);

    FieldSample out;
    out.field = Image(height, width);
    for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c)
            out.field(r, c) = noise[static_cast<size_t>(r) * mw + c].real();
    out.clipped_mass_fraction = total > 0 ? clipped / total : 0.0;
    out.flagged = out.clipped_mass_fraction > 0.01;
    return out;
}

double nyquist_pitch_s(const atmosphere::OpticalConfig& cfg) {
    return cfg.wavelength * cfg.path_length /
           (2.0 * cfg.aperture_diameter * cfg.aperture_diameter);
}

ZernikeField sample_zernike_space(const atmosphere::OpticalConfig& cfg, int n_modes, int height,
                                  int width, uint64_t seed,
                                  const std::vector<CorrelationKernel>& high_order_kernels,
                                  bool apply_odd_rule) {
    atmosphere::OpticalConfig sph = cfg;
    sph.wave_kind = atmosphere::OpticalConfig::WaveKind::Spherical;
    const double r0 = atmosphere::fried_parameter(sph);
    const double dr0 = r0 == atmosphere::kInfiniteR0 ? 0.0 : cfg.aperture_diameter / r0;

    ZernikeField zf;
    zf.height = height;
    zf.width = width;
    zf.n_modes = n_modes;
    zf.pitch_s = nyquist_pitch_s(cfg);
    zf.D_over_r0 = dr0;
    zf.a.assign(static_cast<size_t>(n_modes) * height * width, 0.0);
    if (dr0 == 0.0) return zf;  // no turbulence: zero field

    // step 1: independent unit-variance WSS fields per mode (piston stays 0)
    std::vector<Image> unit(n_modes);
    static const CorrelationKernel tilt2 = CorrelationKernel::tilt(2);
    static const CorrelationKernel tilt3 = CorrelationKernel::tilt(3);
    std::vector<const CorrelationKernel*> kern(n_modes + 1, nullptr);
    for (int j = 2; j <= n_modes; ++j) {
        if (j == 2) kern[j] = &tilt2;
        else if (j == 3) kern[j] = &tilt3;
        else if (!high_order_kernels.empty()) {
            const size_t idx = std::min<size_t>(j - 4, high_order_kernels.size() - 1);
            kern[j] = &high_order_kernels[idx];
        } else {
            kern[j] = &tilt2;  // fallback: tilt-shaped correlation
        }
    }
    parallel_for(n_modes - 1, [&](size_t t) {
        const int j = static_cast<int>(t) + 2;
        unit[j - 1] = sample_field_wss(*kern[j], height, width, zf.pitch_s,
                                       RandomStream(seed, "zspace_mode", j).next_u64())
                          .field;
    });

    // step 2: per-pixel mixing by the Noll factor
    const zernike::NollMatrix noll(n_modes, dr0, apply_odd_rule);
    parallel_for(static_cast<size_t>(height), [&](size_t r) {
        std::vector<double> g(n_modes + 1, 0.0);
        for (int c = 0; c < width; ++c) {
            for (int j = 2; j <= n_modes; ++j) g[j] = unit[j - 1](static_cast<int>(r), c);
            for (int i = 2; i <= n_modes; ++i) {
                double acc = 0;
                for (int j = 2; j <= n_modes; ++j) acc += noll.chol(i, j) * g[j];
                zf.at(i, static_cast<int>(r), c) = acc;
            }
        }
    });
    return zf;
}

namespace {

TiltStatCurve tilt_stat_impl(const std::vector<Image>& fields, bool differential) {
    if (fields.size() < 100)
        throw std::invalid_argument("tilt statistics: need >= 100 field realizations");
    const int h = fields[0].height(), w = fields[0].width();
    const int mh = 2 * h, mw = 2 * w;

    std::vector<double> mean_power(static_cast<size_t>(mh) * mw, 0.0);
    double var_acc = 0;
    std::vector<cd> buf(static_cast<size_t>(mh) * mw);
    for (const auto& f : fields) {
        std::fill(buf.begin(), buf.end(), cd(0, 0));
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                buf[static_cast<size_t>(r) * mw + c] = f(r, c);
                var_acc += f(r, c) * f(r, c);
            }
        fft::forward2d(buf.data(), mh, mw);
        for (size_t i = 0; i < buf.size(); ++i) mean_power[i] += std::norm(buf[i]);
    }
    const double n_fields = static_cast<double>(fields.size());
    for (auto& v : mean_power) v /= n_fields;
    for (size_t i = 0; i < buf.size(); ++i) buf[i] = mean_power[i];
    fft::inverse2d(buf.data(), mh, mw);

    const double gamma0 = var_acc / (n_fields * h * w);
    const int max_lag = std::min(h, w) / 2;
    std::vector<double> sum(max_lag + 1, 0.0);
    std::vector<int> cnt(max_lag + 1, 0);
    for (int dr = -max_lag; dr <= max_lag; ++dr) {
        for (int dc = -max_lag; dc <= max_lag; ++dc) {
            const int bin = static_cast<int>(std::lround(std::hypot(dr, dc)));
            if (bin > max_lag) continue;
            const int rr = (dr + mh) % mh, cc = (dc + mw) % mw;
            const double overlap = static_cast<double>(h - std::abs(dr)) * (w - std::abs(dc));
            const double gamma = buf[static_cast<size_t>(rr) * mw + cc].real() / overlap;
            sum[bin] += differential ? 2.0 * (gamma0 - gamma) : gamma;
            ++cnt[bin];
        }
    }
    TiltStatCurve out;
    for (int b = 0; b <= max_lag; ++b) {
        if (!cnt[b]) continue;
        out.s.push_back(b);
        out.value.push_back(sum[b] / cnt[b]);
    }
    return out;
}

}  // namespace

TiltStatCurve ztilt_stat(const std::vector<Image>& fields) { return tilt_stat_impl(fields, false); }
TiltStatCurve dtilt_stat(const std::vector<Image>& fields) { return tilt_stat_impl(fields, true); }

double ztilt_theory(double s_pixels, double pitch_s, double D_over_r0) {
    const auto [i0, i2] = tilt_kernel_integrals(s_pixels * pitch_s);
    (void)i2;  // the cos(2 psi) term averages to zero under radial binning
    return tilt_pixel_variance(D_over_r0) * i0 / i0_at_zero();
}

double dtilt_theory(double s_pixels, double pitch_s, double D_over_r0) {
    return 2.0 * (tilt_pixel_variance(D_over_r0) - ztilt_theory(s_pixels, pitch_s, D_over_r0));
}

}  // namespace turbsim::zfield
