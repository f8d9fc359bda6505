#include "turbsim/optics.hpp"

#include <cmath>
#include <stdexcept>

#include "turbsim/fft.hpp"
#include "turbsim/threadpool.hpp"

namespace turbsim::optics {

Pupil make_pupil(PupilShape shape, int grid_n, int diameter_samples) {
    if (diameter_samples < 1 || diameter_samples > grid_n)
        throw std::invalid_argument("make_pupil: need 1 <= diameter_samples <= N");
    Pupil p;
    p.mask = Image(grid_n, grid_n, 0.0);
    p.diameter_samples = diameter_samples;
    const double c = (grid_n - 1) / 2.0;
    const double half = diameter_samples / 2.0;
    int count = 0;
    for (int r = 0; r < grid_n; ++r) {
        for (int col = 0; col < grid_n; ++col) {
            const double dy = r - c, dx = col - c;
            const bool inside = shape == PupilShape::Square
                                    ? (std::abs(dx) <= half && std::abs(dy) <= half)
                                    : (dx * dx + dy * dy <= half * half);
            if (inside) {
                p.mask(r, col) = 1.0;
                ++count;
            }
        }
    }
    if (count == 0) {
        // degenerate disk smaller than the sample pitch
        const int rc = static_cast<int>(std::floor(c + 0.5));
        p.mask(rc, rc) = 1.0;
    }
    return p;
}

Image psf_from_phase(const Pupil& pupil, const Image& phase, double oversample) {
    if (oversample < 1.0) throw std::invalid_argument("psf_from_phase: oversample must be >= 1");
    const int n = pupil.mask.height();
    if (phase.height() != n || phase.width() != n)
        throw std::invalid_argument("psf_from_phase: phase grid must match pupil grid");
    const int m = static_cast<int>(std::lround(oversample * n));
    std::vector<cd> buf(static_cast<size_t>(m) * m, cd(0, 0));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (pupil.mask(r, c) != 0.0)
                buf[static_cast<size_t>(r) * m + c] =
                    pupil.mask(r, c) * std::polar(1.0, phase(r, c));
    fft::forward2d(buf.data(), m, m);
    fft::shift2d(buf.data(), m, m);
    Image psf(m, m);
    double total = 0;
    for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
            const double v = std::norm(buf[static_cast<size_t>(r) * m + c]);
            psf(r, c) = v;
            total += v;
        }
    if (total > 0) psf.scale(1.0 / total);
    return psf;
}

ComplexField fresnel_kernel(int grid_n, double dx, double z, double lambda) {
    if (z <= 0) throw std::domain_error("fresnel_kernel: z must be positive");
    ComplexField h(grid_n, dx, lambda);
    const double k = 2.0 * M_PI / lambda;
    const cd pref = std::polar(1.0 / (lambda * z), k * z - M_PI / 2.0);
    const double c = grid_n / 2.0;
    for (int r = 0; r < grid_n; ++r) {
        for (int col = 0; col < grid_n; ++col) {
            const double y = (r - c) * dx, x = (col - c) * dx;
            h(r, col) = pref * std::polar(1.0, k * (x * x + y * y) / (2.0 * z));
        }
    }
    return h;
}

PropagationResult propagate(const ComplexField& field, double z, PropagationMethod method) {
    const int n = field.n();
    const double dx = field.dx();
    const double lambda = field.wavelength();
    if (lambda <= 0) throw std::invalid_argument("propagate: field carries no wavelength");
    PropagationResult out;
    out.field = field;
    if (z == 0.0) return out;
    out.aliasing_warning = dx * dx * (1.0 + 1e-9) < std::abs(lambda * z) / n;

    fft::forward(out.field);
    const double df = 1.0 / (n * dx);
    const double k = 2.0 * M_PI / lambda;
    for (int r = 0; r < n; ++r) {
        const int fr = r <= n / 2 ? r : r - n;  // DFT frequency ordering
        for (int c = 0; c < n; ++c) {
            const int fc = c <= n / 2 ? c : c - n;
            const double f2 = (sqr(fr) + sqr(fc)) * df * df;
            cd H;
            if (method == PropagationMethod::FresnelConv) {
                H = std::polar(1.0, k * z - M_PI * lambda * z * f2);
            } else {
                const double arg = 1.0 - lambda * lambda * f2;
                if (arg >= 0.0) {
                    H = std::polar(1.0, k * z * std::sqrt(arg));
                } else {
                    // evanescent: decay for forward propagation, kill for backward
                    H = z > 0 ? cd(std::exp(-k * z * std::sqrt(-arg)), 0) : cd(0, 0);
                }
            }
            out.field(r, c) *= H;
        }
    }
    fft::inverse(out.field);
    return out;
}

std::vector<cd> rs_oracle(const ComplexField& field, double z,
                          const std::vector<std::pair<double, double>>& obs_xy,
                          bool allow_large) {
    const int n = field.n();
    if (n > 256 && !allow_large)
        throw std::invalid_argument("rs_oracle: N > 256 refused without allow_large (cost guard)");
    const double dx = field.dx();
    const double lambda = field.wavelength();
    const double k = 2.0 * M_PI / lambda;
    const double c = n / 2.0;
    std::vector<cd> out(obs_xy.size());
    parallel_for(obs_xy.size(), [&](size_t p) {
        const double ox = obs_xy[p].first, oy = obs_xy[p].second;
        cd acc(0, 0);
        for (int r = 0; r < n; ++r) {
            const double y = (r - c) * dx;
            for (int col = 0; col < n; ++col) {
                const cd u = field(r, col);
                if (u == cd(0, 0)) continue;
                const double x = (col - c) * dx;
                const double rr = std::sqrt(sqr(ox - x) + sqr(oy - y) + z * z);
                const double cos_theta = z / rr;
                acc += u * std::polar(cos_theta / rr, k * rr);
            }
        }
        // 1/(j lambda) prefactor and area element
        out[p] = acc * cd(0, -1.0 / lambda) * dx * dx;
    });
    return out;
}

namespace {

double sample_with_bc(const Image& im, int r, int c, Boundary bc) {
    if (r >= 0 && r < im.height() && c >= 0 && c < im.width()) return im(r, c);
    if (bc == Boundary::ZeroPad) return 0.0;
    r = std::clamp(r, 0, im.height() - 1);
    c = std::clamp(c, 0, im.width() - 1);
    return im(r, c);
}

}  // namespace

Image incoherent_image(const Image& psf, const Image& ideal, Boundary bc) {
    const int kh = psf.height(), kw = psf.width();
    const int cy = kh / 2, cx = kw / 2;
    Image out(ideal.height(), ideal.width(), 0.0);
    parallel_for(ideal.height(), [&](size_t r) {
        for (int c = 0; c < ideal.width(); ++c) {
            double acc = 0;
            for (int i = 0; i < kh; ++i)
                for (int j = 0; j < kw; ++j) {
                    const double kv = psf(i, j);
                    if (kv == 0.0) continue;
                    acc += kv * sample_with_bc(ideal, static_cast<int>(r) - (i - cy),
                                               c - (j - cx), bc);
                }
            out(static_cast<int>(r), c) = acc;
        }
    });
    return out;
}

Image coherent_image(const std::vector<cd>& asf, int asf_n, const std::vector<cd>& field, int n) {
    const int cy = asf_n / 2, cx = asf_n / 2;
    Image out(n, n, 0.0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            cd acc(0, 0);
            for (int i = 0; i < asf_n; ++i)
                for (int j = 0; j < asf_n; ++j) {
                    const int sr = r - (i - cy), sc = c - (j - cx);
                    if (sr < 0 || sr >= n || sc < 0 || sc >= n) continue;
                    acc += asf[static_cast<size_t>(i) * asf_n + j] *
                           field[static_cast<size_t>(sr) * n + sc];
                }
            out(r, c) = std::norm(acc);
        }
    return out;
}

std::vector<cd> otf_from_psf(const Image& psf) {
    const int n = psf.height();
    if (psf.sum() <= 0) throw std::invalid_argument("otf_from_psf: psf sum must be positive");
    std::vector<cd> buf(static_cast<size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) buf[static_cast<size_t>(r) * n + c] = psf(r, c);
    // kernel is centered; move its origin to (0,0) so the OTF phase is flat
    fft::shift2d(buf.data(), n, n);
    fft::forward2d(buf.data(), n, n);
    const cd dc = buf[0];
    fft::shift2d(buf.data(), n, n);
    for (auto& v : buf) v /= dc;
    return buf;
}

std::vector<cd> atf_from_asf(const std::vector<cd>& asf, int n) {
    std::vector<cd> buf = asf;
    fft::shift2d(buf.data(), n, n);
    fft::forward2d(buf.data(), n, n);
    fft::shift2d(buf.data(), n, n);
    return buf;
}

Image sv_convolve_scatter(const Image& image, const KernelProvider& provider, Boundary bc) {
    const int h = image.height(), w = image.width();
    Image out(h, w, 0.0);
    // scatter writes overlap across sources; accumulate serially
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double v = image(r, c);
            if (v == 0.0) continue;
            const Image& ker = provider(r, c);
            const int kh = ker.height(), kw = ker.width();
            const int cy = kh / 2, cx = kw / 2;
            for (int i = 0; i < kh; ++i) {
                for (int j = 0; j < kw; ++j) {
                    const double kv = ker(i, j);
                    if (kv == 0.0) continue;
                    int tr = r + i - cy, tc = c + j - cx;
                    if (tr < 0 || tr >= h || tc < 0 || tc >= w) {
                        if (bc == Boundary::ZeroPad) continue;
                        tr = std::clamp(tr, 0, h - 1);
                        tc = std::clamp(tc, 0, w - 1);
                    }
                    out(tr, tc) += v * kv;
                }
            }
        }
    }
    return out;
}

Image sv_convolve_gather(const Image& image, const KernelProvider& provider, Boundary bc) {
    const int h = image.height(), w = image.width();
    Image out(h, w, 0.0);
    parallel_for(h, [&](size_t r) {
        for (int c = 0; c < w; ++c) {
            const Image& ker = provider(static_cast<int>(r), c);
            const int kh = ker.height(), kw = ker.width();
            const int cy = kh / 2, cx = kw / 2;
            double acc = 0;
            for (int i = 0; i < kh; ++i)
                for (int j = 0; j < kw; ++j) {
                    const double kv = ker(i, j);
                    if (kv == 0.0) continue;
                    acc += kv * sample_with_bc(image, static_cast<int>(r) - (i - cy),
                                               c - (j - cx), bc);
                }
            out(static_cast<int>(r), c) = acc;
        }
    });
    return out;
}

std::vector<double> radial_profile(const Image& map, int n_bins) {
    const int n = map.height();
    const double cy = n / 2.0, cx = n / 2.0;
    std::vector<double> sum(n_bins, 0.0);
    std::vector<int> count(n_bins, 0);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const int bin = static_cast<int>(std::lround(std::hypot(r - cy, c - cx)));
            if (bin < n_bins) {
                sum[bin] += map(r, c);
                ++count[bin];
            }
        }
    for (int b = 0; b < n_bins; ++b)
        if (count[b]) sum[b] /= count[b];
    return sum;
}

}  // namespace turbsim::optics
