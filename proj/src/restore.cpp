#include "turbsim/restore.hpp"

#include <cmath>
#include <stdexcept>

#include "turbsim/fft.hpp"
#include "turbsim/threadpool.hpp"

namespace turbsim::restore {

Image FrameStack::patch(int t, int row, int col, int size) const {
    const Image& f = frames[t];
    Image out(size, size);
    const int h = size / 2;
    for (int r = 0; r < size; ++r)
        for (int c = 0; c < size; ++c) {
            const int sr = std::clamp(row - h + r, 0, f.height() - 1);
            const int sc = std::clamp(col - h + c, 0, f.width() - 1);
            out(r, c) = f(sr, sc);
        }
    return out;
}

Image apply_tilt(const Image& image, const TiltMap& tilt) {
    const int h = image.height(), w = image.width();
    Image out(h, w, 0.0);
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double v = image(r, c);
            if (v == 0.0) continue;
            double tr = r + tilt.dy(r, c);
            double tc = c + tilt.dx(r, c);
            tr = std::clamp(tr, 0.0, h - 1.0);
            tc = std::clamp(tc, 0.0, w - 1.0);
            const int r0 = static_cast<int>(tr), c0 = static_cast<int>(tc);
            const int r1 = std::min(r0 + 1, h - 1), c1 = std::min(c0 + 1, w - 1);
            const double fr = tr - r0, fc = tc - c0;
            out(r0, c0) += v * (1 - fr) * (1 - fc);
            out(r0, c1) += v * (1 - fr) * fc;
            out(r1, c0) += v * fr * (1 - fc);
            out(r1, c1) += v * fr * fc;
        }
    }
    return out;
}

Image apply_blur(const Image& image, const optics::KernelProvider& kernels) {
    return optics::sv_convolve_scatter(image, kernels);
}

std::vector<double> build_tilt_matrix(int h, int w, const TiltMap& tilt) {
    const int n = h * w;
    std::vector<double> T(static_cast<size_t>(n) * n, 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int j = r * w + c;  // source pixel
            Image delta(h, w, 0.0);
            delta(r, c) = 1.0;
            const Image moved = apply_tilt(delta, tilt);
            for (int rr = 0; rr < h; ++rr)
                for (int cc = 0; cc < w; ++cc)
                    T[static_cast<size_t>(rr * w + cc) * n + j] = moved(rr, cc);
        }
    return T;
}

std::vector<double> build_blur_matrix(int h, int w, const optics::KernelProvider& kernels) {
    const int n = h * w;
    std::vector<double> B(static_cast<size_t>(n) * n, 0.0);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const int j = r * w + c;
            Image delta(h, w, 0.0);
            delta(r, c) = 1.0;
            const Image blurred = optics::sv_convolve_scatter(delta, kernels);
            for (int rr = 0; rr < h; ++rr)
                for (int cc = 0; cc < w; ++cc)
                    B[static_cast<size_t>(rr * w + cc) * n + j] = blurred(rr, cc);
        }
    return B;
}

double sharpness_tv(const Image& patch) {
    double tv = 0;
    const int h = patch.height(), w = patch.width();
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            const double gx = c + 1 < w ? patch(r, c + 1) - patch(r, c) : 0.0;
            const double gy = r + 1 < h ? patch(r + 1, c) - patch(r, c) : 0.0;
            tv += std::abs(gx) + std::abs(gy);
        }
    return tv;
}

double sharpness_var(const Image& patch) {
    const double n = static_cast<double>(patch.size());
    if (n == 0) throw std::invalid_argument("sharpness_var: empty patch");
    const double mu = patch.sum() / n;
    double acc = 0;
    for (int r = 0; r < patch.height(); ++r)
        for (int c = 0; c < patch.width(); ++c) acc += sqr(patch(r, c) - mu);
    return acc / n;
}

namespace {

double patch_distance(const Image& a, const Image& b) {
    double acc = 0;
    for (int r = 0; r < a.height(); ++r)
        for (int c = 0; c < a.width(); ++c) acc += sqr(a(r, c) - b(r, c));
    return acc;
}

// overlap-average assembler
struct PatchAccumulator {
    Image sum, weight;
    PatchAccumulator(int h, int w) : sum(h, w, 0.0), weight(h, w, 0.0) {}
    void add(const Image& patch, int row, int col) {
        const int h = patch.height() / 2;
        for (int r = 0; r < patch.height(); ++r)
            for (int c = 0; c < patch.width(); ++c) {
                const int tr = row - h + r, tc = col - h + c;
                if (tr < 0 || tr >= sum.height() || tc < 0 || tc >= sum.width()) continue;
                sum(tr, tc) += patch(r, c);
                weight(tr, tc) += 1.0;
            }
    }
    Image finish() const {
        Image out = sum;
        for (int r = 0; r < out.height(); ++r)
            for (int c = 0; c < out.width(); ++c)
                if (weight(r, c) > 0) out(r, c) /= weight(r, c);
        return out;
    }
};

std::vector<int> patch_centers(int extent, int stride, int patch) {
    // a patch at center c covers [c - patch/2, c - patch/2 + patch)
    const int last = std::max(extent - patch + patch / 2, patch / 2);
    std::vector<int> centers;
    for (int c = patch / 2; c < last; c += stride) centers.push_back(c);
    centers.push_back(last);
    return centers;
}

}  // namespace

Image reference_frame(const FrameStack& stack, ReferenceMethod method,
                      const NonLocalOptions& opt) {
    const int T = stack.count();
    if (method == ReferenceMethod::TemporalMean) {
        Image out(stack.height(), stack.width(), 0.0);
        for (const auto& f : stack.frames) out += f;
        out.scale(1.0 / T);
        return out;
    }
    if (T < 2) throw std::invalid_argument("reference_frame: nonlocal needs T >= 2");

    const auto rows = patch_centers(stack.height(), opt.stride, opt.patch);
    const auto cols = patch_centers(stack.width(), opt.stride, opt.patch);

    // auto beta: unit variance of the pairwise distances on a probe subset
    double beta = opt.beta;
    if (beta < 0) {
        std::vector<double> probe;
        for (int t = 1; t < T; ++t) {
            const Image a = stack.patch(0, rows[0], cols[0], opt.patch);
            const Image b = stack.patch(t, rows[0], cols[0], opt.patch);
            probe.push_back(patch_distance(a, b));
        }
        double mu = 0;
        for (double d : probe) mu += d / probe.size();
        beta = mu > 0 ? 1.0 / mu : 1.0;
    }

    PatchAccumulator acc(stack.height(), stack.width());
    for (int pr : rows) {
        for (int pc : cols) {
            // reference time index 0: fuse along time with best-spatial-match
            const Image base = stack.patch(0, pr, pc, opt.patch);
            Image fused(opt.patch, opt.patch, 0.0);
            double wsum = 0;
            for (int t = 0; t < T; ++t) {
                double best = 1e300;
                Image best_patch(opt.patch, opt.patch, 0.0);
                for (int dr = -opt.search_radius; dr <= opt.search_radius; ++dr)
                    for (int dc = -opt.search_radius; dc <= opt.search_radius; ++dc) {
                        const Image cand = stack.patch(t, pr + dr, pc + dc, opt.patch);
                        const double d = patch_distance(base, cand);
                        if (d < best) {
                            best = d;
                            best_patch = cand;
                        }
                    }
                const double w = std::exp(-beta * best);
                wsum += w;
                for (int r = 0; r < opt.patch; ++r)
                    for (int c = 0; c < opt.patch; ++c) fused(r, c) += w * best_patch(r, c);
            }
            if (wsum > 0) fused.scale(1.0 / wsum);
            acc.add(fused, pr, pc);
        }
    }
    return acc.finish();
}

LuckyResult lucky_fuse(const FrameStack& stack, const Image& ref, const LuckyOptions& opt) {
    const int T = stack.count();
    const auto rows = patch_centers(stack.height(), opt.stride, opt.patch);
    const auto cols = patch_centers(stack.width(), opt.stride, opt.patch);

    FrameStack ref_stack;
    ref_stack.frames.push_back(ref);

    // auto weights: normalize each exponent to unit sample variance
    double a1 = opt.alpha1, a2 = opt.alpha2;
    if (a1 < 0 || a2 < 0) {
        std::vector<double> geo, shp;
        for (int t = 0; t < T; ++t) {
            const Image p = stack.patch(t, rows[0], cols[0], opt.patch);
            const Image rp = ref_stack.patch(0, rows[0], cols[0], opt.patch);
            geo.push_back(patch_distance(p, rp));
            shp.push_back(sharpness_tv(p));
        }
        auto stddev = [](const std::vector<double>& v) {
            double mu = 0;
            for (double x : v) mu += x / v.size();
            double s2 = 0;
            for (double x : v) s2 += sqr(x - mu) / v.size();
            return std::sqrt(s2);
        };
        const double sg = stddev(geo), ss = stddev(shp);
        if (a1 < 0) a1 = sg > 0 ? 1.0 / sg : 0.0;
        if (a2 < 0) a2 = ss > 0 ? 1.0 / ss : 0.0;
    }

    LuckyResult out;
    PatchAccumulator acc(stack.height(), stack.width());
    for (int pr : rows) {
        for (int pc : cols) {
            const Image rp = ref_stack.patch(0, pr, pc, opt.patch);
            Image fused(opt.patch, opt.patch, 0.0);
            double wsum = 0;
            double shift = 0;  // stabilize exponents
            std::vector<double> logw(T);
            for (int t = 0; t < T; ++t) {
                const Image p = stack.patch(t, pr, pc, opt.patch);
                logw[t] = -a1 * patch_distance(p, rp) + a2 * sharpness_tv(p);
                if (t == 0 || logw[t] > shift) shift = logw[t];
            }
            for (int t = 0; t < T; ++t) {
                const double w = std::exp(logw[t] - shift);
                wsum += w;
                const Image p = stack.patch(t, pr, pc, opt.patch);
                for (int r = 0; r < opt.patch; ++r)
                    for (int c = 0; c < opt.patch; ++c) fused(r, c) += w * p(r, c);
            }
            if (wsum <= 1e-12 * T) {
                // degenerate: fall back to the temporal mean for this patch
                ++out.degenerate_patches;
                fused = Image(opt.patch, opt.patch, 0.0);
                for (int t = 0; t < T; ++t) {
                    const Image p = stack.patch(t, pr, pc, opt.patch);
                    for (int r = 0; r < opt.patch; ++r)
                        for (int c = 0; c < opt.patch; ++c) fused(r, c) += p(r, c) / T;
                }
            } else {
                fused.scale(1.0 / wsum);
            }
            acc.add(fused, pr, pc);
        }
    }
    out.image = acc.finish();
    return out;
}

bool lucky_event(const zernike::ZernikeVector& a, double tau) {
    if (tau <= 0) throw std::invalid_argument("lucky_event: tau must be positive");
    double norm2 = 0;
    for (int j = 2; j <= a.n_modes(); ++j) norm2 += sqr(a[j]);
    return norm2 <= tau;
}

namespace {

Image convolve_centered(const Image& image, const Image& kernel) {
    return optics::incoherent_image(kernel, image, optics::Boundary::ZeroPad);
}

Image correlate_centered(const Image& image, const Image& kernel) {
    Image flipped(kernel.height(), kernel.width());
    for (int r = 0; r < kernel.height(); ++r)
        for (int c = 0; c < kernel.width(); ++c)
            flipped(r, c) = kernel(kernel.height() - 1 - r, kernel.width() - 1 - c);
    return optics::incoherent_image(flipped, image, optics::Boundary::ZeroPad);
}

double tv_value(const Image& im) { return sharpness_tv(im); }

// subgradient of anisotropic TV (forward differences, replicate boundary)
Image tv_gradient(const Image& im) {
    const int h = im.height(), w = im.width();
    Image g(h, w, 0.0);
    auto sgn = [](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); };
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
            if (c + 1 < w) {
                const double s = sgn(im(r, c + 1) - im(r, c));
                g(r, c) -= s;
                g(r, c + 1) += s;
            }
            if (r + 1 < h) {
                const double s = sgn(im(r + 1, c) - im(r, c));
                g(r, c) -= s;
                g(r + 1, c) += s;
            }
        }
    return g;
}

double data_term(const Image& lucky, const Image& J, const Image& kernel) {
    const Image pred = convolve_centered(J, kernel);
    double acc = 0;
    for (int r = 0; r < lucky.height(); ++r)
        for (int c = 0; c < lucky.width(); ++c) acc += sqr(pred(r, c) - lucky(r, c));
    return acc;
}

}  // namespace

DeconvolveResult blind_deconvolve(const Image& lucky, const psfbasis::PsfBasis& basis,
                                  const DeconvolveOptions& opt) {
    DeconvolveResult res;
    const int h = lucky.height(), w = lucky.width();
    const int M = basis.n_components;

    Image J = lucky;
    std::vector<double> wvec(M, 0.0);

    auto kernel_of = [&](const std::vector<double>& wv) {
        Image ker = basis.mean;
        for (int m = 0; m < M; ++m) {
            if (wv[m] == 0.0) continue;
            const double* phi = basis.components[m].data();
            double* dst = ker.data();
            for (int i = 0; i < basis.kernel_size * basis.kernel_size; ++i)
                dst[i] += wv[m] * phi[i];
        }
        return ker;
    };

    double data0 = data_term(lucky, J, kernel_of(wvec));
    const double lambda = opt.lambda >= 0 ? opt.lambda : 1e-2 * std::max(data0, 1e-12);
    const double gamma = opt.gamma >= 0 ? opt.gamma : 1e-4 * std::max(data0, 1e-12);

    auto objective = [&](const Image& Jv, const std::vector<double>& wv) {
        double obj = data_term(lucky, Jv, kernel_of(wv)) + lambda * tv_value(Jv);
        for (int m = 0; m < M; ++m) obj += gamma * std::abs(wv[m]) / basis.sigma[m];
        return obj;
    };

    double obj = objective(J, wvec);
    res.objective_trace.push_back(obj);

    double j_step = 0.5;  // relative to a Lipschitz estimate refreshed per outer iter
    for (int outer = 0; outer < opt.outer_iters; ++outer) {
        const Image ker = kernel_of(wvec);

        // ---- J-step: gradient descent with halving on objective rise ----
        {
            // grad = 2 K^T (K J - I) + lambda d TV
            double step = j_step;
            for (int it = 0; it < opt.j_iters; ++it) {
                const Image pred = convolve_centered(J, ker);
                Image resid(h, w);
                for (int r = 0; r < h; ++r)
                    for (int c = 0; c < w; ++c) resid(r, c) = pred(r, c) - lucky(r, c);
                Image grad = correlate_centered(resid, ker);
                grad.scale(2.0);
                const Image tvg = tv_gradient(J);
                for (int r = 0; r < h; ++r)
                    for (int c = 0; c < w; ++c) grad(r, c) += lambda * tvg(r, c);

                double gnorm2 = 0;
                for (int r = 0; r < h; ++r)
                    for (int c = 0; c < w; ++c) gnorm2 += sqr(grad(r, c));
                if (gnorm2 <= 1e-30) break;

                const double cur = objective(J, wvec);
                int fails = 0;
                for (;;) {
                    Image trial = J;
                    for (int r = 0; r < h; ++r)
                        for (int c = 0; c < w; ++c) trial(r, c) -= step * grad(r, c);
                    const double trial_obj = objective(trial, wvec);
                    if (trial_obj <= cur + 1e-9) {
                        J = std::move(trial);
                        break;
                    }
                    step *= 0.5;
                    if (++fails >= 3) {
                        res.aborted = true;
                        break;
                    }
                }
                if (res.aborted) break;
            }
            j_step = step * 2.0;  // carry a mildly optimistic step forward
        }
        if (res.aborted) break;

        // ---- w-step: proximal gradient (ISTA) with soft thresholds ----
        {
            // residual r(w) = mean*J + sum w_m (phi_m * J) - lucky is linear in w
            std::vector<Image> phiJ(M);
            parallel_for(M, [&](size_t m) { phiJ[m] = convolve_centered(J, basis.components[m]); });
            const Image meanJ = convolve_centered(J, basis.mean);

            // Lipschitz estimate: 2 * max_m ||phi_m * J||^2 * M (crude upper bound)
            double lip = 0;
            for (int m = 0; m < M; ++m) {
                double n2 = 0;
                for (int r = 0; r < h; ++r)
                    for (int c = 0; c < w; ++c) n2 += sqr(phiJ[m](r, c));
                lip = std::max(lip, n2);
            }
            lip = std::max(2.0 * lip * M, 1e-12);
            const double wstep = 1.0 / lip;

            for (int it = 0; it < opt.w_iters; ++it) {
                Image resid = meanJ;
                for (int m = 0; m < M; ++m)
                    if (wvec[m] != 0.0)
                        for (int r = 0; r < h; ++r)
                            for (int c = 0; c < w; ++c) resid(r, c) += wvec[m] * phiJ[m](r, c);
                for (int r = 0; r < h; ++r)
                    for (int c = 0; c < w; ++c) resid(r, c) -= lucky(r, c);

                std::vector<double> grad(M, 0.0);
                parallel_for(M, [&](size_t m) {
                    double acc = 0;
                    for (int r = 0; r < h; ++r)
                        for (int c = 0; c < w; ++c) acc += resid(r, c) * phiJ[m](r, c);
                    grad[m] = 2.0 * acc;
                });
                std::vector<double> trial(M);
                for (int m = 0; m < M; ++m) {
                    const double u = wvec[m] - wstep * grad[m];
                    const double thr = wstep * gamma / basis.sigma[m];
                    trial[m] = u > thr ? u - thr : (u < -thr ? u + thr : 0.0);
                }
                // accept only if the full objective does not rise
                if (objective(J, trial) <= objective(J, wvec) + 1e-9) wvec = trial;
                else break;
            }
        }

        const double new_obj = objective(J, wvec);
        res.objective_trace.push_back(new_obj);
        if (new_obj > obj + 1e-9) {
            res.aborted = true;
            break;
        }
        obj = new_obj;
    }

    res.image = J;
    res.weights = wvec;
    const psfbasis::Reconstruction rec = psfbasis::reconstruct(wvec, basis, true);
    res.kernel = rec.kernel;
    return res;
}

double psnr(const Image& a, const Image& b, double peak) {
    double mse = 0;
    for (int r = 0; r < a.height(); ++r)
        for (int c = 0; c < a.width(); ++c) mse += sqr(a(r, c) - b(r, c));
    mse /= a.size();
    if (mse <= 0) return 1e9;
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace turbsim::restore
