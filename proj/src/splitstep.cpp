#include "turbsim/splitstep.hpp"

#include <cmath>
#include <stdexcept>

#include "turbsim/fft.hpp"
#include "turbsim/quadrature.hpp"
#include "turbsim/rng.hpp"
#include "turbsim/threadpool.hpp"

namespace turbsim::splitstep {

namespace {

double plane_r0_from_integral(double k, double cn2_integral) {
    if (cn2_integral <= 0) return atmosphere::kInfiniteR0;
    return 0.185 * std::pow(4.0 * M_PI * M_PI / (k * k * cn2_integral), 3.0 / 5.0);
}

}  // namespace

SplitStepPlan make_plan_at(const atmosphere::OpticalConfig& cfg, const std::vector<double>& z,
                           int grid_n, int window_px, uint64_t seed, int subharmonic_levels) {
    if (grid_n < 4 || (grid_n & (grid_n - 1)) != 0)
        throw std::invalid_argument("make_plan: grid_n must be a power of two");
    for (size_t i = 0; i < z.size(); ++i) {
        if (z[i] <= 0 || z[i] >= cfg.path_length)
            throw std::invalid_argument("make_plan: screens must lie strictly inside (0, L)");
        if (i > 0 && z[i] <= z[i - 1])
            throw std::invalid_argument("make_plan: screen positions must be ascending");
    }
    SplitStepPlan plan;
    plan.cfg = cfg;
    plan.grid_n = grid_n;
    plan.window_px = window_px;
    plan.seed = seed;
    plan.subharmonic_levels = subharmonic_levels;
    plan.z = z;
    const double D = cfg.aperture_diameter, L = cfg.path_length;
    plan.delta_pupil = 2.0 * D / grid_n;
    plan.pupil_diameter_samples = grid_n / 2;
    plan.pixel_pitch = cfg.wavelength * L / (2.0 * D);
    plan.voelz_violated = plan.delta_pupil > screens::voelz_spacing(cfg.wavelength, L, D, 4.0);

    const double k = cfg.wavenumber();
    const size_t M = z.size();
    plan.delta.resize(M);
    plan.r0_slab.resize(M);
    plan.masters.resize(M);

    // slab boundaries at midpoints between screens
    std::vector<double> bounds(M + 1);
    bounds[0] = 0.0;
    bounds[M] = L;
    for (size_t i = 1; i < M; ++i) bounds[i] = 0.5 * (z[i - 1] + z[i]);

    const double half_window_m = 0.5 * window_px * plan.pixel_pitch;
    for (size_t i = 0; i < M; ++i) {
        plan.delta[i] = plan.delta_pupil * (L - z[i]) / L;
        const double slab =
            cfg.profile.is_constant()
                ? cfg.profile.constant_value() * (bounds[i + 1] - bounds[i])
                : integrate_adaptive([&](double zz) { return cfg.profile(zz); }, bounds[i],
                                     bounds[i + 1], 1e-8);
        plan.r0_slab[i] = plane_r0_from_integral(k, slab);
        // master must cover crops shifted by up to |u| z / L
        const int max_shift =
            static_cast<int>(std::ceil(half_window_m * z[i] / (L * plan.delta[i])));
        int master_n = grid_n;
        while (master_n < grid_n + 2 * max_shift) master_n *= 2;
        if (plan.r0_slab[i] == atmosphere::kInfiniteR0) {
            plan.masters[i].phase = Image(master_n, master_n, 0.0);
            plan.masters[i].dx = plan.delta[i];
            plan.masters[i].r0_effective = atmosphere::kInfiniteR0;
        } else {
            screens::ScreenPsd psd;
            psd.r0 = plan.r0_slab[i];
            screens::PhaseScreen s = screens::sample_screen_fft(
                master_n, plan.delta[i], psd,
                RandomStream(seed, "splitstep_screen", i).next_u64());
            plan.masters[i] = subharmonic_levels > 0 ? screens::add_subharmonics(s, subharmonic_levels) : s;
        }
    }
    return plan;
}

SplitStepPlan make_plan(const atmosphere::OpticalConfig& cfg, int n_screens, int grid_n,
                        int window_px, uint64_t seed, int subharmonic_levels) {
    if (n_screens < 1) throw std::invalid_argument("make_plan: need at least one screen");
    std::vector<double> z(n_screens);
    for (int i = 0; i < n_screens; ++i)
        z[i] = (i + 0.5) * cfg.path_length / n_screens;  // slab midpoints
    return make_plan_at(cfg, z, grid_n, window_px, seed, subharmonic_levels);
}

namespace {

// Fresnel transfer-function step on an n x n grid with spacing dx over the
// reduced distance dz_eff, plane phase dropped; amplitude scaled by 1/m.
void tf_step(std::vector<cd>& v, int n, double dx, double dz_eff, double lambda, double inv_m) {
    fft::forward2d(v.data(), n, n);
    const double df = 1.0 / (n * dx);
    for (int r = 0; r < n; ++r) {
        const int fr = r <= n / 2 ? r : r - n;
        for (int c = 0; c < n; ++c) {
            const int fc = c <= n / 2 ? c : c - n;
            const double f2 = (sqr(fr) + sqr(fc)) * df * df;
            v[static_cast<size_t>(r) * n + c] *=
                std::polar(inv_m, -M_PI * lambda * dz_eff * f2);
        }
    }
    fft::inverse2d(v.data(), n, n);
}

// Multiply the perturbation by the screen crop for source offset (ux, uy).
void impart_screen(std::vector<cd>& v, int n, const SplitStepPlan& plan, size_t i, double ux_m,
                   double uy_m) {
    const screens::PhaseScreen& master = plan.masters[i];
    if (master.r0_effective == atmosphere::kInfiniteR0) return;
    const int mn = master.phase.height();
    const double L = plan.cfg.path_length;
    const int off_r =
        static_cast<int>(std::lround(uy_m * plan.z[i] / (L * plan.delta[i]))) + (mn - n) / 2;
    const int off_c =
        static_cast<int>(std::lround(ux_m * plan.z[i] / (L * plan.delta[i]))) + (mn - n) / 2;
    for (int r = 0; r < n; ++r) {
        const int mr = std::clamp(r + off_r, 0, mn - 1);
        for (int c = 0; c < n; ++c) {
            const int mc = std::clamp(c + off_c, 0, mn - 1);
            v[static_cast<size_t>(r) * n + c] *= std::polar(1.0, master.phase(mr, mc));
        }
    }
}

std::vector<cd> propagate_perturbation(const SplitStepPlan& plan, double ux, double uy) {
    const int n = plan.grid_n;
    const double L = plan.cfg.path_length;
    const double lambda = plan.cfg.wavelength;
    const double ux_m = ux * plan.pixel_pitch, uy_m = uy * plan.pixel_pitch;

    std::vector<cd> v(static_cast<size_t>(n) * n, cd(1.0, 0.0));
    const size_t M = plan.z.size();
    for (size_t step = 0; step < M; ++step) {
        const size_t i = M - 1 - step;  // object-side screen first
        impart_screen(v, n, plan, i, ux_m, uy_m);
        const double z_next = i == 0 ? 0.0 : plan.z[i - 1];
        const double d_a = L - plan.z[i], d_b = L - z_next;
        const double m = d_b / d_a;
        const double dz_eff = (plan.z[i] - z_next) * d_a / d_b;
        tf_step(v, n, plan.delta[i], dz_eff, lambda, 1.0 / m);
    }
    return v;
}

}  // namespace

PointField propagate_point(const SplitStepPlan& plan, double ux, double uy) {
    const int n = plan.grid_n;
    std::vector<cd> v = propagate_perturbation(plan, ux, uy);
    PointField out;
    out.field = ComplexField(n, plan.delta_pupil, plan.cfg.wavelength);
    const double k = plan.cfg.wavenumber();
    const double L = plan.cfg.path_length;
    const double c = n / 2.0;
    const double ux_m = ux * plan.pixel_pitch, uy_m = uy * plan.pixel_pitch;
    for (int r = 0; r < n; ++r) {
        const double y = (r - c) * plan.delta_pupil;
        for (int col = 0; col < n; ++col) {
            const double x = (col - c) * plan.delta_pupil;
            cd val = v[static_cast<size_t>(r) * n + col];
            // geometric image tilt; the quadratic carrier is already absent
            val *= std::polar(1.0, -k * (x * ux_m + y * uy_m) / L);
            if (!plan.lens_cancel) val *= std::polar(1.0, k * (x * x + y * y) / (2.0 * L));
            out.field(r, col) = val;
        }
    }
    out.aliasing_warning = plan.voelz_violated;
    return out;
}

Image point_psf(const SplitStepPlan& plan, double ux, double uy) {
    const int n = plan.grid_n;
    std::vector<cd> v = propagate_perturbation(plan, ux, uy);
    static thread_local optics::Pupil pupil;
    if (pupil.mask.height() != n || pupil.diameter_samples != plan.pupil_diameter_samples)
        pupil = optics::make_pupil(optics::PupilShape::Circle, n, plan.pupil_diameter_samples);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            if (pupil.mask(r, c) == 0.0) v[static_cast<size_t>(r) * n + c] = cd(0, 0);
    fft::forward2d(v.data(), n, n);
    fft::shift2d(v.data(), n, n);
    Image psf(n, n);
    double total = 0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const double p = std::norm(v[static_cast<size_t>(r) * n + c]);
            psf(r, c) = p;
            total += p;
        }
    if (total > 0) psf.scale(1.0 / total);
    return psf;
}

Image diffraction_psf(const SplitStepPlan& plan) {
    const optics::Pupil pupil =
        optics::make_pupil(optics::PupilShape::Circle, plan.grid_n, plan.pupil_diameter_samples);
    const Image zero(plan.grid_n, plan.grid_n, 0.0);
    return optics::psf_from_phase(pupil, zero, 1.0);
}

namespace {

Image crop_kernel(const Image& psf, int kernel_size) {
    const int n = psf.height();
    const int c0 = n / 2 - kernel_size / 2;
    Image out(kernel_size, kernel_size);
    double total = 0;
    for (int r = 0; r < kernel_size; ++r)
        for (int c = 0; c < kernel_size; ++c) {
            const int sr = std::clamp(c0 + r, 0, n - 1), sc = std::clamp(c0 + c, 0, n - 1);
            out(r, c) = psf(sr, sc);
            total += out(r, c);
        }
    if (total > 0) out.scale(1.0 / total);
    return out;
}

}  // namespace

const Image& PsfGrid::nearest(int row, int col) const {
    auto snap = [&](int v) {
        int s = ((v + stride / 2) / stride) * stride;
        const int last = ((window_px - 1) / stride) * stride;
        return std::clamp(s, 0, last);
    };
    return psfs.at({snap(row), snap(col)});
}

PsfGrid psf_grid(const SplitStepPlan& plan, int stride, int kernel_size) {
    if (kernel_size % 2 == 0) throw std::invalid_argument("psf_grid: kernel_size must be odd");
    PsfGrid grid;
    grid.window_px = plan.window_px;
    grid.stride = stride;
    grid.kernel_size = kernel_size;
    std::vector<std::pair<int, int>> points;
    for (int r = 0; r < plan.window_px; r += stride)
        for (int c = 0; c < plan.window_px; c += stride) points.emplace_back(r, c);
    std::vector<Image> kernels(points.size());
    parallel_for(points.size(), [&](size_t i) {
        const double uy = points[i].first - (plan.window_px - 1) / 2.0;
        const double ux = points[i].second - (plan.window_px - 1) / 2.0;
        kernels[i] = crop_kernel(point_psf(plan, ux, uy), kernel_size);
    });
    for (size_t i = 0; i < points.size(); ++i) grid.psfs.emplace(points[i], std::move(kernels[i]));
    return grid;
}

Image simulate_image(const SplitStepPlan& plan, const Image& ideal, int stride, int kernel_size) {
    if (ideal.height() != plan.window_px || ideal.width() != plan.window_px)
        throw std::invalid_argument("simulate_image: ideal image must match the plan window");
    const PsfGrid grid = psf_grid(plan, stride, kernel_size);
    return optics::sv_convolve_scatter(
        ideal, [&](int r, int c) -> const Image& { return grid.nearest(r, c); });
}

}  // namespace turbsim::splitstep
