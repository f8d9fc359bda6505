// turbsim: atmospheric-turbulence image simulation and restoration CLI.
//
// Subcommands:
//   screen     generate Kolmogorov phase screens
//   splitstep  wave-propagation simulation of turbulent frames
//   zsim       propagation-free Zernike-space simulation of turbulent frames
//   basis      build the PSF PCA basis (and optional phase-to-space model)
//   restore    lucky fusion + blind deconvolution of a frame stack
//   verify     empirical-vs-theory statistical checks
//
// Exit codes: 0 ok, 1 configuration error, 2 I/O error, 3 verification failure.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "turbsim/atmosphere.hpp"
#include "turbsim/config.hpp"
#include "turbsim/io.hpp"
#include "turbsim/optics.hpp"
#include "turbsim/psfbasis.hpp"
#include "turbsim/restore.hpp"
#include "turbsim/rng.hpp"
#include "turbsim/screens.hpp"
#include "turbsim/serialize.hpp"
#include "turbsim/splitstep.hpp"
#include "turbsim/threadpool.hpp"
#include "turbsim/zfield.hpp"

namespace fs = std::filesystem;
using namespace turbsim;

namespace {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VerifyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 1;
    int frames = 1;
    std::string mode = "zernike";
    std::string verify_level = "fast";
    std::string input_path;
    std::string basis_path;
    std::string cache_dir;
    bool force = false;
};

config::RunConfig load_config(const Common& c) {
    config::RunConfig cfg;
    if (!c.config_path.empty()) {
        if (!fs::exists(c.config_path)) throw IoError("config file not found: " + c.config_path);
        cfg = config::RunConfig::load(c.config_path);
    }
    return cfg;
}

void stamp(io::ArrayContainer& arr, const config::RunConfig& cfg, uint64_t seed) {
    arr.metadata["config_hash"] = cfg.hash_hex();
    arr.metadata["seed"] = std::to_string(seed);
    arr.metadata["tool"] = "turbsim";
}

void write_image_pair(const std::string& stem, const Image& im, const config::RunConfig& cfg,
                      uint64_t seed) {
    io::ArrayContainer arr = io::from_image(im);
    stamp(arr, cfg, seed);
    io::write_array(stem + ".tsim", arr);
    io::write_pgm16(stem + ".pgm", im);
}

Image builtin_target(int n) {
    // bar chart + point grid + edges: enough structure for restoration tests
    Image img(n, n, 0.05);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (c < n / 3) {
                const int period = std::max(2, 2 * (1 + r / std::max(1, n / 8)));
                img(r, c) = (c % period) < period / 2 ? 0.9 : 0.1;
            } else if (c < 2 * n / 3) {
                if (r % 8 == 4 && c % 8 == 4) img(r, c) = 1.0;
            } else {
                img(r, c) = r < n / 2 ? 0.8 : 0.2;
            }
        }
    return img;
}

Image load_input_image(const std::string& path, int fallback_n) {
    if (path.empty()) return builtin_target(fallback_n);
    if (!fs::exists(path)) throw IoError("input not found: " + path);
    return io::to_image(io::read_array(path));
}

void check_hash(const io::ArrayContainer& arr, const config::RunConfig& cfg, bool force) {
    if (force) return;
    auto it = arr.metadata.find("config_hash");
    if (it != arr.metadata.end() && it->second != cfg.hash_hex())
        throw std::invalid_argument(
            "input was produced under a different configuration (config_hash mismatch); "
            "pass --force to override");
}

// ---------------------------------------------------------------------------

int cmd_screen(const Common& c) {
    const config::RunConfig cfg = load_config(c);
    const atmosphere::OpticalConfig optical = cfg.optical();
    fs::create_directories(c.out_dir);

    atmosphere::OpticalConfig plane = optical;
    plane.wave_kind = atmosphere::OpticalConfig::WaveKind::Plane;
    const double r0 = atmosphere::fried_parameter(plane);
    if (r0 == atmosphere::kInfiniteR0)
        throw std::invalid_argument("screen: zero turbulence profile");

    screens::ScreenPsd psd;
    psd.r0 = r0;
    if (cfg.get("screen.psd", "kolmogorov") == "von_karman") {
        psd.kind = screens::ScreenPsd::Kind::VonKarman;
        psd.L0 = cfg.get_double("screen.L0", 100.0);
        psd.l0 = cfg.get_double("screen.l0", 0.01);
    }
    const int n = cfg.get_int("grid.n", optical.grid_n);
    double dx = cfg.get_double("grid.dx", 0.0);
    if (dx <= 0.0)
        dx = screens::voelz_spacing(optical.wavelength, optical.path_length,
                                    optical.aperture_diameter);
    const int levels = cfg.get_int("screen.subharmonics", 3);

    std::vector<screens::PhaseScreen> out(c.frames);
    parallel_for(c.frames, [&](size_t t) {
        const uint64_t s = RandomStream(c.seed, "cli_screen", t).next_u64();
        out[t] = screens::add_subharmonics(screens::sample_screen_fft(n, dx, psd, s), levels);
    });
    char name[64];
    for (int t = 0; t < c.frames; ++t) {
        std::snprintf(name, sizeof name, "/screen_%04d", t);
        io::ArrayContainer arr = io::from_image(out[t].phase);
        arr.metadata["dx"] = std::to_string(dx);
        arr.metadata["r0"] = std::to_string(r0);
        stamp(arr, cfg, c.seed);
        io::write_array(c.out_dir + name + ".tsim", arr);
        io::write_pgm16(c.out_dir + name + ".pgm", out[t].phase);
    }
    std::printf("screen: wrote %d screens (N=%d, dx=%.4g m, r0=%.4g m) to %s\n", c.frames, n, dx,
                r0, c.out_dir.c_str());
    return 0;
}

void write_stack(const std::string& path, const std::vector<Image>& frames,
                 const config::RunConfig& cfg, uint64_t seed) {
    io::ArrayContainer arr;
    const int h = frames.front().height(), w = frames.front().width();
    arr.dims = {frames.size(), static_cast<uint64_t>(h), static_cast<uint64_t>(w)};
    arr.data.reserve(arr.element_count());
    for (const auto& f : frames) arr.data.insert(arr.data.end(), f.data(), f.data() + f.size());
    stamp(arr, cfg, seed);
    io::write_array(path, arr);
}

int cmd_splitstep(const Common& c) {
    const config::RunConfig cfg = load_config(c);
    const atmosphere::OpticalConfig optical = cfg.optical();
    fs::create_directories(c.out_dir);

    const int window = cfg.get_int("sim.window", 64);
    const int n_screens = cfg.get_int("sim.screens", 10);
    const int grid_n = cfg.get_int("grid.n", optical.grid_n);
    const int stride = cfg.get_int("sim.stride", 4);
    const int kernel = cfg.get_int("sim.kernel", 33);
    const int levels = cfg.get_int("screen.subharmonics", 3);
    const Image ideal = load_input_image(c.input_path, window);
    if (ideal.height() != window || ideal.width() != window)
        throw std::invalid_argument("splitstep: input image must match sim.window");

    std::vector<Image> frames(c.frames);
    const auto t0 = std::chrono::steady_clock::now();
    for (int t = 0; t < c.frames; ++t) {
        const uint64_t s = RandomStream(c.seed, "cli_splitstep", t).next_u64();
        const splitstep::SplitStepPlan plan =
            splitstep::make_plan(optical, n_screens, grid_n, window, s, levels);
        frames[t] = splitstep::simulate_image(plan, ideal, stride, kernel);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    char name[64];
    for (int t = 0; t < c.frames; ++t) {
        std::snprintf(name, sizeof name, "/frame_%04d", t);
        write_image_pair(c.out_dir + name, frames[t], cfg, c.seed);
    }
    write_stack(c.out_dir + "/stack.tsim", frames, cfg, c.seed);
    write_image_pair(c.out_dir + "/ideal", ideal, cfg, c.seed);
    std::printf("splitstep: %d frame(s) of %dx%d in %.2f s (%d screens, stride %d)\n", c.frames,
                window, window, secs, n_screens, stride);
    return 0;
}

struct ZsimAssets {
    psfbasis::PsfBasis basis;
    bool have_p2s = false;
    psfbasis::P2SModel p2s;
};

ZsimAssets load_or_build_assets(const Common& c, const config::RunConfig& cfg) {
    ZsimAssets assets;
    std::string basis_path = c.basis_path;
    if (basis_path.empty()) basis_path = c.out_dir + "/basis.tsim";
    if (fs::exists(basis_path)) {
        assets.basis = serialize::load_basis(basis_path);
    } else {
        const int count = cfg.get_int("basis.count", 3000);
        const int n_modes = cfg.get_int("sim.n_modes", 21);
        const int comps = cfg.get_int("basis.components", 48);
        const double lo = cfg.get_double("basis.dr0_min", 0.5);
        const double hi = cfg.get_double("basis.dr0_max", 5.0);
        const int grid_n = cfg.get_int("basis.grid_n", 64);
        const int kernel = cfg.get_int("basis.kernel", 0);
        const int k = kernel > 0
                          ? kernel
                          : psfbasis::choose_kernel_size(n_modes, hi, grid_n, 0.999, 64, c.seed);
        std::fprintf(stderr, "zsim: building PSF basis (%d samples, K=%d)...\n", count, k);
        const auto dataset = psfbasis::generate_psf_dataset(
            count, n_modes, lo, hi, grid_n, k, RandomStream(c.seed, "cli_basis", 0).next_u64());
        assets.basis = psfbasis::fit_pca(dataset, comps);
        serialize::save_basis(basis_path, assets.basis);
    }
    const std::string p2s_path = (fs::path(basis_path).parent_path() / "p2s.tsim").string();
    if (fs::exists(p2s_path)) {
        assets.p2s = serialize::load_p2s(p2s_path);
        assets.have_p2s = true;
    }
    return assets;
}

int cmd_zsim(const Common& c) {
    const config::RunConfig cfg = load_config(c);
    const atmosphere::OpticalConfig optical = cfg.optical();
    fs::create_directories(c.out_dir);

    const int window = cfg.get_int("sim.window", 64);
    const int n_modes = cfg.get_int("sim.n_modes", 21);
    const std::string beta_path = cfg.get("sim.beta", "projection");
    const Image ideal = load_input_image(c.input_path, window);
    if (ideal.height() != window || ideal.width() != window)
        throw std::invalid_argument("zsim: input image must match sim.window");

    ZsimAssets assets = load_or_build_assets(c, cfg);
    if (beta_path == "p2s" && !assets.have_p2s)
        throw std::invalid_argument(
            "zsim: sim.beta=p2s requires a trained model next to the basis");
    if (assets.basis.n_modes < n_modes)
        throw std::invalid_argument("zsim: basis was built with fewer modes than sim.n_modes");

    // correlation kernel tables (cached; configuration independent)
    const std::string cache = c.cache_dir.empty() ? c.out_dir + "/kernels" : c.cache_dir;
    const int n_radial = cfg.get_int("kernels.radial", 33);
    const int n_angular = cfg.get_int("kernels.angular", 16);
    std::vector<zfield::CorrelationKernel> kernels;
    for (int j = 4; j <= n_modes; ++j)
        kernels.push_back(serialize::cached_kernel(cache, j, 4.0, n_radial, n_angular));

    atmosphere::OpticalConfig sph = optical;
    sph.wave_kind = atmosphere::OpticalConfig::WaveKind::Spherical;
    const double r0 = atmosphere::fried_parameter(sph);
    const double dr0 = r0 == atmosphere::kInfiniteR0 ? 0.0 : optical.aperture_diameter / r0;
    const int K = assets.basis.kernel_size;
    const int M = assets.basis.n_components;

    std::vector<Image> frames(c.frames);
    const auto t0 = std::chrono::steady_clock::now();
    for (int t = 0; t < c.frames; ++t) {
        const uint64_t s = RandomStream(c.seed, "cli_zsim", t).next_u64();
        const zfield::ZernikeField zf =
            zfield::sample_zernike_space(optical, n_modes, window, window, s, kernels);

        // warp by the tilt planes
        restore::TiltMap tilt(window, window);
        for (int r = 0; r < window; ++r)
            for (int col = 0; col < window; ++col) {
                tilt.dx(r, col) = zernike::tilt_to_pixels(zf.at(2, r, col));
                tilt.dy(r, col) = zernike::tilt_to_pixels(zf.at(3, r, col));
            }
        const Image warped = restore::apply_tilt(ideal, tilt);

        // per-pixel basis coefficients from the high-order modes
        std::vector<double> beta_field(static_cast<size_t>(M) * window * window);
        if (beta_path == "p2s") {
            parallel_for(static_cast<size_t>(window) * window, [&](size_t px) {
                const int r = static_cast<int>(px) / window, col = static_cast<int>(px) % window;
                std::vector<double> in;
                in.reserve(n_modes - 2);
                for (int j = 4; j <= n_modes; ++j) in.push_back(zf.at(j, r, col));
                in.push_back(dr0);
                const auto beta = assets.p2s.infer(in);
                for (int m = 0; m < M; ++m)
                    beta_field[(static_cast<size_t>(m) * window + r) * window + col] = beta[m];
            });
        } else if (beta_path == "projection") {
            parallel_for(static_cast<size_t>(window) * window, [&](size_t px) {
                const int r = static_cast<int>(px) / window, col = static_cast<int>(px) % window;
                zernike::ZernikeVector a(n_modes);
                for (int j = 4; j <= n_modes; ++j) a[j] = zf.at(j, r, col);
                const Image psf = psfbasis::psf_from_coeffs(a, 64, K);
                const auto beta = psfbasis::project(psf, assets.basis);
                for (int m = 0; m < M; ++m)
                    beta_field[(static_cast<size_t>(m) * window + r) * window + col] = beta[m];
            });
        } else {
            throw std::invalid_argument("zsim: sim.beta must be projection or p2s");
        }

        Image out = psfbasis::approx_sv_convolve(warped, beta_field, assets.basis);
        for (size_t i = 0; i < out.size(); ++i)
            if (out.data()[i] < 0) out.data()[i] = 0;
        frames[t] = std::move(out);
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    char name[64];
    for (int t = 0; t < c.frames; ++t) {
        std::snprintf(name, sizeof name, "/frame_%04d", t);
        write_image_pair(c.out_dir + name, frames[t], cfg, c.seed);
    }
    write_stack(c.out_dir + "/stack.tsim", frames, cfg, c.seed);
    write_image_pair(c.out_dir + "/ideal", ideal, cfg, c.seed);
    std::printf("zsim: %d frame(s) of %dx%d in %.2f s (beta=%s, D/r0=%.3g)\n", c.frames, window,
                window, secs, beta_path.c_str(), dr0);
    return 0;
}

int cmd_basis(const Common& c) {
    const config::RunConfig cfg = load_config(c);
    fs::create_directories(c.out_dir);
    const int count = cfg.get_int("basis.count", 3000);
    const int n_modes = cfg.get_int("sim.n_modes", 21);
    const int comps = cfg.get_int("basis.components", 48);
    const double lo = cfg.get_double("basis.dr0_min", 0.5);
    const double hi = cfg.get_double("basis.dr0_max", 5.0);
    const int grid_n = cfg.get_int("basis.grid_n", 64);
    int kernel = cfg.get_int("basis.kernel", 0);
    if (kernel <= 0) kernel = psfbasis::choose_kernel_size(n_modes, hi, grid_n, 0.999, 64, c.seed);

    std::printf("basis: %d samples, modes<=%d, D/r0 in [%g, %g], K=%d, M=%d\n", count, n_modes, lo,
                hi, kernel, comps);
    const auto dataset = psfbasis::generate_psf_dataset(
        count, n_modes, lo, hi, grid_n, kernel, RandomStream(c.seed, "cli_basis", 0).next_u64());
    const psfbasis::PsfBasis basis = psfbasis::fit_pca(dataset, comps);
    serialize::save_basis(c.out_dir + "/basis.tsim", basis);

    if (cfg.get_int("basis.train_p2s", 0) != 0) {
        psfbasis::P2STrainConfig tc;
        tc.epochs = cfg.get_int("p2s.epochs", tc.epochs);
        tc.lr = cfg.get_double("p2s.lr", tc.lr);
        tc.batch = cfg.get_int("p2s.batch", tc.batch);
        tc.seed = c.seed;
        const psfbasis::P2SModel model = psfbasis::p2s_train(dataset, basis, tc);
        serialize::save_p2s(c.out_dir + "/p2s.tsim", model);
        std::printf("basis: trained phase-to-space model, validation error %.3f\n",
                    model.validation_rel_error);
    }
    return 0;
}

int cmd_restore(const Common& c) {
    const config::RunConfig cfg = load_config(c);
    fs::create_directories(c.out_dir);
    if (c.input_path.empty()) throw std::invalid_argument("restore: --input stack.tsim required");
    if (!fs::exists(c.input_path)) throw IoError("restore: input not found: " + c.input_path);

    const io::ArrayContainer arr = io::read_array(c.input_path);
    check_hash(arr, cfg, c.force);
    if (arr.dims.size() != 3) throw IoError("restore: input must be a [T, H, W] stack");
    restore::FrameStack stack;
    const int T = static_cast<int>(arr.dims[0]);
    const int h = static_cast<int>(arr.dims[1]), w = static_cast<int>(arr.dims[2]);
    for (int t = 0; t < T; ++t) {
        Image f(h, w);
        std::copy(arr.data.begin() + static_cast<long>(t) * h * w,
                  arr.data.begin() + static_cast<long>(t + 1) * h * w, f.data());
        stack.frames.push_back(std::move(f));
    }

    const std::string method = cfg.get("restore.reference", "nonlocal");
    restore::NonLocalOptions nl;
    nl.patch = cfg.get_int("restore.patch", 16);
    nl.stride = cfg.get_int("restore.stride", 8);
    const Image ref = restore::reference_frame(stack,
                                               method == "temporal_mean"
                                                   ? restore::ReferenceMethod::TemporalMean
                                                   : restore::ReferenceMethod::NonLocal,
                                               nl);

    restore::LuckyOptions lo;
    lo.patch = nl.patch;
    lo.stride = nl.stride;
    lo.alpha1 = cfg.get_double("restore.alpha1", -1.0);
    lo.alpha2 = cfg.get_double("restore.alpha2", -1.0);
    const restore::LuckyResult lucky = restore::lucky_fuse(stack, ref, lo);

    std::string basis_path = c.basis_path;
    if (basis_path.empty()) basis_path = c.out_dir + "/basis.tsim";
    if (!fs::exists(basis_path))
        throw IoError("restore: PSF basis required for deconvolution: " + basis_path);
    const psfbasis::PsfBasis basis = serialize::load_basis(basis_path);

    restore::DeconvolveOptions dopt;
    dopt.lambda = cfg.get_double("restore.lambda", -1.0);
    dopt.gamma = cfg.get_double("restore.gamma", -1.0);
    dopt.outer_iters = cfg.get_int("restore.iters", 30);
    const restore::DeconvolveResult dec = restore::blind_deconvolve(lucky.image, basis, dopt);

    write_image_pair(c.out_dir + "/reference", ref, cfg, c.seed);
    write_image_pair(c.out_dir + "/lucky", lucky.image, cfg, c.seed);
    write_image_pair(c.out_dir + "/restored", dec.image, cfg, c.seed);
    write_image_pair(c.out_dir + "/kernel", dec.kernel, cfg, c.seed);
    std::vector<std::vector<double>> rows;
    for (size_t i = 0; i < dec.objective_trace.size(); ++i)
        rows.push_back({static_cast<double>(i), dec.objective_trace[i]});
    io::write_csv(c.out_dir + "/objective.csv", {"iteration", "objective"}, rows);
    std::printf("restore: T=%d frames -> %s (degenerate patches: %d%s)\n", T, c.out_dir.c_str(),
                lucky.degenerate_patches, dec.aborted ? ", deconvolution aborted" : "");
    return dec.aborted ? 3 : 0;
}

// ---------------------------------------------------------------------------

struct Check {
    std::string name;
    double value = 0, threshold = 0;
    bool pass = false;
};

int cmd_verify(const Common& c) {
    const config::RunConfig cfg = load_config(c);
    const atmosphere::OpticalConfig optical = cfg.optical();
    fs::create_directories(c.out_dir);
    std::vector<Check> checks;
    auto add = [&](const std::string& name, double value, double threshold, bool pass) {
        checks.push_back({name, value, threshold, pass});
        std::printf("[%s] %-34s value=%.6g threshold=%.3g\n", pass ? "PASS" : "FAIL", name.c_str(),
                    value, threshold);
    };

    // closed-form anchors
    {
        atmosphere::OpticalConfig book = optical;
        book.wave_kind = atmosphere::OpticalConfig::WaveKind::Spherical;
        const double r0 = atmosphere::fried_parameter(book);
        atmosphere::OpticalConfig plane = book;
        plane.wave_kind = atmosphere::OpticalConfig::WaveKind::Plane;
        const double ratio = r0 / atmosphere::fried_parameter(plane);
        const double expect = std::pow(8.0 / 3.0, 3.0 / 5.0);
        add("plane_spherical_ratio", ratio, 1e-6,
            !book.profile.is_constant() || std::abs(ratio - expect) < 1e-6);

        const double p35 = atmosphere::lucky_probability(3.5).value;
        const double p40 = atmosphere::lucky_probability(4.0).value;
        add("lucky_p(3.5)", p35, 1e-4, std::abs(p35 - 0.8316) < 2e-4);
        add("lucky_p(4.0)", p40, 1e-4, std::abs(p40 - 0.4640) < 2e-4);

        const double otf_mid = atmosphere::diffraction_otf_circular(1.0, 1.0);
        add("circular_otf(f0)", otf_mid, 1e-3, std::abs(otf_mid - 0.390963) < 1e-3);
    }

    // vacuum: empirical OTF of the diffraction PSF matches the closed form
    {
        atmosphere::OpticalConfig quiet = optical;
        quiet.profile = atmosphere::Cn2Profile::constant(0.0);
        const int n = 128;
        splitstep::SplitStepPlan plan = splitstep::make_plan(quiet, 1, n, 1, c.seed);
        const Image psf = splitstep::point_psf(plan, 0.0, 0.0);
        const auto otf = optics::otf_from_psf(psf);
        Image mag(n, n);
        for (int r = 0; r < n; ++r)
            for (int col = 0; col < n; ++col)
                mag(r, col) = std::abs(otf[static_cast<size_t>(r) * n + col]);
        const auto prof = optics::radial_profile(mag, n / 2);
        double rms = 0;
        std::vector<std::vector<double>> rows;
        for (int b = 0; b < n / 2; ++b) {
            const double theory = atmosphere::diffraction_otf_circular(b, n / 4.0);
            rms += sqr(prof[b] - theory);
            rows.push_back({static_cast<double>(b), prof[b], theory});
        }
        rms = std::sqrt(rms / (n / 2));
        io::write_csv(c.out_dir + "/vacuum_otf.csv", {"bin", "empirical", "theory"}, rows);
        io::write_pgm16(c.out_dir + "/vacuum_psf.pgm", psf);
        add("vacuum_otf_rms", rms, 0.02, rms < 0.02);
    }

    if (c.verify_level == "full") {
        // screen structure function at a medium ensemble
        {
            atmosphere::OpticalConfig plane = optical;
            plane.wave_kind = atmosphere::OpticalConfig::WaveKind::Plane;
            const double r0 = atmosphere::fried_parameter(plane);
            screens::ScreenPsd psd;
            psd.r0 = r0;
            const int n = 256;
            const double dx = screens::voelz_spacing(optical.wavelength, optical.path_length,
                                                     optical.aperture_diameter);
            screens::StructureFunctionEstimator est(n);
            const int trials = 400;
            std::vector<screens::PhaseScreen> batch(trials);
            parallel_for(trials, [&](size_t t) {
                batch[t] = screens::add_subharmonics(
                    screens::sample_screen_fft(
                        n, dx, psd, RandomStream(c.seed, "verify_screen", t).next_u64()),
                    3);
            });
            for (auto& s : batch) est.accumulate(s);
            const auto curve = est.finish();
            double worst = 0;
            std::vector<std::vector<double>> rows;
            for (size_t i = 0; i < curve.r.size(); ++i) {
                const double theory = atmosphere::phase_structure_function(curve.r[i], r0);
                rows.push_back({curve.r[i], curve.d[i], theory});
                if (curve.r[i] >= 4 * dx && curve.r[i] <= n * dx / 4.0)
                    worst = std::max(worst, std::abs(curve.d[i] / theory - 1.0));
            }
            io::write_csv(c.out_dir + "/structure_function.csv", {"r", "empirical", "theory"},
                          rows);
            add("screen_structure_fn_max_err", worst, 0.15, worst < 0.15);
        }

        // long-exposure OTF over 500 propagation trials
        {
            const int n = 128, trials = 500;
            atmosphere::OpticalConfig sph = optical;
            sph.wave_kind = atmosphere::OpticalConfig::WaveKind::Spherical;
            const double r0 = atmosphere::fried_parameter(sph);
            Image mean_psf(n, n, 0.0);
            std::vector<Image> psfs(trials);
            parallel_for(trials, [&](size_t t) {
                splitstep::SplitStepPlan plan = splitstep::make_plan(
                    optical, 10, n, 1, RandomStream(c.seed, "verify_le", t).next_u64());
                psfs[t] = splitstep::point_psf(plan, 0.0, 0.0);
            });
            for (const auto& p : psfs) mean_psf += p;
            mean_psf.scale(1.0 / trials);
            const auto otf = optics::otf_from_psf(mean_psf);
            Image mag(n, n);
            for (int r = 0; r < n; ++r)
                for (int col = 0; col < n; ++col)
                    mag(r, col) = std::abs(otf[static_cast<size_t>(r) * n + col]);
            const auto prof = optics::radial_profile(mag, n / 2);
            double rms = 0;
            std::vector<std::vector<double>> rows;
            for (int b = 0; b < n / 2; ++b) {
                const double theory =
                    atmosphere::diffraction_otf_circular(b, n / 4.0) *
                    std::exp(-3.44 * std::pow(2.0 * b * optical.aperture_diameter / (n * r0),
                                              5.0 / 3.0));
                rms += sqr(prof[b] - theory);
                rows.push_back({static_cast<double>(b), prof[b], theory});
            }
            rms = std::sqrt(rms / (n / 2));
            io::write_csv(c.out_dir + "/le_otf.csv", {"bin", "empirical", "theory"}, rows);
            io::write_pgm16(c.out_dir + "/le_psf.pgm", mean_psf);
            add("le_otf_rms_500", rms, 0.08, rms < 0.08);
        }

        // D-tilt identity on sampled tilt fields
        {
            const double pitch = zfield::nyquist_pitch_s(optical);
            atmosphere::OpticalConfig sph = optical;
            sph.wave_kind = atmosphere::OpticalConfig::WaveKind::Spherical;
            const double r0 = atmosphere::fried_parameter(sph);
            const double dr0 = optical.aperture_diameter / r0;
            const zfield::CorrelationKernel k2 = zfield::CorrelationKernel::tilt(2);
            const int n = 32, reps = 3000;
            std::vector<Image> fields(reps);
            const double kappa = std::sqrt(zfield::tilt_pixel_variance(dr0));
            parallel_for(reps, [&](size_t t) {
                auto fsamp = zfield::sample_field_wss(
                    k2, n, n, pitch, RandomStream(c.seed, "verify_tilt", t).next_u64());
                fsamp.field.scale(kappa);
                fields[t] = std::move(fsamp.field);
            });
            const auto z = zfield::ztilt_stat(fields);
            const auto d = zfield::dtilt_stat(fields);
            double worst = 0;
            std::vector<std::vector<double>> rows;
            for (size_t i = 0; i < z.s.size(); ++i) {
                const double identity = 2.0 * (z.value[0] - z.value[i]);
                worst = std::max(worst, std::abs(d.value[i] - identity) / z.value[0]);
                rows.push_back({z.s[i], z.value[i], d.value[i],
                                zfield::ztilt_theory(z.s[i], pitch, dr0),
                                zfield::dtilt_theory(z.s[i], pitch, dr0)});
            }
            io::write_csv(c.out_dir + "/tilt_stats.csv",
                          {"s_px", "ztilt", "dtilt", "ztilt_theory", "dtilt_theory"}, rows);
            add("dtilt_identity_max_err", worst, 0.03, worst < 0.03);
        }
    }

    // machine-readable summary
    std::vector<std::vector<double>> rows;
    std::ofstream summary(c.out_dir + "/summary.txt");
    bool all_pass = true;
    for (size_t i = 0; i < checks.size(); ++i) {
        const Check& ch = checks[i];
        rows.push_back({static_cast<double>(i), ch.value, ch.threshold, ch.pass ? 1.0 : 0.0});
        summary << (ch.pass ? "PASS " : "FAIL ") << ch.name << " value=" << ch.value
                << " threshold=" << ch.threshold << "\n";
        all_pass = all_pass && ch.pass;
    }
    io::write_csv(c.out_dir + "/verify.csv", {"index", "value", "threshold", "pass"}, rows);
    if (!all_pass) throw VerifyError("verification failed");
    std::printf("verify: all %zu checks passed\n", checks.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"atmospheric turbulence simulation and restoration"};
    app.require_subcommand(1);

    Common c;
    app.add_option("--config", c.config_path, "configuration file (key=value with [sections])");
    app.add_option("--seed", c.seed, "top-level random seed");
    app.add_option("--out", c.out_dir, "output directory");
    app.add_option("--frames", c.frames, "number of frames / screens");
    app.add_option("--mode", c.mode, "simulator for combined pipelines: splitstep|zernike");
    app.add_option("--verify-level", c.verify_level, "fast|full");
    app.add_option("--input", c.input_path, "input image or stack (.tsim)");
    app.add_option("--basis", c.basis_path, "PSF basis file (.tsim)");
    app.add_option("--cache", c.cache_dir, "kernel table cache directory");
    app.add_flag("--force", c.force, "skip config-hash consistency checks");

    auto* s_screen = app.add_subcommand("screen", "generate phase screens");
    auto* s_split = app.add_subcommand("splitstep", "wave-propagation simulation");
    auto* s_zsim = app.add_subcommand("zsim", "Zernike-space simulation");
    auto* s_basis = app.add_subcommand("basis", "build the PSF basis / train the regressor");
    auto* s_restore = app.add_subcommand("restore", "lucky fusion and blind deconvolution");
    auto* s_verify = app.add_subcommand("verify", "statistical verification report");

    CLI11_PARSE(app, argc, argv);

    try {
        if (s_screen->parsed()) return cmd_screen(c);
        if (s_split->parsed()) return cmd_splitstep(c);
        if (s_zsim->parsed()) return cmd_zsim(c);
        if (s_basis->parsed()) return cmd_basis(c);
        if (s_restore->parsed()) return cmd_restore(c);
        if (s_verify->parsed()) return cmd_verify(c);
    } catch (const VerifyError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
