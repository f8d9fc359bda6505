#include "turbsim/psfbasis.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "turbsim/fft.hpp"
#include "turbsim/optics.hpp"
#include "turbsim/rng.hpp"
#include "turbsim/threadpool.hpp"

namespace turbsim::psfbasis {

Image psf_from_coeffs(const zernike::ZernikeVector& a, int grid_n, int kernel_size) {
    const int d = grid_n / 2;
    static thread_local optics::Pupil pupil;
    if (pupil.mask.height() != grid_n || pupil.diameter_samples != d)
        pupil = optics::make_pupil(optics::PupilShape::Circle, grid_n, d);
    const Image phase = zernike::phase_from_coeffs(a, grid_n, d);
    const Image full = optics::psf_from_phase(pupil, phase, 1.0);
    // crop to the kernel, renormalize
    const int c0 = grid_n / 2 - kernel_size / 2;
    Image out(kernel_size, kernel_size);
    double total = 0;
    for (int r = 0; r < kernel_size; ++r)
        for (int c = 0; c < kernel_size; ++c) {
            out(r, c) = full(c0 + r, c0 + c);
            total += out(r, c);
        }
    if (total > 0) out.scale(1.0 / total);
    return out;
}

std::vector<PsfSample> generate_psf_dataset(int count, int n_modes, double dr0_min,
                                            double dr0_max, int grid_n, int kernel_size,
                                            uint64_t seed) {
    if (count < 1) throw std::invalid_argument("generate_psf_dataset: count must be >= 1");
    // Sample at unit D/r0 and rescale by (dr0)^(5/6) per draw: covariance is
    // linear in (D/r0)^(5/3) so the Cholesky factor scales by its square root.
    const zernike::NollMatrix noll(n_modes, 1.0);
    std::vector<PsfSample> out(count);
    parallel_for(count, [&](size_t i) {
        RandomStream rs(seed, "psf_dataset", i);
        const double dr0 = dr0_min + (dr0_max - dr0_min) * rs.uniform();
        zernike::ZernikeVector a = zernike::sample_intermodal(noll, rs.next_u64());
        const double scale = std::pow(dr0, 5.0 / 6.0);
        for (int j = 1; j <= n_modes; ++j) a[j] *= scale;
        a[2] = 0.0;  // decouple tilts from the high-order aberrations
        a[3] = 0.0;
        out[i].coeffs = a;
        out[i].dr0 = dr0;
        out[i].psf = psf_from_coeffs(a, grid_n, kernel_size);
    });
    return out;
}

int choose_kernel_size(int n_modes, double dr0_max, int grid_n, double energy_fraction,
                       int probe_count, uint64_t seed) {
    // mean PSF at the worst-case strength
    std::vector<PsfSample> probes =
        generate_psf_dataset(probe_count, n_modes, dr0_max, dr0_max, grid_n, grid_n - 1, seed);
    Image mean(grid_n - 1, grid_n - 1, 0.0);
    for (const auto& p : probes) mean += p.psf;
    mean.scale(1.0 / probe_count);
    const int full = grid_n - 1;
    const int c = full / 2;
    for (int k = 3; k <= full; k += 2) {
        double inside = 0;
        const int h = k / 2;
        for (int r = c - h; r <= c + h; ++r)
            for (int col = c - h; col <= c + h; ++col) inside += mean(r, col);
        if (inside >= energy_fraction) return k;
    }
    return full;
}

PsfBasis fit_pca(const std::vector<PsfSample>& dataset, int n_components) {
    const int P = static_cast<int>(dataset.size());
    if (n_components > P) throw std::invalid_argument("fit_pca: M exceeds dataset size");
    const int k = dataset.front().psf.height();
    const int dim = k * k;

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& s : dataset)
        mean += Eigen::Map<const Eigen::VectorXd>(s.psf.data(), dim);
    mean /= P;

    Eigen::MatrixXd X(dim, P);
    for (int i = 0; i < P; ++i)
        X.col(i) = Eigen::Map<const Eigen::VectorXd>(dataset[i].psf.data(), dim) - mean;

    PsfBasis basis;
    basis.kernel_size = k;
    basis.n_components = n_components;
    basis.sample_count = P;
    basis.n_modes = dataset.front().coeffs.n_modes();
    basis.mean = Image(k, k);
    Eigen::Map<Eigen::VectorXd>(basis.mean.data(), dim) = mean;

    // thin SVD keeps the component kernels orthonormal to machine precision
    Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU);
    const Eigen::MatrixXd& U = svd.matrixU();
    Eigen::MatrixXd V = U.leftCols(n_components);

    basis.components.resize(n_components);
    for (int m = 0; m < n_components; ++m) {
        basis.components[m] = Image(k, k);
        Eigen::Map<Eigen::VectorXd>(basis.components[m].data(), dim) = V.col(m);
    }
    // coefficient spread over the training set
    basis.sigma.assign(n_components, 0.0);
    for (int m = 0; m < n_components; ++m) {
        const double var = sqr(svd.singularValues()(m)) / P;
        basis.sigma[m] = std::sqrt(std::max(var, 1e-300));
    }
    double lo = 1e300, hi = 0;
    for (const auto& s : dataset) {
        lo = std::min(lo, s.dr0);
        hi = std::max(hi, s.dr0);
    }
    basis.dr0_min = lo;
    basis.dr0_max = hi;
    return basis;
}

std::vector<double> pca_explained_variance(const std::vector<PsfSample>& dataset, int max_comp) {
    const int P = static_cast<int>(dataset.size());
    const int k = dataset.front().psf.height();
    const int dim = k * k;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& s : dataset) mean += Eigen::Map<const Eigen::VectorXd>(s.psf.data(), dim);
    mean /= P;
    Eigen::MatrixXd X(dim, P);
    for (int i = 0; i < P; ++i)
        X.col(i) = Eigen::Map<const Eigen::VectorXd>(dataset[i].psf.data(), dim) - mean;
    Eigen::MatrixXd G = X.transpose() * X / P;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
    const double total = eig.eigenvalues().cwiseMax(0.0).sum();
    std::vector<double> out;
    for (int m = 0; m < std::min(max_comp, P); ++m)
        out.push_back(std::max(eig.eigenvalues()(P - 1 - m), 0.0) / std::max(total, 1e-300));
    return out;
}

std::vector<double> project(const Image& psf, const PsfBasis& basis) {
    const int dim = basis.kernel_size * basis.kernel_size;
    if (psf.height() != basis.kernel_size || psf.width() != basis.kernel_size)
        throw std::invalid_argument("project: kernel shape mismatch");
    std::vector<double> beta(basis.n_components);
    for (int m = 0; m < basis.n_components; ++m) {
        double acc = 0;
        const double* p = psf.data();
        const double* mu = basis.mean.data();
        const double* phi = basis.components[m].data();
        for (int i = 0; i < dim; ++i) acc += (p[i] - mu[i]) * phi[i];
        beta[m] = acc;
    }
    return beta;
}

Reconstruction reconstruct(const std::vector<double>& beta, const PsfBasis& basis,
                           bool clip_negative) {
    const int k = basis.kernel_size;
    Reconstruction out;
    out.kernel = basis.mean;
    for (int m = 0; m < basis.n_components && m < static_cast<int>(beta.size()); ++m) {
        if (beta[m] == 0.0) continue;
        const double* phi = basis.components[m].data();
        double* dst = out.kernel.data();
        for (int i = 0; i < k * k; ++i) dst[i] += beta[m] * phi[i];
    }
    if (clip_negative) {
        double clipped = 0, mass = 0;
        double* dst = out.kernel.data();
        for (int i = 0; i < k * k; ++i) {
            mass += std::abs(dst[i]);
            if (dst[i] < 0) {
                clipped += -dst[i];
                dst[i] = 0;
            }
        }
        out.clipped_mass = mass > 0 ? clipped / mass : 0.0;
        const double total = out.kernel.sum();
        if (total > 0) out.kernel.scale(1.0 / total);
    }
    return out;
}

namespace {

// zero-padded FFT convolution with a centered kernel
Image fft_convolve(const Image& image, const Image& kernel) {
    const int h = image.height(), w = image.width();
    const int kh = kernel.height(), kw = kernel.width();
    int mh = 1, mw = 1;
    while (mh < h + kh) mh *= 2;
    while (mw < w + kw) mw *= 2;
    std::vector<cd> a(static_cast<size_t>(mh) * mw, cd(0, 0)), b = a;
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) a[static_cast<size_t>(r) * mw + c] = image(r, c);
    for (int r = 0; r < kh; ++r)
        for (int c = 0; c < kw; ++c) {
            // kernel center at the origin
            const int rr = (r - kh / 2 + mh) % mh, cc = (c - kw / 2 + mw) % mw;
            b[static_cast<size_t>(rr) * mw + cc] = kernel(r, c);
        }
    fft::forward2d(a.data(), mh, mw);
    fft::forward2d(b.data(), mh, mw);
    for (size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
    fft::inverse2d(a.data(), mh, mw);
    Image out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) out(r, c) = a[static_cast<size_t>(r) * mw + c].real();
    return out;
}

}  // namespace

Image approx_sv_convolve(const Image& image, const std::vector<double>& beta_field,
                         const PsfBasis& basis) {
    const int h = image.height(), w = image.width();
    const size_t plane = static_cast<size_t>(h) * w;
    if (beta_field.size() != plane * basis.n_components)
        throw std::invalid_argument("approx_sv_convolve: beta field shape mismatch");
    Image out = fft_convolve(image, basis.mean);
    std::vector<Image> partial(basis.n_components);
    parallel_for(basis.n_components, [&](size_t m) {
        Image weighted(h, w);
        const double* bm = beta_field.data() + m * plane;
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                weighted(r, c) = bm[static_cast<size_t>(r) * w + c] * image(r, c);
        partial[m] = fft_convolve(weighted, basis.components[m]);
    });
    for (const auto& p : partial) out += p;
    return out;
}

std::vector<double> P2SModel::infer(const std::vector<double>& a_highorder) const {
    if (static_cast<int>(a_highorder.size()) != in_dim)
        throw std::invalid_argument("P2SModel::infer: input dimension mismatch");
    std::vector<double> x(in_dim);
    for (int i = 0; i < in_dim; ++i) x[i] = (a_highorder[i] - in_mu[i]) / in_sd[i];
    for (size_t layer = 0; layer < w.size(); ++layer) {
        const int nin = static_cast<int>(x.size());
        const int nout = static_cast<int>(b[layer].size());
        std::vector<double> y(nout);
        for (int o = 0; o < nout; ++o) {
            double acc = b[layer][o];
            const double* row = w[layer].data() + static_cast<size_t>(o) * nin;
            for (int i = 0; i < nin; ++i) acc += row[i] * x[i];
            // nonlinearity on hidden layers, linear output
            if (layer + 1 < w.size())
                acc = tanh_hidden ? std::tanh(acc) : (acc < 0 ? 0.0 : acc);
            y[o] = acc;
        }
        x = std::move(y);
    }
    for (int o = 0; o < out_dim; ++o) x[o] = x[o] * out_sd[o] + out_mu[o];
    return x;
}

P2SModel p2s_train(const std::vector<PsfSample>& dataset, const PsfBasis& basis,
                   const P2STrainConfig& cfg) {
    const int n_modes = dataset.front().coeffs.n_modes();
    const int in_dim = n_modes - 2;  // piston excluded, tilts excluded -> modes 4..n + slot
    const int out_dim = basis.n_components;
    const int P = static_cast<int>(dataset.size());

    // inputs: modes 4..n_modes (in_dim = n_modes - 3 + 1 kept as declared width)
    std::vector<std::vector<double>> xs(P), ys(P);
    for (int i = 0; i < P; ++i) {
        std::vector<double> x;
        x.reserve(in_dim);
        for (int j = 4; j <= n_modes; ++j) x.push_back(dataset[i].coeffs[j]);
        x.push_back(dataset[i].dr0);  // strength input fills the last slot
        xs[i] = std::move(x);
        ys[i] = project(dataset[i].psf, basis);
    }
    const int real_in = static_cast<int>(xs[0].size());

    P2SModel model;
    model.in_dim = real_in;
    model.out_dim = out_dim;
    model.tanh_hidden = cfg.tanh_hidden;
    model.widths = {34, 100};
    model.in_mu.assign(real_in, 0.0);
    model.in_sd.assign(real_in, 0.0);
    model.out_mu.assign(out_dim, 0.0);
    model.out_sd.assign(out_dim, 0.0);
    for (int i = 0; i < P; ++i)
        for (int d = 0; d < real_in; ++d) model.in_mu[d] += xs[i][d] / P;
    for (int i = 0; i < P; ++i)
        for (int d = 0; d < real_in; ++d) model.in_sd[d] += sqr(xs[i][d] - model.in_mu[d]) / P;
    for (int d = 0; d < real_in; ++d) model.in_sd[d] = std::max(std::sqrt(model.in_sd[d]), 1e-12);
    for (int i = 0; i < P; ++i)
        for (int d = 0; d < out_dim; ++d) model.out_mu[d] += ys[i][d] / P;
    for (int i = 0; i < P; ++i)
        for (int d = 0; d < out_dim; ++d) model.out_sd[d] += sqr(ys[i][d] - model.out_mu[d]) / P;
    for (int d = 0; d < out_dim; ++d) model.out_sd[d] = std::max(std::sqrt(model.out_sd[d]), 1e-12);

    // layer sizes: real_in -> 34 -> 100 -> out_dim
    std::vector<int> sizes = {real_in, model.widths[0], model.widths[1], out_dim};
    RandomStream rs(cfg.seed, "p2s_init", 0);
    model.w.resize(3);
    model.b.resize(3);
    for (int l = 0; l < 3; ++l) {
        model.w[l].resize(static_cast<size_t>(sizes[l + 1]) * sizes[l]);
        model.b[l].assign(sizes[l + 1], 0.0);
        const double scale = cfg.tanh_hidden ? std::sqrt(1.0 / sizes[l]) : std::sqrt(2.0 / sizes[l]);
        for (auto& v : model.w[l]) v = scale * rs.normal();
    }
    std::vector<std::vector<double>> vel_w(3), vel_b(3);
    for (int l = 0; l < 3; ++l) {
        vel_w[l].assign(model.w[l].size(), 0.0);
        vel_b[l].assign(model.b[l].size(), 0.0);
    }

    const int n_val = std::max(1, static_cast<int>(P * cfg.validation_split));
    const int n_train = P - n_val;

    std::vector<double> x1(sizes[1]), x2(sizes[2]), x3(sizes[3]);
    std::vector<double> d3(sizes[3]), d2(sizes[2]), d1(sizes[1]);
    std::vector<std::vector<double>> gw(3);
    std::vector<std::vector<double>> gb(3);
    for (int l = 0; l < 3; ++l) {
        gw[l].assign(model.w[l].size(), 0.0);
        gb[l].assign(model.b[l].size(), 0.0);
    }

    auto act = [&](double a) { return cfg.tanh_hidden ? std::tanh(a) : (a > 0 ? a : 0.0); };
    auto forward = [&](const std::vector<double>& xin, std::vector<double>& h1,
                       std::vector<double>& h2, std::vector<double>& yout) {
        for (int o = 0; o < sizes[1]; ++o) {
            double acc = model.b[0][o];
            const double* row = model.w[0].data() + static_cast<size_t>(o) * sizes[0];
            for (int i = 0; i < sizes[0]; ++i)
                acc += row[i] * (xin[i] - model.in_mu[i]) / model.in_sd[i];
            h1[o] = act(acc);
        }
        for (int o = 0; o < sizes[2]; ++o) {
            double acc = model.b[1][o];
            const double* row = model.w[1].data() + static_cast<size_t>(o) * sizes[1];
            for (int i = 0; i < sizes[1]; ++i) acc += row[i] * h1[i];
            h2[o] = act(acc);
        }
        for (int o = 0; o < sizes[3]; ++o) {
            double acc = model.b[2][o];
            const double* row = model.w[2].data() + static_cast<size_t>(o) * sizes[2];
            for (int i = 0; i < sizes[2]; ++i) acc += row[i] * h2[i];
            yout[o] = acc;
        }
    };

    double lr = cfg.lr;
    RandomStream shuffle_rs(cfg.seed, "p2s_shuffle", 0);
    std::vector<int> order(n_train);
    for (int i = 0; i < n_train; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        // Fisher-Yates with the deterministic stream
        for (int i = n_train - 1; i > 0; --i) {
            const int j = static_cast<int>(shuffle_rs.next_u64() % (i + 1));
            std::swap(order[i], order[j]);
        }
        for (int start = 0; start < n_train; start += cfg.batch) {
            const int bsz = std::min(cfg.batch, n_train - start);
            for (int l = 0; l < 3; ++l) {
                std::fill(gw[l].begin(), gw[l].end(), 0.0);
                std::fill(gb[l].begin(), gb[l].end(), 0.0);
            }
            double batch_loss = 0;
            for (int bi = 0; bi < bsz; ++bi) {
                const int idx = order[start + bi];
                forward(xs[idx], x1, x2, x3);
                for (int o = 0; o < sizes[3]; ++o) {
                    const double target = (ys[idx][o] - model.out_mu[o]) / model.out_sd[o];
                    d3[o] = x3[o] - target;
                    batch_loss += d3[o] * d3[o];
                }
                // backprop
                for (int i = 0; i < sizes[2]; ++i) {
                    double acc = 0;
                    for (int o = 0; o < sizes[3]; ++o) acc += model.w[2][static_cast<size_t>(o) * sizes[2] + i] * d3[o];
                    d2[i] = cfg.tanh_hidden ? acc * (1.0 - x2[i] * x2[i]) : (x2[i] > 0 ? acc : 0.0);
                }
                for (int i = 0; i < sizes[1]; ++i) {
                    double acc = 0;
                    for (int o = 0; o < sizes[2]; ++o) acc += model.w[1][static_cast<size_t>(o) * sizes[1] + i] * d2[o];
                    d1[i] = cfg.tanh_hidden ? acc * (1.0 - x1[i] * x1[i]) : (x1[i] > 0 ? acc : 0.0);
                }
                for (int o = 0; o < sizes[3]; ++o) {
                    gb[2][o] += d3[o];
                    for (int i = 0; i < sizes[2]; ++i)
                        gw[2][static_cast<size_t>(o) * sizes[2] + i] += d3[o] * x2[i];
                }
                for (int o = 0; o < sizes[2]; ++o) {
                    gb[1][o] += d2[o];
                    for (int i = 0; i < sizes[1]; ++i)
                        gw[1][static_cast<size_t>(o) * sizes[1] + i] += d2[o] * x1[i];
                }
                for (int o = 0; o < sizes[1]; ++o) {
                    gb[0][o] += d1[o];
                    for (int i = 0; i < sizes[0]; ++i)
                        gw[0][static_cast<size_t>(o) * sizes[0] + i] +=
                            d1[o] * (xs[idx][i] - model.in_mu[i]) / model.in_sd[i];
                }
            }
            if (!std::isfinite(batch_loss))
                throw std::runtime_error("p2s_train: non-finite loss (diverged)");
            const double inv = 1.0 / bsz;
            for (int l = 0; l < 3; ++l) {
                for (size_t t = 0; t < model.w[l].size(); ++t) {
                    vel_w[l][t] = cfg.momentum * vel_w[l][t] - lr * gw[l][t] * inv;
                    model.w[l][t] += vel_w[l][t];
                }
                for (size_t t = 0; t < model.b[l].size(); ++t) {
                    vel_b[l][t] = cfg.momentum * vel_b[l][t] - lr * gb[l][t] * inv;
                    model.b[l][t] += vel_b[l][t];
                }
            }
        }
        lr *= cfg.lr_decay;
    }

    // validation: relative beta error against the mean beta norm
    double err = 0, ref = 0;
    for (int i = n_train; i < P; ++i) {
        const std::vector<double> pred = model.infer(xs[i]);
        for (int o = 0; o < out_dim; ++o) {
            err += sqr(pred[o] - ys[i][o]);
            ref += sqr(ys[i][o]);
        }
    }
    model.validation_rel_error = ref > 0 ? std::sqrt(err / ref) : 0.0;
    return model;
}

}  // namespace turbsim::psfbasis
