#include "turbsim/zernike.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "turbsim/rng.hpp"

namespace turbsim::zernike {

namespace {

// |m| sequence for radial order n in Noll ordering: n%2, n%2+2, ..., n.
// m = 0 contributes one mode, m > 0 contributes a cos/sin pair whose even
// index is the cosine.
struct ModeIter {
    int n = 0, m = 0;
    Parity parity = Parity::M0;
};

}  // namespace

NollIndex noll_unindex(int j) {
    if (j < 1) throw std::domain_error("noll_unindex: j must be >= 1");
    int n = 0;
    while ((n + 1) * (n + 2) / 2 < j) ++n;
    int jj = n * (n + 1) / 2;  // modes consumed by orders < n
    const int m0 = n % 2;
    for (int m = m0; m <= n; m += 2) {
        if (m == 0) {
            ++jj;
            if (jj == j) return {j, n, 0, Parity::M0};
        } else {
            // two consecutive indices; the even one is cosine
            for (int t = 0; t < 2; ++t) {
                ++jj;
                if (jj == j) return {j, n, m, (j % 2 == 0) ? Parity::Cos : Parity::Sin};
            }
        }
    }
    throw std::logic_error("noll_unindex: ordering walk failed");
}

int noll_index(int n, int m, Parity parity) {
    if (n < 0 || m < 0 || m > n || (n - m) % 2 != 0)
        throw std::domain_error("noll_index: invalid (n, m)");
    if ((m == 0) != (parity == Parity::M0))
        throw std::domain_error("noll_index: parity inconsistent with m");
    int jj = n * (n + 1) / 2;
    const int m0 = n % 2;
    for (int mm = m0; mm <= n; mm += 2) {
        if (mm == 0) {
            ++jj;
            if (mm == m) return jj;
        } else {
            const int j1 = jj + 1, j2 = jj + 2;
            jj = j2;
            if (mm == m) {
                const int je = (j1 % 2 == 0) ? j1 : j2;
                const int jo = (j1 % 2 == 0) ? j2 : j1;
                return parity == Parity::Cos ? je : jo;
            }
        }
    }
    throw std::logic_error("noll_index: ordering walk failed");
}

double zernike_radial(int n, int m, double rho) {
    double out = 0.0;
    for (int s = 0; s <= (n - m) / 2; ++s) {
        double c = (s % 2 == 0) ? 1.0 : -1.0;
        c *= std::tgamma(n - s + 1.0);
        c /= std::tgamma(s + 1.0) * std::tgamma((n + m) / 2 - s + 1.0) *
             std::tgamma((n - m) / 2 - s + 1.0);
        out += c * std::pow(rho, n - 2 * s);
    }
    return out;
}

double zernike_eval(int j, double rho, double theta) {
    if (rho < 0.0 || rho > 1.0) throw std::domain_error("zernike_eval: rho must lie in [0, 1]");
    const NollIndex idx = noll_unindex(j);
    const double R = zernike_radial(idx.n, idx.m, rho);
    if (idx.m == 0) return std::sqrt(idx.n + 1.0) * R;
    const double norm = std::sqrt(2.0 * (idx.n + 1.0));
    const double ang = idx.m * theta;
    return norm * R * (idx.parity == Parity::Cos ? std::cos(ang) : std::sin(ang));
}

namespace {

// Pixel-lattice samples of the disk: (row, col, rho, theta) for samples whose
// center lies inside the mapped unit disk.  Center at (N-1)/2.
struct DiskGrid {
    std::vector<int> rows, cols;
    std::vector<double> rho, theta;
};

DiskGrid disk_grid(int grid_n, int diameter_samples) {
    DiskGrid g;
    const double c = (grid_n - 1) / 2.0;
    const double radius = diameter_samples / 2.0;
    for (int r = 0; r < grid_n; ++r) {
        for (int col = 0; col < grid_n; ++col) {
            const double y = (r - c) / radius, x = (col - c) / radius;
            const double rr = std::hypot(x, y);
            if (rr <= 1.0) {
                g.rows.push_back(r);
                g.cols.push_back(col);
                g.rho.push_back(rr);
                g.theta.push_back(std::atan2(y, x));
            }
        }
    }
    return g;
}

}  // namespace

Image phase_from_coeffs(const ZernikeVector& a, int grid_n, int diameter_samples) {
    Image phi(grid_n, grid_n, 0.0);
    const DiskGrid g = disk_grid(grid_n, diameter_samples);
    for (int j = 1; j <= a.n_modes(); ++j) {
        const double aj = a[j];
        if (aj == 0.0) continue;
        for (size_t i = 0; i < g.rows.size(); ++i)
            phi(g.rows[i], g.cols[i]) += aj * zernike_eval(j, g.rho[i], g.theta[i]);
    }
    return phi;
}

ZernikeVector project_phase(const Image& phase, int diameter_samples, int n_modes) {
    const int grid_n = phase.height();
    const DiskGrid g = disk_grid(grid_n, diameter_samples);
    const size_t npix = g.rows.size();
    Eigen::MatrixXd Z(npix, n_modes);
    for (int j = 1; j <= n_modes; ++j)
        for (size_t i = 0; i < npix; ++i) Z(i, j - 1) = zernike_eval(j, g.rho[i], g.theta[i]);
    Eigen::VectorXd b(npix);
    for (size_t i = 0; i < npix; ++i) b(i) = phase(g.rows[i], g.cols[i]);
    Eigen::VectorXd sol = (Z.transpose() * Z).ldlt().solve(Z.transpose() * b);
    ZernikeVector out(n_modes);
    for (int j = 1; j <= n_modes; ++j) out[j] = sol(j - 1);
    return out;
}

double noll_covariance(int i, int j, double D_over_r0, bool apply_odd_rule) {
    if (i < 2 || j < 2) throw std::domain_error("noll_covariance: piston excluded (i, j >= 2)");
    const NollIndex a = noll_unindex(i), b = noll_unindex(j);
    if (a.m != b.m) return 0.0;
    if (a.m != 0 && a.parity != b.parity) return 0.0;
    if (apply_odd_rule && (i - j) % 2 != 0) return 0.0;
    const double ni = a.n, nj = b.n;
    const double sign = (((a.n + b.n - 2 * a.m) / 2) % 2 == 0) ? 1.0 : -1.0;
    const double val = 2.2698 * sign * std::sqrt((ni + 1.0) * (nj + 1.0)) *
                       std::tgamma((ni + nj - 5.0 / 3.0) / 2.0) /
                       (std::tgamma((nj - ni + 17.0 / 3.0) / 2.0) *
                        std::tgamma((ni - nj + 17.0 / 3.0) / 2.0) *
                        std::tgamma((ni + nj + 23.0 / 3.0) / 2.0));
    return val * std::pow(D_over_r0, 5.0 / 3.0);
}

NollMatrix::NollMatrix(int n_modes, double D_over_r0, bool apply_odd_rule) : n_(n_modes) {
    if (n_modes < 3) throw std::invalid_argument("NollMatrix: need n_modes >= 3");
    sigma_.assign(static_cast<size_t>(n_) * n_, 0.0);
    for (int i = 2; i <= n_; ++i)
        for (int j = 2; j <= n_; ++j)
            sigma_[(i - 1) * n_ + (j - 1)] = noll_covariance(i, j, D_over_r0, apply_odd_rule);

    // Factor the active (non-piston) block.
    const int m = n_ - 1;
    Eigen::MatrixXd S(m, m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) S(i, j) = sigma_[(i + 1) * n_ + (j + 1)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    min_eig_ = eig.eigenvalues().minCoeff();

    Eigen::MatrixXd Lf;
    Eigen::LLT<Eigen::MatrixXd> llt(S);
    if (llt.info() == Eigen::Success) {
        Lf = llt.matrixL();
    } else {
        // Clip negative eigenvalues at zero and rebuild a factor.
        eigen_fallback_ = true;
        Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        Lf = eig.eigenvectors() * ev.asDiagonal();
    }
    chol_.assign(static_cast<size_t>(n_) * n_, 0.0);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) chol_[(i + 1) * n_ + (j + 1)] = Lf(i, j);
}

ZernikeVector sample_intermodal(const NollMatrix& sigma, uint64_t seed) {
    const int n = sigma.n_modes();
    RandomStream rs(seed);
    std::vector<double> g(n);
    for (int i = 0; i < n; ++i) g[i] = rs.normal();
    ZernikeVector out(n);
    for (int i = 2; i <= n; ++i) {
        double acc = 0;
        // full row: the eigen-clip fallback factor is not triangular
        for (int j = 2; j <= n; ++j) acc += sigma.chol(i, j) * g[j - 1];
        out[i] = acc;
    }
    return out;
}

double tilt_to_pixels(double a_tilt) { return 4.0 / M_PI * a_tilt; }

}  // namespace turbsim::zernike
