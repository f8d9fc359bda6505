#include "turbsim/atmosphere.hpp"

#include <cmath>
#include <stdexcept>

#include "turbsim/quadrature.hpp"

namespace turbsim::atmosphere {

Cn2Profile Cn2Profile::constant(double cn2) {
    if (cn2 < 0) throw std::invalid_argument("Cn2Profile: Cn^2 must be nonnegative");
    Cn2Profile p;
    p.kind_ = Kind::Constant;
    p.c_ = cn2;
    return p;
}

Cn2Profile Cn2Profile::hufnagel_valley(double A, double v) {
    Cn2Profile p;
    p.kind_ = Kind::HufnagelValley;
    p.A_ = A;
    p.v_ = v;
    return p;
}

Cn2Profile Cn2Profile::slcd() {
    Cn2Profile p;
    p.kind_ = Kind::Slcd;
    return p;
}

Cn2Profile Cn2Profile::tabulated(std::vector<double> z, std::vector<double> cn2) {
    if (z.size() != cn2.size() || z.size() < 2)
        throw std::invalid_argument("Cn2Profile: tabulated profile needs >= 2 matching knots");
    for (size_t i = 1; i < z.size(); ++i)
        if (z[i] <= z[i - 1]) throw std::invalid_argument("Cn2Profile: knots must be increasing");
    for (double c : cn2)
        if (c < 0) throw std::invalid_argument("Cn2Profile: Cn^2 must be nonnegative");
    Cn2Profile p;
    p.kind_ = Kind::Tabulated;
    p.zi_ = std::move(z);
    p.ci_ = std::move(cn2);
    return p;
}

double Cn2Profile::operator()(double z) const {
    switch (kind_) {
        case Kind::Constant:
            return c_;
        case Kind::HufnagelValley:
            return cn2_hufnagel_valley(z, A_, v_);
        case Kind::Slcd:
            return cn2_slcd(z);
        case Kind::Tabulated: {
            if (z <= zi_.front()) return ci_.front();
            if (z >= zi_.back()) return ci_.back();
            size_t hi = 1;
            while (zi_[hi] < z) ++hi;
            const double t = (z - zi_[hi - 1]) / (zi_[hi] - zi_[hi - 1]);
            return ci_[hi - 1] + t * (ci_[hi] - ci_[hi - 1]);
        }
    }
    return 0;
}

double Cn2Profile::integrate_weighted(double L, const std::function<double(double)>& w) const {
    if (L <= 0) throw std::invalid_argument("Cn2Profile: L must be positive");
    if (kind_ == Kind::Tabulated) {
        // Trapezoid on the knots, clipped to [0, L], with endpoints inserted.
        std::vector<double> zs;
        zs.push_back(0.0);
        for (double z : zi_)
            if (z > 0.0 && z < L) zs.push_back(z);
        zs.push_back(L);
        double total = 0;
        for (size_t i = 0; i + 1 < zs.size(); ++i) {
            const double a = zs[i], b = zs[i + 1];
            total += 0.5 * (b - a) * ((*this)(a)*w(a) + (*this)(b)*w(b));
        }
        return total;
    }
    return integrate_adaptive([&](double z) { return (*this)(z)*w(z); }, 0.0, L, 1e-8);
}

double Cn2Profile::integrate(double L) const {
    return integrate_weighted(L, [](double) { return 1.0; });
}

double kolmogorov_psd(double k_mag, double cn2) {
    if (k_mag <= 0) throw std::domain_error("kolmogorov_psd: singular at k = 0");
    return 0.033 * cn2 * std::pow(k_mag, -11.0 / 3.0);
}

double von_karman_psd(double k_mag, double cn2, double L0, double l0) {
    if (L0 <= 0 || l0 <= 0) throw std::invalid_argument("von_karman_psd: L0, l0 must be positive");
    const double k0 = 2.0 * M_PI / L0;
    const double km = 5.92 / l0;
    return 0.033 * cn2 * std::exp(-k_mag * k_mag / (km * km)) *
           std::pow(k_mag * k_mag + k0 * k0, -11.0 / 6.0);
}

double cn2_hufnagel_valley(double h, double A, double v) {
    if (h < 0) throw std::domain_error("cn2_hufnagel_valley: altitude must be nonnegative");
    const double w = v / 27.0;
    return 5.94e-53 * w * w * std::pow(h, 10.0) * std::exp(-h / 1000.0) +
           2.7e-16 * std::exp(-h / 1500.0) + A * std::exp(-h / 100.0);
}

double cn2_slcd(double h) {
    if (h < 0) throw std::domain_error("cn2_slcd: altitude must be nonnegative");
    if (h < 19.0) return 0.0;
    if (h < 230.0) return 4.008e-13 * std::pow(h, -1.054);
    if (h < 850.0) return 1.3e-15;
    if (h < 7000.0) return 6.352e-7 * std::pow(h, -2.966);
    return 6.209e-18 * std::pow(h, -0.6229);
}

double fried_parameter(const OpticalConfig& cfg) {
    const double L = cfg.path_length;
    const double integral =
        cfg.wave_kind == OpticalConfig::WaveKind::Plane
            ? cfg.profile.integrate(L)
            : cfg.profile.integrate_weighted(
                  L, [L](double z) { return std::pow((L - z) / L, 5.0 / 3.0); });
    if (integral <= 0) return kInfiniteR0;  // diffraction-limited
    const double k = cfg.wavenumber();
    return 0.185 * std::pow(4.0 * M_PI * M_PI / (k * k * integral), 3.0 / 5.0);
}

double isoplanatic_angle(const OpticalConfig& cfg) {
    const double integral = cfg.profile.integrate_weighted(
        cfg.path_length, [](double z) { return std::pow(z, 5.0 / 3.0); });
    if (integral <= 0) return std::numeric_limits<double>::infinity();
    return 58.1e-3 * std::pow(cfg.wavelength, 6.0 / 5.0) * std::pow(integral, -3.0 / 5.0);
}

double phase_structure_function(double r, double r0) {
    if (r < 0) throw std::domain_error("phase_structure_function: r must be nonnegative");
    if (r0 <= 0) throw std::domain_error("phase_structure_function: r0 must be positive");
    return 6.88 * std::pow(r / r0, 5.0 / 3.0);
}

double refractive_structure_function(double r, double cn2) {
    if (r < 0) throw std::domain_error("refractive_structure_function: r must be nonnegative");
    return cn2 * std::pow(r, 2.0 / 3.0);
}

double diffraction_otf_circular(double f, double f0) {
    if (f < 0) throw std::domain_error("diffraction_otf_circular: f must be nonnegative");
    if (f0 <= 0) throw std::invalid_argument("diffraction_otf_circular: f0 must be positive");
    const double x = f / (2.0 * f0);
    if (x >= 1.0) return 0.0;
    return 2.0 / M_PI * (std::acos(x) - x * std::sqrt(1.0 - x * x));
}

double le_otf(double f_mag, double lambda, double z, double r0) {
    if (f_mag < 0) throw std::domain_error("le_otf: f must be nonnegative");
    if (r0 == kInfiniteR0) return 1.0;
    return std::exp(-3.44 * std::pow(lambda * z * f_mag / r0, 5.0 / 3.0));
}

FlaggedValue se_otf(double f_mag, double lambda, double z, double r0, double D) {
    if (f_mag < 0) throw std::domain_error("se_otf: f must be nonnegative");
    FlaggedValue out;
    if (r0 == kInfiniteR0) {
        out.value = 1.0;
        return out;
    }
    const double s = lambda * z * f_mag;
    double factor = 1.0 - std::cbrt(s / D);
    if (factor < 0.0) {
        factor = 0.0;
        out.flagged = true;
    }
    out.value = std::exp(-3.44 * std::pow(s / r0, 5.0 / 3.0) * factor);
    return out;
}

FlaggedValue lucky_probability(double D_over_r0) {
    FlaggedValue out;
    out.value = 5.6 * std::exp(-0.1557 * D_over_r0 * D_over_r0);
    out.flagged = D_over_r0 < 3.5;
    return out;
}

}  // namespace turbsim::atmosphere
