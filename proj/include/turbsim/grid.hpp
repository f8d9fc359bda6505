#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace turbsim {

using cd = std::complex<double>;

/// Dense real-valued image, row-major, height x width.
class Image {
public:
    Image() = default;
    Image(int height, int width, double fill = 0.0)
        : h_(height), w_(width), data_(static_cast<size_t>(height) * width, fill) {
        if (height < 0 || width < 0) throw std::invalid_argument("Image: negative size");
    }

    int height() const { return h_; }
    int width() const { return w_; }
    size_t size() const { return data_.size(); }

    double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * w_ + c]; }
    double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * w_ + c]; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double sum() const {
        double s = 0;
        for (double v : data_) s += v;
        return s;
    }
    void scale(double a) {
        for (double& v : data_) v *= a;
    }
    Image& operator+=(const Image& o) {
        for (size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

private:
    int h_ = 0, w_ = 0;
    std::vector<double> data_;
};

/// Complex sample grid with physical sample spacing.  Carries waves, pupils
/// and screens through the Fourier pipeline.  N must be a power of two.
class ComplexField {
public:
    ComplexField() = default;
    ComplexField(int n, double dx, double wavelength = 0.0)
        : n_(n), dx_(dx), wavelength_(wavelength), data_(static_cast<size_t>(n) * n) {
        if (n < 2 || (n & (n - 1)) != 0) throw std::invalid_argument("ComplexField: N must be a power of two >= 2");
        if (dx <= 0) throw std::invalid_argument("ComplexField: dx must be positive");
    }

    int n() const { return n_; }
    double dx() const { return dx_; }
    double wavelength() const { return wavelength_; }
    void set_wavelength(double w) { wavelength_ = w; }

    cd& operator()(int r, int c) { return data_[static_cast<size_t>(r) * n_ + c]; }
    cd operator()(int r, int c) const { return data_[static_cast<size_t>(r) * n_ + c]; }
    cd* data() { return data_.data(); }
    const cd* data() const { return data_.data(); }
    size_t size() const { return data_.size(); }

    /// Total energy sum |u|^2 dx^2.
    double energy() const {
        double s = 0;
        for (const cd& v : data_) s += std::norm(v);
        return s * dx_ * dx_;
    }

private:
    int n_ = 0;
    double dx_ = 0;
    double wavelength_ = 0;
    std::vector<cd> data_;
};

inline double sqr(double x) { return x * x; }

}  // namespace turbsim
