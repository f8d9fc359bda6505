#include "turbsim/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace turbsim::fft {

namespace {

// FFTW plan creation is not thread-safe; execution via fftw_execute_dft is.
// Plans are created once per (rows, cols, sign) with FFTW_ESTIMATE so results
// do not depend on runtime measurement.
class PlanCache {
public:
    fftw_plan get(int rows, int cols, int sign) {
        std::lock_guard<std::mutex> lk(mu_);
        auto key = std::make_tuple(rows, cols, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        std::vector<cd> scratch(static_cast<size_t>(rows) * cols);
        fftw_plan p = fftw_plan_dft_2d(rows, cols,
                                       reinterpret_cast<fftw_complex*>(scratch.data()),
                                       reinterpret_cast<fftw_complex*>(scratch.data()),
                                       sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

void run(cd* data, int rows, int cols, int sign) {
    fftw_plan p = cache().get(rows, cols, sign);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data),
                     reinterpret_cast<fftw_complex*>(data));
}

}  // namespace

void forward2d(cd* data, int rows, int cols) { run(data, rows, cols, FFTW_FORWARD); }

void inverse2d(cd* data, int rows, int cols) {
    run(data, rows, cols, FFTW_BACKWARD);
    const double inv = 1.0 / (static_cast<double>(rows) * cols);
    const size_t total = static_cast<size_t>(rows) * cols;
    for (size_t i = 0; i < total; ++i) data[i] *= inv;
}

void forward2d(cd* data, int n) { forward2d(data, n, n); }
void inverse2d(cd* data, int n) { inverse2d(data, n, n); }

template <typename T>
static void shift_impl(T* data, int rows, int cols) {
    const int hr = rows / 2, hc = cols / 2;
    // even sizes only in this codebase
    for (int r = 0; r < hr; ++r) {
        for (int c = 0; c < cols; ++c) {
            const int r2 = r + hr;
            const int c2 = (c + hc) % cols;
            std::swap(data[static_cast<size_t>(r) * cols + c],
                      data[static_cast<size_t>(r2) * cols + c2]);
        }
    }
}

void shift2d(cd* data, int rows, int cols) { shift_impl(data, rows, cols); }
void shift2d(double* data, int rows, int cols) { shift_impl(data, rows, cols); }

}  // namespace turbsim::fft
