#pragma once

#include <complex>
#include <vector>

#include "turbsim/grid.hpp"

namespace turbsim::fft {

/// In-place 2-D FFT of an n x n row-major complex buffer.  Unnormalized
/// forward; inverse carries the 1/n^2 factor.  Thread-safe (plans are cached
/// under a lock, execution is lock-free).
void forward2d(cd* data, int n);
void inverse2d(cd* data, int n);

/// Rectangular variant (rows x cols).
void forward2d(cd* data, int rows, int cols);
void inverse2d(cd* data, int rows, int cols);

/// Swap quadrants so the zero-frequency sample moves between corner (0,0)
/// and center (n/2, n/2).  For even n the two shifts are identical.
void shift2d(cd* data, int rows, int cols);
void shift2d(double* data, int rows, int cols);

inline void forward(ComplexField& f) { forward2d(f.data(), f.n()); }
inline void inverse(ComplexField& f) { inverse2d(f.data(), f.n()); }
inline void shift(ComplexField& f) { shift2d(f.data(), f.n(), f.n()); }

}  // namespace turbsim::fft
