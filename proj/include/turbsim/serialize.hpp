#pragma once

#include <string>

#include "turbsim/io.hpp"
#include "turbsim/psfbasis.hpp"
#include "turbsim/zfield.hpp"

namespace turbsim::serialize {

/// PsfBasis in the array-container format: payload [1 + M, K, K] stacking
/// the mean kernel and the components; sigma and provenance in metadata.
void save_basis(const std::string& path, const psfbasis::PsfBasis& basis);
psfbasis::PsfBasis load_basis(const std::string& path);

/// P2SModel: flat payload of all layer weights and biases plus the
/// standardization vectors; layer shapes in metadata.
void save_p2s(const std::string& path, const psfbasis::P2SModel& model);
psfbasis::P2SModel load_p2s(const std::string& path);

/// Correlation kernel table: payload [n_radial, n_angular] with mode and
/// s_max in metadata.
void save_kernel(const std::string& path, const zfield::CorrelationKernel& kernel);
zfield::CorrelationKernel load_kernel(const std::string& path);

/// Cached fetch: load from dir if present, otherwise build by quadrature and
/// store.  The cache key carries the mode and table/quadrature parameters
/// (normalized kernels do not depend on the optical configuration).
zfield::CorrelationKernel cached_kernel(const std::string& dir, int mode, double s_max,
                                        int n_radial, int n_angular,
                                        const zfield::CorrOptions& opt = {});

}  // namespace turbsim::serialize
