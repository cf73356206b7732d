#pragma once

#include "dhinf/types.hpp"

namespace dhinf::linalg {

// All eigenvalues of a dense real square matrix (LAPACK dgeev, balanced).
CVec eigenvalues(const Mat& a);

// False when OpenBLAS dispatched to its AVX-512 (SkylakeX/Cooperlake) kernels.
// With the 0.3.20 builds these make dgeev return wrong eigenvalues or never
// terminate on some inputs.
bool blas_kernels_reliable();

// Call first thing in main(): if the kernels are unreliable, re-executes the
// program with OPENBLAS_CORETYPE=Haswell. No-op otherwise, or if the variable
// is already set.
void select_reliable_blas(char** argv);

// Smallest singular value and its right singular vector.
struct SmallestSingular {
    double sigma;
    CVec right;
    CVec left;
};
SmallestSingular smallest_singular(const CMat& a);

}  // namespace dhinf::linalg
