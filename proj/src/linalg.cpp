#include "dhinf/linalg.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

#include <lapacke.h>

extern "C" char* openblas_get_corename(void);

namespace dhinf::linalg {

CVec eigenvalues(const Mat& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("eigenvalues: matrix is not square");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    if (n == 0) return CVec(0);
    Mat work = a;
    std::vector<double> wr(n), wi(n);
    const lapack_int info = LAPACKE_dgeev(LAPACK_COL_MAJOR, 'N', 'N', n, work.data(), n, wr.data(),
                                          wi.data(), nullptr, 1, nullptr, 1);
    if (info != 0) throw std::runtime_error("eigenvalues: dgeev failed with info " + std::to_string(info));
    CVec out(n);
    for (lapack_int i = 0; i < n; ++i) out(i) = cd(wr[i], wi[i]);
    return out;
}

bool blas_kernels_reliable() {
    std::string core = openblas_get_corename();
    std::transform(core.begin(), core.end(), core.begin(), [](unsigned char c) { return std::tolower(c); });
    return core != "skylakex" && core != "cooperlake";
}

void select_reliable_blas(char** argv) {
    if (blas_kernels_reliable() || std::getenv("OPENBLAS_CORETYPE") != nullptr) return;
    // The core type is read once when OpenBLAS loads, so restart the process.
    setenv("OPENBLAS_CORETYPE", "Haswell", 1);
    execv("/proc/self/exe", argv);
}

SmallestSingular smallest_singular(const CMat& a) {
    Eigen::JacobiSVD<CMat> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Index k = a.cols() - 1;
    return {svd.singularValues()(k), svd.matrixV().col(k), svd.matrixU().col(k)};
}

}  // namespace dhinf::linalg
