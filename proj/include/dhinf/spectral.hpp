#pragma once

#include "dhinf/types.hpp"

namespace dhinf {

/// Chebyshev extremal points (2N+1 of them, ascending) with their
/// barycentric weights. The weights are only defined up to a common factor.
struct SpectralMesh {
    int N = 0;
    double tau_max = 0.0;
    Vec points;
    Vec weights;

    Eigen::Index size() const { return points.size(); }
};

/// Symmetric mesh on [-tau_max, tau_max]; point N is exactly 0.
SpectralMesh build_mesh(int N, double tau_max);

/// Mesh on [-tau_max, 0]; the last point is exactly 0.
SpectralMesh build_one_sided_mesh(int N, double tau_max);

struct DifferentiationMatrix {
    SpectralMesh mesh;
    /// d(i,k) = l_k'(theta_i)
    Mat d;

    /// Row of Lagrange basis values l_k(t), k = 0..2N.
    Eigen::RowVectorXd lagrange_row(double t) const;
};

DifferentiationMatrix differentiation_matrix(const SpectralMesh& mesh);

Eigen::RowVectorXd lagrange_row(const SpectralMesh& mesh, double t);

/// Kronecker(D, I_block) with the block-row at `boundary_node` replaced by
/// `boundary_row` (block_dim x size*block_dim).
Mat discretize_block_operator(const DifferentiationMatrix& dm, Eigen::Index block_dim, Eigen::Index boundary_node,
                              const Mat& boundary_row);

}  // namespace dhinf
