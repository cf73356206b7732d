#include "dhinf/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "dhinf/errors.hpp"

namespace dhinf {

namespace {

Vec chebyshev_weights(Eigen::Index count) {
    Vec w(count);
    for (Eigen::Index j = 0; j < count; ++j) w(j) = (j % 2 == 0) ? 1.0 : -1.0;
    w(0) *= 0.5;
    w(count - 1) *= 0.5;
    return w;
}

void check_mesh_args(int N, double tau_max) {
    if (N < 1) throw std::invalid_argument("mesh: N must be >= 1, got " + std::to_string(N));
    if (!(tau_max > 0.0) || !std::isfinite(tau_max)) throw std::invalid_argument("mesh: tau_max must be positive");
}

}  // namespace

SpectralMesh build_mesh(int N, double tau_max) {
    check_mesh_args(N, tau_max);
    SpectralMesh mesh;
    mesh.N = N;
    mesh.tau_max = tau_max;
    mesh.points.resize(2 * N + 1);
    // sin form of the extrema cos(pi j / 2N): odd symmetric and exactly 0 at the centre.
    for (int k = -N; k <= N; ++k) {
        mesh.points(k + N) = tau_max * std::sin(std::numbers::pi * k / (2.0 * N));
    }
    mesh.points(N) = 0.0;
    mesh.weights = chebyshev_weights(mesh.points.size());
    return mesh;
}

SpectralMesh build_one_sided_mesh(int N, double tau_max) {
    check_mesh_args(N, tau_max);
    SpectralMesh mesh;
    mesh.N = N;
    mesh.tau_max = tau_max;
    mesh.points.resize(2 * N + 1);
    for (int k = -N; k <= N; ++k) {
        mesh.points(k + N) = 0.5 * tau_max * (std::sin(std::numbers::pi * k / (2.0 * N)) - 1.0);
    }
    mesh.points(0) = -tau_max;
    mesh.points(2 * N) = 0.0;
    mesh.weights = chebyshev_weights(mesh.points.size());
    return mesh;
}

DifferentiationMatrix differentiation_matrix(const SpectralMesh& mesh) {
    const Eigen::Index n = mesh.size();
    const auto& x = mesh.points;
    const auto& w = mesh.weights;
    Mat d = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double diag = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i) continue;
            d(i, k) = (w(k) / w(i)) / (x(i) - x(k));
            diag -= d(i, k);
        }
        d(i, i) = diag;
    }
    return {mesh, std::move(d)};
}

Eigen::RowVectorXd lagrange_row(const SpectralMesh& mesh, double t) {
    const Eigen::Index n = mesh.size();
    Eigen::RowVectorXd row(n);
    double denom = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double diff = t - mesh.points(k);
        if (diff == 0.0) {
            row.setZero();
            row(k) = 1.0;
            return row;
        }
        row(k) = mesh.weights(k) / diff;
        denom += row(k);
    }
    return row / denom;
}

Eigen::RowVectorXd DifferentiationMatrix::lagrange_row(double t) const { return dhinf::lagrange_row(mesh, t); }

Mat discretize_block_operator(const DifferentiationMatrix& dm, Eigen::Index block_dim, Eigen::Index boundary_node,
                              const Mat& boundary_row) {
    const Eigen::Index nodes = dm.d.rows();
    const Eigen::Index dim = nodes * block_dim;
    if (boundary_row.rows() != block_dim || boundary_row.cols() != dim) {
        throw DimensionError("boundary row has shape " + std::to_string(boundary_row.rows()) + "x" +
                             std::to_string(boundary_row.cols()) + ", expected " + std::to_string(block_dim) + "x" +
                             std::to_string(dim));
    }
    if (boundary_node < 0 || boundary_node >= nodes) throw std::out_of_range("boundary node outside mesh");
    Mat out = Mat::Zero(dim, dim);
    for (Eigen::Index i = 0; i < nodes; ++i) {
        if (i == boundary_node) continue;
        for (Eigen::Index k = 0; k < nodes; ++k) {
            const double dik = dm.d(i, k);
            if (dik == 0.0) continue;
            for (Eigen::Index b = 0; b < block_dim; ++b) out(i * block_dim + b, k * block_dim + b) = dik;
        }
    }
    out.middleRows(boundary_node * block_dim, block_dim) = boundary_row;
    return out;
}

}  // namespace dhinf
