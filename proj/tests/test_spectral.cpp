#include <doctest.h>

#include <cmath>
#include <random>

#include "dhinf/errors.hpp"
#include "dhinf/linalg.hpp"
#include "dhinf/spectral.hpp"

using namespace dhinf;

TEST_CASE("Chebyshev extremal meshes") {
    const SpectralMesh m1 = build_mesh(1, 1.0);
    REQUIRE(m1.size() == 3);
    CHECK(m1.points(0) == doctest::Approx(-1.0));
    CHECK(m1.points(1) == 0.0);
    CHECK(m1.points(2) == doctest::Approx(1.0));

    const SpectralMesh m2 = build_mesh(2, 1.0);
    const double r = std::sqrt(2.0) / 2.0;
    const double expected[] = {-1.0, -r, 0.0, r, 1.0};
    for (int i = 0; i < 5; ++i) CHECK(m2.points(i) == doctest::Approx(expected[i]).epsilon(1e-15));

    const SpectralMesh m3 = build_mesh(2, 3.9);
    for (int i = 0; i < 5; ++i) CHECK(m3.points(i) == doctest::Approx(3.9 * expected[i]).epsilon(1e-15));

    CHECK_THROWS_AS(build_mesh(0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(build_mesh(3, -1.0), std::invalid_argument);
}

TEST_CASE("mesh symmetry and ordering") {
    for (int N : {1, 2, 5, 10, 33}) {
        const SpectralMesh m = build_mesh(N, 2.5);
        CHECK(m.points(N) == 0.0);
        for (int i = 0; i <= 2 * N; ++i) {
            CHECK(m.points(i) == -m.points(2 * N - i));
            if (i > 0) CHECK(m.points(i) > m.points(i - 1));
        }
    }
    const SpectralMesh one = build_one_sided_mesh(4, 2.0);
    CHECK(one.points(0) == doctest::Approx(-2.0));
    CHECK(one.points(one.size() - 1) == 0.0);
}

TEST_CASE("differentiation matrix on three nodes") {
    const DifferentiationMatrix dm = differentiation_matrix(build_mesh(1, 1.0));
    const double expected[3][3] = {{-1.5, 2.0, -0.5}, {-0.5, 0.0, 0.5}, {0.5, -2.0, 1.5}};
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) CHECK(dm.d(i, k) == doctest::Approx(expected[i][k]).epsilon(1e-14));
}

TEST_CASE("differentiation is exact on polynomials of degree <= 2N") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> g;
    for (int N : {1, 3, 8, 16}) {
        const DifferentiationMatrix dm = differentiation_matrix(build_mesh(N, 1.0));
        CHECK(dm.d.rowwise().sum().cwiseAbs().maxCoeff() < 1e-12);
        for (int trial = 0; trial < 5; ++trial) {
            Vec c(2 * N + 1);
            for (auto& v : c) v = g(rng);
            Vec p(dm.mesh.size()), dp(dm.mesh.size());
            for (Eigen::Index i = 0; i < dm.mesh.size(); ++i) {
                const double t = dm.mesh.points(i);
                double val = 0.0, der = 0.0;
                for (Eigen::Index k = c.size() - 1; k >= 0; --k) {
                    der = der * t + val;
                    val = val * t + c(k);
                }
                p(i) = val;
                dp(i) = der;
            }
            CHECK((dm.d * p - dp).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("barycentric Lagrange rows") {
    std::mt19937_64 rng(5);
    const SpectralMesh m = build_mesh(7, 1.5);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    for (int i = 0; i < 100; ++i) CHECK(std::abs(lagrange_row(m, u(rng)).sum() - 1.0) < 1e-12);
    // at a node: a unit vector
    const Eigen::RowVectorXd at = lagrange_row(m, m.points(3));
    CHECK(at(3) == 1.0);
    CHECK(at.cwiseAbs().sum() == 1.0);
    // reproduces a cubic
    const double t = 0.37;
    Vec cubic(m.size());
    for (Eigen::Index k = 0; k < m.size(); ++k) cubic(k) = std::pow(m.points(k), 3) - m.points(k);
    CHECK((lagrange_row(m, t) * cubic)(0) == doctest::Approx(t * t * t - t).epsilon(1e-12));
}

TEST_CASE("block discretization structure") {
    const DifferentiationMatrix dm = differentiation_matrix(build_mesh(1, 1.0));
    const Mat z1 = discretize_block_operator(dm, 1, 1, Mat::Zero(1, 3));
    Mat expected = dm.d;
    expected.row(1).setZero();
    CHECK((z1 - expected).norm() == 0.0);

    Mat boundary = Mat::Constant(2, 6, 7.0);
    const Mat op = discretize_block_operator(dm, 2, 1, boundary);
    REQUIRE(op.rows() == 6);
    for (int i : {0, 2}) {
        for (int k = 0; k < 3; ++k) {
            CHECK((op.block(2 * i, 2 * k, 2, 2) - dm.d(i, k) * Mat::Identity(2, 2)).norm() == 0.0);
        }
    }
    CHECK((op.middleRows(2, 2) - boundary).norm() == 0.0);
    CHECK_THROWS_AS(discretize_block_operator(dm, 2, 1, Mat::Zero(2, 5)), DimensionError);
}

TEST_CASE("delay-free boundary row reproduces the eigenvalues of M0") {
    const Mat m0 = (Mat(2, 2) << -0.3, 1.0, -1.0, -0.3).finished();
    const int N = 10;
    const DifferentiationMatrix dm = differentiation_matrix(build_mesh(N, 1.0));
    Mat row = Mat::Zero(2, dm.mesh.size() * 2);
    row.middleCols(N * 2, 2) = m0;
    const CVec ev = linalg::eigenvalues(discretize_block_operator(dm, 2, N, row));
    const CVec oracle = Eigen::EigenSolver<Mat>(m0).eigenvalues();
    for (Eigen::Index i = 0; i < oracle.size(); ++i) {
        double best = 1e300;
        for (Eigen::Index k = 0; k < ev.size(); ++k) best = std::min(best, std::abs(ev(k) - oracle(i)));
        CHECK(best < 1e-8);
    }
}
