#include <doctest.h>

#include <cmath>

#include "dhinf/errors.hpp"
#include "dhinf/model.hpp"
#include "support.hpp"

using namespace dhinf;

namespace {

double max_abs(const Mat& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

Mat mat(std::initializer_list<std::initializer_list<double>> rows) {
    Mat m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

ClosedLoopSystem scalar_lag() {
    ClosedLoopSystem cl;
    cl.A = {Mat::Constant(1, 1, -1.0)};
    cl.B = cl.C = Mat::Constant(1, 1, 1.0);
    cl.D = Mat::Zero(1, 1);
    return cl;
}

}  // namespace

TEST_CASE("assembly of the first-order example") {
    const ClosedLoopSystem cl = testing::example1();
    REQUIRE(cl.A.size() == 4);
    REQUIRE(cl.delays == std::vector<double>{1.0, 0.0, 0.0});
    CHECK(max_abs(cl.A[0] - mat({{-1, 0}, {1.39, -3.61}})) == 0.0);
    CHECK(max_abs(cl.A[1] - mat({{-0.5, 0}, {0, 0}})) == 0.0);
    CHECK(max_abs(cl.A[2] - mat({{0, -0.83}, {0, 0}})) == 0.0);
    CHECK(max_abs(cl.A[3]) == 0.0);
    CHECK(max_abs(cl.B - mat({{1}, {1.39}})) == 0.0);
    CHECK(max_abs(cl.C - mat({{1, -0.83}})) == 0.0);
    CHECK(max_abs(cl.D) == 0.0);
}

TEST_CASE("assembly of the fourth-order example keeps every delay term") {
    const ClosedLoopSystem cl = testing::example2();
    CHECK(cl.order() == 5);
    CHECK(cl.delays == std::vector<double>{3.2, 3.4, 3.9, 0.2, 0.2});
    CHECK(cl.A.size() == 6);
}

TEST_CASE("assembly block structure on random pairs") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto [p, k] = testing::random_pair(seed);
        const ClosedLoopSystem cl = assemble_closed_loop(p, k);
        const Eigen::Index n = p.n(), nk = k.order();
        const std::size_t m = p.m();
        CHECK(max_abs(cl.A[0].topLeftCorner(n, n) - p.A[0]) == 0.0);
        CHECK(max_abs(cl.A[0].topRightCorner(n, nk)) == 0.0);
        CHECK(max_abs(cl.A[0].bottomLeftCorner(nk, n) - k.BK * p.C2) < 1e-14);
        CHECK(max_abs(cl.A[0].bottomRightCorner(nk, nk) - k.AK) == 0.0);
        for (std::size_t i = 1; i <= m; ++i) {
            Mat expected = Mat::Zero(n + nk, n + nk);
            expected.topLeftCorner(n, n) = p.A[i];
            CHECK(max_abs(cl.A[i] - expected) == 0.0);
            CHECK(cl.delays[i - 1] == p.state_delays[i - 1]);
        }
        Mat input = Mat::Zero(n + nk, n + nk);
        input.topRightCorner(n, nk) = p.B2 * k.CK;
        CHECK(max_abs(cl.A[m + 1] - input) < 1e-14);
        Mat feed = Mat::Zero(n + nk, n + nk);
        feed.bottomRightCorner(nk, nk) = k.BK * p.D22 * k.CK;
        CHECK(max_abs(cl.A[m + 2] - feed) < 1e-14);
        CHECK(cl.delays[m] == p.input_delay);
        CHECK(cl.delays[m + 1] == p.feedthrough_delay);
        CHECK(max_abs(cl.B.topRows(n) - p.B1) == 0.0);
        CHECK(max_abs(cl.B.bottomRows(nk) - k.BK * p.D21) < 1e-14);
        CHECK(max_abs(cl.C.leftCols(n) - p.C1) == 0.0);
        CHECK(max_abs(cl.C.rightCols(nk) - p.D12 * k.CK) < 1e-14);
        CHECK(max_abs(cl.D - p.D11) == 0.0);
    }
}

TEST_CASE("a decoupled controller leaves the open-loop transfer") {
    auto [p, k] = testing::random_pair(7);
    k.BK.setZero();
    k.CK.setZero();
    const ClosedLoopSystem cl = assemble_closed_loop(p, k);
    ClosedLoopSystem open;
    open.A = p.A;
    open.delays = p.state_delays;
    open.B = p.B1;
    open.C = p.C1;
    open.D = p.D11;
    for (double w : {0.0, 0.3, 2.0, 11.0}) {
        CHECK((evaluate_transfer(cl, w) - evaluate_transfer(open, w)).norm() < 1e-12);
    }
}

TEST_CASE("dimension errors name the offending field") {
    auto p = testing::plant("example1_plant.json");
    p.B2 = Mat::Zero(2, 1);
    try {
        p.validate();
        FAIL("expected DimensionError");
    } catch (const DimensionError& e) {
        CHECK(std::string(e.what()).find("B2") != std::string::npos);
    }
    auto k = testing::controller("example1_controller.json");
    k.BK = Mat::Zero(1, 3);
    CHECK_THROWS_AS(assemble_closed_loop(testing::plant("example1_plant.json"), k), DimensionError);
    auto q = testing::plant("example1_plant.json");
    q.state_delays = {-1.0};
    CHECK_THROWS_AS(q.validate(), DimensionError);
}

TEST_CASE("transfer function values") {
    ClosedLoopSystem cl = scalar_lag();
    CHECK(std::abs(evaluate_transfer(cl, 0.0)(0, 0) - cd(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(evaluate_transfer(cl, 1.0)(0, 0) - 1.0 / cd(1.0, 1.0)) < 1e-15);

    cl.C.setZero();
    cl.D = Mat::Constant(1, 1, 0.7);
    CHECK(std::abs(evaluate_transfer(cl, 3.0)(0, 0) - 0.7) < 1e-15);

    // At w = 0 every exponential is 1: T(0) = C (-sum A_i)^{-1} B + D, an
    // independent real solve.
    const ClosedLoopSystem ex1 = testing::example1();
    Mat sum = Mat::Zero(2, 2);
    for (const auto& a : ex1.A) sum += a;
    const double oracle = (ex1.C * (-sum).fullPivLu().solve(ex1.B))(0, 0) + ex1.D(0, 0);
    const cd t0 = evaluate_transfer(ex1, 0.0)(0, 0);
    CHECK(std::abs(t0 - oracle) < 1e-14);
    CHECK(t0.real() == doctest::Approx(-0.0652).epsilon(0.01));
    CHECK(evaluate_transfer(ex1, std::numeric_limits<double>::infinity()).norm() == 0.0);
}

TEST_CASE("transfer at a characteristic root is rejected") {
    ClosedLoopSystem cl = scalar_lag();
    cl.A[0](0, 0) = 0.0;  // root at s = 0
    CHECK_THROWS_AS(evaluate_transfer(cl, 0.0), SingularResolventError);
}

TEST_CASE("largest singular value and its vectors") {
    ClosedLoopSystem cl = scalar_lag();
    cl.B = Mat::Zero(1, 2);
    cl.C = Mat::Zero(2, 1);
    cl.D = mat({{2, 0}, {0, 1}});
    const SingularTriple s = max_singular_value(cl, 0.5);
    CHECK(s.sigma == doctest::Approx(2.0));
    CHECK(std::abs(std::abs(s.w_l(0)) - 1.0) < 1e-14);
    CHECK(std::abs(std::abs(s.w_r(0)) - 1.0) < 1e-14);
    CHECK_FALSE(s.multiple);
    CHECK(max_singular_value(scalar_lag(), 0.0).sigma == doctest::Approx(1.0));

    cl.D = Mat::Identity(2, 2);
    CHECK(max_singular_value(cl, 0.5).multiple);
}

TEST_CASE("singular triple invariants on the fourth-order example") {
    const ClosedLoopSystem cl = testing::example2();
    for (double w : {0.0, 0.5, 1.7, 10.0}) {
        const SingularTriple s = max_singular_value(cl, w);
        const CMat t = evaluate_transfer(cl, w);
        CHECK(s.w_l.norm() == doctest::Approx(1.0));
        CHECK(s.w_r.norm() == doctest::Approx(1.0));
        CHECK((t * s.w_r - s.sigma * s.w_l).norm() < 1e-12);
        CHECK((s.w_l.adjoint() * t - s.sigma * s.w_r.adjoint()).norm() < 1e-12);
        // independent oracle: largest eigenvalue of T^* T
        const double lmax = Eigen::SelfAdjointEigenSolver<CMat>(t.adjoint() * t).eigenvalues().maxCoeff();
        CHECK(s.sigma == doctest::Approx(std::sqrt(lmax)).epsilon(1e-12));
    }
}

TEST_CASE("characteristic matrix symmetry and derivative") {
    const ClosedLoopSystem cl = testing::example2();
    const cd s(0.3, 1.1);
    CHECK((cl.characteristic_matrix(std::conj(s)) - cl.characteristic_matrix(s).conjugate()).norm() < 1e-13);
    const double h = 1e-6;
    const CMat fd = (cl.characteristic_matrix(s + h) - cl.characteristic_matrix(s - h)) / (2.0 * h);
    CHECK((fd - cl.characteristic_derivative(s)).norm() < 1e-7 * cl.characteristic_derivative(s).norm());
}
