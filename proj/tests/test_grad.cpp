#include <doctest.h>

#include <cmath>
#include <random>

#include "dhinf/grad.hpp"
#include "dhinf/hinf.hpp"
#include "support.hpp"

using namespace dhinf;

namespace {

double norm_of(const TimeDelayPlant& p, const ControllerRealization& k) {
    return hinf_norm(assemble_closed_loop(p, k)).norm;
}

// Central differences of the norm, entry by entry.
ControllerGradient fd_gradient(const TimeDelayPlant& p, const ControllerRealization& k, double h = 1e-6) {
    ControllerGradient g{Mat::Zero(k.AK.rows(), k.AK.cols()), Mat::Zero(k.BK.rows(), k.BK.cols()),
                         Mat::Zero(k.CK.rows(), k.CK.cols())};
    auto sweep = [&](Mat ControllerRealization::*field, Mat& out) {
        for (Eigen::Index i = 0; i < out.size(); ++i) {
            ControllerRealization kp = k, km = k;
            (kp.*field).data()[i] += h;
            (km.*field).data()[i] -= h;
            out.data()[i] = (norm_of(p, kp) - norm_of(p, km)) / (2 * h);
        }
    };
    sweep(&ControllerRealization::AK, g.dAK);
    sweep(&ControllerRealization::BK, g.dBK);
    sweep(&ControllerRealization::CK, g.dCK);
    return g;
}

double stacked_norm(const ControllerGradient& g) {
    return std::sqrt(g.dAK.squaredNorm() + g.dBK.squaredNorm() + g.dCK.squaredNorm());
}

double relative_error(const ControllerGradient& a, const ControllerGradient& b) {
    const ControllerGradient d{a.dAK - b.dAK, a.dBK - b.dBK, a.dCK - b.dCK};
    return stacked_norm(d) / std::max(stacked_norm(b), 1e-12);
}

}  // namespace

TEST_CASE("static gain: derivative with respect to D is one") {
    ClosedLoopSystem cl;
    cl.A = {Mat::Constant(1, 1, -1.0)};
    cl.B = Mat::Constant(1, 1, 1.0);
    cl.C = Mat::Zero(1, 1);
    cl.D = Mat::Constant(1, 1, 0.8);
    const ClosedLoopGradient g = hinf_gradient_closed_loop(cl, hinf_norm(cl));
    CHECK(g.dD(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("controller gradient of the first-order example matches finite differences") {
    const auto p = testing::plant("example1_plant.json");
    const auto k = testing::controller("example1_controller.json");
    const ClosedLoopSystem cl = assemble_closed_loop(p, k);
    const HinfResult r = hinf_norm(cl);
    const ClosedLoopGradient clg = hinf_gradient_closed_loop(cl, r);
    REQUIRE(clg.smooth);
    CHECK(relative_error(hinf_gradient_controller(p, k, clg), fd_gradient(p, k)) < 1e-4);

    // peak at w = 0: every delayed block has the same sensitivity as A_cl,0
    REQUIRE(r.peaks.front().omega == doctest::Approx(0.0));
    for (std::size_t i = 1; i < clg.dA.size(); ++i) CHECK((clg.dA[i] - clg.dA[0]).norm() < 1e-12);
}

TEST_CASE("controller gradient on random smooth instances") {
    int tested = 0;
    for (std::uint64_t seed = 900; tested < 6; ++seed) {
        const auto [p, k] = testing::random_pair(seed);
        const ClosedLoopSystem cl = assemble_closed_loop(p, k);
        HinfResult r;
        try {
            r = hinf_norm(cl);
        } catch (const std::runtime_error&) {
            continue;
        }
        const ClosedLoopGradient clg = hinf_gradient_closed_loop(cl, r);
        if (!clg.smooth || std::isinf(clg.omega)) continue;
        ++tested;
        CAPTURE(seed);
        CHECK(relative_error(hinf_gradient_controller(p, k, clg), fd_gradient(p, k)) < 1e-4);
    }
}

TEST_CASE("norm and gradient scale with the performance output") {
    auto p = testing::plant("example2_plant.json");
    const auto k = testing::controller("example2_controller.json");
    const ClosedLoopSystem cl = assemble_closed_loop(p, k);
    const HinfResult r = hinf_norm(cl);
    const ControllerGradient g = hinf_gradient_controller(p, k, hinf_gradient_closed_loop(cl, r));
    p.C1 *= 2.0;
    p.D11 *= 2.0;
    p.D12 *= 2.0;
    const ClosedLoopSystem cl2 = assemble_closed_loop(p, k);
    const HinfResult r2 = hinf_norm(cl2);
    const ControllerGradient g2 = hinf_gradient_controller(p, k, hinf_gradient_closed_loop(cl2, r2));
    CHECK(r2.norm == doctest::Approx(2.0 * r.norm).epsilon(1e-9));
    CHECK((g2.dAK - 2.0 * g.dAK).norm() < 1e-7 * (1.0 + g.dAK.norm()));
    CHECK((g2.dBK - 2.0 * g.dBK).norm() < 1e-7 * (1.0 + g.dBK.norm()));
    CHECK((g2.dCK - 2.0 * g.dCK).norm() < 1e-7 * (1.0 + g.dCK.norm()));
}

TEST_CASE("chain rule for scalar blocks, worked by hand") {
    const auto p = testing::plant("example1_plant.json");
    auto k = testing::controller("example1_controller.json");
    std::mt19937_64 rng(4);
    std::vector<Mat> dA;
    for (int i = 0; i < 4; ++i) dA.push_back(testing::random_matrix(rng, 2, 2));
    const Mat dB = testing::random_matrix(rng, 2, 1), dC = testing::random_matrix(rng, 1, 2);
    // perturb D22 so every term is exercised
    auto q = p;
    q.D22(0, 0) = 0.3;
    const ControllerGradient g = controller_chain_rule(q, k, dA, dB, dC);
    const double bk = k.BK(0, 0), ck = k.CK(0, 0), d22 = 0.3;
    CHECK(g.dAK(0, 0) == doctest::Approx(dA[0](1, 1)));
    CHECK(g.dBK(0, 0) == doctest::Approx(dA[0](1, 0) * q.C2(0, 0) + dA[3](1, 1) * d22 * ck + dB(1, 0) * q.D21(0, 0)));
    CHECK(g.dCK(0, 0) == doctest::Approx(q.B2(0, 0) * dA[2](0, 1) + d22 * bk * dA[3](1, 1) + q.D12(0, 0) * dC(0, 1)));
}

TEST_CASE("without D21 and D22 only the lower-left selector feeds dBK") {
    auto [p, k] = testing::random_pair(31);
    p.D21.setZero();
    p.D22.setZero();
    std::mt19937_64 rng(8);
    const Eigen::Index n = p.n() + k.order();
    std::vector<Mat> dA;
    for (std::size_t i = 0; i < p.m() + 3; ++i) dA.push_back(testing::random_matrix(rng, n, n));
    const ControllerGradient g = controller_chain_rule(p, k, dA, testing::random_matrix(rng, n, p.nw()),
                                                       testing::random_matrix(rng, p.nz(), n));
    CHECK((g.dBK - dA[0].bottomLeftCorner(k.order(), p.n()) * p.C2.transpose()).norm() < 1e-13);
}
