#include "dhinf/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dhinf/errors.hpp"

namespace dhinf {

namespace {

void expect_shape(const Mat& m, Eigen::Index rows, Eigen::Index cols, const std::string& name) {
    if (m.rows() != rows || m.cols() != cols) {
        throw DimensionError(name + " has shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                             ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

void expect_delay(double tau, const std::string& name) {
    if (!std::isfinite(tau) || tau < 0.0) throw DimensionError(name + " must be finite and nonnegative");
}

}  // namespace

void TimeDelayPlant::validate() const {
    if (A.empty()) throw DimensionError("A must contain at least A0");
    if (A.size() != state_delays.size() + 1) {
        throw DimensionError("A has " + std::to_string(A.size()) + " matrices but state_delays has " +
                             std::to_string(state_delays.size()) + " entries (expected one more matrix)");
    }
    const Eigen::Index nx = n();
    for (std::size_t i = 0; i < A.size(); ++i) expect_shape(A[i], nx, nx, "A" + std::to_string(i));
    for (std::size_t i = 0; i < state_delays.size(); ++i) {
        expect_delay(state_delays[i], "state_delays[" + std::to_string(i) + "]");
    }
    expect_delay(input_delay, "input_delay");
    expect_delay(feedthrough_delay, "feedthrough_delay");
    expect_shape(B1, nx, nw(), "B1");
    expect_shape(B2, nx, nu(), "B2");
    expect_shape(C1, nz(), nx, "C1");
    expect_shape(C2, ny(), nx, "C2");
    expect_shape(D11, nz(), nw(), "D11");
    expect_shape(D12, nz(), nu(), "D12");
    expect_shape(D21, ny(), nw(), "D21");
    expect_shape(D22, ny(), nu(), "D22");
}

void ControllerRealization::validate_against(const TimeDelayPlant& plant) const {
    const Eigen::Index nk = order();
    expect_shape(AK, nk, nk, "AK");
    expect_shape(BK, nk, plant.ny(), "BK");
    expect_shape(CK, plant.nu(), nk, "CK");
}

double ClosedLoopSystem::tau_max() const {
    return delays.empty() ? 0.0 : *std::max_element(delays.begin(), delays.end());
}

void ClosedLoopSystem::validate() const {
    if (A.empty()) throw DimensionError("closed loop needs A_cl,0");
    if (A.size() != delays.size() + 1) throw DimensionError("closed loop needs one delay per delayed matrix");
    const Eigen::Index ncl = order();
    for (std::size_t i = 0; i < A.size(); ++i) expect_shape(A[i], ncl, ncl, "A_cl," + std::to_string(i));
    for (std::size_t i = 0; i < delays.size(); ++i) expect_delay(delays[i], "delay " + std::to_string(i + 1));
    expect_shape(B, ncl, B.cols(), "B_cl");
    expect_shape(C, C.rows(), ncl, "C_cl");
    expect_shape(D, C.rows(), B.cols(), "D_cl");
}

CMat ClosedLoopSystem::characteristic_matrix(cd s) const {
    const Eigen::Index ncl = order();
    CMat m = s * CMat::Identity(ncl, ncl) - A[0].cast<cd>();
    for (std::size_t i = 1; i < A.size(); ++i) m -= std::exp(-s * delays[i - 1]) * A[i].cast<cd>();
    return m;
}

CMat ClosedLoopSystem::characteristic_derivative(cd s) const {
    const Eigen::Index ncl = order();
    CMat m = CMat::Identity(ncl, ncl);
    for (std::size_t i = 1; i < A.size(); ++i) {
        const double tau = delays[i - 1];
        if (tau != 0.0) m += (tau * std::exp(-s * tau)) * A[i].cast<cd>();
    }
    return m;
}

ClosedLoopSystem assemble_closed_loop(const TimeDelayPlant& plant, const ControllerRealization& controller) {
    plant.validate();
    controller.validate_against(plant);

    const Eigen::Index n = plant.n();
    const Eigen::Index nk = controller.order();
    const Eigen::Index ncl = n + nk;
    const auto& AK = controller.AK;
    const auto& BK = controller.BK;
    const auto& CK = controller.CK;

    ClosedLoopSystem cl;
    cl.A.reserve(plant.m() + 3);

    Mat a0 = Mat::Zero(ncl, ncl);
    a0.topLeftCorner(n, n) = plant.A[0];
    a0.bottomLeftCorner(nk, n) = BK * plant.C2;
    a0.bottomRightCorner(nk, nk) = AK;
    cl.A.push_back(std::move(a0));

    for (std::size_t i = 1; i < plant.A.size(); ++i) {
        Mat ai = Mat::Zero(ncl, ncl);
        ai.topLeftCorner(n, n) = plant.A[i];
        cl.A.push_back(std::move(ai));
        cl.delays.push_back(plant.state_delays[i - 1]);
    }

    Mat ain = Mat::Zero(ncl, ncl);
    ain.topRightCorner(n, nk) = plant.B2 * CK;
    cl.A.push_back(std::move(ain));
    cl.delays.push_back(plant.input_delay);

    Mat afb = Mat::Zero(ncl, ncl);
    afb.bottomRightCorner(nk, nk) = BK * plant.D22 * CK;
    cl.A.push_back(std::move(afb));
    cl.delays.push_back(plant.feedthrough_delay);

    cl.B.resize(ncl, plant.nw());
    cl.B.topRows(n) = plant.B1;
    cl.B.bottomRows(nk) = BK * plant.D21;

    cl.C.resize(plant.nz(), ncl);
    cl.C.leftCols(n) = plant.C1;
    cl.C.rightCols(nk) = plant.D12 * CK;

    cl.D = plant.D11;
    return cl;
}

CMat evaluate_transfer(const ClosedLoopSystem& cl, double omega) {
    if (std::isinf(omega)) return cl.D.cast<cd>();
    const CMat m = cl.characteristic_matrix(cd(0.0, omega));
    if (m.rows() == 0) return cl.D.cast<cd>();
    Eigen::PartialPivLU<CMat> lu(m);
    if (!(lu.rcond() > 1e-14)) {
        throw SingularResolventError("frequency response undefined: characteristic root on the imaginary axis at omega = " +
                                     std::to_string(omega));
    }
    return cl.C.cast<cd>() * lu.solve(cl.B.cast<cd>()) + cl.D.cast<cd>();
}

SingularTriple max_singular_value(const ClosedLoopSystem& cl, double omega) {
    const CMat t = evaluate_transfer(cl, omega);
    SingularTriple out;
    if (t.size() == 0) return out;
    Eigen::JacobiSVD<CMat> svd(t, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& s = svd.singularValues();
    out.sigma = s(0);
    out.w_l = svd.matrixU().col(0);
    out.w_r = svd.matrixV().col(0);
    out.multiple = s.size() > 1 && s(0) - s(1) < 1e-8 * s(0);
    return out;
}

double feedthrough_norm(const ClosedLoopSystem& cl) {
    if (cl.D.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(cl.D).singularValues()(0);
}

}  // namespace dhinf
