#include "dhinf/grad.hpp"

#include <cmath>
#include <stdexcept>

#include "dhinf/errors.hpp"

namespace dhinf {

ClosedLoopGradient hinf_gradient_closed_loop(const ClosedLoopSystem& cl, const HinfResult& result) {
    if (result.peaks.empty()) throw std::invalid_argument("H-infinity gradient: result has no peak");

    const HinfPeak* peak = &result.peaks.front();
    for (const auto& p : result.peaks) {
        if (p.triple.sigma > peak->triple.sigma) peak = &p;
    }
    const Eigen::Index n = cl.order();
    const CVec& wl = peak->triple.w_l;
    const CVec& wr = peak->triple.w_r;
    const double wrwr = wr.squaredNorm();

    ClosedLoopGradient g;
    g.omega = peak->omega;
    g.xi = peak->triple.sigma;
    g.w_l = wl;
    g.w_r = wr;
    g.smooth = result.peaks.size() == 1 && !peak->triple.multiple;

    const CMat wlwr = wl * wr.adjoint();
    g.dD = wlwr.real() / wrwr;
    if (std::isinf(peak->omega)) {
        for (std::size_t i = 0; i < cl.A.size(); ++i) g.dA.push_back(Mat::Zero(n, n));
        g.dB = Mat::Zero(n, cl.B.cols());
        g.dC = Mat::Zero(cl.C.rows(), n);
        return g;
    }

    // q = M^* C^T w_l and p = M B w_r with M the resolvent, so that
    // M^* C^T w_l w_r^* B^T M^* = q p^*.
    const cd s(0.0, peak->omega);
    const Eigen::PartialPivLU<CMat> lu(cl.characteristic_matrix(s));
    const Eigen::PartialPivLU<CMat> lu_adj(cl.characteristic_matrix(s).adjoint());
    const CVec p = lu.solve(cl.B.cast<cd>() * wr);
    const CVec q = lu_adj.solve(cl.C.transpose().cast<cd>() * wl);

    const CMat qp = q * p.adjoint();
    g.dA.push_back(qp.real() / wrwr);
    for (std::size_t i = 1; i < cl.A.size(); ++i) {
        const cd phase = std::exp(cd(0.0, peak->omega * cl.delays[i - 1]));
        g.dA.push_back((qp * phase).real() / wrwr);
    }
    g.dB = (q * wr.adjoint()).real() / wrwr;
    g.dC = (wl * p.adjoint()).real() / wrwr;
    return g;
}

ControllerGradient controller_chain_rule(const TimeDelayPlant& plant, const ControllerRealization& controller,
                                         const std::vector<Mat>& dA, const Mat& dB, const Mat& dC) {
    const Eigen::Index n = plant.n();
    const Eigen::Index nk = controller.order();
    const std::size_t m = plant.m();
    if (dA.size() != m + 3) throw DimensionError("closed-loop gradient needs m+3 matrices");
    for (const auto& d : dA) {
        if (d.rows() != n + nk || d.cols() != n + nk) throw DimensionError("closed-loop gradient block has wrong shape");
    }
    if (dB.rows() != n + nk || dC.cols() != n + nk) throw DimensionError("closed-loop gradient B/C block has wrong shape");

    const Mat& d0 = dA[0];
    const Mat& din = dA[m + 1];
    const Mat& dfb = dA[m + 2];

    ControllerGradient g;
    g.dAK = d0.bottomRightCorner(nk, nk);
    g.dBK = d0.bottomLeftCorner(nk, n) * plant.C2.transpose() +
            dfb.bottomRightCorner(nk, nk) * controller.CK.transpose() * plant.D22.transpose() +
            dB.bottomRows(nk) * plant.D21.transpose();
    g.dCK = plant.B2.transpose() * din.topRightCorner(n, nk) +
            plant.D22.transpose() * controller.BK.transpose() * dfb.bottomRightCorner(nk, nk) +
            plant.D12.transpose() * dC.rightCols(nk);
    return g;
}

ControllerGradient hinf_gradient_controller(const TimeDelayPlant& plant, const ControllerRealization& controller,
                                            const ClosedLoopGradient& clg) {
    return controller_chain_rule(plant, controller, clg.dA, clg.dB, clg.dC);
}

}  // namespace dhinf
