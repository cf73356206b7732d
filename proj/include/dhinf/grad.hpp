#pragma once

#include <vector>

#include "dhinf/hinf.hpp"
#include "dhinf/model.hpp"

namespace dhinf {

/// df/d(A_cl,i), df/dB_cl, df/dC_cl, df/dD_cl at a peak of sigma_1.
struct ClosedLoopGradient {
    std::vector<Mat> dA;
    Mat dB, dC, dD;
    double omega = 0.0;
    double xi = 0.0;
    CVec w_l, w_r;
    /// False at tied peaks or a repeated top singular value; the blocks are
    /// then the gradient of one maximizer.
    bool smooth = true;
};

struct ControllerGradient {
    Mat dAK, dBK, dCK;
};

ClosedLoopGradient hinf_gradient_closed_loop(const ClosedLoopSystem& cl, const HinfResult& result);

/// Maps closed-loop sensitivities to (AK, BK, CK) through the block selectors
/// of assemble_closed_loop. `dA` must follow the assembled term order.
ControllerGradient controller_chain_rule(const TimeDelayPlant& plant, const ControllerRealization& controller,
                                         const std::vector<Mat>& dA, const Mat& dB, const Mat& dC);

ControllerGradient hinf_gradient_controller(const TimeDelayPlant& plant, const ControllerRealization& controller,
                                            const ClosedLoopGradient& clg);

}  // namespace dhinf
