#pragma once

#include <vector>

#include "dhinf/model.hpp"
#include "dhinf/types.hpp"

namespace dhinf {

struct ControllerGradient;

/// M(lambda) = lambda I - A_cl,0 - sum A_cl,i e^{-lambda tau_i} and M'(lambda).
class CharacteristicResidual {
public:
    explicit CharacteristicResidual(const ClosedLoopSystem& cl) : cl_(cl) {}

    CMat value(cd lambda) const { return cl_.characteristic_matrix(lambda); }
    CMat derivative(cd lambda) const { return cl_.characteristic_derivative(lambda); }
    const ClosedLoopSystem& system() const { return cl_; }

private:
    const ClosedLoopSystem& cl_;
};

struct CharacteristicRoot {
    cd lambda;
    CVec x;  // right nullvector, unit norm
    CVec y;  // left nullvector, unit norm
    int iterations = 0;
    bool converged = false;
};

struct StabilityReport {
    double abscissa = 0.0;
    /// Corrected roots with Im >= 0, rightmost first.
    std::vector<CharacteristicRoot> rightmost_roots;
    int N_used = 0;
    bool converged = false;
    /// Two distinct roots share the rightmost real part (within 1e-8).
    bool nonsmooth = false;
};

struct StabilityOptions {
    int N_start = 10;
    int N_max = 160;
    double abs_tol = 1e-8;
    int newton_max_iter = 50;
};

/// Newton iteration on the bordered system {M(lambda) x = 0, c^* x = 1}.
/// On divergence the root keeps lambda0 and converged = false.
CharacteristicRoot newton_correct_root(const CharacteristicResidual& res, cd lambda0, int max_iter = 50);

/// Rightmost characteristic roots from a Chebyshev collocation of the DDE
/// generator on [-tau_max, 0], Newton-corrected, with N doubled until the
/// abscissa settles. Throws ConvergenceError at the N cap.
StabilityReport spectral_abscissa(const ClosedLoopSystem& cl, const StabilityOptions& opts = {});

/// Collocation matrix of the solution-operator generator (size (2N+1) n_cl).
Mat delay_generator_matrix(const ClosedLoopSystem& cl, int N);

/// Closed-loop sensitivities of Re(lambda) for the rightmost root of `report`:
/// one matrix per A_cl,i.
std::vector<Mat> abscissa_gradient_closed_loop(const ClosedLoopSystem& cl, const StabilityReport& report);

/// d alpha / d(AK, BK, CK). Throws std::runtime_error at a defective root.
ControllerGradient abscissa_gradient(const TimeDelayPlant& plant, const ControllerRealization& controller,
                                     const StabilityReport& report);

}  // namespace dhinf
