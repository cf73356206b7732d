#pragma once

#include <vector>

#include "dhinf/model.hpp"
#include "dhinf/spectral.hpp"
#include "dhinf/types.hpp"

namespace dhinf {

/// Delay-Hamiltonian matrices for a level xi. A frequency w >= 0 makes xi a
/// singular value of T_zw(jw) exactly when H_xi(jw) is singular, where
///
///   H_xi(s) = sI - M0 - sum_i (M_i e^{-s tau_i} + M_{-i} e^{s tau_i}).
///
/// M_i = blkdiag(A_cl,i, 0) and M_{-i} = blkdiag(0, -A_cl,i^T).
struct HamiltonianTriple {
    double xi = 0.0;
    Mat M0;
    std::vector<Mat> Mi;
    std::vector<Mat> Mmi;
    std::vector<double> delays;
    /// D^T D - xi^2 I
    Mat Dxi;
    /// dM0/dxi, used by the corrector.
    Mat dM0_dxi;

    Eigen::Index dim() const { return M0.rows(); }
};

/// Throws LevelSingularError if D_xi is within 1e-10 of singular.
HamiltonianTriple build_hamiltonian_triple(const ClosedLoopSystem& cl, double xi);

/// H_xi(lambda) and its lambda-derivative.
class NepResidual {
public:
    explicit NepResidual(HamiltonianTriple triple) : t_(std::move(triple)) {}

    CMat value(cd lambda) const;
    CMat derivative(cd lambda) const;
    const HamiltonianTriple& triple() const { return t_; }

private:
    HamiltonianTriple t_;
};

/// Collocation matrix L_xi^N on the symmetric mesh (size (2N+1)*2n_cl).
/// For a delay-free loop, the 2n_cl Hamiltonian M0 + sum(M_i + M_{-i}).
Mat level_set_operator(const HamiltonianTriple& triple, int N);

struct HinfOptions {
    int N_start = 10;
    int N_max = 160;
    double rel_tol = 1e-6;
    double eps_level = 1e-4;
    double axis_tol = 1e-6;
    double corrector_tol = 1e-10;
    bool check_stability = true;
    double stability_margin = 0.0;
    /// Initial level for the level-set loop (ignored when below the seed-grid max).
    double lower_bound = 0.0;
    /// Extra seed frequencies, e.g. peaks of a nearby system.
    std::vector<double> seed_frequencies;
    /// When false, stop after N_start: the corrected value is still an exact
    /// local peak of sigma_1, but its globality is only checked at N_start.
    bool refine = true;
};

struct Prediction {
    double xi = 0.0;
    std::vector<double> candidate_freqs;
    int iterations = 0;
};

/// Frequencies w >= 0 where L_xi^N has eigenvalues jw (|Re| <= axis_tol (1+|lambda|)).
std::vector<double> imaginary_axis_crossings(const ClosedLoopSystem& cl, double xi, int N, double axis_tol);

/// Level-set prediction of the norm from L_xi^N.
Prediction predict_norm(const ClosedLoopSystem& cl, int N, const HinfOptions& opts = {});

struct HinfPeak {
    double omega = 0.0;
    SingularTriple triple;
};

struct HinfResult {
    double norm = 0.0;
    /// Peaks within 1e-6 relative of the norm, sorted by omega.
    std::vector<HinfPeak> peaks;
    /// Discretization whose prediction was confirmed by the next doubling.
    int N_used = 0;
    int corrector_iterations = 0;
    bool converged = false;
};

/// Gauss-Newton correction of each (xi0, w) candidate on
/// {H_xi(jw) x = 0, |x| = 1, phase pin, Im v^*(I + sum tau_i A_i e^{-jw tau_i}) u = 0}.
HinfResult correct_peaks(const ClosedLoopSystem& cl, double xi0, const std::vector<double>& freqs,
                         double tol = 1e-10);

/// Predictor-corrector H-infinity norm with N doubling until two corrected
/// values agree to opts.rel_tol. Throws UnstableSystemError when the loop is
/// not exponentially stable (if opts.check_stability) and ConvergenceError at
/// the N cap.
HinfResult hinf_norm(const ClosedLoopSystem& cl, const HinfOptions& opts = {});

}  // namespace dhinf
