#pragma once

#include <vector>

#include "dhinf/types.hpp"

namespace dhinf {

/// Open-loop retarded plant
///
///   x'(t) = A0 x(t) + sum_i A_i x(t - tau_i) + B1 w(t) + B2 u(t - tau_in)
///   z(t)  = C1 x(t) + D11 w(t) + D12 u(t)
///   y(t)  = C2 x(t) + D21 w(t) + D22 u(t - tau_fb)
///
/// `A` holds A0 followed by one matrix per entry of `state_delays`.
struct TimeDelayPlant {
    std::vector<double> state_delays;
    double input_delay = 0.0;
    double feedthrough_delay = 0.0;
    std::vector<Mat> A;
    Mat B1, B2, C1, C2, D11, D12, D21, D22;

    Eigen::Index n() const { return A.empty() ? 0 : A.front().rows(); }
    Eigen::Index nw() const { return B1.cols(); }
    Eigen::Index nu() const { return B2.cols(); }
    Eigen::Index nz() const { return C1.rows(); }
    Eigen::Index ny() const { return C2.rows(); }
    std::size_t m() const { return state_delays.size(); }

    /// Throws DimensionError naming the first inconsistent field.
    void validate() const;
};

/// Strictly proper dynamic controller x_K' = AK x_K + BK y, u = CK x_K.
/// Order zero means u = 0.
struct ControllerRealization {
    Mat AK, BK, CK;

    Eigen::Index order() const { return AK.rows(); }
    void validate_against(const TimeDelayPlant& plant) const;
};

/// x' = A[0] x + sum_{i>=1} A[i] x(t - delays[i-1]) + B w,  z = C x + D w.
///
/// Zero delays are kept as separate terms. When built by assemble_closed_loop
/// the terms are ordered (state delays..., input delay, feedthrough delay).
struct ClosedLoopSystem {
    std::vector<Mat> A;
    std::vector<double> delays;
    Mat B, C, D;

    Eigen::Index order() const { return A.empty() ? 0 : A.front().rows(); }
    std::size_t delay_count() const { return delays.size(); }
    double tau_max() const;
    void validate() const;

    /// sI - A0 - sum A_i exp(-s tau_i)
    CMat characteristic_matrix(cd s) const;
    /// d/ds of characteristic_matrix: I + sum tau_i A_i exp(-s tau_i)
    CMat characteristic_derivative(cd s) const;
};

struct SingularTriple {
    double sigma = 0.0;
    CVec w_l;
    CVec w_r;
    /// Second singular value within 1e-8 relative of the first.
    bool multiple = false;
};

ClosedLoopSystem assemble_closed_loop(const TimeDelayPlant& plant, const ControllerRealization& controller);

/// T_zw(jw) from one LU solve of the characteristic matrix.
/// Throws SingularResolventError when jw is a characteristic root.
CMat evaluate_transfer(const ClosedLoopSystem& cl, double omega);

SingularTriple max_singular_value(const ClosedLoopSystem& cl, double omega);

/// Largest singular value of the static part D; this is sigma_1(T_zw(j inf)).
double feedthrough_norm(const ClosedLoopSystem& cl);

}  // namespace dhinf
