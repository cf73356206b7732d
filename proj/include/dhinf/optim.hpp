#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "dhinf/grad.hpp"
#include "dhinf/hinf.hpp"
#include "dhinf/model.hpp"
#include "dhinf/stability.hpp"

namespace dhinf {

/// Controller parameters packed as vec(AK) row-major, then BK, then CK.
using DecisionVector = Vec;

DecisionVector pack(const ControllerRealization& controller);
/// Throws std::invalid_argument on a length mismatch.
ControllerRealization unpack(const DecisionVector& x, Eigen::Index nK, Eigen::Index ny, Eigen::Index nu);

struct ObjectiveValue {
    double value = 0.0;
    Vec gradient;
    bool smooth = true;
};

/// Non-finite values mark infeasible points.
using Objective = std::function<ObjectiveValue(const Vec&)>;

enum class Phase { bfgs, sampling };

enum class OptimizerStatus { gradient_small, line_search_fail, max_iter, sampling_converged, target_reached };

std::string to_string(OptimizerStatus status);
std::string to_string(Phase phase);

struct TraceRecord {
    double objective = 0.0;
    double gradient_norm = 0.0;
    double step = 0.0;
    Phase phase = Phase::bfgs;
    /// Armijo and curvature conditions as evaluated for this step (BFGS only).
    bool armijo = true;
    bool wolfe = true;
};

struct OptimizerTrace {
    std::vector<TraceRecord> records;
    OptimizerStatus status = OptimizerStatus::max_iter;
    int evaluations = 0;
};

struct OptimizerOptions {
    int max_iter = 200;
    double grad_tol = 1e-8;
    /// Relative decrease below which BFGS counts an iteration as stalled.
    double f_tol = 1e-12;
    int stall_limit = 5;
    double armijo_c1 = 1e-4;
    double wolfe_c2 = 0.9;
    int max_line_search = 50;
    /// 0 means 2 * dim + 1.
    int sample_count = 0;
    std::vector<double> sampling_radii{1e-2, 1e-3, 1e-4};
    int max_sampling_iter = 20;
    double sampling_tol = 1e-8;
    /// Stop as soon as an accepted value falls below this.
    double target = -std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
};

struct OptimizationResult {
    Vec x;
    double value = 0.0;
    OptimizerTrace trace;
};

/// BFGS with a weak Wolfe line search, then gradient sampling.
/// Throws std::invalid_argument if the objective is not finite at x0.
OptimizationResult minimize_nonsmooth(const Objective& objective, const Vec& x0, const OptimizerOptions& opts = {});

struct SynthesisOptions {
    int starts = 5;
    std::uint64_t seed = 42;
    double init_scale = 1.0;
    /// Phase 1 stops once the abscissa is below -margin.
    double margin = 1e-3;
    OptimizerOptions stabilization{};
    OptimizerOptions performance{};
    HinfOptions hinf{};
    StabilityOptions stability{};
    /// Worker threads; 0 reads DELAY_HINF_THREADS, then falls back to hardware.
    int threads = 0;
};

struct StartSummary {
    int index = 0;
    bool stabilized = false;
    double abscissa = 0.0;
    double norm = std::numeric_limits<double>::infinity();
    ControllerRealization controller;
    OptimizerTrace stabilization;
    OptimizerTrace performance;
};

struct SynthesisResult {
    ControllerRealization controller;
    HinfResult norm;
    StabilityReport abscissa;
    int starts_tried = 0;
    int best_start = -1;
    std::vector<StartSummary> starts;
};

/// Two-phase fixed-order synthesis with multi-start. Throws SynthesisError
/// if no start is stabilized.
SynthesisResult synthesize(const TimeDelayPlant& plant, int nK, const SynthesisOptions& opts = {});

/// Objective pieces used by synthesize, exposed for testing.
ObjectiveValue abscissa_objective(const TimeDelayPlant& plant, const Vec& x, Eigen::Index nK,
                                  const StabilityOptions& opts = {});
ObjectiveValue hinf_objective(const TimeDelayPlant& plant, const Vec& x, Eigen::Index nK, const HinfOptions& opts = {},
                              const StabilityOptions& stab = {});

}  // namespace dhinf
