#include "dhinf/optim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <random>
#include <stdexcept>
#include <thread>

#include "dhinf/errors.hpp"

namespace dhinf {

std::string to_string(OptimizerStatus status) {
    switch (status) {
        case OptimizerStatus::gradient_small: return "gradient-small";
        case OptimizerStatus::line_search_fail: return "line-search-fail";
        case OptimizerStatus::max_iter: return "max-iter";
        case OptimizerStatus::sampling_converged: return "sampling-converged";
        case OptimizerStatus::target_reached: return "target-reached";
    }
    return "unknown";
}

std::string to_string(Phase phase) { return phase == Phase::bfgs ? "bfgs" : "sampling"; }

DecisionVector pack(const ControllerRealization& c) {
    const Eigen::Index nk = c.AK.rows();
    DecisionVector x(c.AK.size() + c.BK.size() + c.CK.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < nk; ++i)
        for (Eigen::Index j = 0; j < c.AK.cols(); ++j) x(k++) = c.AK(i, j);
    for (Eigen::Index i = 0; i < c.BK.rows(); ++i)
        for (Eigen::Index j = 0; j < c.BK.cols(); ++j) x(k++) = c.BK(i, j);
    for (Eigen::Index i = 0; i < c.CK.rows(); ++i)
        for (Eigen::Index j = 0; j < c.CK.cols(); ++j) x(k++) = c.CK(i, j);
    return x;
}

ControllerRealization unpack(const DecisionVector& x, Eigen::Index nK, Eigen::Index ny, Eigen::Index nu) {
    const Eigen::Index expected = nK * nK + nK * ny + nu * nK;
    if (x.size() != expected) {
        throw std::invalid_argument("decision vector has length " + std::to_string(x.size()) + ", expected " +
                                    std::to_string(expected));
    }
    ControllerRealization c{Mat(nK, nK), Mat(nK, ny), Mat(nu, nK)};
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < nK; ++i)
        for (Eigen::Index j = 0; j < nK; ++j) c.AK(i, j) = x(k++);
    for (Eigen::Index i = 0; i < nK; ++i)
        for (Eigen::Index j = 0; j < ny; ++j) c.BK(i, j) = x(k++);
    for (Eigen::Index i = 0; i < nu; ++i)
        for (Eigen::Index j = 0; j < nK; ++j) c.CK(i, j) = x(k++);
    return c;
}

namespace {

Vec pack_gradient(const ControllerGradient& g) { return pack(ControllerRealization{g.dAK, g.dBK, g.dCK}); }

// Euclidean projection onto the probability simplex.
Vec project_simplex(const Vec& v) {
    Vec u = v;
    std::sort(u.data(), u.data() + u.size(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        cumulative += u(i);
        const double t = (cumulative - 1.0) / static_cast<double>(i + 1);
        if (u(i) - t > 0.0) theta = t;
    }
    return (v.array() - theta).cwiseMax(0.0).matrix();
}

// Smallest-norm element of the convex hull of the columns of g.
Vec min_norm_convex(const Mat& g) {
    const Eigen::Index k = g.cols();
    const Mat q = g.transpose() * g;
    const double lipschitz = std::max(q.trace(), 1e-300);
    Vec lambda = Vec::Constant(k, 1.0 / static_cast<double>(k));
    for (int it = 0; it < 2000; ++it) {
        const Vec next = project_simplex(lambda - (q * lambda) / lipschitz);
        const double change = (next - lambda).lpNorm<Eigen::Infinity>();
        lambda = next;
        if (change < 1e-14) break;
    }
    return g * lambda;
}

}  // namespace

OptimizationResult minimize_nonsmooth(const Objective& objective, const Vec& x0, const OptimizerOptions& opts) {
    OptimizationResult out;
    auto& trace = out.trace;
    auto eval = [&](const Vec& x) {
        ++trace.evaluations;
        ObjectiveValue v = objective(x);
        if (!std::isfinite(v.value) || v.gradient.size() != x.size() || !v.gradient.allFinite()) {
            v.value = std::numeric_limits<double>::infinity();
        }
        return v;
    };

    const Eigen::Index n = x0.size();
    ObjectiveValue cur = eval(x0);
    if (!std::isfinite(cur.value)) throw std::invalid_argument("minimize_nonsmooth: objective is not finite at x0");
    Vec x = x0;
    Mat hinv = Mat::Identity(n, n);
    bool first_update = true;
    int stall = 0;
    bool go_sampling = false;

    auto done = [&](OptimizerStatus s) {
        trace.status = s;
        out.x = x;
        out.value = cur.value;
        return out;
    };

    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        if (cur.value < opts.target) return done(OptimizerStatus::target_reached);
        if (cur.gradient.norm() <= opts.grad_tol) return done(OptimizerStatus::gradient_small);

        Vec dir = -(hinv * cur.gradient);
        double slope = cur.gradient.dot(dir);
        if (!(slope < 0.0)) {
            hinv.setIdentity();
            dir = -cur.gradient;
            slope = cur.gradient.dot(dir);
        }

        // Weak Wolfe bracketing/bisection.
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double t = 1.0;
        bool accepted = false;
        ObjectiveValue trial;
        Vec xt;
        bool armijo = false;
        bool wolfe = false;
        for (int k = 0; k < opts.max_line_search; ++k) {
            xt = x + t * dir;
            trial = eval(xt);
            armijo = std::isfinite(trial.value) && trial.value <= cur.value + opts.armijo_c1 * t * slope &&
                     trial.value <= cur.value;
            wolfe = armijo && trial.gradient.dot(dir) >= opts.wolfe_c2 * slope;
            if (!armijo) {
                hi = t;
            } else if (wolfe) {
                accepted = true;
                break;
            } else {
                lo = t;
            }
            t = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);
        }
        if (!accepted) {
            go_sampling = true;
            trace.status = OptimizerStatus::line_search_fail;
            break;
        }

        const Vec s = xt - x;
        const Vec y = trial.gradient - cur.gradient;
        const double sy = s.dot(y);
        if (sy > 0.0) {
            if (first_update) {
                hinv *= sy / y.squaredNorm();
                first_update = false;
            }
            const double rho = 1.0 / sy;
            const Mat left = Mat::Identity(n, n) - rho * s * y.transpose();
            hinv = left * hinv * left.transpose() + rho * s * s.transpose();
        }

        const double decrease = (cur.value - trial.value) / std::max(1.0, std::abs(cur.value));
        stall = decrease <= opts.f_tol ? stall + 1 : 0;
        x = xt;
        cur = trial;
        trace.records.push_back({cur.value, cur.gradient.norm(), t, Phase::bfgs, armijo, wolfe});
        if (stall >= opts.stall_limit) {
            go_sampling = true;
            break;
        }
    }
    if (cur.value < opts.target) return done(OptimizerStatus::target_reached);
    if (cur.gradient.norm() <= opts.grad_tol) return done(OptimizerStatus::gradient_small);
    if (!go_sampling) return done(OptimizerStatus::max_iter);

    // Gradient sampling.
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const int samples = opts.sample_count > 0 ? opts.sample_count : static_cast<int>(2 * n + 1);
    const double scale = 1.0 + x0.norm();
    for (double radius : opts.sampling_radii) {
        const double eps = radius * scale;
        for (int it = 0; it < opts.max_sampling_iter; ++it) {
            std::vector<Vec> grads{cur.gradient};
            for (int k = 0; k < samples; ++k) {
                Vec u(n);
                for (Eigen::Index i = 0; i < n; ++i) u(i) = normal(rng);
                const double r = eps * std::pow(uniform(rng), 1.0 / static_cast<double>(n));
                const ObjectiveValue v = eval(x + (r / u.norm()) * u);
                if (std::isfinite(v.value)) grads.push_back(v.gradient);
            }
            Mat g(n, static_cast<Eigen::Index>(grads.size()));
            for (std::size_t k = 0; k < grads.size(); ++k) g.col(static_cast<Eigen::Index>(k)) = grads[k];
            const Vec d = min_norm_convex(g);
            const double dn2 = d.squaredNorm();
            if (std::sqrt(dn2) <= opts.sampling_tol) break;

            bool accepted = false;
            // A direction that needs a tinier step than this is not a descent
            // direction at this radius; move on to the next one.
            for (double t = 1.0; t >= 0x1p-10; t *= 0.5) {
                const Vec xt = x - t * d;
                const ObjectiveValue v = eval(xt);
                if (std::isfinite(v.value) && v.value < cur.value - opts.armijo_c1 * t * dn2) {
                    x = xt;
                    cur = v;
                    trace.records.push_back({cur.value, std::sqrt(dn2), t, Phase::sampling, true, true});
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            if (cur.value < opts.target) return done(OptimizerStatus::target_reached);
        }
    }
    return done(OptimizerStatus::sampling_converged);
}

ObjectiveValue abscissa_objective(const TimeDelayPlant& plant, const Vec& x, Eigen::Index nK,
                                  const StabilityOptions& opts) {
    ObjectiveValue out;
    out.value = std::numeric_limits<double>::infinity();
    try {
        const ControllerRealization k = unpack(x, nK, plant.ny(), plant.nu());
        const ClosedLoopSystem cl = assemble_closed_loop(plant, k);
        const StabilityReport rep = spectral_abscissa(cl, opts);
        out.gradient = pack_gradient(abscissa_gradient(plant, k, rep));
        out.value = rep.abscissa;
        out.smooth = !rep.nonsmooth;
    } catch (const std::runtime_error&) {
        out.value = std::numeric_limits<double>::infinity();
    }
    return out;
}

ObjectiveValue hinf_objective(const TimeDelayPlant& plant, const Vec& x, Eigen::Index nK, const HinfOptions& opts,
                              const StabilityOptions& stab) {
    ObjectiveValue out;
    out.value = std::numeric_limits<double>::infinity();
    try {
        const ControllerRealization k = unpack(x, nK, plant.ny(), plant.nu());
        const ClosedLoopSystem cl = assemble_closed_loop(plant, k);
        if (!(spectral_abscissa(cl, stab).abscissa < 0.0)) return out;
        HinfOptions local = opts;
        local.check_stability = false;
        const HinfResult res = hinf_norm(cl, local);
        const ClosedLoopGradient clg = hinf_gradient_closed_loop(cl, res);
        out.gradient = pack_gradient(hinf_gradient_controller(plant, k, clg));
        out.value = res.norm;
        out.smooth = clg.smooth;
    } catch (const std::runtime_error&) {
        out.value = std::numeric_limits<double>::infinity();
    }
    return out;
}

namespace {

int worker_count(int requested, int jobs) {
    int threads = requested;
    if (threads <= 0) {
        if (const char* env = std::getenv("DELAY_HINF_THREADS")) threads = std::atoi(env);
    }
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return std::clamp(threads, 1, std::max(1, jobs));
}

StartSummary run_start(const TimeDelayPlant& plant, int nK, const SynthesisOptions& opts, int index) {
    StartSummary summary;
    summary.index = index;
    std::seed_seq seq{static_cast<std::uint64_t>(opts.seed), static_cast<std::uint64_t>(index)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    const Eigen::Index dim = nK * nK + nK * plant.ny() + plant.nu() * nK;
    Vec x(dim);
    for (Eigen::Index i = 0; i < dim; ++i) x(i) = opts.init_scale * dist(rng);
    const std::uint64_t sampling_seed = rng();

    // Phase 1: push the spectral abscissa below -margin.
    auto phase1 = [&](const Vec& v) { return abscissa_objective(plant, v, nK, opts.stability); };
    ObjectiveValue a0 = phase1(x);
    if (!std::isfinite(a0.value)) {
        summary.abscissa = a0.value;
        return summary;
    }
    summary.abscissa = a0.value;
    if (!(a0.value < -opts.margin)) {
        OptimizerOptions o = opts.stabilization;
        o.target = -opts.margin;
        o.seed = sampling_seed;
        const OptimizationResult r = minimize_nonsmooth(phase1, x, o);
        summary.stabilization = r.trace;
        x = r.x;
        summary.abscissa = r.value;
    }
    summary.stabilized = summary.abscissa < -opts.margin;
    summary.controller = unpack(x, nK, plant.ny(), plant.nu());
    if (!summary.stabilized) return summary;

    // Phase 2: H-infinity norm, warm-started from the previous evaluation.
    HinfOptions warm = opts.hinf;
    auto phase2 = [&](const Vec& v) {
        ObjectiveValue val;
        val.value = std::numeric_limits<double>::infinity();
        try {
            const ControllerRealization k = unpack(v, nK, plant.ny(), plant.nu());
            const ClosedLoopSystem cl = assemble_closed_loop(plant, k);
            if (!(spectral_abscissa(cl, opts.stability).abscissa < 0.0)) return val;
            HinfOptions local = warm;
            local.check_stability = false;
            local.refine = false;
            const HinfResult res = hinf_norm(cl, local);
            const ClosedLoopGradient clg = hinf_gradient_closed_loop(cl, res);
            val.gradient = pack_gradient(hinf_gradient_controller(plant, k, clg));
            val.value = res.norm;
            val.smooth = clg.smooth;
            warm.seed_frequencies.clear();
            for (const auto& p : res.peaks) {
                if (std::isfinite(p.omega)) warm.seed_frequencies.push_back(p.omega);
            }
        } catch (const std::runtime_error&) {
            val.value = std::numeric_limits<double>::infinity();
        }
        return val;
    };
    OptimizerOptions o = opts.performance;
    o.seed = sampling_seed + 1;
    try {
        const OptimizationResult r = minimize_nonsmooth(phase2, x, o);
        summary.performance = r.trace;
        x = r.x;
    } catch (const std::invalid_argument&) {
    }
    summary.controller = unpack(x, nK, plant.ny(), plant.nu());
    // Score the start with the fully refined norm.
    try {
        summary.norm = hinf_norm(assemble_closed_loop(plant, summary.controller), opts.hinf).norm;
    } catch (const std::runtime_error&) {
        summary.norm = std::numeric_limits<double>::infinity();
    }
    return summary;
}

}  // namespace

SynthesisResult synthesize(const TimeDelayPlant& plant, int nK, const SynthesisOptions& opts) {
    plant.validate();
    if (nK < 1) throw std::invalid_argument("order must be ≥ 1");
    if (opts.starts < 1) throw std::invalid_argument("need at least one start");

    SynthesisResult result;
    result.starts.resize(static_cast<std::size_t>(opts.starts));
    std::atomic<int> next{0};
    auto worker = [&]() {
        for (int i = next++; i < opts.starts; i = next++) {
            result.starts[static_cast<std::size_t>(i)] = run_start(plant, nK, opts, i);
        }
    };
    const int threads = worker_count(opts.threads, opts.starts);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    result.starts_tried = opts.starts;

    double best_abscissa = std::numeric_limits<double>::infinity();
    for (const auto& s : result.starts) {
        best_abscissa = std::min(best_abscissa, s.abscissa);
        if (!s.stabilized || !std::isfinite(s.norm)) continue;
        if (result.best_start < 0 || s.norm < result.starts[static_cast<std::size_t>(result.best_start)].norm) {
            result.best_start = s.index;
        }
    }
    if (result.best_start < 0) {
        throw SynthesisError("no stabilizing controller found for order " + std::to_string(nK) +
                                 " (best abscissa " + std::to_string(best_abscissa) + ")",
                             best_abscissa);
    }
    result.controller = result.starts[static_cast<std::size_t>(result.best_start)].controller;
    const ClosedLoopSystem cl = assemble_closed_loop(plant, result.controller);
    result.abscissa = spectral_abscissa(cl, opts.stability);
    HinfOptions certify = opts.hinf;
    certify.check_stability = true;
    result.norm = hinf_norm(cl, certify);
    return result;
}

}  // namespace dhinf
