#include "dhinf/hinf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dhinf/errors.hpp"
#include "dhinf/linalg.hpp"
#include "dhinf/stability.hpp"

namespace dhinf {

namespace {

constexpr cd kJ{0.0, 1.0};

bool same_frequency(double a, double b) { return std::abs(a - b) <= 1e-6 * (1.0 + std::max(a, b)); }

double sigma_max_at(const ClosedLoopSystem& cl, double omega) {
    try {
        return max_singular_value(cl, std::abs(omega)).sigma;
    } catch (const SingularResolventError&) {
        return std::numeric_limits<double>::infinity();
    }
}

// I + sum tau_i A_cl,i e^{-j w tau_i}; the upper-left block of H_xi'(jw).
CMat delay_weighted_identity(const ClosedLoopSystem& cl, double omega) {
    const Eigen::Index n = cl.order();
    CMat p = CMat::Identity(n, n);
    for (std::size_t i = 1; i < cl.A.size(); ++i) {
        const double tau = cl.delays[i - 1];
        if (tau != 0.0) p += (tau * std::exp(-kJ * omega * tau)) * cl.A[i].cast<cd>();
    }
    return p;
}

// d/dw of delay_weighted_identity.
CMat delay_weighted_identity_dw(const ClosedLoopSystem& cl, double omega) {
    const Eigen::Index n = cl.order();
    CMat p = CMat::Zero(n, n);
    for (std::size_t i = 1; i < cl.A.size(); ++i) {
        const double tau = cl.delays[i - 1];
        if (tau != 0.0) p += (-kJ * tau * tau * std::exp(-kJ * omega * tau)) * cl.A[i].cast<cd>();
    }
    return p;
}

// Unknowns packed as [Re x; Im x; omega; xi], x = [u; v] in C^{2 n_cl}.
struct CorrectorSystem {
    const ClosedLoopSystem& cl;
    Eigen::Index pin;

    Eigen::Index d() const { return 2 * cl.order(); }

    static CVec unpack_x(const Vec& p, Eigen::Index d) {
        CVec x(d);
        for (Eigen::Index j = 0; j < d; ++j) x(j) = cd(p(j), p(d + j));
        return x;
    }

    // Returns false when the level is singular.
    bool evaluate(const Vec& p, Vec& r, Mat* jac, double* scale = nullptr) const {
        const Eigen::Index dd = d();
        const Eigen::Index n = cl.order();
        const double omega = p(2 * dd);
        const double xi = p(2 * dd + 1);
        if (!(xi > 0.0) || !std::isfinite(omega)) return false;
        HamiltonianTriple triple;
        try {
            triple = build_hamiltonian_triple(cl, xi);
        } catch (const LevelSingularError&) {
            return false;
        }
        const NepResidual res(triple);
        const CVec x = unpack_x(p, dd);
        const CMat h = res.value(kJ * omega);
        const CVec hx = h * x;
        const CVec u = x.head(n);
        const CVec v = x.tail(n);
        const CMat pw = delay_weighted_identity(cl, omega);
        const cd z = v.dot(pw * u);  // v^* P u

        r.resize(2 * dd + 3);
        r.head(dd) = hx.real();
        r.segment(dd, dd) = hx.imag();
        r(2 * dd) = x.squaredNorm() - 1.0;
        r(2 * dd + 1) = x(pin).imag();
        r(2 * dd + 2) = z.imag();
        if (scale) *scale = std::max(1.0, triple.M0.norm());

        if (jac) {
            Mat& J = *jac;
            J.setZero(2 * dd + 3, 2 * dd + 2);
            J.block(0, 0, dd, dd) = h.real();
            J.block(dd, 0, dd, dd) = h.imag();
            J.block(0, dd, dd, dd) = -h.imag();
            J.block(dd, dd, dd, dd) = h.real();
            const CVec dw = kJ * (res.derivative(kJ * omega) * x);
            J.block(0, 2 * dd, dd, 1) = dw.real();
            J.block(dd, 2 * dd, dd, 1) = dw.imag();
            const CVec dxi = -(triple.dM0_dxi.cast<cd>() * x);
            J.block(0, 2 * dd + 1, dd, 1) = dxi.real();
            J.block(dd, 2 * dd + 1, dd, 1) = dxi.imag();

            J.block(2 * dd, 0, 1, dd) = 2.0 * x.real().transpose();
            J.block(2 * dd, dd, 1, dd) = 2.0 * x.imag().transpose();

            J(2 * dd + 1, dd + pin) = 1.0;

            const CVec g = pw.transpose() * v.conjugate();
            const CVec hu = pw * u;
            for (Eigen::Index b = 0; b < n; ++b) {
                J(2 * dd + 2, b) = g(b).imag();
                J(2 * dd + 2, dd + b) = g(b).real();
                J(2 * dd + 2, n + b) = hu(b).imag();
                J(2 * dd + 2, dd + n + b) = -hu(b).real();
            }
            J(2 * dd + 2, 2 * dd) = v.dot(delay_weighted_identity_dw(cl, omega) * u).imag();
        }
        return true;
    }
};

struct CorrectedPeak {
    double omega = 0.0;
    SingularTriple triple;
    int iterations = 0;
    bool newton_ok = false;
};

// Maximize w -> sigma_1(T_zw(jw)) near w0 by bracketing plus golden section.
// sigma_1 is even in w, so the search may cross zero.
double refine_peak_frequency(const ClosedLoopSystem& cl, double w0) {
    auto f = [&](double w) { return sigma_max_at(cl, w); };
    double h = 1e-3 * (1.0 + std::abs(w0));
    double b = w0;
    double fb = f(b);
    const double fp = f(b + h);
    const double fm = f(b - h);
    double lo = b - h;
    double hi = b + h;
    if (fp > fb || fm > fb) {
        const double dir = fp >= fm ? 1.0 : -1.0;
        double a = b;
        double c = b + dir * h;
        double fc = dir > 0 ? fp : fm;
        for (int guard = 0; fc > fb && std::isfinite(fc) && guard < 200; ++guard) {
            a = b;
            b = c;
            fb = fc;
            h *= 2.0;
            c = b + dir * h;
            fc = f(c);
        }
        lo = std::min(a, c);
        hi = std::max(a, c);
    }
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo);
    double x2 = lo + g * (hi - lo);
    double f1 = f(x1);
    double f2 = f(x2);
    for (int it = 0; it < 300 && hi - lo > 1e-13 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    return std::abs(f1 >= f2 ? x1 : x2);
}

bool is_local_peak(const ClosedLoopSystem& cl, double omega, double sigma) {
    const double delta = 1e-4 * (1.0 + omega);
    return sigma_max_at(cl, omega + delta) <= sigma + 1e-10 && sigma_max_at(cl, omega - delta) <= sigma + 1e-10;
}

CorrectedPeak fallback_peak(const ClosedLoopSystem& cl, double w0, int iterations) {
    CorrectedPeak out;
    out.omega = refine_peak_frequency(cl, w0);
    out.triple = max_singular_value(cl, out.omega);
    out.iterations = iterations;
    out.newton_ok = false;
    return out;
}

CorrectedPeak correct_one(const ClosedLoopSystem& cl, double xi0, double w0, double tol) {
    const Eigen::Index n = cl.order();
    const Eigen::Index d = 2 * n;
    if (n == 0) return fallback_peak(cl, w0, 0);

    HamiltonianTriple start;
    try {
        start = build_hamiltonian_triple(cl, xi0);
    } catch (const LevelSingularError&) {
        return fallback_peak(cl, w0, 0);
    }
    CVec x = linalg::smallest_singular(NepResidual(start).value(kJ * w0)).right;
    x.normalize();
    Eigen::Index pin = 0;
    x.head(n).cwiseAbs().maxCoeff(&pin);
    if (std::abs(x(pin)) > 0.0) x *= std::abs(x(pin)) / x(pin);

    Vec p(2 * d + 2);
    p.head(d) = x.real();
    p.segment(d, d) = x.imag();
    p(2 * d) = w0;
    p(2 * d + 1) = xi0;

    const CorrectorSystem sys{cl, pin};
    Vec r;
    Mat J;
    double scale = 1.0;
    int it = 0;
    bool ok = false;
    if (!sys.evaluate(p, r, &J, &scale)) return fallback_peak(cl, w0, 0);
    for (; it <= 50; ++it) {
        if (r.norm() <= tol * scale) {
            ok = true;
            break;
        }
        if (it == 50) break;
        const Vec step = J.colPivHouseholderQr().solve(-r);
        double t = 1.0;
        bool accepted = false;
        Vec trial_r;
        for (int k = 0; k < 12; ++k, t *= 0.5) {
            const Vec trial = p + t * step;
            if (sys.evaluate(trial, trial_r, nullptr) && trial_r.norm() < r.norm()) {
                p = trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        sys.evaluate(p, r, &J, &scale);
    }
    if (!ok) return fallback_peak(cl, w0, it);

    CorrectedPeak out;
    out.omega = std::abs(p(2 * d));
    out.iterations = it;
    out.newton_ok = true;
    try {
        out.triple = max_singular_value(cl, out.omega);
    } catch (const SingularResolventError&) {
        return fallback_peak(cl, w0, it);
    }
    // The coalescence conditions also hold at local minima and at peaks of
    // lower singular values; only accept a local maximum of sigma_1.
    const double xi = p(2 * d + 1);
    if (std::abs(out.triple.sigma - xi) > 1e-6 * xi || !is_local_peak(cl, out.omega, out.triple.sigma)) {
        return fallback_peak(cl, w0, it);
    }
    return out;
}

}  // namespace

HamiltonianTriple build_hamiltonian_triple(const ClosedLoopSystem& cl, double xi) {
    if (!(xi > 0.0)) throw std::invalid_argument("hamiltonian: level must be positive");
    const Eigen::Index n = cl.order();
    const Eigen::Index nw = cl.B.cols();
    const Eigen::Index nz = cl.C.rows();
    const Mat& A = cl.A[0];
    const Mat& B = cl.B;
    const Mat& C = cl.C;
    const Mat& D = cl.D;
    const double xi2 = xi * xi;

    HamiltonianTriple t;
    t.xi = xi;
    t.delays = cl.delays;
    t.Dxi = D.transpose() * D - xi2 * Mat::Identity(nw, nw);

    if (nw > 0) {
        const Vec ev = Eigen::SelfAdjointEigenSolver<Mat>(t.Dxi, Eigen::EigenvaluesOnly).eigenvalues();
        if (ev.cwiseAbs().minCoeff() <= 1e-10 * std::max(1.0, xi2)) {
            throw LevelSingularError("level hits feedthrough singular value (xi = " + std::to_string(xi) +
                                     "); perturb xi");
        }
    }
    const Mat dinv = t.Dxi.inverse();
    // D D^T - xi^2 I shares the nonzero spectrum of D_xi, so it is invertible too.
    const Mat finv = (D * D.transpose() - xi2 * Mat::Identity(nz, nz)).inverse();

    t.M0.resize(2 * n, 2 * n);
    t.M0.topLeftCorner(n, n) = A - B * dinv * D.transpose() * C;
    t.M0.topRightCorner(n, n) = -B * dinv * B.transpose();
    t.M0.bottomLeftCorner(n, n) = xi2 * C.transpose() * finv * C;
    t.M0.bottomRightCorner(n, n) = -A.transpose() + C.transpose() * D * dinv * B.transpose();

    const Mat ddinv = 2.0 * xi * dinv * dinv;
    const Mat dfinv = 2.0 * xi * finv * finv;
    t.dM0_dxi.resize(2 * n, 2 * n);
    t.dM0_dxi.topLeftCorner(n, n) = -B * ddinv * D.transpose() * C;
    t.dM0_dxi.topRightCorner(n, n) = -B * ddinv * B.transpose();
    t.dM0_dxi.bottomLeftCorner(n, n) = 2.0 * xi * C.transpose() * finv * C + xi2 * C.transpose() * dfinv * C;
    t.dM0_dxi.bottomRightCorner(n, n) = C.transpose() * D * ddinv * B.transpose();

    for (std::size_t i = 1; i < cl.A.size(); ++i) {
        Mat mp = Mat::Zero(2 * n, 2 * n);
        mp.topLeftCorner(n, n) = cl.A[i];
        Mat mm = Mat::Zero(2 * n, 2 * n);
        mm.bottomRightCorner(n, n) = -cl.A[i].transpose();
        t.Mi.push_back(std::move(mp));
        t.Mmi.push_back(std::move(mm));
    }
    return t;
}

CMat NepResidual::value(cd lambda) const {
    CMat h = lambda * CMat::Identity(t_.dim(), t_.dim()) - t_.M0.cast<cd>();
    for (std::size_t i = 0; i < t_.Mi.size(); ++i) {
        const double tau = t_.delays[i];
        h -= std::exp(-lambda * tau) * t_.Mi[i].cast<cd>() + std::exp(lambda * tau) * t_.Mmi[i].cast<cd>();
    }
    return h;
}

CMat NepResidual::derivative(cd lambda) const {
    CMat h = CMat::Identity(t_.dim(), t_.dim());
    for (std::size_t i = 0; i < t_.Mi.size(); ++i) {
        const double tau = t_.delays[i];
        if (tau == 0.0) continue;
        h += (tau * std::exp(-lambda * tau)) * t_.Mi[i].cast<cd>() - (tau * std::exp(lambda * tau)) * t_.Mmi[i].cast<cd>();
    }
    return h;
}

Mat level_set_operator(const HamiltonianTriple& triple, int N) {
    const Eigen::Index d = triple.dim();
    const double tau_max = triple.delays.empty() ? 0.0 : *std::max_element(triple.delays.begin(), triple.delays.end());
    if (tau_max == 0.0) {
        Mat h = triple.M0;
        for (std::size_t i = 0; i < triple.Mi.size(); ++i) h += triple.Mi[i] + triple.Mmi[i];
        return h;
    }
    const DifferentiationMatrix dm = differentiation_matrix(build_mesh(N, tau_max));
    const Eigen::Index nodes = dm.d.rows();
    Mat row = Mat::Zero(d, nodes * d);
    row.middleCols(N * d, d) = triple.M0;
    for (std::size_t i = 0; i < triple.Mi.size(); ++i) {
        const double tau = triple.delays[i];
        const Eigen::RowVectorXd lm = dm.lagrange_row(-tau);
        const Eigen::RowVectorXd lp = dm.lagrange_row(tau);
        for (Eigen::Index k = 0; k < nodes; ++k) {
            if (lm(k) != 0.0) row.middleCols(k * d, d) += lm(k) * triple.Mi[i];
            if (lp(k) != 0.0) row.middleCols(k * d, d) += lp(k) * triple.Mmi[i];
        }
    }
    return discretize_block_operator(dm, d, N, row);
}

std::vector<double> imaginary_axis_crossings(const ClosedLoopSystem& cl, double xi, int N, double axis_tol) {
    const CVec ev = linalg::eigenvalues(level_set_operator(build_hamiltonian_triple(cl, xi), N));
    std::vector<double> out;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const cd lambda = ev(i);
        if (lambda.imag() < 0.0) continue;
        if (std::abs(lambda.real()) <= axis_tol * (1.0 + std::abs(lambda))) out.push_back(lambda.imag());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) <= 1e-10 * (1.0 + b); }),
              out.end());
    return out;
}

namespace {

std::vector<double> seed_grid(const ClosedLoopSystem& cl) {
    double scale = 1.0;
    for (const auto& a : cl.A) scale += a.norm();
    std::vector<double> grid{0.0};
    constexpr int kPoints = 60;
    const double lo = std::log10(1e-3 * scale);
    const double hi = std::log10(1e2 * scale);
    for (int k = 0; k < kPoints; ++k) grid.push_back(std::pow(10.0, lo + (hi - lo) * k / (kPoints - 1)));
    return grid;
}

struct Sample {
    double omega;
    double sigma;
};

}  // namespace

Prediction predict_norm(const ClosedLoopSystem& cl, int N, const HinfOptions& opts) {
    cl.validate();
    std::vector<Sample> pool;
    auto sample = [&](double w) {
        const double s = sigma_max_at(cl, w);
        if (std::isfinite(s)) pool.push_back({std::abs(w), s});
        return s;
    };

    std::vector<double> seeds = seed_grid(cl);
    seeds.insert(seeds.end(), opts.seed_frequencies.begin(), opts.seed_frequencies.end());
    double xi = 0.0;
    for (double w : seeds) {
        if (!std::isfinite(w)) continue;
        xi = std::max(xi, sample(w));
    }
    xi = std::max({xi, opts.lower_bound, feedthrough_norm(cl)});

    Prediction pred;
    if (xi == 0.0) {
        pred.candidate_freqs = {0.0};
        return pred;
    }
    if (cl.order() > 0) {
        for (int it = 0; it < 100; ++it) {
            double level = xi * (1.0 + 2.0 * opts.eps_level);
            std::vector<double> crossings;
            bool built = false;
            for (int attempt = 0; attempt < 5 && !built; ++attempt) {
                try {
                    crossings = imaginary_axis_crossings(cl, level, N, opts.axis_tol);
                    built = true;
                } catch (const LevelSingularError&) {
                    level *= 1.0 + 1e-7;
                }
            }
            ++pred.iterations;
            if (!built || crossings.empty()) break;

            std::vector<double> points{0.0};
            for (std::size_t k = 0; k + 1 < crossings.size(); ++k) points.push_back(0.5 * (crossings[k] + crossings[k + 1]));
            if (crossings.size() == 1) points.push_back(crossings.front());
            double best = 0.0;
            for (double w : points) best = std::max(best, sample(w));
            if (!(best > level)) break;
            const double previous = xi;
            xi = best;
            if (xi - previous < opts.eps_level * previous) break;
        }
    }
    pred.xi = xi;

    // Every peak above xi (1 - 2 eps) owns an interval between consecutive
    // crossings at that level; its midpoint is a candidate.
    if (cl.order() > 0) {
        const double floor_level = xi * (1.0 - 2.0 * opts.eps_level);
        try {
            const auto crossings = imaginary_axis_crossings(cl, floor_level, N, opts.axis_tol);
            sample(0.0);
            for (std::size_t k = 0; k + 1 < crossings.size(); ++k) sample(0.5 * (crossings[k] + crossings[k + 1]));
            for (double w : crossings) sample(w);
        } catch (const LevelSingularError&) {
        }
    }

    // Local maxima of the sampled curve, ranked by sigma; the corrector
    // decides between them.
    std::sort(pool.begin(), pool.end(), [](const Sample& a, const Sample& b) { return a.omega < b.omega; });
    std::vector<Sample> peaks;
    for (std::size_t k = 0; k < pool.size(); ++k) {
        const bool left = k == 0 || pool[k - 1].sigma <= pool[k].sigma;
        const bool right = k + 1 == pool.size() || pool[k + 1].sigma <= pool[k].sigma;
        if (left && right) peaks.push_back(pool[k]);
    }
    std::sort(peaks.begin(), peaks.end(), [](const Sample& a, const Sample& b) {
        return a.sigma != b.sigma ? a.sigma > b.sigma : a.omega < b.omega;
    });
    constexpr std::size_t kMaxCandidates = 6;
    for (const auto& s : peaks) {
        if (pred.candidate_freqs.size() >= kMaxCandidates) break;
        if (s.sigma < 0.5 * xi) break;
        const bool dup = std::any_of(pred.candidate_freqs.begin(), pred.candidate_freqs.end(),
                                     [&](double w) { return same_frequency(w, s.omega); });
        if (!dup) pred.candidate_freqs.push_back(s.omega);
    }
    if (pred.candidate_freqs.empty()) pred.candidate_freqs.push_back(0.0);
    return pred;
}

HinfResult correct_peaks(const ClosedLoopSystem& cl, double xi0, const std::vector<double>& freqs, double tol) {
    cl.validate();
    std::vector<CorrectedPeak> found;
    HinfResult result;
    result.converged = true;
    for (double w0 : freqs) {
        CorrectedPeak peak;
        if (std::isinf(w0)) {
            peak.omega = w0;
            peak.triple = max_singular_value(cl, w0);
            peak.newton_ok = true;
        } else {
            const double s0 = sigma_max_at(cl, w0);
            const double start = std::isfinite(s0) && std::abs(s0 - xi0) > 0.05 * xi0 ? s0 : xi0;
            peak = correct_one(cl, start, w0, tol);
        }
        result.corrector_iterations += peak.iterations;
        const auto dup = std::find_if(found.begin(), found.end(),
                                      [&](const CorrectedPeak& q) { return same_frequency(q.omega, peak.omega); });
        if (dup == found.end()) {
            found.push_back(peak);
        } else if (peak.triple.sigma > dup->triple.sigma) {
            *dup = peak;
        }
    }
    // sup approached as w -> inf (a tie means the corrector ran off towards it)
    const double dnorm = feedthrough_norm(cl);
    double best = 0.0;
    for (const auto& p : found) best = std::max(best, p.triple.sigma);
    if (dnorm >= best * (1.0 - 1e-12)) {
        CorrectedPeak inf_peak;
        inf_peak.omega = std::numeric_limits<double>::infinity();
        inf_peak.triple = max_singular_value(cl, inf_peak.omega);
        inf_peak.newton_ok = true;
        found.push_back(inf_peak);
        best = std::max(best, dnorm);
    }
    result.norm = best;
    for (const auto& p : found) {
        if (p.triple.sigma >= best * (1.0 - 1e-6)) {
            result.peaks.push_back({p.omega, p.triple});
            result.converged = result.converged && p.newton_ok;
        }
    }
    std::sort(result.peaks.begin(), result.peaks.end(),
              [](const HinfPeak& a, const HinfPeak& b) { return a.omega < b.omega; });
    return result;
}

HinfResult hinf_norm(const ClosedLoopSystem& cl, const HinfOptions& opts) {
    cl.validate();
    if (opts.check_stability) {
        const StabilityReport rep = spectral_abscissa(cl);
        if (!(rep.abscissa < -opts.stability_margin)) {
            throw UnstableSystemError("H-infinity norm undefined: spectral abscissa ≥ 0 (alpha = " +
                                          std::to_string(rep.abscissa) + ")",
                                      rep.abscissa);
        }
    }
    HinfOptions local = opts;
    HinfResult prev;
    int prev_n = 0;
    bool have_prev = false;
    for (int N = std::max(1, opts.N_start); N <= opts.N_max; N *= 2) {
        if (have_prev) {
            local.lower_bound = std::max(opts.lower_bound, prev.norm);
            local.seed_frequencies = opts.seed_frequencies;
            for (const auto& p : prev.peaks) local.seed_frequencies.push_back(p.omega);
        }
        const Prediction pred = predict_norm(cl, N, local);
        HinfResult res = correct_peaks(cl, pred.xi, pred.candidate_freqs, opts.corrector_tol);
        if (!opts.refine) {
            res.N_used = N;
            return res;
        }
        if (have_prev && std::abs(res.norm - prev.norm) <= opts.rel_tol * std::max(res.norm, prev.norm)) {
            HinfResult& best = res.norm >= prev.norm ? res : prev;
            best.N_used = prev_n;
            best.corrector_iterations = res.corrector_iterations + prev.corrector_iterations;
            return best;
        }
        prev = std::move(res);
        prev_n = N;
        have_prev = true;
    }
    throw ConvergenceError("H-infinity norm: discretization cap N = " + std::to_string(opts.N_max) +
                               " reached without agreement",
                           prev.norm);
}

}  // namespace dhinf
