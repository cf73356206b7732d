#include "dhinf/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dhinf/errors.hpp"
#include "dhinf/grad.hpp"
#include "dhinf/linalg.hpp"
#include "dhinf/spectral.hpp"

namespace dhinf {

namespace {

bool same_root(cd a, cd b) { return std::abs(a - b) <= 1e-8 * (1.0 + std::abs(a)); }

void sort_rightmost(std::vector<CharacteristicRoot>& roots) {
    std::sort(roots.begin(), roots.end(), [](const CharacteristicRoot& a, const CharacteristicRoot& b) {
        if (a.lambda.real() != b.lambda.real()) return a.lambda.real() > b.lambda.real();
        return std::abs(a.lambda.imag()) > std::abs(b.lambda.imag());
    });
}

void finish_report(StabilityReport& rep) {
    sort_rightmost(rep.rightmost_roots);
    rep.abscissa = -std::numeric_limits<double>::infinity();
    for (const auto& r : rep.rightmost_roots) rep.abscissa = std::max(rep.abscissa, r.lambda.real());
    // Tie between distinct roots: put the one of largest |Im| first.
    rep.nonsmooth = false;
    if (rep.rightmost_roots.size() > 1) {
        const double top = rep.abscissa;
        auto tie_end = std::find_if(rep.rightmost_roots.begin(), rep.rightmost_roots.end(),
                                    [&](const CharacteristicRoot& r) { return r.lambda.real() < top - 1e-8; });
        if (std::distance(rep.rightmost_roots.begin(), tie_end) > 1) {
            rep.nonsmooth = true;
            std::stable_sort(rep.rightmost_roots.begin(), tie_end, [](const auto& a, const auto& b) {
                return std::abs(a.lambda.imag()) > std::abs(b.lambda.imag());
            });
        }
    }
}

std::vector<CharacteristicRoot> correct_window(const ClosedLoopSystem& cl, const CVec& ev, int max_iter) {
    double alpha_d = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) alpha_d = std::max(alpha_d, ev(i).real());
    const double window = alpha_d - 0.1 * (1.0 + std::abs(alpha_d));

    const CharacteristicResidual res(cl);
    std::vector<CharacteristicRoot> roots;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        const cd lambda0 = ev(i);
        if (lambda0.real() < window || lambda0.imag() < 0.0) continue;
        CharacteristicRoot root = newton_correct_root(res, lambda0, max_iter);
        if (root.converged && root.lambda.imag() < 0.0) {
            root.lambda = std::conj(root.lambda);
            root.x = root.x.conjugate().eval();
            root.y = root.y.conjugate().eval();
        }
        if (root.converged && std::abs(root.lambda.imag()) <= 1e-12 * (1.0 + std::abs(root.lambda))) {
            root.lambda = cd(root.lambda.real(), 0.0);
        }
        const auto dup = std::find_if(roots.begin(), roots.end(),
                                      [&](const CharacteristicRoot& r) { return same_root(r.lambda, root.lambda); });
        if (dup == roots.end()) {
            roots.push_back(std::move(root));
        } else if (root.converged && !dup->converged) {
            *dup = std::move(root);
        }
    }
    return roots;
}

}  // namespace

CharacteristicRoot newton_correct_root(const CharacteristicResidual& res, cd lambda0, int max_iter) {
    const Eigen::Index n = res.system().order();
    CharacteristicRoot out;
    out.lambda = lambda0;
    if (n == 0) return out;

    CVec x = linalg::smallest_singular(res.value(lambda0)).right;
    x.normalize();
    const CVec c = x;
    cd lambda = lambda0;

    bool ok = false;
    int it = 0;
    for (; it < max_iter; ++it) {
        const CMat m = res.value(lambda);
        CMat jac(n + 1, n + 1);
        jac.topLeftCorner(n, n) = m;
        jac.topRightCorner(n, 1) = res.derivative(lambda) * x;
        jac.bottomLeftCorner(1, n) = c.adjoint();
        jac(n, n) = 0.0;
        CVec rhs(n + 1);
        rhs.head(n) = -(m * x);
        rhs(n) = 1.0 - c.dot(x);
        const CVec step = jac.partialPivLu().solve(rhs);
        if (!step.allFinite()) break;
        x += step.head(n);
        lambda += step(n);
        if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag()) ||
            std::abs(lambda - lambda0) > 1e3 * (1.0 + std::abs(lambda0))) {
            break;
        }
        if (std::abs(step(n)) <= 1e-13 * (1.0 + std::abs(lambda))) {
            const CMat mc = res.value(lambda);
            if ((mc * x).norm() <= 1e-10 * std::max(1.0, mc.norm()) * x.norm()) {
                ok = true;
                ++it;
                break;
            }
        }
    }
    out.iterations = it;
    if (!ok) return out;

    out.lambda = lambda;
    out.converged = true;
    const auto sv = linalg::smallest_singular(res.value(lambda));
    out.x = x.normalized();
    out.y = sv.left.normalized();
    return out;
}

Mat delay_generator_matrix(const ClosedLoopSystem& cl, int N) {
    const Eigen::Index n = cl.order();
    const DifferentiationMatrix dm = differentiation_matrix(build_one_sided_mesh(N, cl.tau_max()));
    const Eigen::Index nodes = dm.d.rows();
    const Eigen::Index last = nodes - 1;
    Mat row = Mat::Zero(n, nodes * n);
    row.middleCols(last * n, n) = cl.A[0];
    for (std::size_t i = 1; i < cl.A.size(); ++i) {
        const Eigen::RowVectorXd l = dm.lagrange_row(-cl.delays[i - 1]);
        for (Eigen::Index k = 0; k < nodes; ++k) {
            if (l(k) != 0.0) row.middleCols(k * n, n) += l(k) * cl.A[i];
        }
    }
    return discretize_block_operator(dm, n, last, row);
}

StabilityReport spectral_abscissa(const ClosedLoopSystem& cl, const StabilityOptions& opts) {
    cl.validate();
    StabilityReport rep;
    if (cl.order() == 0) {
        rep.abscissa = -std::numeric_limits<double>::infinity();
        rep.converged = true;
        return rep;
    }
    if (cl.tau_max() == 0.0) {
        Mat sum = cl.A[0];
        for (std::size_t i = 1; i < cl.A.size(); ++i) sum += cl.A[i];
        rep.rightmost_roots = correct_window(cl, linalg::eigenvalues(sum), opts.newton_max_iter);
        rep.converged = true;
        finish_report(rep);
        return rep;
    }

    double prev = std::numeric_limits<double>::quiet_NaN();
    for (int N = std::max(1, opts.N_start); N <= opts.N_max; N *= 2) {
        StabilityReport cur;
        cur.N_used = N;
        cur.rightmost_roots = correct_window(cl, linalg::eigenvalues(delay_generator_matrix(cl, N)), opts.newton_max_iter);
        cur.converged = std::all_of(cur.rightmost_roots.begin(), cur.rightmost_roots.end(),
                                    [](const CharacteristicRoot& r) { return r.converged; });
        finish_report(cur);
        if (std::abs(cur.abscissa - prev) <= opts.abs_tol) return cur;
        prev = cur.abscissa;
        rep = std::move(cur);
    }
    throw ConvergenceError("spectral abscissa: discretization cap N = " + std::to_string(opts.N_max) +
                               " reached before the abscissa settled",
                           rep.abscissa);
}

std::vector<Mat> abscissa_gradient_closed_loop(const ClosedLoopSystem& cl, const StabilityReport& report) {
    if (report.rightmost_roots.empty()) throw std::invalid_argument("abscissa gradient: report has no roots");
    const CharacteristicRoot& root = report.rightmost_roots.front();
    const CMat md = cl.characteristic_derivative(root.lambda);
    const cd denom = root.y.dot(md * root.x);
    if (std::abs(denom) <= 1e-10 * std::max(1.0, md.norm())) {
        throw std::runtime_error("derivative undefined at defective root");
    }
    const CMat g0 = root.y.conjugate() * root.x.transpose() / denom;
    std::vector<Mat> out;
    out.push_back(g0.real());
    for (std::size_t i = 1; i < cl.A.size(); ++i) {
        out.push_back((g0 * std::exp(-root.lambda * cl.delays[i - 1])).real());
    }
    return out;
}

ControllerGradient abscissa_gradient(const TimeDelayPlant& plant, const ControllerRealization& controller,
                                     const StabilityReport& report) {
    const ClosedLoopSystem cl = assemble_closed_loop(plant, controller);
    const std::vector<Mat> dA = abscissa_gradient_closed_loop(cl, report);
    return controller_chain_rule(plant, controller, dA, Mat::Zero(cl.B.rows(), cl.B.cols()),
                                 Mat::Zero(cl.C.rows(), cl.C.cols()));
}

}  // namespace dhinf
