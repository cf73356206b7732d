#include "dhinf/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dhinf/errors.hpp"
#include "dhinf/io.hpp"
#include "dhinf/optim.hpp"

namespace dhinf {

namespace {

using json = nlohmann::json;

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return std::string(buf, r.ptr);
}

json omega_json(double w) { return std::isinf(w) ? json("inf") : json(w); }

ClosedLoopSystem load_loop(const std::string& plant_path, const std::string& controller_path) {
    const TimeDelayPlant plant = io::read_plant_file(plant_path);
    ControllerRealization k;
    if (!controller_path.empty()) k = io::read_controller_file(controller_path);
    k = io::fit_to_plant(std::move(k), plant);
    return assemble_closed_loop(plant, k);
}

void print_norm(const HinfResult& r, bool as_json, std::ostream& out) {
    if (as_json) {
        json doc;
        doc["norm"] = r.norm;
        json peaks = json::array();
        for (const auto& p : r.peaks) peaks.push_back({{"omega", omega_json(p.omega)}, {"sigma", p.triple.sigma}});
        doc["peaks"] = std::move(peaks);
        doc["N_used"] = r.N_used;
        doc["corrector_iterations"] = r.corrector_iterations;
        doc["converged"] = r.converged;
        out << doc.dump(2) << "\n";
        return;
    }
    out << "norm = " << fmt(r.norm) << "\n";
    for (const auto& p : r.peaks) out << "peak: omega = " << fmt(p.omega) << ", sigma = " << fmt(p.triple.sigma) << "\n";
    out << "N_used = " << r.N_used << "\n";
    out << "corrector_iterations = " << r.corrector_iterations << "\n";
    out << "converged = " << (r.converged ? "true" : "false") << "\n";
}

void print_abscissa(const StabilityReport& r, bool as_json, std::ostream& out) {
    if (as_json) {
        json doc;
        doc["abscissa"] = r.abscissa;
        json roots = json::array();
        for (const auto& root : r.rightmost_roots) roots.push_back({root.lambda.real(), root.lambda.imag()});
        doc["rightmost_roots"] = std::move(roots);
        doc["N_used"] = r.N_used;
        doc["stable"] = r.abscissa < 0.0;
        out << doc.dump(2) << "\n";
        return;
    }
    out << "abscissa = " << fmt(r.abscissa) << "\n";
    for (const auto& root : r.rightmost_roots) {
        out << "root: " << fmt(root.lambda.real()) << (root.lambda.imag() < 0 ? " - " : " + ")
            << fmt(std::abs(root.lambda.imag())) << "j\n";
    }
    out << "N_used = " << r.N_used << "\n";
    out << "stable = " << (r.abscissa < 0.0 ? "true" : "false") << "\n";
}

int cmd_sigma(const ClosedLoopSystem& cl, double wmin, double wmax, int points, const std::string& path,
              std::ostream& out) {
    std::ofstream file;
    std::ostream* sink = &out;
    if (!path.empty()) {
        file.open(path);
        if (!file) throw io::InputError("cannot write '" + path + "'");
        sink = &file;
    }
    *sink << "omega,sigma_max\n";
    const double lo = std::log10(wmin), hi = std::log10(wmax);
    for (int k = 0; k < points; ++k) {
        const double w = std::pow(10.0, lo + (hi - lo) * k / (points - 1));
        double s;
        try {
            s = max_singular_value(cl, w).sigma;
        } catch (const SingularResolventError&) {
            s = std::numeric_limits<double>::infinity();
        }
        *sink << fmt(w) << "," << fmt(s) << "\n";
    }
    // Peak section; skipped when the norm is undefined.
    try {
        const HinfResult r = hinf_norm(cl);
        *sink << "# peak\n";
        for (const auto& p : r.peaks) *sink << fmt(p.omega) << "," << fmt(p.triple.sigma) << "\n";
    } catch (const UnstableSystemError& e) {
        *sink << "# peak unavailable: " << e.what() << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"H-infinity analysis and fixed-order synthesis for time-delay systems", "dhinf"};
    app.require_subcommand(1);

    std::string plant_path, controller_path, out_path;
    bool as_json = false;

    auto* norm = app.add_subcommand("norm", "H-infinity norm of the closed loop");
    norm->add_option("plant", plant_path, "plant JSON file")->required();
    norm->add_option("controller", controller_path, "controller JSON file")->required();
    norm->add_flag("--json", as_json, "machine-readable output");
    HinfOptions hopts;
    norm->add_option("--rel-tol", hopts.rel_tol, "relative agreement between successive N");
    norm->add_option("--n-start", hopts.N_start, "initial discretization N");

    auto* absc = app.add_subcommand("abscissa", "spectral abscissa (open loop when no controller is given)");
    absc->add_option("plant", plant_path, "plant JSON file")->required();
    absc->add_option("controller", controller_path, "controller JSON file");
    absc->add_flag("--json", as_json, "machine-readable output");

    auto* synth = app.add_subcommand("synthesize", "fixed-order H-infinity synthesis");
    synth->add_option("plant", plant_path, "plant JSON file")->required();
    int order = 1;
    SynthesisOptions sopts;
    int max_iter = -1;
    double tol = -1.0;
    synth->add_option("--order", order, "controller order nK")->required();
    synth->add_option("--starts", sopts.starts, "number of random starts");
    synth->add_option("--seed", sopts.seed, "random seed");
    synth->add_option("--tol", tol, "optimizer gradient tolerance");
    synth->add_option("--max-iter", max_iter, "BFGS iterations per phase");
    synth->add_option("--threads", sopts.threads, "worker threads (default: DELAY_HINF_THREADS)");
    synth->add_option("--out", out_path, "write the controller JSON here");
    synth->add_flag("--json", as_json, "machine-readable output");

    auto* sigma = app.add_subcommand("sigma", "sigma_max(T_zw(jw)) on a log grid, CSV");
    sigma->add_option("plant", plant_path, "plant JSON file")->required();
    sigma->add_option("controller", controller_path, "controller JSON file")->required();
    double wmin = 1e-2, wmax = 1e2;
    int points = 200;
    sigma->add_option("--wmin", wmin, "lowest frequency (> 0)");
    sigma->add_option("--wmax", wmax, "highest frequency");
    sigma->add_option("--points", points, "grid size (>= 2)");
    sigma->add_option("--out", out_path, "CSV file (default stdout)");

    std::vector<const char*> argv{"dhinf"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (*norm) {
            print_norm(hinf_norm(load_loop(plant_path, controller_path), hopts), as_json, out);
        } else if (*absc) {
            print_abscissa(spectral_abscissa(load_loop(plant_path, controller_path)), as_json, out);
        } else if (*synth) {
            if (order < 1) {
                err << "error: order must be ≥ 1\n";
                return 1;
            }
            if (max_iter > 0) sopts.stabilization.max_iter = sopts.performance.max_iter = max_iter;
            if (tol > 0) sopts.stabilization.grad_tol = sopts.performance.grad_tol = tol;
            const TimeDelayPlant plant = io::read_plant_file(plant_path);
            const SynthesisResult r = synthesize(plant, order, sopts);
            const std::string text = io::controller_to_json(r.controller);
            if (!out_path.empty()) {
                std::ofstream f(out_path);
                if (!f) throw io::InputError("cannot write '" + out_path + "'");
                f << text;
            }
            if (as_json) {
                json doc;
                doc["norm"] = r.norm.norm;
                doc["abscissa"] = r.abscissa.abscissa;
                doc["best_start"] = r.best_start;
                doc["starts_tried"] = r.starts_tried;
                doc["controller"] = json::parse(text);
                out << doc.dump(2) << "\n";
            } else {
                out << "norm = " << fmt(r.norm.norm) << "\n";
                out << "abscissa = " << fmt(r.abscissa.abscissa) << "\n";
                out << "best_start = " << r.best_start << " of " << r.starts_tried << "\n";
                for (const auto& s : r.starts) {
                    out << "start " << s.index << ": "
                        << (s.stabilized ? "norm = " + fmt(s.norm) : "not stabilized, abscissa = " + fmt(s.abscissa))
                        << "\n";
                }
                if (out_path.empty()) out << text;
            }
        } else if (*sigma) {
            if (!(wmin > 0.0) || !(wmax > wmin) || points < 2) {
                err << "error: need 0 < wmin < wmax and points >= 2\n";
                return 1;
            }
            return cmd_sigma(load_loop(plant_path, controller_path), wmin, wmax, points, out_path, out);
        }
    } catch (const UnstableSystemError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const SynthesisError& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const ConvergenceError& e) {
        err << "error: " << e.what() << " (best estimate " << fmt(e.best_estimate()) << ")\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const io::InputError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

}  // namespace dhinf
