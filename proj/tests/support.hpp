#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dhinf/io.hpp"
#include "dhinf/model.hpp"

namespace testing {

inline std::string data_path(const std::string& name) { return std::string(DHINF_DATA_DIR) + "/" + name; }

inline dhinf::TimeDelayPlant plant(const std::string& name) { return dhinf::io::read_plant_file(data_path(name)); }

inline dhinf::ControllerRealization controller(const std::string& name) {
    return dhinf::io::read_controller_file(data_path(name));
}

inline dhinf::ClosedLoopSystem example1() {
    return dhinf::assemble_closed_loop(plant("example1_plant.json"), controller("example1_controller.json"));
}

inline dhinf::ClosedLoopSystem example2() {
    return dhinf::assemble_closed_loop(plant("example2_plant.json"), controller("example2_controller.json"));
}

inline dhinf::Mat random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    dhinf::Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

// Largest eigenvalue of the symmetric part; mu(A0) + sum ||A_i|| < 0 makes
// the delay system stable for every delay value.
inline double log_norm(const dhinf::Mat& a) {
    const dhinf::Mat s = 0.5 * (a + a.transpose());
    return Eigen::SelfAdjointEigenSolver<dhinf::Mat>(s).eigenvalues().maxCoeff();
}

inline double spectral_norm(const dhinf::Mat& a) {
    return a.size() == 0 ? 0.0 : Eigen::JacobiSVD<dhinf::Mat>(a).singularValues()(0);
}

/// Random closed loop that is stable independently of the delays.
inline dhinf::ClosedLoopSystem random_stable_loop(std::uint64_t seed, Eigen::Index n_max = 4, int delays_max = 2) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> dim(1, n_max);
    std::uniform_int_distribution<int> count(0, delays_max);
    std::uniform_real_distribution<double> tau(0.1, 2.0);
    std::uniform_real_distribution<double> margin(0.2, 1.0);

    dhinf::ClosedLoopSystem cl;
    const Eigen::Index n = dim(rng), nw = dim(rng), nz = dim(rng);
    const int m = count(rng);
    cl.A.push_back(random_matrix(rng, n, n));
    double delayed = 0.0;
    for (int i = 0; i < m; ++i) {
        cl.A.push_back(random_matrix(rng, n, n, 0.5));
        cl.delays.push_back(tau(rng));
        delayed += spectral_norm(cl.A.back());
    }
    cl.A[0] -= (log_norm(cl.A[0]) + delayed + margin(rng)) * dhinf::Mat::Identity(n, n);
    cl.B = random_matrix(rng, n, nw);
    cl.C = random_matrix(rng, nz, n);
    cl.D = random_matrix(rng, nz, nw, 0.3);
    return cl;
}

/// Random plant/controller pair (stability not enforced).
struct PlantAndController {
    dhinf::TimeDelayPlant plant;
    dhinf::ControllerRealization controller;
};

inline PlantAndController random_pair(std::uint64_t seed, Eigen::Index n_max = 3, Eigen::Index nk_max = 2,
                                      int delays_max = 2) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> dim(1, n_max), kdim(1, nk_max), io(1, 2);
    std::uniform_int_distribution<int> count(0, delays_max);
    std::uniform_real_distribution<double> tau(0.1, 1.5);
    PlantAndController out;
    auto& p = out.plant;
    const Eigen::Index n = dim(rng), nw = io(rng), nu = io(rng), nz = io(rng), ny = io(rng), nk = kdim(rng);
    const int m = count(rng);
    p.A.push_back(random_matrix(rng, n, n) - 2.0 * dhinf::Mat::Identity(n, n));
    for (int i = 0; i < m; ++i) {
        p.A.push_back(random_matrix(rng, n, n, 0.3));
        p.state_delays.push_back(tau(rng));
    }
    p.input_delay = tau(rng);
    p.feedthrough_delay = tau(rng);
    p.B1 = random_matrix(rng, n, nw);
    p.B2 = random_matrix(rng, n, nu);
    p.C1 = random_matrix(rng, nz, n);
    p.C2 = random_matrix(rng, ny, n);
    p.D11 = random_matrix(rng, nz, nw, 0.3);
    p.D12 = random_matrix(rng, nz, nu, 0.3);
    p.D21 = random_matrix(rng, ny, nw, 0.3);
    p.D22 = random_matrix(rng, ny, nu, 0.3);
    auto& k = out.controller;
    k.AK = random_matrix(rng, nk, nk, 0.5) - 2.0 * dhinf::Mat::Identity(nk, nk);
    k.BK = random_matrix(rng, nk, ny, 0.3);
    k.CK = random_matrix(rng, nu, nk, 0.3);
    return out;
}

}  // namespace testing
