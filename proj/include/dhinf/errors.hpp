#pragma once

#include <stdexcept>
#include <string>

namespace dhinf {

// Inconsistent matrix sizes or malformed model data.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// jw is (numerically) a characteristic root, so T_zw(jw) does not exist.
class SingularResolventError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// xi coincides with a singular value of D_cl; the Hamiltonian is undefined.
class LevelSingularError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnstableSystemError : public std::runtime_error {
public:
    UnstableSystemError(const std::string& what, double abscissa)
        : std::runtime_error(what), abscissa_(abscissa) {}
    double abscissa() const noexcept { return abscissa_; }

private:
    double abscissa_;
};

// An iteration hit its cap; best_estimate holds the last usable value.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double best_estimate)
        : std::runtime_error(what), best_estimate_(best_estimate) {}
    double best_estimate() const noexcept { return best_estimate_; }

private:
    double best_estimate_;
};

class SynthesisError : public std::runtime_error {
public:
    SynthesisError(const std::string& what, double best_abscissa)
        : std::runtime_error(what), best_abscissa_(best_abscissa) {}
    double best_abscissa() const noexcept { return best_abscissa_; }

private:
    double best_abscissa_;
};

}  // namespace dhinf
