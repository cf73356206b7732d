#pragma once

#include <complex>

#include <Eigen/Dense>

namespace dhinf {

using cd = std::complex<double>;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

}  // namespace dhinf
