#pragma once

// Independent reference computations used as test oracles. Nothing here
// calls into the library's numerical code.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Scaling-and-squaring Taylor series for exp(tA).
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& A, double t) {
    Eigen::MatrixXd M = A * t;
    const double norm = M.cwiseAbs().rowwise().sum().maxCoeff();
    int squarings = 0;
    if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    M /= std::pow(2.0, squarings);
    const auto n = A.rows();
    Eigen::MatrixXd result = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    for (int k = 1; k < 40; ++k) {
        term = term * M / k;
        result += term;
    }
    for (int i = 0; i < squarings; ++i) result = result * result;
    return result;
}

/// ∫_0^t e^{sA} ds via the block-matrix trick exp([[A, I], [0, 0]] t).
inline Eigen::MatrixXd expm_integral(const Eigen::MatrixXd& A, double t) {
    const auto n = A.rows();
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    big.topLeftCorner(n, n) = A;
    big.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    return expm(big, t).topRightCorner(n, n);
}

/// Solution of x' = Ax + u from x(0) = xi at time t.
inline Eigen::VectorXd affine_flow(const Eigen::MatrixXd& A, const Eigen::VectorXd& u, const Eigen::VectorXd& xi,
                                   double t) {
    return expm(A, t) * xi + expm_integral(A, t) * u;
}

/// Largest singular value by JacobiSVD (the library uses an eigen-solver).
inline double spectral_norm(const Eigen::MatrixXd& A) {
    return Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(0);
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace oracle
