// Pseudospectral (Chebyshev collocation) discretization of the solution
// operator generator of z'(t) = A0 z(t) + A1 z(t - tau). Its eigenvalues
// approximate the characteristic roots closest to the origin and seed the
// Newton refinement in stability.cpp.

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "tdas/errors.hpp"
#include "tdas/stability.hpp"

namespace tdas {

namespace {

// Chebyshev differentiation matrix on x_j = cos(j pi / M), j = 0..M.
Eigen::MatrixXd chebyshev_differentiation(int M) {
    const int n = M + 1;
    Eigen::VectorXd x(n), c(n);
    for (int j = 0; j < n; ++j) {
        x(j) = std::cos(std::numbers::pi * j / M);
        c(j) = ((j == 0 || j == M) ? 2.0 : 1.0) * ((j % 2 == 0) ? 1.0 : -1.0);
    }
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            D(i, j) = c(i) / c(j) / (x(i) - x(j));
            row_sum += D(i, j);
        }
        D(i, i) = -row_sum;
    }
    return D;
}

} // namespace

Eigen::VectorXcd collocation_eigenvalues(const LinearizedSystem& sys, int degree) {
    if (degree < 2) throw DomainError("collocation degree must be at least 2");
    const Eigen::Matrix4d B = LinearizedSystem::b_prime();
    const Eigen::Matrix4d A0 = sys.a_prime - sys.k * B;
    const Eigen::Matrix4d A1 = sys.k * B;
    if (!sys.has_delay()) {
        Eigen::EigenSolver<Eigen::Matrix4d> es(sys.a_prime, false);
        return es.eigenvalues();
    }

    const int M = degree;
    const int n = 4 * (M + 1);
    // theta_j = tau (x_j - 1) / 2 maps [-1, 1] onto [-tau, 0]; theta_0 = 0.
    const Eigen::MatrixXd D = chebyshev_differentiation(M) * (2.0 / sys.tau);
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n, n);
    big.block<4, 4>(0, 0) = A0;
    big.block<4, 4>(0, 4 * M) += A1;
    for (int i = 1; i <= M; ++i) {
        for (int j = 0; j <= M; ++j) {
            big.block<4, 4>(4 * i, 4 * j) = D(i, j) * Eigen::Matrix4d::Identity();
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> es(big, false);
    if (es.info() != Eigen::Success) throw SearchFailed("collocation eigensolver did not converge");
    return es.eigenvalues();
}

} // namespace tdas
