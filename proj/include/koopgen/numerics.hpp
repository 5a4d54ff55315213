#pragma once

#include <functional>

#include "koopgen/common.hpp"

namespace koopgen {

// Thin SVD with a rank cutoff, backing the pseudoinverse.
struct SvdFactorization {
    Matrix u;             // left singular vectors (thin)
    Vector sigma;         // singular values, nonincreasing
    Matrix v;             // right singular vectors (thin)
    double rank_tol = 0;  // absolute cutoff used for the numerical rank

    int numerical_rank() const {
        int r = 0;
        for (Eigen::Index i = 0; i < sigma.size(); ++i)
            if (sigma[i] > rank_tol) ++r;
        return r;
    }
};

SvdFactorization svd_factorize(const Matrix& a, double rtol);

// Moore-Penrose pseudoinverse via SVD; singular values below rtol*sigma_max
// are truncated.
Matrix pinv(const Matrix& a, double rtol = 1e-10);

// Minimum-Frobenius-norm M minimizing ||Y - M X||_F, i.e. M = Y X^+.
Matrix lstsq(const Matrix& y, const Matrix& x, double rtol = 1e-10);

// Matrix exponential, scaling-and-squaring with a fixed Pade(13,13) kernel.
Matrix expm(const Matrix& a);

enum class IntegrationScheme { Euler, Rk4, Exact };

IntegrationScheme parse_scheme(const std::string& name);

// One hold interval of the bilinear system zdot = (K0 + sum_i u_i B_i) z
// under constant input u.
Vector integrate_bilinear(const Matrix& k0, const std::vector<Matrix>& b,
                          const Vector& u, const Vector& z0, double dt,
                          IntegrationScheme scheme);

struct GmresResult {
    Vector x;
    bool converged = false;
    double residual = 0;  // final ||apply(x) - rhs||_2 / ||rhs||_2
    int iterations = 0;
};

using LinearMap = std::function<Vector(const Vector&)>;

// Restarted GMRES on a matrix-free linear map. Non-convergence is reported
// through the result, never thrown.
GmresResult gmres(const LinearMap& apply, const Vector& rhs, double tol,
                  int max_iter, int restart = 50);

}  // namespace koopgen
