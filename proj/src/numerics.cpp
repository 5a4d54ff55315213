#include "koopgen/numerics.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace koopgen {

SvdFactorization svd_factorize(const Matrix& a, double rtol) {
    if (!all_finite(a))
        throw std::invalid_argument("svd_factorize: non-finite entries");
    if (!(rtol > 0.0 && rtol < 1.0))
        throw std::invalid_argument("svd_factorize: rtol must be in (0, 1)");

    Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    SvdFactorization f;
    f.u = svd.matrixU();
    f.sigma = svd.singularValues();
    f.v = svd.matrixV();
    f.rank_tol = f.sigma.size() > 0 ? rtol * f.sigma[0] : 0.0;
    return f;
}

Matrix pinv(const Matrix& a, double rtol) {
    SvdFactorization f = svd_factorize(a, rtol);
    Vector inv_sigma = Vector::Zero(f.sigma.size());
    for (Eigen::Index i = 0; i < f.sigma.size(); ++i)
        if (f.sigma[i] > f.rank_tol) inv_sigma[i] = 1.0 / f.sigma[i];
    return f.v * inv_sigma.asDiagonal() * f.u.transpose();
}

Matrix lstsq(const Matrix& y, const Matrix& x, double rtol) {
    if (y.cols() != x.cols())
        throw std::invalid_argument("lstsq: Y and X must have the same number of columns");
    return y * pinv(x, rtol);
}

namespace {

// Pade(13,13) coefficients (numerator; denominator shares them with
// alternating signs).
constexpr double kPade13[14] = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

}  // namespace

Matrix expm(const Matrix& a) {
    if (a.rows() != a.cols())
        throw std::invalid_argument("expm: matrix must be square");
    if (!all_finite(a))
        throw std::invalid_argument("expm: non-finite entries");

    const Eigen::Index n = a.rows();
    const double theta13 = 5.371920351148152;
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 == 0.0) return Matrix::Identity(n, n);

    int squarings = 0;
    if (norm1 > theta13)
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    Matrix as = a / std::ldexp(1.0, squarings);

    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = as * as;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a2 * a4;

    Matrix u = as * (a6 * (kPade13[13] * a6 + kPade13[11] * a4 + kPade13[9] * a2) +
                     kPade13[7] * a6 + kPade13[5] * a4 + kPade13[3] * a2 +
                     kPade13[1] * ident);
    Matrix v = a6 * (kPade13[12] * a6 + kPade13[10] * a4 + kPade13[8] * a2) +
               kPade13[6] * a6 + kPade13[4] * a4 + kPade13[2] * a2 +
               kPade13[0] * ident;

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

IntegrationScheme parse_scheme(const std::string& name) {
    if (name == "euler") return IntegrationScheme::Euler;
    if (name == "rk4") return IntegrationScheme::Rk4;
    if (name == "exact") return IntegrationScheme::Exact;
    throw std::invalid_argument("unknown integration scheme: " + name);
}

Vector integrate_bilinear(const Matrix& k0, const std::vector<Matrix>& b,
                          const Vector& u, const Vector& z0, double dt,
                          IntegrationScheme scheme) {
    const Eigen::Index n = k0.rows();
    if (k0.cols() != n || z0.size() != n)
        throw std::invalid_argument("integrate_bilinear: inconsistent dimensions");
    if (static_cast<size_t>(u.size()) != b.size())
        throw std::invalid_argument("integrate_bilinear: input dimension does not match B count");
    if (!(dt > 0.0))
        throw std::invalid_argument("integrate_bilinear: dt must be positive");

    Matrix ku = k0;
    for (size_t i = 0; i < b.size(); ++i) {
        if (b[i].rows() != n || b[i].cols() != n)
            throw std::invalid_argument("integrate_bilinear: B matrix shape mismatch");
        ku += u[static_cast<Eigen::Index>(i)] * b[i];
    }

    switch (scheme) {
        case IntegrationScheme::Euler:
            return z0 + dt * (ku * z0);
        case IntegrationScheme::Rk4: {
            Vector k1 = ku * z0;
            Vector k2 = ku * (z0 + 0.5 * dt * k1);
            Vector k3 = ku * (z0 + 0.5 * dt * k2);
            Vector k4 = ku * (z0 + dt * k3);
            return z0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        case IntegrationScheme::Exact:
            return expm(ku * dt) * z0;
    }
    throw std::invalid_argument("integrate_bilinear: unknown scheme");
}

GmresResult gmres(const LinearMap& apply, const Vector& rhs, double tol,
                  int max_iter, int restart) {
    GmresResult result;
    const Eigen::Index n = rhs.size();
    result.x = Vector::Zero(n);
    if (!(tol > 0.0)) throw std::invalid_argument("gmres: tol must be positive");
    if (restart < 1) restart = 1;

    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) {
        result.converged = true;
        return result;
    }

    int total_iters = 0;
    while (total_iters < max_iter) {
        Vector r = rhs - apply(result.x);
        double beta = r.norm();
        if (beta <= tol * rhs_norm) {
            result.converged = true;
            break;
        }

        const int m = std::min<int>(restart, max_iter - total_iters);
        std::vector<Vector> basis;
        basis.reserve(m + 1);
        basis.push_back(r / beta);

        Matrix h = Matrix::Zero(m + 1, m);
        Vector cs = Vector::Zero(m), sn = Vector::Zero(m);
        Vector g = Vector::Zero(m + 1);
        g[0] = beta;

        int k = 0;
        bool breakdown = false;
        for (; k < m; ++k) {
            Vector w = apply(basis[k]);
            for (int j = 0; j <= k; ++j) {  // modified Gram-Schmidt
                h(j, k) = basis[j].dot(w);
                w -= h(j, k) * basis[j];
            }
            const double hnext = w.norm();
            h(k + 1, k) = hnext;

            for (int j = 0; j < k; ++j) {  // apply stored Givens rotations
                double t = cs[j] * h(j, k) + sn[j] * h(j + 1, k);
                h(j + 1, k) = -sn[j] * h(j, k) + cs[j] * h(j + 1, k);
                h(j, k) = t;
            }
            double denom = std::hypot(h(k, k), h(k + 1, k));
            if (denom == 0.0) { breakdown = true; ++total_iters; break; }
            cs[k] = h(k, k) / denom;
            sn[k] = h(k + 1, k) / denom;
            h(k, k) = denom;
            h(k + 1, k) = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] = cs[k] * g[k];
            ++total_iters;

            if (std::abs(g[k + 1]) <= tol * rhs_norm) { ++k; break; }
            if (hnext == 0.0) { ++k; breakdown = true; break; }  // happy breakdown
            if (k + 1 < m) basis.push_back(w / hnext);
        }

        // Solve the k x k triangular system and update x.
        int kk = std::min<int>(k, m);
        if (kk > 0) {
            Vector ym = Vector::Zero(kk);
            for (int i = kk - 1; i >= 0; --i) {
                double s = g[i];
                for (int j = i + 1; j < kk; ++j) s -= h(i, j) * ym[j];
                ym[i] = s / h(i, i);
            }
            for (int i = 0; i < kk; ++i) result.x += ym[i] * basis[i];
        }

        double res = (rhs - apply(result.x)).norm() / rhs_norm;
        if (res <= tol) {
            result.converged = true;
            break;
        }
        if (breakdown || kk == 0) break;
    }

    result.iterations = total_iters;
    result.residual = (rhs - apply(result.x)).norm() / rhs_norm;
    result.converged = result.residual <= tol;
    return result;
}

}  // namespace koopgen
