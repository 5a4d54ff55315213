#include "koopgen/newton.hpp"

#include <cmath>

#include "koopgen/numerics.hpp"

namespace koopgen {

double KktResidual::norm() const {
    double acc = r_uhat.squaredNorm();
    for (const Vector& v : r_z) acc += v.squaredNorm();
    for (const Vector& v : r_lambda) acc += v.squaredNorm();
    return std::sqrt(acc);
}

namespace {

void check_iterate(const DiscreteOcp& ocp, const KktIterate& it) {
    if (static_cast<int>(it.z.size()) != ocp.horizon + 1 ||
        static_cast<int>(it.lambda.size()) != ocp.horizon + 1 ||
        it.uhat.size() != ocp.coeff_dim())
        throw std::invalid_argument("kkt: iterate shape mismatch");
}

}  // namespace

KktResidual kkt_residuals(const DiscreteOcp& ocp, const KktIterate& it) {
    check_iterate(ocp, it);
    const int l = ocp.horizon;
    std::vector<Vector> u = ocp.unstack(it.uhat);

    KktResidual r;
    r.r_z.resize(l);
    r.r_lambda.resize(l);
    for (int i = 0; i < l; ++i) {
        Matrix a = ocp.transition(u[i]);
        r.r_z[i] = it.z[i + 1] - a * it.z[i];
    }
    for (int i = 0; i < l; ++i) {
        Vector gamma = 2.0 * (ocp.cost.q[i + 1] * (it.z[i + 1] - ocp.cost.a[i + 1]));
        r.r_lambda[i] = it.lambda[i] - ocp.dt * gamma;
        if (i + 1 < l)
            r.r_lambda[i] -= ocp.transition(u[i + 1]).transpose() * it.lambda[i + 1];
    }
    r.r_uhat = ocp.coeff_gradient(ocp.interval_gradient(it.z, it.lambda, u));
    return r;
}

KktResidual kkt_residuals(const OcpSpec& spec, const KktIterate& it) {
    return kkt_residuals(resolve_ocp(spec), it);
}

KktResidual kkt_jvp(const DiscreteOcp& ocp, const KktIterate& it, const KktIterate& dir) {
    check_iterate(ocp, it);
    check_iterate(ocp, dir);
    const int l = ocp.horizon;
    const int nc = ocp.n_c();
    std::vector<Vector> u = ocp.unstack(it.uhat);
    std::vector<Vector> du = ocp.unstack(dir.uhat);

    // z0 and lambda_l are pinned; their directions do not enter.
    std::vector<Vector> dz = dir.z;
    dz[0] = Vector::Zero(ocp.n_o());
    std::vector<Vector> dl = dir.lambda;
    dl[l] = Vector::Zero(ocp.n_o());

    KktResidual r;
    r.r_z.resize(l);
    r.r_lambda.resize(l);
    for (int i = 0; i < l; ++i) {
        Vector v = dz[i + 1] - ocp.transition(u[i]) * dz[i];
        for (int j = 0; j < nc; ++j) v -= du[i][j] * (ocp.bdt[j] * it.z[i]);
        r.r_z[i] = std::move(v);
    }
    for (int i = 0; i < l; ++i) {
        Vector v = dl[i] - ocp.dt * 2.0 * (ocp.cost.q[i + 1] * dz[i + 1]);
        if (i + 1 < l) {
            v -= ocp.transition(u[i + 1]).transpose() * dl[i + 1];
            for (int j = 0; j < nc; ++j)
                v -= du[i + 1][j] * (ocp.bdt[j].transpose() * it.lambda[i + 1]);
        }
        r.r_lambda[i] = std::move(v);
    }

    Matrix dg(l, nc);
    for (int i = 0; i < l; ++i) {
        Vector drho = 2.0 * (ocp.cost.r[i] * du[i]);
        for (int j = 0; j < nc; ++j)
            dg(i, j) = dl[i].dot(ocp.bdt[j] * it.z[i]) +
                       it.lambda[i].dot(ocp.bdt[j] * dz[i]) + ocp.dt * drho[j];
    }
    r.r_uhat = ocp.coeff_gradient(dg);
    return r;
}

KktResidual kkt_jvp(const OcpSpec& spec, const KktIterate& it, const KktIterate& dir) {
    return kkt_jvp(resolve_ocp(spec), it, dir);
}

KktIterate make_consistent_iterate(const DiscreteOcp& ocp, const Vector& z0,
                                   const Vector& uhat) {
    KktIterate it;
    it.uhat = uhat;
    std::vector<Vector> u = ocp.unstack(uhat);
    it.z = ocp.forward(z0, u);
    it.lambda = ocp.adjoint(it.z, u);
    return it;
}

namespace {

// Flattened unknowns: [z_1..z_l; lambda_0..lambda_{l-1}; uhat].
KktIterate unflatten_direction(const DiscreteOcp& ocp, const Vector& v) {
    const int l = ocp.horizon, n = ocp.n_o();
    KktIterate it;
    it.z.assign(l + 1, Vector::Zero(n));
    it.lambda.assign(l + 1, Vector::Zero(n));
    for (int i = 0; i < l; ++i) it.z[i + 1] = v.segment(i * n, n);
    for (int i = 0; i < l; ++i) it.lambda[i] = v.segment((l + i) * n, n);
    it.uhat = v.tail(ocp.coeff_dim());
    return it;
}

Vector flatten_residual(const KktResidual& r) {
    const int l = static_cast<int>(r.r_z.size());
    const int n = l ? static_cast<int>(r.r_z[0].size()) : 0;
    Vector v(2 * l * n + r.r_uhat.size());
    for (int i = 0; i < l; ++i) v.segment(i * n, n) = r.r_z[i];
    for (int i = 0; i < l; ++i) v.segment((l + i) * n, n) = r.r_lambda[i];
    v.tail(r.r_uhat.size()) = r.r_uhat;
    return v;
}

KktIterate add_scaled(const KktIterate& it, const KktIterate& dir, double alpha) {
    KktIterate out = it;
    for (size_t i = 1; i < out.z.size(); ++i) out.z[i] += alpha * dir.z[i];
    for (size_t i = 0; i + 1 < out.lambda.size(); ++i) out.lambda[i] += alpha * dir.lambda[i];
    out.uhat += alpha * dir.uhat;
    return out;
}

}  // namespace

std::pair<KktIterate, NewtonDiagnostics> newton_solve(const DiscreteOcp& ocp,
                                                      const KktIterate& it0,
                                                      const NewtonOptions& opts) {
    check_iterate(ocp, it0);
    KktIterate it = it0;
    it.lambda[ocp.horizon] = Vector::Zero(ocp.n_o());

    NewtonDiagnostics diag;
    KktResidual res = kkt_residuals(ocp, it);
    double rnorm = res.norm();
    const double target = opts.tol * (1.0 + rnorm);
    diag.residual_norms.push_back(rnorm);

    const int dim = 2 * ocp.horizon * ocp.n_o() + ocp.coeff_dim();
    const int gmres_cap = opts.gmres_max_iter > 0 ? opts.gmres_max_iter : dim;

    KktIterate best = it;
    double best_norm = rnorm;

    for (int iter = 0; iter < opts.max_newton && rnorm > target; ++iter) {
        const KktIterate base = it;
        auto apply = [&](const Vector& v) {
            return flatten_residual(kkt_jvp(ocp, base, unflatten_direction(ocp, v)));
        };
        GmresResult lin = gmres(apply, -flatten_residual(res), opts.gmres_tol, gmres_cap,
                                std::min(dim, 300));
        diag.gmres_iterations.push_back(lin.iterations);
        if (!lin.x.allFinite()) break;

        KktIterate dir = unflatten_direction(ocp, lin.x);
        double alpha = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 20; ++bt) {
            KktIterate cand = add_scaled(it, dir, alpha);
            KktResidual cand_res = kkt_residuals(ocp, cand);
            double cand_norm = cand_res.norm();
            if (std::isfinite(cand_norm) && cand_norm < rnorm) {
                it = std::move(cand);
                res = std::move(cand_res);
                rnorm = cand_norm;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        diag.iterations = iter + 1;
        diag.residual_norms.push_back(rnorm);
        if (rnorm < best_norm) {
            best = it;
            best_norm = rnorm;
        }
        if (!accepted) break;  // GMRES stagnation / no descent
    }

    diag.converged = best_norm <= target;

    // The Appendix-B system is unconstrained; clip the final coefficients
    // into the box and report when that changed anything.
    if (ocp.umap.rows() == ocp.umap.cols() && ocp.umap.isIdentity(0.0)) {
        Vector clipped = best.uhat;
        for (int i = 0; i < ocp.horizon; ++i)
            clipped.segment(i * ocp.n_c(), ocp.n_c()) =
                ocp.box.clamp(clipped.segment(i * ocp.n_c(), ocp.n_c()));
        if ((clipped - best.uhat).cwiseAbs().maxCoeff() > 0.0) {
            diag.clipped = true;
            best.uhat = clipped;
        }
    }
    return {best, diag};
}

std::pair<KktIterate, NewtonDiagnostics> newton_solve(const OcpSpec& spec,
                                                      const KktIterate& it0,
                                                      const NewtonOptions& opts) {
    return newton_solve(resolve_ocp(spec), it0, opts);
}

}  // namespace koopgen
